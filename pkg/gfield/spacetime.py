"""
GField - Spatial-temporal white noise

    A LayeredModel discretizes W(ds, dx) by a time partition 0 = t0 < ... < tn and
        disjoint cells A1..Am: layer i holds the increments W([t(i-1), t(i)) x Aj), a G-normal
        vector with Gram (t(i) - t(i-1)) * diag(lambda_Aj), independent of earlier layers
    Variables are layer-major: x<i>_<j> (or flat x<(i - 1) * m + j>)

    Expectations integrate layers out back to front. Each step splits the functional into
        top level terms: terms that do not touch the layer pass through symbolically, the others
        are tabulated over the earlier variables they reference (at most MAX_RETAINED) and
        integrated one layer at a time with the engine's layer integrator
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math
import re

from typing import Any, Sequence, Union

import numpy

from scipy.interpolate import NdBSpline, make_interp_spline

from .common import log
from .config import ToleranceConfig, resolve_tolerances
from .engine import ExpectationEngine
from .geometry import GramLaw, Region, intersect_measure, measure, region_from_literal
from .phi import Payoff, PhiException, SumPayoff, TestFunction, compose_sum, constant, expand_square, negate, parse, split_terms, variable
from .vartypes import CheckReport, GParams, SublinearValue


class SpaceTimeException(Exception):
    """Invalid layered model, functional or query"""


class AdaptednessException(SpaceTimeException):
    """A process coefficient looks into the future"""


MAX_RETAINED = 3
"""Most earlier variables a tabulated conditional expectation may depend on"""

TAB_NODES = {1: 101, 2: 25, 3: 11}
"""Tabulation nodes per retained variable, by number of retained variables"""

TAB_RADIUS_MULT = 8.0


class LayeredModel:
    """Time partition x disjoint cells, with the ambiguity parameters"""

    def __init__(self, times: Sequence[float], cells: Sequence[Region], params: GParams, tol: Union[ToleranceConfig, None] = None) -> None:
        tol = resolve_tolerances(tol)
        times = [float(t) for t in times]
        if len(times) < 2:
            raise SpaceTimeException('A layered model needs at least two partition times')
        if not all(math.isfinite(t) for t in times) or times[0] != 0.0:
            raise SpaceTimeException(f'Partition times must be finite and start at 0, got: {times}')
        if any(b <= a for a, b in zip(times, times[1:])):
            raise SpaceTimeException(f'Partition times must increase strictly, got: {times}')
        cells = list(cells)
        if not cells:
            raise SpaceTimeException('A layered model needs at least one cell')
        lam = [measure(c) for c in cells]
        if any(not (v > 0 and math.isfinite(v)) for v in lam):
            raise SpaceTimeException(f'Cells must have positive finite measure, got: {lam}')
        for i, a in enumerate(cells):
            for j in range(i + 1, len(cells)):
                overlap = intersect_measure(a, cells[j])
                if overlap > tol.get('inclusion_exclusion') * max(1.0, lam[i], lam[j]):
                    raise SpaceTimeException(f'Cells {i + 1} and {j + 1} overlap (measure {overlap:g})')
        self.times = times
        self.cells = cells
        self.params = params
        self.lam = numpy.array(lam)
        """Cell measures"""

    @property
    def n_layers(self) -> int:
        return len(self.times) - 1

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_vars(self) -> int:
        return self.n_layers * self.n_cells

    def dt(self, layer: int) -> float:
        """Length of layer (1-based)"""
        return self.times[layer] - self.times[layer - 1]

    def variance(self, var: int) -> float:
        """Delta t * lambda for a flat variable"""
        return self.dt(self.layer_of(var)) * float(self.lam[self.cell_of(var) - 1])

    def layer_variances(self, layer: int) -> numpy.ndarray:
        return self.dt(layer) * self.lam

    def var_index(self, layer: int, cell: int) -> int:
        if not (1 <= layer <= self.n_layers and 1 <= cell <= self.n_cells):
            raise SpaceTimeException(f'No variable x{layer}_{cell} in a {self.n_layers} x {self.n_cells} model')
        return (layer - 1) * self.n_cells + cell

    def layer_of(self, var: int) -> int:
        return (var - 1) // self.n_cells + 1

    def cell_of(self, var: int) -> int:
        return (var - 1) % self.n_cells + 1

    def layer_vars(self, layer: int) -> list[int]:
        return [self.var_index(layer, j) for j in range(1, self.n_cells + 1)]

    def completed_layers(self, t: float) -> tuple[int, bool]:
        """(k, inside): layers 1..k end at or before t; inside when t lies strictly within layer k + 1"""
        if t < 0 or not math.isfinite(t):
            raise SpaceTimeException(f'Conditioning time must be finite and nonnegative, got: {t}')
        k = max(i for i, s in enumerate(self.times) if s <= t)
        return k, k < self.n_layers and t > self.times[k]

    def tab_axis(self, var: int, count: int) -> numpy.ndarray:
        """Tabulation nodes of an earlier variable"""
        sigma = self.params.sigma_hi if self.params.sigma_hi_sq > 0 else 1.0
        radius = TAB_RADIUS_MULT * sigma * math.sqrt(self.variance(var))
        return numpy.linspace(-radius, radius, count)

    def parse(self, text: str) -> CylinderFunctional:
        """Parse a functional, accepting layered variables x<i>_<j>"""
        return CylinderFunctional(self, parse(text, layer_width=self.n_cells, arity=self.n_vars))

    def law_of_layers(self, layers: Sequence[int]) -> GramLaw:
        """Law of the increments of the given layers, as if they formed one G-normal vector"""
        variances = numpy.concatenate([self.layer_variances(i) for i in layers])
        return GramLaw(numpy.diag(variances), self.params)

    def to_dict(self) -> dict:
        return {'times': list(self.times), 'cells': [c.to_dict() for c in self.cells], 'params': self.params.to_dict()}

    @staticmethod
    def from_dict(data: dict, params: Union[GParams, None] = None) -> LayeredModel:
        if 'times' not in data or 'cells' not in data:
            raise SpaceTimeException('A layered model needs times and cells')
        cells = [region_from_literal(c, f'A{i + 1}') for i, c in enumerate(data['cells'])]
        return LayeredModel(data['times'], cells, params or GParams.from_dict(data['params']))

    def __repr__(self) -> str:
        return f'LayeredModel({self.n_layers} layer(s) x {self.n_cells} cell(s), {self.params!r})'


class TabulatedPayoff(Payoff):
    """A function of a few variables given by values on a tensor grid, cubic spline interpolation (linear below 4 nodes)"""

    def __init__(self, variables: Sequence[int], axes: Sequence[numpy.ndarray], values: numpy.ndarray, arity: int) -> None:
        self.vars = [int(v) for v in variables]
        self.axes = [numpy.asarray(a, dtype=float) for a in axes]
        self.values = numpy.asarray(values, dtype=float)
        self.arity = arity
        if self.values.shape != tuple(a.size for a in self.axes):
            raise SpaceTimeException(f'Table shape {self.values.shape} does not match its axes')
        k = 3 if all(a.size >= 4 for a in self.axes) else 1
        coeffs = self.values
        knots = []
        for i, axis in enumerate(self.axes):
            spline = make_interp_spline(axis, numpy.moveaxis(coeffs, i, 0), k=k)
            coeffs = numpy.moveaxis(spline.c, 0, i)
            knots.append(spline.t)
        if len(self.axes) == 1:
            self._spline = spline
        else:
            self._spline = NdBSpline(tuple(knots), coeffs, k, extrapolate=True)

    def evaluate(self, cols: Sequence) -> numpy.ndarray:
        xs = numpy.broadcast_arrays(*[numpy.asarray(cols[v - 1], dtype=float) for v in self.vars])
        if len(xs) == 1:
            result = self._spline(xs[0])
        else:
            result = self._spline(numpy.stack(xs, axis=-1))
        shapes = [numpy.shape(c) for c in cols[:self.arity]]
        shape = numpy.broadcast_shapes(*shapes) if shapes else ()
        return numpy.array(numpy.broadcast_to(result, shape), dtype=float)

    def variables(self) -> frozenset[int]:
        return frozenset(self.vars)


class CylinderFunctional:
    """phi evaluated at the layer-major increments of a model"""

    def __init__(self, model: LayeredModel, phi: Payoff) -> None:
        if phi.arity > model.n_vars:
            raise SpaceTimeException(f'Functional uses {phi.arity} variables, the model has {model.n_vars}')
        if isinstance(phi, TestFunction) and phi.arity < model.n_vars:
            phi = phi.with_arity(model.n_vars)
        self.model = model
        self.phi = phi

    def layers(self) -> list[int]:
        """Layers referenced"""
        return sorted({self.model.layer_of(v) for v in self.phi.variables()})

    def measurable_at(self, layer: int) -> bool:
        """Depends on layers 1..layer only"""
        return all(i <= layer for i in self.layers())

    @property
    def text(self) -> str:
        return self.phi.text if isinstance(self.phi, TestFunction) else f'<{type(self.phi).__name__}>'

    def __call__(self, *x: float) -> float:
        padded = list(x) + [0.0] * (self.model.n_vars - len(x))
        return self.phi(*padded)

    def evaluate(self, points: numpy.ndarray) -> numpy.ndarray:
        """Values at points of shape (count, n_vars)"""
        points = numpy.asarray(points, dtype=float)
        return self.phi.evaluate([points[:, k] for k in range(self.model.n_vars)])

    def __neg__(self) -> CylinderFunctional:
        return CylinderFunctional(self.model, negate(self.phi))

    def __add__(self, other: CylinderFunctional) -> CylinderFunctional:
        return CylinderFunctional(self.model, _sum_payoffs([self.phi, other.phi], self.model.n_vars))

    def to_dict(self) -> dict:
        return {'phi': self.text, 'layers': self.layers()}


def _sum_payoffs(terms: Sequence[Payoff], arity: int) -> Payoff:
    """(internal) symbolic sum when every term is a TestFunction"""
    terms = list(terms)
    if not terms:
        return constant(0.0, arity)
    if all(isinstance(t, TestFunction) for t in terms):
        return compose_sum(terms).with_arity(arity)
    return SumPayoff(terms)


def _as_functional(model: LayeredModel, x: Union[CylinderFunctional, Payoff, str]) -> CylinderFunctional:
    if isinstance(x, CylinderFunctional):
        if x.model is not model:
            raise SpaceTimeException('Functional belongs to a different model')
        return x
    if isinstance(x, str):
        return model.parse(x)
    return CylinderFunctional(model, x)


def integrate_layer(model: LayeredModel, payoff: Payoff, layer: int, engine: ExpectationEngine) -> Payoff:
    """Integrate the increments of one layer out of a payoff, keeping every other variable"""
    arity = max(payoff.arity, model.n_vars)
    layer_vars = set(model.layer_vars(layer))
    terms = split_terms(payoff)
    moving = [t for t in terms if t.variables() & layer_vars]
    frozen = [t for t in terms if not t.variables() & layer_vars]
    if not moving:
        return payoff
    current = sorted(set().union(*(t.variables() & layer_vars for t in moving)))
    retained = sorted(set().union(*(t.variables() - layer_vars for t in moving)))
    if len(retained) > MAX_RETAINED:
        raise SpaceTimeException(f'Integrating layer {layer} would tabulate over {len(retained)} variables (limit {MAX_RETAINED})')

    integrator = engine.integrator([model.variance(v) for v in current], model.params)
    count = TAB_NODES[len(retained)] if retained else 1
    tab_axes = [model.tab_axis(v, count) for v in retained]
    q, r = len(tab_axes), len(integrator.axes)
    cols: list = [numpy.zeros((1,) * (q + r))] * arity
    for a, v in enumerate(retained):
        shape = [1] * (q + r)
        shape[a] = count
        cols[v - 1] = tab_axes[a].reshape(shape)
    for b, k in enumerate(integrator.kept):
        shape = [1] * (q + r)
        shape[q + b] = integrator.axes[b].size
        cols[current[k] - 1] = integrator.axes[b].reshape(shape)

    full = (count,) * q + tuple(axis.size for axis in integrator.axes)
    values = numpy.zeros(full)
    for term in moving:
        values = values + term.evaluate(cols)
    batch = count ** q
    upper = integrator.upper(values.reshape((batch,) + full[q:]))
    if retained:
        result: Payoff = TabulatedPayoff(retained, tab_axes, upper.reshape(full[:q]), arity)
    else:
        result = constant(float(upper[0]), arity)
    log.debug(f'Layer {layer}: {len(moving)} moving term(s) over {current}, retained {retained}, {integrator.describe()}')
    return _sum_payoffs(frozen + [result], arity)


def _value_at_origin(payoff: Payoff, arity: int) -> float:
    if payoff.variables():
        raise SpaceTimeException(f'Variables {sorted(payoff.variables())} were not integrated out')
    return float(payoff.evaluate([numpy.zeros(1)] * arity)[0]) if arity else float(payoff.evaluate([]))


def _integrate_all(model: LayeredModel, payoff: Payoff, engine: ExpectationEngine, order: str) -> float:
    layers = range(model.n_layers, 0, -1) if order == 'backward' else range(1, model.n_layers + 1)
    for layer in layers:
        payoff = integrate_layer(model, payoff, layer, engine)
    return _value_at_origin(payoff, max(payoff.arity, model.n_vars))


def expectation(model: LayeredModel, x: Union[CylinderFunctional, Payoff, str], engine: Union[ExpectationEngine, None] = None,
                order: str = 'backward') -> SublinearValue:
    """
    E[X] and -E[-X] for a cylinder functional
        order='forward' integrates the earliest layer first; it is not the expectation of the
        model and only serves to show that independence of layers is not symmetric
    """
    if order not in ('backward', 'forward'):
        raise SpaceTimeException(f'Unknown integration order: {order}')
    engine = engine or ExpectationEngine()
    x = _as_functional(model, x)
    upper = _integrate_all(model, x.phi, engine, order)
    lower = -_integrate_all(model, negate(x.phi), engine, order)
    return SublinearValue(upper, lower)


def conditional_expectation(model: LayeredModel, x: Union[CylinderFunctional, Payoff, str], t: float,
                            engine: Union[ExpectationEngine, None] = None) -> CylinderFunctional:
    """E[X | F_t] as a functional of the layers completed by time t"""
    engine = engine or ExpectationEngine()
    x = _as_functional(model, x)
    k, inside = model.completed_layers(t)
    if inside and (k + 1) in x.layers():
        raise SpaceTimeException(f'Time {t} lies strictly inside layer {k + 1}, which the functional depends on')
    payoff = x.phi
    for layer in range(model.n_layers, k, -1):
        payoff = integrate_layer(model, payoff, layer, engine)
    return CylinderFunctional(model, payoff)


class SimpleAdaptedProcess:
    """
    f(s, x) = sum X_ij 1_Aj(x) 1_[t(i-1), t(i))(s), coefficient X_ij a functional of layers before i
    """

    def __init__(self, model: LayeredModel, coefficients: Union[dict, Sequence[Sequence[Any]]]) -> None:
        self.model = model
        self.coefficients: dict[tuple[int, int], TestFunction] = {}
        """(layer, cell) -> coefficient, zero when missing"""
        items = coefficients.items() if isinstance(coefficients, dict) else (
            ((i + 1, j + 1), c) for i, row in enumerate(coefficients) for j, c in enumerate(row))
        for (layer, cell), value in items:
            model.var_index(layer, cell)
            coef = self._coerce(value)
            for v in coef.variables():
                if model.layer_of(v) >= layer:
                    raise AdaptednessException(
                        f'Coefficient on layer {layer}, cell {cell} uses x{model.layer_of(v)}_{model.cell_of(v)}, '
                        f'which is not known at time {model.times[layer - 1]}')
            self.coefficients[(layer, cell)] = coef

    def _coerce(self, value: Any) -> TestFunction:
        if isinstance(value, TestFunction):
            return value.with_arity(max(value.arity, self.model.n_vars))
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return constant(float(value), self.model.n_vars)
        if isinstance(value, str):
            try:
                return parse(value, layer_width=self.model.n_cells, arity=self.model.n_vars)
            except PhiException as ex:
                raise SpaceTimeException(f'Invalid coefficient {value!r}: {ex}') from ex
        raise SpaceTimeException(f'Unsupported coefficient: {value!r}')

    def coefficient(self, layer: int, cell: int) -> TestFunction:
        return self.coefficients.get((layer, cell), constant(0.0, self.model.n_vars))

    def restricted(self, first_layer: int = 1, last_layer: Union[int, None] = None) -> SimpleAdaptedProcess:
        """The process on layers first_layer..last_layer, zero elsewhere"""
        last_layer = self.model.n_layers if last_layer is None else last_layer
        return SimpleAdaptedProcess(self.model, {k: c for k, c in self.coefficients.items() if first_layer <= k[0] <= last_layer})

    def scaled(self, alpha: TestFunction, first_layer: int = 1) -> SimpleAdaptedProcess:
        """alpha * f on layers >= first_layer (alpha must be known before first_layer)"""
        return SimpleAdaptedProcess(self.model, {k: (alpha * c if k[0] >= first_layer else c) for k, c in self.coefficients.items()})

    @staticmethod
    def indicator(model: LayeredModel, layers: Sequence[int], cells: Sequence[int], value: float = 1.0) -> SimpleAdaptedProcess:
        """value * 1 on the given layers x cells"""
        return SimpleAdaptedProcess(model, {(i, j): value for i in layers for j in cells})

    @staticmethod
    def example(model: LayeredModel) -> SimpleAdaptedProcess:
        """
        Constant coefficients on layer 1, then on each later layer one cell (cycling) whose
            coefficient is the first-layer increment of that cell
        """
        coefficients: dict = {(1, j): 1.0 / j for j in range(1, model.n_cells + 1)}
        for layer in range(2, model.n_layers + 1):
            cell = (layer - 2) % model.n_cells + 1
            coefficients[(layer, cell)] = variable(model.var_index(1, cell), model.n_vars)
        return SimpleAdaptedProcess(model, coefficients)

    def to_dict(self) -> dict:
        return {f'{i}_{j}': c.text for (i, j), c in sorted(self.coefficients.items())}


def process_from_literal(model: LayeredModel, literal: Any) -> SimpleAdaptedProcess:
    """
    {"example": true} | {"indicator": {"layers": [...], "cells": [...], "value": c}}
        | {"coefficients": {"<layer>_<cell>": number or expression}} | {"coefficients": [[row per layer]]}
    """
    if not isinstance(literal, dict):
        raise SpaceTimeException(f'Process literal must be an object, got: {literal!r}')
    if literal.get('example'):
        return SimpleAdaptedProcess.example(model)
    if 'indicator' in literal:
        body = literal['indicator']
        return SimpleAdaptedProcess.indicator(model, body.get('layers', range(1, model.n_layers + 1)),
                                              body.get('cells', range(1, model.n_cells + 1)), body.get('value', 1.0))
    coefficients = literal.get('coefficients')
    if isinstance(coefficients, dict):
        parsed = {}
        for key, value in coefficients.items():
            match = re.fullmatch(r'(\d+)_(\d+)', str(key))
            if match is None:
                raise SpaceTimeException(f'Coefficient keys look like "<layer>_<cell>", got: {key!r}')
            parsed[(int(match.group(1)), int(match.group(2)))] = value
        return SimpleAdaptedProcess(model, parsed)
    if isinstance(coefficients, list):
        return SimpleAdaptedProcess(model, coefficients)
    raise SpaceTimeException(f'Unknown process literal: {sorted(literal)}')


def _is_zero(f: TestFunction) -> bool:
    return not f.variables() and f.eval([0.0] * f.arity) == 0.0


def ito_integral(model: LayeredModel, f: SimpleAdaptedProcess) -> CylinderFunctional:
    """sum X_ij * W([t(i-1), t(i)) x Aj), assembled symbolically"""
    terms = []
    for (layer, cell), coef in sorted(f.coefficients.items()):
        if _is_zero(coef):
            continue
        increment = variable(model.var_index(layer, cell), model.n_vars)
        if not coef.variables() and coef.eval([0.0] * coef.arity) == 1.0:
            terms.append(increment)
        else:
            terms.append(coef * increment)
    return CylinderFunctional(model, _sum_payoffs(terms, model.n_vars))


def bohner_integral(model: LayeredModel, f: SimpleAdaptedProcess) -> CylinderFunctional:
    """sum X_ij * (t(i) - t(i-1)) * lambda_Aj"""
    terms = [model.dt(layer) * float(model.lam[cell - 1]) * coef for (layer, cell), coef in sorted(f.coefficients.items()) if not _is_zero(coef)]
    return CylinderFunctional(model, _sum_payoffs(terms, model.n_vars))


def squared_norm_integrand(model: LayeredModel, f: SimpleAdaptedProcess) -> CylinderFunctional:
    """sum X_ij^2 * (t(i) - t(i-1)) * lambda_Aj"""
    terms = [model.dt(layer) * float(model.lam[cell - 1]) * (coef * coef) for (layer, cell), coef in sorted(f.coefficients.items()) if not _is_zero(coef)]
    return CylinderFunctional(model, _sum_payoffs(terms, model.n_vars))


def m2_norm(model: LayeredModel, f: SimpleAdaptedProcess, engine: Union[ExpectationEngine, None] = None) -> float:
    """||f||_M2 = E[sum X_ij^2 dt_i lambda_j]^(1/2)"""
    value = expectation(model, squared_norm_integrand(model, f), engine).upper
    return math.sqrt(max(0.0, value))


def partial_integral(model: LayeredModel, f: SimpleAdaptedProcess, upto: int, start: int = 1) -> CylinderFunctional:
    """Integral over layers start..upto"""
    return ito_integral(model, f.restricted(start, upto))


def _sample_points(model: LayeredModel, rng: numpy.random.Generator, count: int) -> numpy.ndarray:
    """(internal) points at typical increment sizes"""
    scales = numpy.array([math.sqrt(model.variance(v)) * max(model.params.sigma_hi, 1e-12) for v in range(1, model.n_vars + 1)])
    return rng.standard_normal((count, model.n_vars)) * scales


def integral_property_suite(model: LayeredModel, f: SimpleAdaptedProcess, engine: Union[ExpectationEngine, None] = None,
                            tol: Union[ToleranceConfig, None] = None, seed: int = 0, points: int = 64) -> CheckReport:
    """Zero mean, L2 domination, additivity, linearity, vanishing conditional means and the martingale identity"""
    tol = resolve_tolerances(tol)
    engine = engine or ExpectationEngine(tol=tol)
    rng = numpy.random.default_rng(seed)
    report = CheckReport('spacetime')
    exact, multi = tol.get('layer_exact'), tol.get('multi_layer')
    integral = ito_integral(model, f)
    split = max(1, model.n_layers // 2)
    r_time = model.times[split]
    pts = _sample_points(model, rng, points)

    value = expectation(model, integral, engine)
    report.add('zero_mean', max(abs(value.upper), abs(value.lower)), exact, f'E[I]={value.upper:.3g}, -E[-I]={value.lower:.3g}')

    try:
        lhs = expectation(model, CylinderFunctional(model, expand_square(integral.phi)), engine).upper
        rhs = model.params.sigma_hi_sq * expectation(model, squared_norm_integrand(model, f), engine).upper
        report.add('l2_domination', max(0.0, lhs - rhs), multi, f'E[I^2]={lhs:.6g}, sigma_hi_sq * E[int f^2]={rhs:.6g}')
    except SpaceTimeException as ex:
        report.add_bool('l2_domination', False, f'not evaluable: {ex}')

    head = partial_integral(model, f, split)
    tail = partial_integral(model, f, model.n_layers, split + 1)
    gap = numpy.max(numpy.abs(integral.evaluate(pts) - head.evaluate(pts) - tail.evaluate(pts)))
    report.add('interval_additivity', float(gap), tol.get('identity_pointwise'))

    alpha = parse(f'max(min(x{model.var_index(split, 1)}, 1), -1)', arity=model.n_vars)
    scaled_tail = partial_integral(model, f.scaled(alpha, split + 1), model.n_layers, split + 1)
    gap = numpy.max(numpy.abs(scaled_tail.evaluate(pts) - alpha.evaluate([pts[:, k] for k in range(model.n_vars)]) * tail.evaluate(pts)))
    report.add('left_linearity', float(gap), tol.get('identity_pointwise'))

    worst = 0.0
    for sign in (1, -1):
        cond = conditional_expectation(model, tail if sign > 0 else -tail, r_time, engine)
        worst = max(worst, float(numpy.max(numpy.abs(cond.evaluate(pts)))))
    report.add('conditional_mean_zero', worst, multi, f'E[+-int_r^T f dW | F_r] at {points} points, r={r_time:g}')

    cond = conditional_expectation(model, integral, r_time, engine)
    gap = numpy.max(numpy.abs(cond.evaluate(pts) - head.evaluate(pts)))
    report.add('martingale', float(gap), multi, f's={r_time:g}')

    if model.n_layers >= 2:
        xi = parse(f'x{model.var_index(1, 1)}^2 * x{model.var_index(2, 1)}', arity=model.n_vars)
        value = expectation(model, xi, engine)
        report.add('past_times_increment', max(abs(value.upper), abs(value.lower)), exact, 'E[xi W([t1,t2) x A1)] with xi = W([0,t1) x A1)^2')

        try:
            SimpleAdaptedProcess(model, {(1, 1): variable(model.var_index(2, 1), model.n_vars)})
            report.add_bool('adaptedness_gate', False, 'a coefficient using a future increment was accepted')
        except AdaptednessException as ex:
            report.add_bool('adaptedness_gate', True, str(ex))
    return report


def temporal_gaussian_witness(params: GParams, engine: Union[ExpectationEngine, None] = None, tol: Union[ToleranceConfig, None] = None) -> tuple[float, float]:
    """
    E[W([0,1) x A)^2 - W([1,2) x A)^2] by the layered recursion vs the 2-dimensional G-normal law
        with the same second moments, lambda_A = 1; returns (layered, gaussian)
    """
    engine = engine or ExpectationEngine(tol=tol)
    model = LayeredModel([0.0, 1.0, 2.0], [region_from_literal({'box': {'lo': [0.0], 'hi': [1.0]}})], params, tol)
    x = model.parse('x1_1^2 - x2_1^2')
    layered = expectation(model, x, engine).upper
    gaussian, _ = engine.law_expectation(model.law_of_layers([1, 2]), x.phi)
    return layered, gaussian.upper


def independence_order_witness(params: GParams, engine: Union[ExpectationEngine, None] = None, tol: Union[ToleranceConfig, None] = None) -> tuple[float, float]:
    """E[W1^2 W2] integrating back to front (the model) vs front to back; returns (backward, forward)"""
    engine = engine or ExpectationEngine(tol=tol)
    model = LayeredModel([0.0, 1.0, 2.0], [region_from_literal({'box': {'lo': [0.0], 'hi': [1.0]}})], params, tol)
    x = model.parse('x1_1^2 * x2_1')
    return expectation(model, x, engine).upper, expectation(model, x, engine, order='forward').upper


def witness_report(params: GParams, engine: Union[ExpectationEngine, None] = None, tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """The space-time noise is not a Gaussian field, and layer independence is not symmetric"""
    tol = resolve_tolerances(tol)
    report = CheckReport('spacetime-witness')
    if params.is_degenerate:
        report.add_bool('witnesses_skipped', True, 'no volatility ambiguity, both gaps vanish')
        return report
    gap_needed = tol.get('witness_gap')
    layered, gaussian = temporal_gaussian_witness(params, engine, tol)
    report.add('not_gaussian_field', max(0.0, gap_needed - abs(layered - gaussian)), 0.0, f'layered={layered:.6g}, gaussian={gaussian:.6g}')
    backward, forward = independence_order_witness(params, engine, tol)
    report.add('independence_not_symmetric', max(0.0, gap_needed - abs(forward - backward)), 0.0, f'backward={backward:.6g}, forward={forward:.6g}')
    return report


def _random_polynomial(rng: numpy.random.Generator, model: LayeredModel, with_past_square: bool = True) -> TestFunction:
    """(internal) a1 x1 + a2 x2 + a3 x3 + b12 x1 x2 + b23 x2 x3 + d2 x2^2 + d3 x3^2 (+ e1 x1^2), first cell of each layer"""
    n = model.n_vars
    x = [variable(model.var_index(i, 1), n) for i in range(1, model.n_layers + 1)]
    c = [float(v) for v in rng.uniform(-1.0, 1.0, size=8)]
    terms = [c[i] * xi for i, xi in enumerate(x)]
    terms += [c[3 + i] * (x[i] * x[i + 1]) for i in range(len(x) - 1)]
    terms += [c[4 + i] * (x[i] * x[i]) for i in range(1, len(x))]
    if with_past_square:
        terms.append(c[7] * (x[0] * x[0]))
    return compose_sum(terms).with_arity(n)


def conditional_property_suite(params: GParams, engine: Union[ExpectationEngine, None] = None, draws: int = 100, seed: int = 0,
                               tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """
    Randomized conditional expectation properties on one-cell models: monotonicity, measurable
        inputs, sub-additivity, the eta^+ / eta^- homogeneity split, the tower property, linearity
        under a mean-certain summand and invariance under adding a mean-certain zero
    Conditional values are compared at the tabulation nodes of the first layer variable
    """
    if draws < 1:
        raise SpaceTimeException(f'Need at least one draw, got: {draws}')
    tol = resolve_tolerances(tol)
    engine = engine or ExpectationEngine(tol=tol)
    rng = numpy.random.default_rng(seed)
    multi = tol.get('multi_layer')
    cell = [region_from_literal({'box': {'lo': [0.0], 'hi': [1.0]}})]
    three = LayeredModel([0.0, 1.0, 2.0, 3.0], cell, params, tol)
    two = LayeredModel([0.0, 1.0, 2.0], cell, params, tol)
    checks: dict[str, list[tuple[float, float]]] = {name: [] for name in (
        'monotonicity', 'measurable', 'sub_additivity', 'homogeneity_split', 'tower', 'tower_total', 'mean_certain_linearity', 'mean_certain_zero')}

    def at_nodes(model: LayeredModel, fn: CylinderFunctional) -> numpy.ndarray:
        nodes = model.tab_axis(1, TAB_NODES[1])
        cols = [nodes] + [numpy.zeros_like(nodes)] * (model.n_vars - 1)
        return fn.phi.evaluate(cols)

    t1, t2 = three.times[1], three.times[2]
    for _ in range(draws):
        x = CylinderFunctional(three, _random_polynomial(rng, three))
        y = CylinderFunctional(three, _random_polynomial(rng, three))
        cx = at_nodes(three, conditional_expectation(three, x, t1, engine))

        lower = CylinderFunctional(three, x.phi - parse('(x2 - x3)^2', arity=three.n_vars))
        diff = at_nodes(three, conditional_expectation(three, lower, t1, engine)) - cx
        checks['monotonicity'].append((float(max(0.0, numpy.max(diff))), multi))

        x1 = variable(1, three.n_vars)
        eta = CylinderFunctional(three, float(rng.uniform(-1, 1)) * (x1 * x1) + x1)
        ceta = at_nodes(three, conditional_expectation(three, eta, t1, engine))
        checks['measurable'].append((float(numpy.max(numpy.abs(ceta - at_nodes(three, eta)))), tol.get('identity_pointwise')))

        cy = at_nodes(three, conditional_expectation(three, y, t1, engine))
        cxy = at_nodes(three, conditional_expectation(three, x + y, t1, engine))
        checks['sub_additivity'].append((float(max(0.0, numpy.max(cxy - cx - cy))), multi))

        z = CylinderFunctional(two, _random_polynomial(rng, two))
        eta_z = CylinderFunctional(two, parse('x1', arity=two.n_vars) * z.phi)
        nodes = two.tab_axis(1, TAB_NODES[1])
        lhs = at_nodes(two, conditional_expectation(two, eta_z, two.times[1], engine))
        rhs = numpy.maximum(nodes, 0.0) * at_nodes(two, conditional_expectation(two, z, two.times[1], engine)) \
            + numpy.maximum(-nodes, 0.0) * at_nodes(two, conditional_expectation(two, -z, two.times[1], engine))
        checks['homogeneity_split'].append((float(numpy.max(numpy.abs(lhs - rhs))), multi))

        inner = conditional_expectation(three, x, t2, engine)
        nested = at_nodes(three, conditional_expectation(three, inner, t1, engine))
        checks['tower'].append((float(numpy.max(numpy.abs(nested - cx))), multi))
        total = expectation(three, x, engine).upper
        total_nested = expectation(three, conditional_expectation(three, x, t1, engine), engine).upper
        checks['tower_total'].append((abs(total - total_nested), multi * max(1.0, abs(total))))

        alpha = float(rng.uniform(-2.0, 2.0))
        certain = float(rng.uniform(0.5, 1.5)) * (x1 * variable(2, three.n_vars))
        cz = at_nodes(three, conditional_expectation(three, CylinderFunctional(three, certain), t1, engine))
        combined = CylinderFunctional(three, x.phi + alpha * certain)
        cc = at_nodes(three, conditional_expectation(three, combined, t1, engine))
        checks['mean_certain_linearity'].append((float(numpy.max(numpy.abs(cc - cx - alpha * cz))), multi))

        zero = float(rng.uniform(0.5, 1.5)) * (variable(2, three.n_vars) * variable(3, three.n_vars))
        shifted = expectation(three, CylinderFunctional(three, x.phi + zero), engine).upper
        checks['mean_certain_zero'].append((abs(shifted - total), multi * max(1.0, abs(total))))

    report = CheckReport('conditional')
    for name, pairs in checks.items():
        excess = [v - t for v, t in pairs]
        i = int(numpy.argmax(excess))
        report.add(name, pairs[i][0], pairs[i][1], f'{draws} draw(s), seed={seed}')
    return report
