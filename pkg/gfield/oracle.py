"""
GField - Scenario oracle

    Ground truth independent of the PDE:
        dynamic programming over piecewise-constant volatility controls with Gauss-Hermite
        quadrature (upper expectation = max over the policy family), and Monte-Carlo
        estimates under one fixed policy (each one a lower bound of the upper expectation)
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math

from dataclasses import dataclass
from typing import Sequence, Union

import numpy
import pandas

from numpy.polynomial.hermite_e import hermegauss
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.stats import norm

from .backend import run_parallel
from .common import log, time_nano, time_nano_pretty
from .config import ToleranceConfig, resolve_tolerances
from .geometry import GramLaw, gram_matrix, region_from_literal
from .gheat import law_expectation, reduce, SolverException
from .phi import LinearPullback, Payoff, TestFunction, negate, parse
from .vartypes import CheckReport, DpSpec, GParams, SublinearValue, VarTypeException


class OracleException(Exception):
    """Scenario oracle failure"""


MAX_DP_DIMS = 3
"""Largest state dimension of the tensor DP"""

MAX_GROWTH_DEGREE = 12
"""Quadrature is only trusted for payoffs of at most this polynomial growth"""

MIN_PATHS = 100

EXACT_STEP_BUDGET = 5_000_000
"""Largest lattice-times-quadrature point count for which the last step evaluates the payoff directly"""


def gauss_hermite(order: int) -> tuple[numpy.ndarray, numpy.ndarray]:
    """Nodes and probability weights for E[f(Z)], Z standard normal"""
    nodes, weights = hermegauss(order)
    return nodes, weights / weights.sum()


def classical_expectation(phi: Payoff, weights: Sequence[float], variance: float, t: float = 1.0, quad_order: int = 20) -> float:
    """E[phi(X)] for independent X_j ~ N(0, variance * t * weights[j]), tensor Gauss-Hermite"""
    weights = numpy.asarray(weights, dtype=float)
    if weights.size < phi.arity:
        raise OracleException(f'Payoff needs {phi.arity} coordinates, got {weights.size} weights')
    if weights.size > 4:
        raise OracleException(f'Tensor quadrature limited to 4 coordinates, got {weights.size}')
    nodes, probs = gauss_hermite(quad_order)
    scales = numpy.sqrt(variance * t * weights)
    mesh = numpy.meshgrid(*([nodes] * weights.size), indexing='ij', sparse=True)
    cols = [s * m for s, m in zip(scales, mesh)]
    values = numpy.broadcast_to(phi.evaluate(cols), (quad_order,) * weights.size)
    for _ in range(weights.size):
        values = numpy.tensordot(probs, values, axes=([0], [0]))
    return float(values)


def classical_law_expectation(law: GramLaw, phi: Payoff, variance: float, t: float = 1.0, quad_order: int = 20,
                              tol: Union[ToleranceConfig, None] = None) -> float:
    """E[phi(X)] for X classical Gaussian with covariance variance * t * Lambda"""
    rp = reduce(law, phi, 1.0, tol)
    if rp.rank == 0:
        return float(phi.evaluate([numpy.zeros(1)] * phi.arity)[0]) if phi.arity else float(phi.evaluate([]))
    return classical_expectation(rp.phi_reduced, numpy.ones(rp.rank), variance, t, quad_order)


def _lattice_axis(radius: float, points: int) -> numpy.ndarray:
    """(internal) symmetric lattice with the origin exactly at the center node"""
    c = points // 2
    return radius * (numpy.arange(points) - c) / c


def _step_operator(axis: numpy.ndarray, scale: float, nodes: numpy.ndarray, probs: numpy.ndarray) -> numpy.ndarray:
    """
    (internal) matrix M with (M v)[a] = sum_l probs[l] * spline(v)(axis[a] + scale * nodes[l])
        the spline is not-a-knot cubic with cubic extrapolation, so M is linear in v
    """
    if scale == 0.0:
        return numpy.eye(axis.size)
    basis = CubicSpline(axis, numpy.eye(axis.size), extrapolate=True)
    op = numpy.zeros((axis.size, axis.size))
    for z, w in zip(nodes, probs):
        op += w * basis(axis + scale * z)
    return op


def _apply(op: numpy.ndarray, values: numpy.ndarray, axis: int) -> numpy.ndarray:
    """(internal) apply a matrix along one axis of a batched tensor"""
    return numpy.moveaxis(numpy.tensordot(op, values, axes=([1], [axis])), 0, axis)


class DpIntegrator:
    """
    Backward recursion for independent coordinates with the given variances (horizon folded in):
        each of N steps takes the max over control variances c of the quadrature average of
        v(x + sqrt(c * dt * variance_j) z), one control shared by all coordinates
        values tabulated on `axes` (positive-variance coordinates) with a leading batch axis
    """

    def __init__(self, variances: Sequence[float], params: GParams, spec: Union[DpSpec, None] = None) -> None:
        variances = numpy.asarray(variances, dtype=float)
        if numpy.any(variances < 0) or not numpy.all(numpy.isfinite(variances)):
            raise OracleException(f'Variances must be finite and nonnegative, got: {variances}')
        self.params = params
        self.variances = variances
        """Per-coordinate variance over the whole horizon"""
        self.spec = spec or DpSpec()
        try:
            self.controls = self.spec.resolve_controls(params.sigma_lo_sq, params.sigma_hi_sq)
        except VarTypeException as ex:
            raise OracleException(str(ex)) from ex
        self.kept = [int(j) for j in numpy.nonzero(variances > 0)[0]] if params.sigma_hi_sq > 0 else []
        if len(self.kept) > MAX_DP_DIMS:
            raise OracleException(f'{len(self.kept)} diffusing coordinates exceed the tensor DP limit {MAX_DP_DIMS}')
        self.steps = self.spec.steps if len(self.controls) > 1 else 1
        """Degenerate control sets collapse to one exact quadrature step"""
        points = self.spec.lattice_size(len(self.kept))
        self.axes = [_lattice_axis(self.spec.radius_mult * params.sigma_hi * math.sqrt(variances[j]), points) for j in self.kept]
        nodes, probs = gauss_hermite(self.spec.quad_order)
        dt = 1.0 / self.steps
        self.operators = [[_step_operator(axis, math.sqrt(c * dt * variances[j]), nodes, probs) for axis, j in zip(self.axes, self.kept)]
                          for c in self.controls]
        """operators[control][axis]"""

    def backward(self, values: numpy.ndarray, steps: Union[int, None] = None) -> numpy.ndarray:
        """Run steps (all by default) on batched lattice values, returning the earlier value function"""
        v = numpy.asarray(values, dtype=float)
        if not self.kept:
            return v
        if not numpy.all(numpy.isfinite(v)):
            raise OracleException('Payoff is not finite on the lattice')
        for _ in range(self.steps if steps is None else steps):
            best = None
            for ops in self.operators:
                w = v
                for k, op in enumerate(ops):
                    w = _apply(op, w, k + 1)
                best = w if best is None else numpy.maximum(best, w)
            v = best
        if not numpy.all(numpy.isfinite(v)):
            raise OracleException('Non-finite values in the backward recursion')
        return v

    def upper(self, values: numpy.ndarray) -> numpy.ndarray:
        v = self.backward(values)
        if not self.kept:
            return v.reshape(v.shape[0]).copy()
        center = tuple(axis.size // 2 for axis in self.axes)
        return v[(slice(None),) + center].copy()

    def _first_step(self, phi: Payoff, arity: int) -> numpy.ndarray:
        """(internal) last time step evaluated on the payoff itself at every quadrature point, shape (1, points...)"""
        nodes, probs = gauss_hermite(self.spec.quad_order)
        r = len(self.kept)
        best = None
        for c in self.controls:
            cols: list = [numpy.zeros((1,) * (2 * r))] * arity
            for k, j in enumerate(self.kept):
                if j >= arity:
                    continue
                shape_axis = [1] * (2 * r)
                shape_axis[k] = self.axes[k].size
                shape_node = [1] * (2 * r)
                shape_node[r + k] = nodes.size
                scale = math.sqrt(c * self.variances[j] / self.steps)
                cols[j] = self.axes[k].reshape(shape_axis) + scale * nodes.reshape(shape_node)
            full = tuple(axis.size for axis in self.axes) + (nodes.size,) * r
            values = numpy.broadcast_to(phi.evaluate(cols), full)
            for _ in range(r):
                values = numpy.tensordot(values, probs, axes=([values.ndim - 1], [0]))
            best = values if best is None else numpy.maximum(best, values)
        return best[numpy.newaxis, ...]

    def upper_payoff(self, phi: Payoff, arity: int) -> float:
        """Upper expectation of a payoff, the last step uses exact payoff values instead of interpolation"""
        if not self.kept:
            return float(self.upper(self.tabulate(phi, arity))[0])
        quad_points = math.prod(axis.size for axis in self.axes) * self.spec.quad_order ** len(self.kept)
        if quad_points <= EXACT_STEP_BUDGET:
            v = self.backward(self._first_step(phi, arity), self.steps - 1)
        else:
            v = self.backward(self.tabulate(phi, arity))
        center = tuple(axis.size // 2 for axis in self.axes)
        return float(v[(0,) + center])

    def tabulate(self, phi: Payoff, arity: int) -> numpy.ndarray:
        """Payoff over `arity` coordinates on the lattice (non-kept coordinates at 0), shape (1, points...)"""
        mesh = numpy.meshgrid(*self.axes, indexing='ij', sparse=True) if self.axes else []
        cols: list = [0.0] * arity
        for k, j in enumerate(self.kept):
            if j < arity:
                cols[j] = mesh[k]
        shape = tuple(axis.size for axis in self.axes)
        cols = [numpy.broadcast_to(numpy.asarray(c, dtype=float), shape) if numpy.ndim(c) == 0 else c for c in cols]
        return numpy.broadcast_to(phi.evaluate(cols), shape)[numpy.newaxis, ...]

    def describe(self) -> str:
        lattice = 'x'.join(str(axis.size) for axis in self.axes) or 'point'
        return f'{self.spec.describe()} lattice={lattice} steps_run={self.steps}'


def _check_growth(phi: Payoff):
    if phi.growth_degree() > MAX_GROWTH_DEGREE:
        raise OracleException(f'Payoff growth degree {phi.growth_degree()} exceeds {MAX_GROWTH_DEGREE}, quadrature would overflow')


def dp_upper_expectation(phi: Payoff, weights: Sequence[float], t: float, p: GParams, spec: Union[DpSpec, None] = None) -> float:
    """
    E[phi(X)] for a G-normal vector with diagonal Gram t * weights, by backward DP
        with spec.extrapolate the N step value V_N and the M = N // 2 step value V_M give
        (N V_N - M V_M) / (N - M), which removes the error term proportional to 1 / N
    """
    weights = numpy.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size < phi.arity:
        raise OracleException(f'Payoff needs {phi.arity} coordinates, got weights of shape {weights.shape}')
    if t < 0:
        raise OracleException(f'Horizon must be nonnegative, got: {t}')
    _check_growth(phi)
    start = time_nano()
    integrator = DpIntegrator(weights * t, p, spec)
    value = integrator.upper_payoff(phi, weights.size)
    fine = integrator.steps
    if integrator.spec.extrapolate and integrator.kept and fine >= 2:
        coarse = fine // 2
        value_coarse = DpIntegrator(weights * t, p, integrator.spec.with_steps(coarse)).upper_payoff(phi, weights.size)
        value = (fine * value - coarse * value_coarse) / (fine - coarse)
    log.debug(f'DP {integrator.describe()}: {value:.10g} in {time_nano_pretty(time_nano() - start)}')
    return value


def dp_expectation(phi: Payoff, weights: Sequence[float], t: float, p: GParams, spec: Union[DpSpec, None] = None) -> SublinearValue:
    """Upper and lower expectations by DP"""
    upper = dp_upper_expectation(phi, weights, t, p, spec)
    lower = -dp_upper_expectation(negate(phi), weights, t, p, spec)
    return SublinearValue(upper, lower)


def dp_law_expectation(law: GramLaw, phi: Payoff, t: float = 1.0, spec: Union[DpSpec, None] = None,
                       tol: Union[ToleranceConfig, None] = None) -> SublinearValue:
    """E[phi(X)] for a general Gram law: factor Lambda = L L^T and run the DP on phi(L z)"""
    try:
        rp = reduce(law, phi, 1.0, tol)
    except SolverException as ex:
        raise OracleException(str(ex)) from ex
    if rp.rank == 0 or law.params.sigma_hi_sq == 0 or t == 0:
        value = float(phi.evaluate([numpy.zeros(1)] * phi.arity)[0]) if phi.arity else float(phi.evaluate([]))
        return SublinearValue(value, value)
    return dp_expectation(LinearPullback(phi, rp.factor), numpy.ones(rp.rank), t, law.params, spec)


def dp_convergence_table(phi: Payoff, weights: Sequence[float], t: float, p: GParams, spec: Union[DpSpec, None] = None,
                         steps: Sequence[int] = (50, 100, 200, 400)) -> pandas.DataFrame:
    """Upper DP values for increasing step counts, columns: steps, upper, delta (change from previous row)"""
    spec = spec or DpSpec()
    rows = [{'steps': n, 'upper': dp_upper_expectation(phi, weights, t, p, spec.with_steps(n))} for n in steps]
    table = pandas.DataFrame(rows)
    table['delta'] = table['upper'].diff().abs()
    return table


class SigmaPolicy:
    """Piecewise-constant volatility choices: variances[k, j] for time step k and region j"""

    def __init__(self, variances) -> None:
        variances = numpy.array(variances, dtype=float, ndmin=2)
        if variances.ndim != 2 or variances.size == 0:
            raise OracleException(f'Policy must be a (steps, regions) array, got shape {variances.shape}')
        if not numpy.all(numpy.isfinite(variances)) or numpy.any(variances < 0):
            raise OracleException('Policy variances must be finite and nonnegative')
        self.variances = variances

    @property
    def steps(self) -> int:
        return self.variances.shape[0]

    @property
    def regions(self) -> int:
        return self.variances.shape[1]

    @staticmethod
    def constant(steps: int, regions: int, variance: float) -> SigmaPolicy:
        return SigmaPolicy(numpy.full((steps, regions), float(variance)))

    @staticmethod
    def bang_bang(pattern: Sequence[bool], regions: int, p: GParams) -> SigmaPolicy:
        """Per step: sigma_hi_sq where pattern is true, else sigma_lo_sq"""
        column = numpy.where(numpy.asarray(pattern, dtype=bool), p.sigma_hi_sq, p.sigma_lo_sq)
        return SigmaPolicy(numpy.repeat(column[:, numpy.newaxis], regions, axis=1))

    @staticmethod
    def random(steps: int, regions: int, p: GParams, rng: numpy.random.Generator, admissible: bool = True) -> SigmaPolicy:
        """Uniform variances in [sigma_lo_sq, sigma_hi_sq]; admissible policies share one value per step"""
        cols = 1 if admissible else regions
        draws = rng.uniform(p.sigma_lo_sq, p.sigma_hi_sq, size=(steps, cols))
        return SigmaPolicy(numpy.repeat(draws, regions, axis=1) if admissible else draws)

    def is_admissible(self) -> bool:
        """One variance per time step shared by all regions (a member of the representing family)"""
        return bool(numpy.all(self.variances == self.variances[:, :1]))

    def within(self, p: GParams, slack: float = 1e-12) -> bool:
        return bool(numpy.all((self.variances >= p.sigma_lo_sq - slack) & (self.variances <= p.sigma_hi_sq + slack)))

    def total_variances(self, weights: Sequence[float], t: float) -> numpy.ndarray:
        """Variance of each coordinate at time t: sum_k dt * weights_j * variances[k, j]"""
        weights = numpy.asarray(weights, dtype=float)
        if weights.size != self.regions:
            raise OracleException(f'Policy covers {self.regions} region(s), got {weights.size} weights')
        return (t / self.steps) * weights * self.variances.sum(axis=0)

    def to_dict(self) -> dict:
        return {'variances': self.variances.tolist()}


@dataclass
class MonteCarloEstimate:
    """Classical estimate under one policy"""
    estimate: float
    half_width: float
    """Half width of the confidence interval"""
    paths: int
    level: float
    admissible: bool

    def to_dict(self) -> dict:
        return {'estimate': self.estimate, 'half_width': self.half_width, 'paths': self.paths, 'level': self.level, 'admissible': self.admissible}


def _mc_chunk(phi: Payoff, scales: numpy.ndarray, count: int, seed: numpy.random.SeedSequence) -> tuple[float, float]:
    """(internal) sum and sum of squares of phi over count independent draws"""
    rng = numpy.random.default_rng(seed)
    draws = rng.standard_normal((count, scales.size)) * scales
    values = phi.evaluate([draws[:, j] for j in range(scales.size)])
    return float(numpy.sum(values)), float(numpy.sum(values * values))


def mc_lower_bound(phi: Payoff, policy: SigmaPolicy, weights: Sequence[float], t: float, p: GParams, paths: int, seed: int,
                   chunk_size: int = 20000, workers: int = 1, allow_inadmissible: bool = False,
                   tol: Union[ToleranceConfig, None] = None) -> MonteCarloEstimate:
    """
    Monte-Carlo mean of phi under the Gaussian law induced by one policy, with a two-sided CI
        chunks draw from SeedSequence(seed).spawn(...) and are summed in chunk order,
        so the estimate depends only on (seed, policy, paths, chunk_size)
    """
    tol = resolve_tolerances(tol)
    if paths < MIN_PATHS:
        raise OracleException(f'Need at least {MIN_PATHS} paths, got {paths}')
    if not policy.within(p):
        raise OracleException('Policy variances must lie within [sigma_lo_sq, sigma_hi_sq]')
    admissible = policy.is_admissible()
    if not admissible:
        if not allow_inadmissible:
            raise OracleException('Policy varies across regions within a step, pass allow_inadmissible=True to evaluate it anyway')
        log.warning('Evaluating an inadmissible volatility policy, the estimate is not a lower bound')
    weights = numpy.asarray(weights, dtype=float)
    if weights.size < phi.arity:
        raise OracleException(f'Payoff needs {phi.arity} coordinates, got {weights.size} weights')
    scales = numpy.sqrt(policy.total_variances(weights, t))

    counts = [chunk_size] * (paths // chunk_size)
    if paths % chunk_size:
        counts.append(paths % chunk_size)
    seeds = numpy.random.SeedSequence(seed).spawn(len(counts))
    args = [(phi, scales, n, s) for n, s in zip(counts, seeds)]
    sums = run_parallel(_mc_chunk, args, workers)

    total = sum(s for s, _ in sums)
    total_sq = sum(q for _, q in sums)
    mean = total / paths
    variance = max(0.0, (total_sq - paths * mean * mean) / (paths - 1))
    level = tol.get('mc_ci_level')
    half_width = float(norm.ppf(0.5 + level / 2.0) * math.sqrt(variance / paths))
    return MonteCarloEstimate(mean, half_width, paths, level, admissible)


# Property suites

ORACLE_CATALOG = (
    ('x1^2', True),
    ('-x1^2', True),
    ('x1^3', False),
    ('x1^4', True),
    ('max(x1, 0)', True),
    ('-max(x1, 0)', True),
    ('abs(x1)', True),
    ('min(x1^2, 4)', False),
)
"""One-dimensional payoffs, flagged True where the curvature has one sign (the extreme controls are optimal per step)"""

ORACLE_PAIRS = (
    ({'box': {'lo': [0.0], 'hi': [1.0]}}, {'box': {'lo': [0.5], 'hi': [1.5]}}, 'x1 * x2'),
    ({'box': {'lo': [0.0], 'hi': [1.0]}}, {'box': {'lo': [0.0], 'hi': [2.0]}}, 'max(x1, x2)'),
    ({'box': {'lo': [0.0, 0.0], 'hi': [1.0, 1.0]}}, {'box': {'lo': [0.5, 0.0], 'hi': [1.5, 1.0]}}, '(x1 - x2)^2 + x1'),
)
"""Two-region instances: region literals and a payoff"""


def _pair_violation(a: SublinearValue, b: SublinearValue) -> float:
    return max(abs(a.upper - b.upper), abs(a.lower - b.lower))


def oracle_equivalence_suite(p: GParams, spec: Union[DpSpec, None] = None, mc_paths: int = 20_000, seed: int = 0,
                             workers: int = 1, tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """
    PDE against DP on the one-dimensional catalog and on the two-region instances,
        DP step convergence, sufficiency of the extreme controls, and Monte-Carlo dominance
    """
    tol = resolve_tolerances(tol)
    spec = spec or DpSpec()
    report = CheckReport('oracle-equivalence')
    rng = numpy.random.default_rng(seed)
    unit = GramLaw([[1.0]], p)

    for text, one_signed in ORACLE_CATALOG:
        phi = parse(text)
        dp_value = dp_expectation(phi, [1.0], 1.0, p, spec)
        if p.sigma_hi_sq > 0:
            pde_value = law_expectation(unit, phi, 1.0, tol=tol)
            report.add(f'agreement[{text}]', _pair_violation(pde_value, dp_value), tol.oracle_tolerance(dp_value.upper),
                       f'pde={pde_value.upper:.6g}/{pde_value.lower:.6g}, dp={dp_value.upper:.6g}/{dp_value.lower:.6g}')
        if not p.is_degenerate:
            wide = dp_upper_expectation(phi, [1.0], 1.0, p, spec.with_interior_controls(p.sigma_lo_sq, p.sigma_hi_sq))
            key = 'bang_bang' if one_signed else 'bang_bang_general'
            report.add(f'{key}[{text}]', abs(wide - dp_value.upper), tol.get(key), f'endpoints={dp_value.upper:.8g}, interior={wide:.8g}')
        policy = SigmaPolicy.random(4, 1, p, rng)
        estimate = mc_lower_bound(phi, policy, [1.0], 1.0, p, mc_paths, int(rng.integers(2 ** 31)), workers=workers, tol=tol)
        report.add(f'dominance[{text}]', estimate.estimate - estimate.half_width - dp_value.upper, tol.oracle_tolerance(dp_value.upper),
                   f'mc={estimate.estimate:.6g} +- {estimate.half_width:.3g}, dp={dp_value.upper:.6g}')

    if p.sigma_hi_sq > 0:
        for k, (a, b, text) in enumerate(ORACLE_PAIRS):
            law = gram_matrix([region_from_literal(a), region_from_literal(b)], p, tol)
            phi = parse(text)
            pde_value = law_expectation(law, phi, 1.0, tol=tol)
            dp_value = dp_law_expectation(law, phi, 1.0, spec, tol)
            report.add(f'agreement_pair[{k + 1}]', _pair_violation(pde_value, dp_value), tol.oracle_tolerance(dp_value.upper),
                       f'{text}: pde={pde_value.upper:.6g}, dp={dp_value.upper:.6g}')

    table = dp_convergence_table(parse('x1^3'), [1.0], 1.0, p, spec)
    deltas = table['delta'].dropna()
    if not deltas.empty:
        report.add('dp_convergence', float(deltas.iloc[-1]), tol.get('dp_convergence'), f'deltas {[round(float(d), 8) for d in deltas]}')
        report.add('dp_deltas_shrink', float(deltas.iloc[-1] - deltas.iloc[0]), tol.get('dp_convergence'))
    return report


def _classical_reference(phi: TestFunction, variance: float, kinks: Sequence[float] = (-2.0, 0.0, 2.0)) -> float:
    """(internal) E[phi(X)], X ~ N(0, variance), by adaptive quadrature split at the catalog kinks"""
    sd = math.sqrt(variance)
    edges = [-math.inf, *kinks, math.inf]
    return float(sum(quad(lambda x: phi.eval([x]) * norm.pdf(x, scale=sd), a, b)[0] for a, b in zip(edges[:-1], edges[1:])))


def degeneration_suite(p: GParams, spec: Union[DpSpec, None] = None, paths: int = 100_000, seed: int = 0, workers: int = 1,
                       tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """Without ambiguity (sigma_lo_sq = sigma_hi_sq) every engine reduces to the classical Gaussian expectation"""
    tol = resolve_tolerances(tol)
    variance = p.sigma_hi_sq if p.sigma_hi_sq > 0 else 1.0
    flat = GParams(variance, variance)
    spec = spec or DpSpec()
    report = CheckReport('degeneration')
    unit = GramLaw([[1.0]], flat)
    level = tol.get('mc_ci_level')
    corrected = 1.0 - (1.0 - level) / len(ORACLE_CATALOG)
    widen = float(norm.ppf(0.5 + corrected / 2.0) / norm.ppf(0.5 + level / 2.0))
    policy = SigmaPolicy.constant(1, 1, variance)
    for k, (text, _) in enumerate(ORACLE_CATALOG):
        phi = parse(text)
        reference = _classical_reference(phi, variance)
        quadrature = classical_expectation(phi, [1.0], variance, quad_order=spec.quad_order)
        pde_value = law_expectation(unit, phi, 1.0, tol=tol)
        report.add(f'pde[{text}]', _pair_violation(pde_value, SublinearValue(reference, reference)),
                   tol.get('degeneration_rel') * max(1.0, abs(reference)), f'classical={reference:.8g}, pde={pde_value.upper:.8g}')
        dp_value = dp_upper_expectation(phi, [1.0], 1.0, flat, spec)
        report.add(f'dp[{text}]', abs(dp_value - quadrature), tol.get('dp_degeneration') * max(1.0, abs(quadrature)),
                   f'quadrature={quadrature:.10g}, dp={dp_value:.10g}')
        estimate = mc_lower_bound(phi, policy, [1.0], 1.0, flat, paths, seed + k, workers=workers, tol=tol)
        report.add(f'mc[{text}]', abs(estimate.estimate - reference) - widen * estimate.half_width, 0.0,
                   f'mc={estimate.estimate:.6g} +- {widen * estimate.half_width:.3g} (level {corrected:.4g})')
    return report
