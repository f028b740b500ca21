"""
GField - G-heat equation solver

    E[phi(W_A1, ..., W_An)] is the time-t value at the origin of
        du/dt = G(D^2 u) with the Gram matrix folded into the payoff:
        factor Lambda = L L^T, then v(z) = phi(L z) solves du/dt = G(Laplacian u)
    The explicit monotone scheme u += dt * G(Laplacian_h u) runs as a numba kernel
        over a flattened grid with a leading batch axis (batch entries share the grid
        and do not diffuse into each other)
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math

from dataclasses import dataclass
from typing import Sequence, Union

import numba
import numpy
import pandas

from scipy.stats import norm

from .common import log, time_nano, time_nano_pretty
from .config import ToleranceConfig, resolve_tolerances
from .geometry import GramLaw, Region, gram_matrix
from .phi import LinearPullback, Payoff, TestFunction, parse
from .sublinear import gnormal_even_moment
from .vartypes import CheckReport, GParams, GridSpec, SublinearValue, VarTypeException


class SolverException(Exception):
    """G-heat solver failure"""


MAX_PDE_RANK = 3
"""Largest reduced dimension the grid solver accepts"""

DEFAULT_HALF_NODES = {1: 400, 2: 100, 3: 32}
"""Default M (nodes per side of the origin) by reduced dimension"""

DEFAULT_RADIUS_MULT = 8.0
"""Truncation radius in standard deviations"""


@dataclass
class ReducedProblem:
    """A finite-dimensional expectation rewritten over r independent-looking coordinates"""
    factor: numpy.ndarray
    """L, shape (n, r), Lambda = L L^T"""
    eigenvalues: numpy.ndarray
    """Kept eigenvalues of Lambda, ascending"""
    phi: Payoff
    """Payoff over the original n coordinates"""
    params: GParams
    horizon: float

    @property
    def rank(self) -> int:
        return self.factor.shape[1]

    @property
    def phi_reduced(self) -> Payoff:
        """z -> phi(L z)"""
        return LinearPullback(self.phi, self.factor)


def reduce(law: GramLaw, phi: Payoff, t: float = 1.0, tol: Union[ToleranceConfig, None] = None) -> ReducedProblem:
    """
    Factor the Gram matrix by symmetric eigendecomposition, keeping eigenvalues above
        rank_rel * trace; each kept column is signed so its largest entry is positive
    """
    tol = resolve_tolerances(tol)
    if t < 0 or not math.isfinite(t):
        raise SolverException(f'Horizon must be finite and nonnegative, got: {t}')
    if phi.arity > law.n:
        raise SolverException(f'Payoff uses {phi.arity} variables, the law has {law.n}')
    trace = law.trace
    if law.n == 0 or trace <= 0:
        return ReducedProblem(numpy.zeros((law.n, 0)), numpy.zeros(0), phi, law.params, float(t))
    w, u = numpy.linalg.eigh(law.lam)
    if w[0] < -tol.get('reduce_neg_eig') * trace:
        raise SolverException(f'Gram matrix has a negative eigenvalue {w[0]:g} (trace {trace:g})')
    keep = w > tol.get('rank_rel') * trace
    factor = u[:, keep] * numpy.sqrt(w[keep])
    for k in range(factor.shape[1]):
        if factor[numpy.argmax(numpy.abs(factor[:, k])), k] < 0:
            factor[:, k] = -factor[:, k]
    residual = float(numpy.max(numpy.abs(factor @ factor.T - law.lam)))
    if residual > tol.get('factor_abs') * max(1.0, trace):
        raise SolverException(f'Factor does not reproduce the Gram matrix (residual {residual:g})')
    log.debug(f'Reduced {law.n} coordinate(s) to rank {factor.shape[1]} (residual {residual:.3g})')
    return ReducedProblem(factor, w[keep], phi, law.params, float(t))


def reduce_diagonal(variances: Sequence[float], phi: Payoff, params: GParams, t: float = 1.0) -> ReducedProblem:
    """Reduction for a diagonal Gram matrix: coordinate j scaled by sqrt(variances[j]), zero variances dropped"""
    variances = numpy.asarray(variances, dtype=float)
    if numpy.any(variances < 0) or not numpy.all(numpy.isfinite(variances)):
        raise SolverException(f'Variances must be finite and nonnegative, got: {variances}')
    keep = numpy.nonzero(variances > 0)[0]
    factor = numpy.zeros((variances.size, keep.size))
    for k, j in enumerate(keep):
        factor[j, k] = math.sqrt(variances[j])
    return ReducedProblem(factor, variances[keep], phi, params, float(t))


def auto_grid(rank: int, horizon: float, params: GParams, radius_mult: float = DEFAULT_RADIUS_MULT,
              half_nodes: Union[int, None] = None, h: Union[float, None] = None, dt: Union[float, None] = None) -> GridSpec:
    """
    Grid for r reduced coordinates: R = radius_mult * sigma_hi * sqrt(t), h = R / M
        (or M = round(R / h) when h is given), N = ceil(t / dt_max), dt = t / N
    """
    if not 1 <= rank <= MAX_PDE_RANK:
        raise SolverException(f'Grid solver handles reduced dimension 1..{MAX_PDE_RANK}, got {rank}; use the scenario oracle')
    if horizon <= 0 or params.sigma_hi_sq <= 0:
        raise SolverException('A grid needs a positive horizon and sigma_hi_sq')
    radius = radius_mult * params.sigma_hi * math.sqrt(horizon)
    if h is not None:
        if h <= 0:
            raise SolverException(f'Spacing must be positive, got: {h}')
        half_nodes = max(2, int(round(radius / h)))
    elif half_nodes is None:
        half_nodes = DEFAULT_HALF_NODES[rank]
    spacing = radius / half_nodes
    dt_max = spacing ** 2 / (2.0 * rank * params.sigma_hi_sq)
    if dt is not None:
        if dt <= 0:
            raise SolverException(f'Time step must be positive, got: {dt}')
        dt_max = dt
    steps = max(1, math.ceil(horizon / dt_max * (1.0 - 1e-12)))
    try:
        return GridSpec(rank, radius, half_nodes, steps, horizon / steps)
    except VarTypeException as ex:
        raise SolverException(f'Invalid grid: {ex}') from ex


def grid_axes(gs: GridSpec) -> list[numpy.ndarray]:
    """Node coordinates along every reduced axis"""
    axis = numpy.linspace(-gs.radius, gs.radius, gs.nodes)
    return [axis] * gs.dims


def _interior_and_strides(nodes: int, dims: int) -> tuple[numpy.ndarray, numpy.ndarray]:
    """(internal) flat indices of interior nodes and the stride of every axis"""
    shape = (nodes,) * dims
    strides = numpy.array([nodes ** (dims - 1 - k) for k in range(dims)], dtype=numpy.int64)
    inner = numpy.zeros(shape, dtype=bool)
    inner[(slice(1, -1),) * dims] = True
    return numpy.flatnonzero(inner).astype(numpy.int64), strides


@numba.njit(cache=True)
def _explicit_steps(u, interior, strides, steps, ratio, hi, lo):  # pragma: no cover
    """u[b] += dt * G(Laplacian_h u[b]) on interior nodes, boundary nodes stay frozen"""
    lap = numpy.empty(interior.size)
    for _ in range(steps):
        for b in range(u.shape[0]):
            for k in range(interior.size):
                i = interior[k]
                s = 0.0
                for st in strides:
                    s += u[b, i + st] + u[b, i - st] - 2.0 * u[b, i]
                lap[k] = s
            for k in range(interior.size):
                a = lap[k]
                if a >= 0.0:
                    u[b, interior[k]] += ratio * 0.5 * hi * a
                else:
                    u[b, interior[k]] += ratio * 0.5 * lo * a
    return u


def evolve(u0: numpy.ndarray, gs: GridSpec, params: GParams, tol: Union[ToleranceConfig, None] = None) -> numpy.ndarray:
    """
    Run the scheme on initial values of shape (B, nodes, ..., nodes), returning the final values
        (Dirichlet boundary: boundary nodes keep their initial values)
    """
    tol = resolve_tolerances(tol)
    shape = (gs.nodes,) * gs.dims
    if u0.shape[1:] != shape:
        raise SolverException(f'Initial values must have shape (B, {shape}), got {u0.shape}')
    limit = gs.cfl_limit(params.sigma_hi_sq)
    if gs.dt > limit * (1.0 + tol.get('cfl_slack')):
        raise SolverException(f'CFL violated: dt={gs.dt:g} > h^2 / (2 r sigma_hi_sq) = {limit:g}')
    if not numpy.all(numpy.isfinite(u0)):
        raise SolverException('Payoff is not finite on the grid')
    interior, strides = _interior_and_strides(gs.nodes, gs.dims)
    u = numpy.ascontiguousarray(u0.reshape(u0.shape[0], -1), dtype=numpy.float64).copy()
    start = time_nano()
    _explicit_steps(u, interior, strides, gs.steps, gs.dt / gs.h ** 2, params.sigma_hi_sq, params.sigma_lo_sq)
    if not numpy.all(numpy.isfinite(u)):
        raise SolverException(f'Non-finite values during stepping ({gs.describe()})')
    log.debug(f'Evolved batch of {u0.shape[0]} on {gs.describe()} in {time_nano_pretty(time_nano() - start)}')
    return u.reshape(u0.shape)


def tabulate(payoff: Payoff, gs: GridSpec) -> numpy.ndarray:
    """Payoff values on the grid mesh, shape (nodes,) * dims"""
    mesh = numpy.meshgrid(*grid_axes(gs), indexing='ij', sparse=True)
    values = payoff.evaluate(mesh)
    return numpy.broadcast_to(values, (gs.nodes,) * gs.dims)


def truncation_estimate(rp: ReducedProblem, gs: GridSpec) -> float:
    """
    Rough size of the error from freezing the payoff on the boundary:
        sup |phi| on the enclosing ball times the Gaussian mass beyond R
    """
    if not isinstance(rp.phi, TestFunction) or rp.params.sigma_hi_sq <= 0:
        return math.nan
    scale = float(numpy.linalg.norm(rp.factor, ord=2)) if rp.rank else 0.0
    ball = max(scale * gs.radius * math.sqrt(gs.dims), 1e-12)
    sup = rp.phi.growth_bound(ball).sup
    tail = 2.0 * gs.dims * norm.sf(gs.radius / (rp.params.sigma_hi * math.sqrt(rp.horizon)))
    return sup * tail


def _point_value(rp: ReducedProblem) -> SublinearValue:
    """(internal) the law is a point mass at 0"""
    value = float(rp.phi.evaluate([numpy.zeros(1)] * rp.phi.arity)[0]) if rp.phi.arity else float(rp.phi.evaluate([]))
    return SublinearValue(value, value)


def solve(rp: ReducedProblem, gs: Union[GridSpec, None] = None, tol: Union[ToleranceConfig, None] = None) -> SublinearValue:
    """upper = u(t, 0) for phi_reduced, lower = -u(t, 0) for -phi_reduced"""
    if rp.rank == 0 or rp.params.sigma_hi_sq == 0 or rp.horizon == 0:
        return _point_value(rp)
    if rp.rank > MAX_PDE_RANK:
        raise SolverException(f'Reduced dimension {rp.rank} exceeds {MAX_PDE_RANK}; use the scenario oracle')
    if gs is None:
        gs = auto_grid(rp.rank, rp.horizon, rp.params)
    if gs.dims != rp.rank:
        raise SolverException(f'Grid has {gs.dims} dimension(s), the problem has rank {rp.rank}')
    if abs(gs.horizon - rp.horizon) > 1e-12 * max(1.0, rp.horizon):
        raise SolverException(f'Grid covers t={gs.horizon:g}, problem horizon is {rp.horizon:g}')
    u0 = tabulate(rp.phi_reduced, gs)
    u = evolve(numpy.stack([u0, -u0]), gs, rp.params, tol)
    center = (gs.half_nodes,) * gs.dims
    upper = float(u[(0,) + center])
    lower = -float(u[(1,) + center])
    log.debug(f'Solved rank {rp.rank} on {gs.describe()}: upper={upper:.10g} lower={lower:.10g}, truncation ~{truncation_estimate(rp, gs):.2g}')
    return SublinearValue(upper, lower)


def solve_batch(values: numpy.ndarray, gs: GridSpec, params: GParams, tol: Union[ToleranceConfig, None] = None) -> numpy.ndarray:
    """
    Upper expectations at the origin for a batch of tabulated payoffs sharing one grid
        values: shape (B, nodes, ..., nodes); returns shape (B,)
    """
    if params.sigma_hi_sq == 0 or gs.horizon == 0:
        center = (slice(None),) + (gs.half_nodes,) * gs.dims
        return numpy.array(values[center], dtype=float)
    u = evolve(values, gs, params, tol)
    return u[(slice(None),) + (gs.half_nodes,) * gs.dims].copy()


class GridIntegrator:
    """
    One-layer integrator for independent coordinates with the given variances:
        values tabulated on `axes` (x-space, positive-variance coordinates only) with a leading
        batch axis are mapped to their upper expectations at the origin
    """

    def __init__(self, variances: Sequence[float], params: GParams, half_nodes: Union[int, None] = None,
                 radius_mult: float = DEFAULT_RADIUS_MULT, tol: Union[ToleranceConfig, None] = None) -> None:
        variances = numpy.asarray(variances, dtype=float)
        if numpy.any(variances < 0) or not numpy.all(numpy.isfinite(variances)):
            raise SolverException(f'Variances must be finite and nonnegative, got: {variances}')
        self.params = params
        self.tol = tol
        self.kept = [int(j) for j in numpy.nonzero(variances > 0)[0]] if params.sigma_hi_sq > 0 else []
        """Coordinates that diffuse"""
        self.gs = None
        self.axes: list[numpy.ndarray] = []
        """Tabulation nodes per kept coordinate"""
        if self.kept:
            if len(self.kept) > MAX_PDE_RANK:
                raise SolverException(f'{len(self.kept)} diffusing coordinates exceed {MAX_PDE_RANK}; use the scenario oracle')
            self.gs = auto_grid(len(self.kept), 1.0, params, radius_mult=radius_mult, half_nodes=half_nodes)
            z = grid_axes(self.gs)[0]
            self.axes = [math.sqrt(variances[j]) * z for j in self.kept]

    def upper(self, values: numpy.ndarray) -> numpy.ndarray:
        values = numpy.asarray(values, dtype=float)
        if self.gs is None:
            return values.reshape(values.shape[0]).copy()
        return solve_batch(values, self.gs, self.params, self.tol)

    def describe(self) -> str:
        return 'pde point-mass' if self.gs is None else self.gs.describe()


def law_expectation(law: GramLaw, phi: Payoff, t: float = 1.0, gs: Union[GridSpec, None] = None,
                    tol: Union[ToleranceConfig, None] = None, **grid_options) -> SublinearValue:
    """E[phi(X)] for X with the given finite-dimensional law, horizon t"""
    rp = reduce(law, phi, t, tol)
    if gs is None and rp.rank and rp.params.sigma_hi_sq > 0 and t > 0:
        gs = auto_grid(rp.rank, t, law.params, **grid_options)
    return solve(rp, gs, tol)


def finite_dim_expectation(regions: Sequence[Region], phi: Payoff, t: float = 1.0, p: Union[GParams, None] = None,
                           gs: Union[GridSpec, None] = None, tol: Union[ToleranceConfig, None] = None, **grid_options) -> SublinearValue:
    """E[phi(W_A1, ..., W_An)]"""
    law = gram_matrix(regions, p or GParams(), tol)
    return law_expectation(law, phi, t, gs, tol, **grid_options)


def grid_convergence_study(law: GramLaw, phi: Payoff, reference: float, t: float = 1.0,
                           half_nodes: Sequence[int] = (25, 50, 100, 200), radius_mult: float = DEFAULT_RADIUS_MULT,
                           tol: Union[ToleranceConfig, None] = None) -> pandas.DataFrame:
    """
    Upper values for a sequence of grids (halving h each time when half_nodes doubles)
        columns: half_nodes, h, steps, upper, error, ratio (previous error / error)
    """
    rows = []
    rp = reduce(law, phi, t, tol)
    for m in half_nodes:
        gs = auto_grid(rp.rank, t, law.params, radius_mult=radius_mult, half_nodes=m)
        value = solve(rp, gs, tol)
        rows.append({'half_nodes': m, 'h': gs.h, 'steps': gs.steps, 'upper': value.upper, 'error': abs(value.upper - reference)})
    table = pandas.DataFrame(rows)
    previous = table['error'].shift(1)
    table['ratio'] = previous / table['error'].where(table['error'] > 0)
    return table


def moment_suite(p: GParams, measures: Sequence[float] = (1.0, 0.5), orders: Sequence[int] = (1, 2, 3),
                 tol: Union[ToleranceConfig, None] = None, **grid_options) -> CheckReport:
    """E[W_A^(2k)] = (2k - 1)!! sigma_hi^(2k) lambda^k and the matching lower values, solved on the grid"""
    tol = resolve_tolerances(tol)
    report = CheckReport('moments')
    for lam in measures:
        law = GramLaw([[lam]], p)
        for k in orders:
            expected = gnormal_even_moment(k, lam, p)
            value = law_expectation(law, parse(f'x1^{2 * k}'), 1.0, tol=tol, **grid_options)
            violation = max(abs(value.upper - expected.upper), abs(value.lower - expected.lower))
            report.add(f'moment[{2 * k}, lambda={lam:g}]', violation, tol.get('moment_rel') * max(1.0, abs(expected.upper)),
                       f'upper={value.upper:.8g} ({expected.upper:.8g}), lower={value.lower:.8g} ({expected.lower:.8g})')
    return report
