"""
GField - Spatial white noise

    Finite-dimensional laws of W over regions, white noise axioms, consistency of the
        generating function family, the stochastic integral over L2(R^d) through Gram matrices
        of inner products, and path diagnostics under one representing measure at a time
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Sequence, Union

import numpy
import pandas
import statsmodels.api as sm

from scipy.special import erf
from scipy.stats import norm

from .backend import run_parallel
from .common import log
from .config import ToleranceConfig, resolve_tolerances
from .engine import ExpectationEngine
from .geometry import (Box, GramLaw, Polygon, Region, exact_intersect_measure, gram_matrix, intersect_measure, intersection,
                       origin_box, region_from_literal, rotation, symmetric_difference_measure, transform_region, union)
from .phi import Payoff, parse
from .vartypes import CheckReport, GParams, SublinearValue


class WhiteNoiseException(Exception):
    """Invalid white noise request"""


MAX_LATTICE_CELLS = 1_000_000


def _engine_tolerance(tol: ToleranceConfig, engine: ExpectationEngine, value: float) -> float:
    if engine.name == 'oracle':
        return tol.oracle_tolerance(value)
    return tol.pde_tolerance(value)


class FieldLaw:
    """Law of (W_A1, ..., W_An), the spatial field has no time so the horizon is 1"""

    def __init__(self, regions: Sequence[Region], p: GParams, tol: Union[ToleranceConfig, None] = None) -> None:
        self.regions = list(regions)
        self.law = gram_matrix(self.regions, p, tol)

    def generating(self, q) -> Union[float, Fraction]:
        """G(sum q_ij lambda(A_i n A_j))"""
        return self.law.generating(q)

    def expectation(self, phi: Payoff, engine: Union[ExpectationEngine, None] = None) -> SublinearValue:
        engine = engine or ExpectationEngine()
        value, _ = engine.law_expectation(self.law, phi, 1.0)
        return value

    def to_dict(self) -> dict:
        return {'regions': [r.to_dict() for r in self.regions], 'law': self.law.to_dict()}


# Integrands


@dataclass(frozen=True)
class IndicatorFunction:
    """coefficient * 1_A"""
    region: Region
    coefficient: Fraction = Fraction(1)

    def __post_init__(self):
        value = self.coefficient
        if isinstance(value, bool) or not isinstance(value, (int, float, Fraction)) or not math.isfinite(value):
            raise WhiteNoiseException(f'Indicator coefficient must be a finite number, got: {value!r}')
        object.__setattr__(self, 'coefficient', Fraction(value))

    @property
    def terms(self) -> list[IndicatorFunction]:
        return [self]

    @property
    def dim(self) -> int:
        return self.region.dim


@dataclass(frozen=True)
class SimpleFunction:
    """sum a_i 1_A_i"""
    indicators: tuple[IndicatorFunction, ...]

    def __post_init__(self):
        if not self.indicators:
            raise WhiteNoiseException('A simple function needs at least one indicator')
        if len({f.dim for f in self.indicators if not f.region.is_empty}) > 1:
            raise WhiteNoiseException('Indicators of a simple function live in different dimensions')

    @property
    def terms(self) -> list[IndicatorFunction]:
        return list(self.indicators)

    @property
    def dim(self) -> int:
        return self.indicators[0].dim

    def __add__(self, other: Union[SimpleFunction, IndicatorFunction]) -> SimpleFunction:
        return SimpleFunction(tuple(self.terms) + tuple(other.terms))

    def __rmul__(self, c: float) -> SimpleFunction:
        return SimpleFunction(tuple(IndicatorFunction(f.region, f.coefficient * Fraction(c)) for f in self.indicators))


def simple(*pairs: tuple[float, Region]) -> SimpleFunction:
    """SimpleFunction from (coefficient, region) pairs"""
    return SimpleFunction(tuple(IndicatorFunction(r, Fraction(c)) for c, r in pairs))


class GridFunction:
    """Piecewise constant function on a regular grid of cells over the box (lo, hi]"""

    def __init__(self, lo: Sequence[float], hi: Sequence[float], values) -> None:
        values = numpy.array(values, dtype=float)
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        if len(lo) != len(hi) or values.ndim != len(lo):
            raise WhiteNoiseException(f'Grid of dimension {len(lo)} needs a {len(lo)}-dimensional value array, got {values.ndim}')
        if any(not (math.isfinite(a) and math.isfinite(b) and a < b) for a, b in zip(lo, hi)):
            raise WhiteNoiseException(f'Grid support must be a nonempty finite box, got lo={lo}, hi={hi}')
        if values.size == 0 or not numpy.all(numpy.isfinite(values)):
            raise WhiteNoiseException('Grid values must be finite and nonempty')
        self.lo = lo
        self.hi = hi
        self.values = values

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / n for a, b, n in zip(self.lo, self.hi, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(numpy.prod(self.spacing))

    def edges(self, axis: int) -> numpy.ndarray:
        return numpy.linspace(self.lo[axis], self.hi[axis], self.shape[axis] + 1)

    def norm_sq(self) -> float:
        """||f||^2 = sum value^2 * cell volume"""
        return float(numpy.sum(self.values ** 2) * self.cell_volume)

    def scaled(self, c: float) -> GridFunction:
        return GridFunction(self.lo, self.hi, c * self.values)

    @staticmethod
    def from_callable(func: Callable[..., numpy.ndarray], lo: Sequence[float], hi: Sequence[float], cells: Sequence[int]) -> GridFunction:
        """Midpoint representative of func on the given number of cells per axis"""
        mids = []
        for a, b, n in zip(lo, hi, cells):
            edges = numpy.linspace(a, b, n + 1)
            mids.append(0.5 * (edges[:-1] + edges[1:]))
        mesh = numpy.meshgrid(*mids, indexing='ij')
        return GridFunction(lo, hi, numpy.broadcast_to(func(*mesh), tuple(cells)))

    def to_dict(self) -> dict:
        return {'grid': {'lo': list(self.lo), 'hi': list(self.hi), 'values': self.values.tolist()}}


Integrand = Union[GridFunction, IndicatorFunction, SimpleFunction]


def _axis_overlaps(e1: numpy.ndarray, e2: numpy.ndarray) -> numpy.ndarray:
    """(internal) overlap lengths of the intervals of two edge vectors"""
    return numpy.maximum(0.0, numpy.minimum(e1[1:, None], e2[None, 1:]) - numpy.maximum(e1[:-1, None], e2[None, :-1]))


def _grid_grid(f: GridFunction, g: GridFunction) -> float:
    if f.dim != g.dim:
        raise WhiteNoiseException(f'Integrands live in different dimensions: {f.dim} vs {g.dim}')
    if f.lo == g.lo and f.hi == g.hi and f.shape == g.shape:
        return float(numpy.sum(f.values * g.values) * f.cell_volume)
    t = g.values
    for axis in range(f.dim):
        overlap = _axis_overlaps(f.edges(axis), g.edges(axis))
        t = numpy.moveaxis(numpy.tensordot(overlap, t, axes=([1], [axis])), 0, axis)
    return float(numpy.sum(f.values * t))


def _cell_overlaps(f: GridFunction, region: Region) -> numpy.ndarray:
    """(internal) measure of each grid cell intersected with a region"""
    if region.is_empty:
        return numpy.zeros(f.shape)
    if region.dim != f.dim:
        raise WhiteNoiseException(f'Integrands live in different dimensions: {f.dim} vs {region.dim}')
    total = numpy.zeros(f.shape)
    for box in region.boxes:
        piece = numpy.ones(())
        for axis in range(f.dim):
            lengths = _axis_overlaps(f.edges(axis), numpy.array([box.lo[axis], box.hi[axis]]))[:, 0]
            piece = numpy.multiply.outer(piece, lengths)
        total += piece
    if region.polygons:
        e0, e1 = f.edges(0), f.edges(1)
        for i in range(f.shape[0]):
            for j in range(f.shape[1]):
                cell = Polygon(tuple(Box((e0[i], e1[j]), (e0[i + 1], e1[j + 1])).corners_2d()))
                total[i, j] += sum(cell.intersect_area(poly) for poly in region.polygons)
    return total


def _is_exact(f: Integrand) -> bool:
    return not isinstance(f, GridFunction) and all(t.region.is_box_only for t in f.terms)


def inner(f: Integrand, g: Integrand, exact: bool = False) -> Union[float, Fraction]:
    """<f, g> in L2(R^d); exact (Fraction) for simple functions over boxes when asked"""
    if isinstance(f, GridFunction) and isinstance(g, GridFunction):
        return _grid_grid(f, g)
    if isinstance(f, GridFunction) or isinstance(g, GridFunction):
        grid, other = (f, g) if isinstance(f, GridFunction) else (g, f)
        return float(sum(float(t.coefficient) * float(numpy.sum(grid.values * _cell_overlaps(grid, t.region))) for t in other.terms))
    if exact:
        if not (_is_exact(f) and _is_exact(g)):
            raise WhiteNoiseException('Exact inner products need box-only simple functions')
        return sum((a.coefficient * b.coefficient * exact_intersect_measure(a.region, b.region) for a in f.terms for b in g.terms), Fraction(0))
    return float(sum(float(a.coefficient * b.coefficient) * intersect_measure(a.region, b.region) for a in f.terms for b in g.terms))


def norm_sq(f: Integrand) -> Union[float, Fraction]:
    """||f||^2, exact for box-only simple functions"""
    return inner(f, f, exact=_is_exact(f))


def integrand_from_literal(literal: Any) -> Integrand:
    """
    {"indicator": <region>, "coefficient": c} | {"simple": [{"indicator": ..., "coefficient": ...}, ...]}
        | {"grid": {"lo": [...], "hi": [...], "values": nested list}}
    """
    if not isinstance(literal, dict):
        raise WhiteNoiseException(f'Integrand literal must be an object, got: {literal!r}')
    if 'indicator' in literal:
        return IndicatorFunction(region_from_literal(literal['indicator']), literal.get('coefficient', 1))
    if 'simple' in literal:
        return SimpleFunction(tuple(integrand_from_literal(item) for item in literal['simple']))
    if 'grid' in literal:
        body = literal['grid']
        if not isinstance(body, dict) or not {'lo', 'hi', 'values'} <= set(body):
            raise WhiteNoiseException('Grid literal needs lo, hi and values')
        return GridFunction(body['lo'], body['hi'], body['values'])
    raise WhiteNoiseException(f'Unknown integrand kind: {sorted(literal)}')


def spatial_integral_law(fs: Sequence[Integrand], p: GParams, tol: Union[ToleranceConfig, None] = None) -> GramLaw:
    """Law of (int f_1 dW, ..., int f_n dW): Lambda_ij = <f_i, f_j>"""
    fs = list(fs)
    if not fs:
        raise WhiteNoiseException('At least one integrand is required')
    n = len(fs)
    exact = None
    if all(_is_exact(f) for f in fs):
        exact = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                exact[i][j] = exact[j][i] = inner(fs[i], fs[j], exact=True)
        lam = numpy.array([[float(v) for v in row] for row in exact])
    else:
        lam = numpy.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                lam[i, j] = lam[j, i] = inner(fs[i], fs[j])
    return GramLaw(lam, p, [f'f{i + 1}' for i in range(n)], exact, tol)


def integral_isometry(f: Integrand, p: GParams) -> tuple[Union[float, Fraction], Union[float, Fraction]]:
    """(E[|int f dW|^2], sigma_hi_sq * ||f||^2), the first computed as 2 G(||f||^2) from the law"""
    law = spatial_integral_law([f], p)
    one = [[Fraction(1)]] if law.exact is not None else [[1.0]]
    lhs = 2 * law.generating(one)
    n = norm_sq(f)
    rhs = Fraction(p.sigma_hi_sq) * n if isinstance(n, Fraction) else p.sigma_hi_sq * n
    return lhs, rhs


# Axioms and consistency


def _labelled(regions: Sequence[Region]) -> list[Region]:
    return [r if r.label else Region(r.parts, r.dim, f'A{i + 1}') for i, r in enumerate(regions)]


def _quadratic_zero(regions: Sequence[Region], coefficients: Sequence[int], p: GParams, engine: ExpectationEngine,
                    tol: ToleranceConfig) -> tuple[float, float, str]:
    """(internal) E[(sum c_i W_i)^2], short-circuited to 0 when v^T Lambda v vanishes exactly"""
    law = gram_matrix(regions, p, tol)
    q = [[Fraction(a * b) for b in coefficients] for a in coefficients] if law.exact is not None else numpy.outer(coefficients, coefficients)
    if law.contract(q) == 0:
        return 0.0, 0.0, 'exact at Gram level'
    terms = ' '.join(f'{"+" if c > 0 else "-"} {abs(c)} * x{i + 1}' for i, c in enumerate(coefficients))
    phi = parse(f'({terms.lstrip("+ ")})^2')
    value, descriptor = engine.law_expectation(law, phi, 1.0)
    return max(abs(value.upper), abs(value.lower)), _engine_tolerance(tol, engine, 0.0), descriptor


def whitenoise_axiom_suite(regions: Sequence[Region], p: GParams, engine: Union[ExpectationEngine, None] = None,
                           tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """Second moments, vanishing cross moments and additivity on disjoint pairs, modularity on every box-only pair"""
    tol = resolve_tolerances(tol)
    engine = engine or ExpectationEngine(tol=tol)
    regions = _labelled(regions)
    report = CheckReport('whitenoise-axioms')
    law = gram_matrix(regions, p, tol)
    square, cross = parse('x1^2'), parse('x1 * x2')

    for i, a in enumerate(regions):
        lam = float(law.lam[i, i])
        value, descriptor = engine.law_expectation(law.restricted([i]), square, 1.0)
        violation = max(abs(value.upper - p.sigma_hi_sq * lam), abs(value.lower - p.sigma_lo_sq * lam))
        report.add(f'second_moment[{a.label}]', violation, _engine_tolerance(tol, engine, p.sigma_hi_sq * lam),
                   f'E[W^2]={value.upper:.6g}, -E[-W^2]={value.lower:.6g}, lambda={lam:g}, {descriptor}')

    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            a, b = regions[i], regions[j]
            pair = f'{a.label},{b.label}'
            overlap = law.exact[i][j] if law.exact is not None else float(law.lam[i, j])
            if overlap == 0:
                value, descriptor = engine.law_expectation(law.restricted([i, j]), cross, 1.0)
                scale = math.sqrt(float(law.lam[i, i] * law.lam[j, j]))
                report.add(f'cross_moment[{pair}]', max(abs(value.upper), abs(value.lower)), tol.get('cross_moment_rel') * scale,
                           f'E[W W]={value.upper:.3g}, -E[-W W]={value.lower:.3g}, {descriptor}')
                violation, tolerance, detail = _quadratic_zero([union(a, b), a, b], [1, -1, -1], p, engine, tol)
                report.add(f'additivity[{pair}]', violation, tolerance, detail)
            if a.is_box_only and b.is_box_only:
                violation, tolerance, detail = _quadratic_zero([union(a, b), intersection(a, b), a, b], [1, 1, -1, -1], p, engine, tol)
                report.add(f'modularity[{pair}]', violation, tolerance, detail)
    return report


def check_compatibility(regions: Sequence[Region], extra_region: Region, q, p: GParams) -> bool:
    """G of (W_1..W_n, W_extra) at the zero padded Q equals G of (W_1..W_n) at Q"""
    small = gram_matrix(list(regions), p)
    large = gram_matrix(list(regions) + [extra_region], p)
    n = small.n
    q = [[q[i][j] for j in range(n)] for i in range(n)]
    zero = Fraction(0) if large.exact is not None else 0.0
    padded = [row + [zero] for row in q] + [[zero] * (n + 1)]
    return _same(small.generating(q), large.generating(padded), small.exact is not None)


def _same(lhs, rhs, exact: bool) -> bool:
    """(internal) exact equality, or equality up to summation order for floating Gram matrices"""
    if exact:
        return lhs == rhs
    return abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def check_symmetry(regions: Sequence[Region], permutation: Sequence[int], q, p: GParams) -> bool:
    """G of the permuted vector at Q equals G of the original vector at the correspondingly permuted Q"""
    perm = list(permutation)
    law = gram_matrix(list(regions), p)
    n = law.n
    if sorted(perm) != list(range(n)):
        raise WhiteNoiseException(f'Not a permutation of 0..{n - 1}: {perm}')
    inverse = [0] * n
    for i, k in enumerate(perm):
        inverse[k] = i
    moved = [[q[inverse[k]][inverse[m]] for m in range(n)] for k in range(n)]
    lhs = gram_matrix([regions[k] for k in perm], p).generating(q)
    return _same(lhs, law.generating(moved), law.exact is not None)


def _random_box_region(rng: numpy.random.Generator, dim: int) -> Region:
    lo = rng.integers(0, 16, size=dim) / 4.0
    hi = lo + rng.integers(1, 12, size=dim) / 4.0
    return Region([Box(tuple(lo), tuple(hi))], dim=dim)


def consistency_suite(p: GParams, instances: int = 1000, seed: int = 0) -> CheckReport:
    """Compatibility and symmetry of the generating function family on random box instances"""
    rng = numpy.random.default_rng(seed)
    compatible = symmetric = 0
    first_failure = ''
    for k in range(instances):
        dim = int(rng.integers(1, 3))
        n = int(rng.integers(1, 5))
        regions = [_random_box_region(rng, dim) for _ in range(n)]
        extra = _random_box_region(rng, dim)
        raw = rng.normal(size=(n, n))
        q = [[float(v) for v in row] for row in 0.5 * (raw + raw.T)]
        perm = [int(v) for v in rng.permutation(n)]
        ok_c = check_compatibility(regions, extra, q, p)
        ok_s = check_symmetry(regions, perm, q, p)
        compatible += ok_c
        symmetric += ok_s
        if not (ok_c and ok_s) and not first_failure:
            first_failure = f' (first failure at instance {k})'
    report = CheckReport('consistency')
    report.add_bool('compatibility', compatible == instances, f'{compatible}/{instances} instances{first_failure}')
    report.add_bool('symmetry', symmetric == instances, f'{symmetric}/{instances} instances{first_failure}')
    return report


INVARIANCE_PAYOFFS = ('x1^2 + x1 * x2', 'max(x1, x2)')


def _scene(rng: numpy.random.Generator) -> list[Region]:
    """(internal) a triangle and a box in the plane, possibly overlapping"""
    x, y = rng.uniform(0.0, 1.0, size=2)
    triangle = Polygon(((x, y), (x + rng.uniform(0.5, 1.5), y), (x, y + rng.uniform(0.5, 1.5))))
    lo = rng.uniform(0.0, 1.5, size=2)
    box = Box(tuple(lo), tuple(lo + rng.uniform(0.3, 1.2, size=2)))
    return [Region([triangle], dim=2, label='P1'), Region([box], dim=2, label='P2')]


def invariance_suite(p: GParams, engine: Union[ExpectationEngine, None] = None, scenes: int = 5,
                     thetas: Sequence[float] = (math.pi / 6, math.pi / 4, 1.0), seed: int = 0,
                     tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """Gram matrices and expectations before / after rigid motions of two-polygon scenes"""
    tol = resolve_tolerances(tol)
    engine = engine or ExpectationEngine(tol=tol)
    rng = numpy.random.default_rng(seed)
    payoffs = [parse(text) for text in INVARIANCE_PAYOFFS]
    gram_worst, value_worst, value_tol = 0.0, 0.0, 0.0
    for _ in range(scenes):
        regions = _scene(rng)
        law = gram_matrix(regions, p, tol)
        before = [engine.law_expectation(law, phi, 1.0)[0] for phi in payoffs]
        for theta in thetas:
            shift = rng.uniform(-5.0, 5.0, size=2)
            moved = [transform_region(r, shift, rotation(theta), tol) for r in regions]
            moved_law = gram_matrix(moved, p, tol)
            gram_worst = max(gram_worst, float(numpy.max(numpy.abs(moved_law.lam - law.lam))))
            for phi, value in zip(payoffs, before):
                after, _ = engine.law_expectation(moved_law, phi, 1.0)
                gap = max(abs(after.upper - value.upper), abs(after.lower - value.lower))
                tolerance = _engine_tolerance(tol, engine, value.upper)
                if gap - tolerance > value_worst - value_tol:
                    value_worst, value_tol = gap, tolerance
    report = CheckReport('invariance')
    report.add('gram_invariance', gram_worst, tol.get('gram_invariance'), f'{scenes} scene(s) x {len(thetas)} rotation(s)')
    report.add('expectation_invariance', value_worst, value_tol, ', '.join(INVARIANCE_PAYOFFS))
    return report


FAMILY_PAYOFFS = ('x1^2', 'x1 * x2', 'max(x1, x2)', 'abs(x1 - x2)', 'x1^2 * x2^2', 'max(x1 + x2, 0)')


def gaussian_family_suite(p: GParams, engine: Union[ExpectationEngine, None] = None, tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """Integrals of orthonormal functions with disjoint supports are distributed like W over two disjoint unit regions"""
    tol = resolve_tolerances(tol)
    engine = engine or ExpectationEngine(tol=tol)
    f1 = GridFunction((0.0,), (2.0,), [2.0, 0, 0, 0, 0, 0, 0, 0])
    f2 = GridFunction((0.0,), (2.0,), [0, 0, 0, 0, 1.0, 1.0, 1.0, 1.0])
    law_f = spatial_integral_law([f1, f2], p, tol)
    law_w = gram_matrix([region_from_literal({'box': {'lo': [0.0], 'hi': [1.0]}}), region_from_literal({'box': {'lo': [1.0], 'hi': [2.0]}})], p, tol)
    report = CheckReport('gaussian-family')
    report.add_bool('same_gram', bool(numpy.array_equal(law_f.lam, law_w.lam)), f'{law_f.lam.tolist()} vs {law_w.lam.tolist()}')
    worst = 0.0
    for text in FAMILY_PAYOFFS:
        phi = parse(text)
        a, _ = engine.law_expectation(law_f, phi, 1.0)
        b, _ = engine.law_expectation(law_w, phi, 1.0)
        worst = max(worst, abs(a.upper - b.upper), abs(a.lower - b.lower))
    report.add('same_expectations', worst, tol.get('same_law_abs'), f'{len(FAMILY_PAYOFFS)} payoff(s)')
    return report


def _bump(x: numpy.ndarray) -> numpy.ndarray:
    return numpy.exp(-x * x)


BUMP_NORM_SQ = math.sqrt(math.pi / 2.0) * float(erf(3.0 * math.sqrt(2.0)))
"""||exp(-x^2) 1_(-3,3]||^2"""


def isometry_suite(p: GParams, levels: Sequence[int] = (16, 32, 64), tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """Exact isometry for simple functions, linearity of the law, and convergence on refining grids"""
    tol = resolve_tolerances(tol)
    report = CheckReport('isometry')
    unit = region_from_literal({'box': {'lo': [0.0], 'hi': [1.0]}})
    wide = region_from_literal({'box': {'lo': [1.0], 'hi': [3.0]}})
    cases = {
        'indicator': IndicatorFunction(unit),
        'scaled_indicator': IndicatorFunction(wide, 3),
        'two_cells': simple((2, unit), (-1, wide)),
    }
    for name, f in cases.items():
        lhs, rhs = integral_isometry(f, p)
        report.add_bool(f'exact[{name}]', lhs == rhs, f'lhs={lhs}, rhs={rhs}')

    fs = [IndicatorFunction(unit), simple((1, wide), (Fraction(1, 2), unit))]
    coefficients = [Fraction(3), Fraction(-2)]
    joint = spatial_integral_law(fs, p, tol)
    combined = spatial_integral_law([coefficients[0] * SimpleFunction(tuple(fs[0].terms)) + coefficients[1] * fs[1]], p, tol)
    q = [[a * b for b in coefficients] for a in coefficients]
    report.add_bool('law_linearity', combined.exact[0][0] == joint.contract(q), f'{combined.exact[0][0]} vs {joint.contract(q)}')

    errors, cauchy = [], []
    previous = None
    for cells in levels:
        fg = GridFunction.from_callable(_bump, (-3.0,), (3.0,), (cells,))
        lhs, _ = integral_isometry(fg, p)
        errors.append(abs(lhs - p.sigma_hi_sq * BUMP_NORM_SQ))
        if previous is not None:
            law = spatial_integral_law([fg, previous], p, tol)
            value = 2.0 * float(law.generating([[1.0, -1.0], [-1.0, 1.0]]))
            distance = norm_sq(fg) + norm_sq(previous) - 2.0 * inner(fg, previous)
            cauchy.append(value)
            report.add(f'cauchy_identity[{cells}]', abs(value - p.sigma_hi_sq * distance), tol.get('closed_form_abs'))
        previous = fg
    decreasing = all(b < a for a, b in zip(errors, errors[1:])) or p.sigma_hi_sq == 0
    report.add_bool('refinement_converges', decreasing, f'errors={[f"{e:.3g}" for e in errors]}')
    report.add_bool('cauchy_shrinks', all(b <= a for a, b in zip(cauchy, cauchy[1:])), f'gaps={[f"{e:.3g}" for e in cauchy]}')
    return report


def brownian_index_law(times: Sequence[float], p: GParams) -> GramLaw:
    """Law of B_t = W((0, t]) in d = 1: Lambda = (s ^ t)"""
    if any(t <= 0 or not math.isfinite(t) for t in times):
        raise WhiteNoiseException(f'Index times must be positive and finite, got: {list(times)}')
    return gram_matrix([origin_box([t]) for t in times], p)


def brownian_index_report(p: GParams, times: Sequence[float] = (0.5, 1.0, 2.0), engine: Union[ExpectationEngine, None] = None,
                          tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """E[B_s B_t] = sigma_hi_sq * (s ^ t)"""
    tol = resolve_tolerances(tol)
    engine = engine or ExpectationEngine(tol=tol)
    law = brownian_index_law(times, p)
    report = CheckReport('brownian-index')
    cross = parse('x1 * x2')
    for i in range(len(times)):
        for j in range(i + 1, len(times)):
            expected = p.sigma_hi_sq * min(times[i], times[j])
            gram_value = 2.0 * float(law.restricted([i, j]).generating([[0.0, 0.5], [0.5, 0.0]]))
            value, _ = engine.law_expectation(law.restricted([i, j]), cross, 1.0)
            report.add(f'gram[{times[i]:g},{times[j]:g}]', abs(gram_value - expected), tol.get('closed_form_abs'))
            report.add(f'engine[{times[i]:g},{times[j]:g}]', abs(value.upper - expected), _engine_tolerance(tol, engine, expected))
    return report


def spatial_temporal_contrast(p: GParams, engine: Union[ExpectationEngine, None] = None, tol: Union[ToleranceConfig, None] = None) -> dict:
    """
    E[W_A1^2 - W_A2^2] for disjoint unit regions (2 G(lambda1 - lambda2) = 0) vs the same payoff on two
        time layers of the space-time noise (sigma_hi_sq - sigma_lo_sq)
    """
    from .spacetime import temporal_gaussian_witness  # pylint: disable=import-outside-toplevel
    engine = engine or ExpectationEngine(tol=tol)
    regions = [region_from_literal({'box': {'lo': [0.0], 'hi': [1.0]}}), region_from_literal({'box': {'lo': [1.0], 'hi': [2.0]}})]
    law = gram_matrix(regions, p, tol)
    spatial = 2 * law.generating([[Fraction(1), Fraction(0)], [Fraction(0), Fraction(-1)]])
    engine_value, _ = engine.law_expectation(law, parse('x1^2 - x2^2'), 1.0)
    temporal, _ = temporal_gaussian_witness(p, engine, tol)
    return {'spatial_exact': float(spatial), 'spatial_engine': engine_value.upper, 'temporal': temporal,
            'temporal_expected': p.sigma_hi_sq - p.sigma_lo_sq}


# Paths under one representing measure


@dataclass(frozen=True)
class Lattice:
    """Regular lattice of cells over (0, extent] in d = 1 or 2"""
    extent: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        if len(self.extent) not in (1, 2) or len(self.cells) != len(self.extent):
            raise WhiteNoiseException(f'Lattices are 1 or 2 dimensional, got extent={self.extent}, cells={self.cells}')
        if any(not (e > 0 and math.isfinite(e)) for e in self.extent) or any(int(n) < 1 for n in self.cells):
            raise WhiteNoiseException('Lattice extent must be positive and cell counts at least 1')
        if self.n_cells > MAX_LATTICE_CELLS:
            raise WhiteNoiseException(f'Lattice has {self.n_cells} cells, limit is {MAX_LATTICE_CELLS}')

    @property
    def dim(self) -> int:
        return len(self.extent)

    @property
    def n_cells(self) -> int:
        return int(numpy.prod(self.cells))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extent, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(numpy.prod(self.spacing))

    def nodes(self, axis: int) -> numpy.ndarray:
        return numpy.linspace(0.0, self.extent[axis], self.cells[axis] + 1)

    def node_index(self, x: Sequence[float]) -> tuple[int, ...]:
        """Index of the lattice node at x"""
        index = tuple(int(round(v / h)) for v, h in zip(x, self.spacing))
        if any(not (0 <= i <= n) for i, n in zip(index, self.cells)) or any(abs(i * h - v) > 1e-9 * max(1.0, abs(v)) for i, h, v in zip(index, self.spacing, x)):
            raise WhiteNoiseException(f'{list(x)} is not a lattice node')
        return index

    def to_dict(self) -> dict:
        return {'extent': list(self.extent), 'cells': list(self.cells)}


class FieldPolicy:
    """One representing measure: a variance per lattice cell within [sigma_lo_sq, sigma_hi_sq]"""

    def __init__(self, lattice: Lattice, variances) -> None:
        variances = numpy.broadcast_to(numpy.asarray(variances, dtype=float), lattice.cells).copy()
        if not numpy.all(numpy.isfinite(variances)) or numpy.any(variances < 0):
            raise WhiteNoiseException('Cell variances must be finite and nonnegative')
        self.lattice = lattice
        self.variances = variances

    @staticmethod
    def constant(lattice: Lattice, variance: float) -> FieldPolicy:
        return FieldPolicy(lattice, variance)

    @staticmethod
    def checkerboard(lattice: Lattice, p: GParams) -> FieldPolicy:
        """Bang-bang field alternating the extreme variances"""
        parity = numpy.indices(lattice.cells).sum(axis=0) % 2
        return FieldPolicy(lattice, numpy.where(parity == 0, p.sigma_hi_sq, p.sigma_lo_sq))

    @staticmethod
    def random(lattice: Lattice, p: GParams, rng: numpy.random.Generator) -> FieldPolicy:
        return FieldPolicy(lattice, rng.uniform(p.sigma_lo_sq, p.sigma_hi_sq, size=lattice.cells))

    def within(self, p: GParams, slack: float = 1e-12) -> bool:
        return bool(numpy.all((self.variances >= p.sigma_lo_sq - slack) & (self.variances <= p.sigma_hi_sq + slack)))

    def node_variances(self) -> numpy.ndarray:
        """Variance of W at each lattice node: cumulative sums of cell variance * volume"""
        v = self.variances * self.lattice.cell_volume
        for axis in range(v.ndim):
            v = numpy.cumsum(v, axis=axis)
        return numpy.pad(v, [(1, 0)] * v.ndim)


def _sample_lattice(policy: FieldPolicy, count: int, rng: numpy.random.Generator) -> numpy.ndarray:
    """(internal) count fields at the lattice nodes, W = 0 on the axes"""
    scale = numpy.sqrt(policy.variances * policy.lattice.cell_volume)
    w = rng.standard_normal((count,) + policy.lattice.cells) * scale
    for axis in range(1, w.ndim):
        w = numpy.cumsum(w, axis=axis)
    return numpy.pad(w, [(0, 0)] + [(1, 0)] * (w.ndim - 1))


def _chunks(paths: int, chunk_size: int, seed: int) -> list[tuple[int, numpy.random.SeedSequence]]:
    counts = [chunk_size] * (paths // chunk_size)
    if paths % chunk_size:
        counts.append(paths % chunk_size)
    return list(zip(counts, numpy.random.SeedSequence(seed).spawn(len(counts))))


@dataclass
class PathEnsemble:
    """Sampled fields at the lattice nodes, values[path, i(, j)]"""
    lattice: Lattice
    values: numpy.ndarray
    seed: int

    @property
    def paths(self) -> int:
        return self.values.shape[0]

    def to_dataframe(self) -> pandas.DataFrame:
        """Long table with columns (x1[, x2], value, path_id)"""
        mesh = numpy.meshgrid(*[self.lattice.nodes(k) for k in range(self.lattice.dim)], indexing='ij')
        per_path = mesh[0].size
        columns = {f'x{k + 1}': numpy.tile(m.ravel(), self.paths) for k, m in enumerate(mesh)}
        columns['value'] = self.values.reshape(self.paths, per_path).ravel()
        columns['path_id'] = numpy.repeat(numpy.arange(self.paths), per_path)
        return pandas.DataFrame(columns)


def _sample_chunk(policy: FieldPolicy, count: int, seed: numpy.random.SeedSequence) -> numpy.ndarray:
    return _sample_lattice(policy, count, numpy.random.default_rng(seed))


def sample_paths(lattice: Lattice, policy: FieldPolicy, paths: int, seed: int, chunk_size: int = 1000, workers: int = 1) -> PathEnsemble:
    """Classical Gaussian fields under one policy, assembled from independent cell increments by rectangle additivity"""
    if paths < 1:
        raise WhiteNoiseException(f'Need at least one path, got: {paths}')
    if policy.lattice != lattice:
        raise WhiteNoiseException('Policy was built for a different lattice')
    args = [(policy, n, s) for n, s in _chunks(paths, chunk_size, seed)]
    values = numpy.concatenate(run_parallel(_sample_chunk, args, workers), axis=0)
    log.debug(f'Sampled {paths} path(s) on {lattice.cells} cells')
    return PathEnsemble(lattice, values, seed)


def _moment_chunk(policy: FieldPolicy, pairs: list[tuple[tuple[int, ...], tuple[int, ...]]], power: int, count: int,
                  seed: numpy.random.SeedSequence) -> tuple[numpy.ndarray, numpy.ndarray]:
    w = _sample_lattice(policy, count, numpy.random.default_rng(seed))
    increments = numpy.stack([w[(slice(None),) + y] - w[(slice(None),) + x] for x, y in pairs], axis=1)
    m = numpy.abs(increments) ** power
    return m.sum(axis=0), (m * m).sum(axis=0)


def kolmogorov_bound(x: Sequence[float], y: Sequence[float], p: GParams) -> float:
    """30 sqrt(2) sigma_hi^6 (y1 v y2) |y - x|^3, valid for nested pairs 0 <= x <= y in the unit square"""
    distance = math.dist(x, y)
    return 30.0 * math.sqrt(2.0) * p.sigma_hi_sq ** 3 * max(y) * distance ** 3


def moment_surface(lattice: Lattice, policy: FieldPolicy, pairs: Sequence[tuple[Sequence[float], Sequence[float]]], paths: int,
                   seed: int, power: int = 6, level: float = 0.99, chunk_size: int = 2000, workers: int = 1,
                   p: Union[GParams, None] = None) -> pandas.DataFrame:
    """
    Monte-Carlo E|W_y - W_x|^power for lattice node pairs, with the Gaussian reference
        (power - 1)!! v^(power / 2), v the variance of the increment under the policy
    The confidence level applies to each pair separately
    """
    if power % 2:
        raise WhiteNoiseException(f'Power must be even, got: {power}')
    if paths < 2:
        raise WhiteNoiseException(f'Need at least two paths, got: {paths}')
    index_pairs = [(lattice.node_index(x), lattice.node_index(y)) for x, y in pairs]
    args = [(policy, index_pairs, power, n, s) for n, s in _chunks(paths, chunk_size, seed)]
    sums = run_parallel(_moment_chunk, args, workers)
    total = sum(s for s, _ in sums)
    total_sq = sum(q for _, q in sums)
    mean = total / paths
    sd = numpy.sqrt(numpy.maximum(0.0, (total_sq - paths * mean * mean) / (paths - 1)))
    half_width = norm.ppf(0.5 + level / 2.0) * sd / math.sqrt(paths)

    node_var = policy.node_variances()
    rows = []
    for k, ((x, y), (ix, iy)) in enumerate(zip(pairs, index_pairs)):
        corner = tuple(min(a, b) for a, b in zip(ix, iy))
        variance = float(node_var[iy] + node_var[ix] - 2.0 * node_var[corner])
        reference = math.prod(range(power - 1, 0, -2)) * variance ** (power // 2)
        row = {f'x{i + 1}': v for i, v in enumerate(x)}
        row.update({f'y{i + 1}': v for i, v in enumerate(y)})
        row.update({
            'measure': symmetric_difference_measure(origin_box(x), origin_box(y)),
            'mc_mean': float(mean[k]),
            'half_width': float(half_width[k]),
            'reference': reference,
            'within_ci': bool(abs(mean[k] - reference) <= half_width[k]),
        })
        if p is not None and lattice.dim == 2 and all(u <= v for u, v in zip(x, y)) and min(x) >= 0:
            row['kolmogorov_bound'] = kolmogorov_bound(x, y, p)
        rows.append(row)
    return pandas.DataFrame(rows)


@dataclass
class HolderEstimate:
    """Slope of log E|increment| against log lag, with its confidence interval"""
    exponent: float
    ci_low: float
    ci_high: float
    table: pandas.DataFrame

    def to_dict(self) -> dict:
        return {'exponent': self.exponent, 'ci_low': self.ci_low, 'ci_high': self.ci_high, 'table': self.table.to_dict(orient='list')}


def holder_exponent(ensemble: PathEnsemble, lags: Sequence[int] = (1, 2, 4, 8), level: float = 0.95) -> HolderEstimate:
    """OLS fit of log mean |W(x + lag h e1) - W(x)| on log(lag h), over every node and path"""
    lattice = ensemble.lattice
    if max(lags) >= lattice.cells[0]:
        raise WhiteNoiseException(f'Largest lag {max(lags)} needs more than {lattice.cells[0]} cells along the first axis')
    rows = []
    for lag in lags:
        diff = ensemble.values[:, lag:, ...] - ensemble.values[:, :-lag, ...]
        rows.append({'lag': lag * lattice.spacing[0], 'mean_abs_increment': float(numpy.mean(numpy.abs(diff)))})
    table = pandas.DataFrame(rows)
    x = sm.add_constant(numpy.log(table['lag'].to_numpy()))
    fit = sm.OLS(numpy.log(table['mean_abs_increment'].to_numpy()), x).fit()
    low, high = fit.conf_int(alpha=1.0 - level)[1]
    return HolderEstimate(float(fit.params[1]), float(low), float(high), table)


def nested_pairs(lattice: Lattice, count: int, rng: numpy.random.Generator) -> list[tuple[tuple[float, ...], tuple[float, ...]]]:
    """Random lattice node pairs 0 <= x <= y with x != y"""
    pairs = []
    while len(pairs) < count:
        ix = [int(rng.integers(0, n)) for n in lattice.cells]
        iy = [int(rng.integers(i + 1, n + 1)) for i, n in zip(ix, lattice.cells)]
        pairs.append((tuple(i * h for i, h in zip(ix, lattice.spacing)), tuple(i * h for i, h in zip(iy, lattice.spacing))))
    return pairs


def continuity_suite(p: GParams, paths: int = 100_000, pairs: int = 10, seed: int = 0, workers: int = 1,
                     tol: Union[ToleranceConfig, None] = None) -> CheckReport:
    """
    Sixth moments of increments under the sigma_hi extreme measure against 15 sigma_hi^6 m^3,
        the moment bound behind the continuous modification, and an empirical Holder exponent
    """
    tol = resolve_tolerances(tol)
    rng = numpy.random.default_rng(seed)
    lattice = Lattice((1.0, 1.0), (16, 16))
    policy = FieldPolicy.constant(lattice, p.sigma_hi_sq)
    chosen = nested_pairs(lattice, pairs, rng)
    level = 1.0 - (1.0 - tol.get('mc_ci_level')) / pairs
    table = moment_surface(lattice, policy, chosen, paths, seed, level=level, workers=workers, p=p)
    report = CheckReport('continuity')
    outside = table[~table['within_ci']]
    report.add_bool('sixth_moment', outside.empty, f'{len(table) - len(outside)}/{len(table)} pair(s) within their CI (level {level:.4g} each)')
    closed = 15.0 * p.sigma_hi_sq ** 3 * (table['y1'] * table['y2'] - table['x1'] * table['x2']) ** 3
    report.add('sixth_moment_reference', float(numpy.max(numpy.abs(closed - table['reference']))), tol.get('closed_form_abs') * max(1.0, float(closed.max())))
    report.add('kolmogorov_bound', float(numpy.max(table['reference'] - table['kolmogorov_bound'])), 0.0)
    if p.sigma_hi_sq > 0:
        ensemble = sample_paths(lattice, policy, min(paths, 2000), seed + 1, workers=workers)
        estimate = holder_exponent(ensemble)
        report.add('holder_exponent', max(0.0, 0.2 - estimate.exponent), 0.0,
                   f'exponent {estimate.exponent:.3f}, CI [{estimate.ci_low:.3f}, {estimate.ci_high:.3f}]')
    return report
