"""
GField - Region geometry

    Regions are finite unions of half-open boxes (lo, hi] in any dimension,
        or of convex polygons in the plane
    Box parts are normalized to pairwise disjoint pieces by subtraction splitting,
        which only ever reuses input coordinates, so box volumes (and the Gram matrix
        of box-only regions) are available in exact Fraction arithmetic
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence, Union

import numpy

from .common import log
from .config import ToleranceConfig, resolve_tolerances
from .sublinear import contract, g_scalar
from .vartypes import GParams


class GeometryException(Exception):
    """Invalid region, literal or transformation"""


def _finite_tuple(values: Sequence[float], what: str) -> tuple[float, ...]:
    """(internal) validate a coordinate vector"""
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError) as ex:
        raise GeometryException(f'{what} must be a list of numbers, got: {values!r}') from ex
    if not all(math.isfinite(v) for v in out):
        raise GeometryException(f'{what} must be finite, got: {out}')
    return out


@dataclass(frozen=True)
class Box:
    """Half-open box (lo, hi]"""
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = _finite_tuple(self.lo, 'Box lo')
        hi = _finite_tuple(self.hi, 'Box hi')
        if len(lo) != len(hi) or not lo:
            raise GeometryException(f'Box corners must have the same positive dimension, got: {len(lo)} and {len(hi)}')
        for a, b in zip(lo, hi):
            if a > b:
                raise GeometryException(f'Box needs lo <= hi in every coordinate, got: lo={lo}, hi={hi}')
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    @property
    def exact_volume(self) -> Fraction:
        """Volume in exact arithmetic"""
        vol = Fraction(1)
        for a, b in zip(self.lo, self.hi):
            vol *= Fraction(b) - Fraction(a)
        return vol

    @property
    def is_empty(self) -> bool:
        return any(b <= a for a, b in zip(self.lo, self.hi))

    def intersect(self, other: Box) -> Union[Box, None]:
        """Intersection, None when it has zero volume"""
        lo = tuple(max(a, c) for a, c in zip(self.lo, other.lo))
        hi = tuple(min(b, d) for b, d in zip(self.hi, other.hi))
        if any(b <= a for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def subtract(self, other: Box) -> list[Box]:
        """Disjoint boxes covering self minus other"""
        if self.intersect(other) is None:
            return [self]
        pieces = []
        lo, hi = list(self.lo), list(self.hi)
        for i in range(self.dim):
            if lo[i] < other.lo[i]:
                piece_hi = list(hi)
                piece_hi[i] = other.lo[i]
                pieces.append(Box(tuple(lo), tuple(piece_hi)))
                lo[i] = other.lo[i]
            if other.hi[i] < hi[i]:
                piece_lo = list(lo)
                piece_lo[i] = other.hi[i]
                pieces.append(Box(tuple(piece_lo), tuple(hi)))
                hi[i] = other.hi[i]
        return [p for p in pieces if not p.is_empty]

    def corners_2d(self) -> list[tuple[float, float]]:
        """Counter-clockwise corners of a planar box"""
        if self.dim != 2:
            raise GeometryException(f'Only planar boxes have polygon corners, got dimension {self.dim}')
        (x0, y0), (x1, y1) = self.lo, self.hi
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]

    def to_dict(self) -> dict:
        return {'box': {'lo': list(self.lo), 'hi': list(self.hi)}}


def _cross(o, a, b) -> float:
    """(internal) z component of (a - o) x (b - o)"""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _signed_area(vertices: Sequence[tuple[float, float]]) -> float:
    """(internal) shoelace formula, positive for counter-clockwise order"""
    total = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return 0.5 * total


def _segments_cross(p1, p2, p3, p4) -> bool:
    """(internal) do closed segments p1p2 and p3p4 intersect"""
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True

    def on_segment(a, b, c) -> bool:
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return (d1 == 0 and on_segment(p3, p4, p1)) or (d2 == 0 and on_segment(p3, p4, p2)) \
        or (d3 == 0 and on_segment(p1, p2, p3)) or (d4 == 0 and on_segment(p1, p2, p4))


@dataclass(frozen=True)
class Polygon:
    """Convex polygon in the plane, vertices stored counter-clockwise"""
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = []
        for v in self.vertices:
            point = _finite_tuple(v, 'Polygon vertex')
            if len(point) != 2:
                raise GeometryException(f'Polygon vertices must be 2-D, got: {v!r}')
            verts.append(point)
        if len(verts) < 3:
            raise GeometryException(f'A polygon needs at least 3 vertices, got {len(verts)}')
        n = len(verts)
        for i in range(n):
            for j in range(i + 1, n):
                if abs(i - j) in (1, n - 1):
                    continue
                if _segments_cross(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]):
                    raise GeometryException(f'Polygon edges {i} and {j} intersect')
        if _signed_area(verts) < 0:
            verts.reverse()
        scale = max(max(abs(c) for c in v) for v in verts) or 1.0
        for i in range(n):
            if _cross(verts[i], verts[(i + 1) % n], verts[(i + 2) % n]) < -1e-12 * scale * scale:
                raise GeometryException('Only convex polygons are supported')
        object.__setattr__(self, 'vertices', tuple(verts))

    @property
    def area(self) -> float:
        return abs(_signed_area(self.vertices))

    def clip(self, other: Polygon) -> list[tuple[float, float]]:
        """Vertices of self intersected with other (Sutherland-Hodgman)"""
        output = list(self.vertices)
        clip = other.vertices
        for i in range(len(clip)):
            a, b = clip[i], clip[(i + 1) % len(clip)]
            source, output = output, []
            if not source:
                break
            for j in range(len(source)):
                cur, nxt = source[j], source[(j + 1) % len(source)]
                cur_in = _cross(a, b, cur) >= 0
                nxt_in = _cross(a, b, nxt) >= 0
                if cur_in:
                    output.append(cur)
                if cur_in != nxt_in:
                    dx, dy = nxt[0] - cur[0], nxt[1] - cur[1]
                    ex, ey = b[0] - a[0], b[1] - a[1]
                    denom = dx * ey - dy * ex
                    if denom != 0:
                        s = ((a[0] - cur[0]) * ey - (a[1] - cur[1]) * ex) / denom
                        output.append((cur[0] + s * dx, cur[1] + s * dy))
        return output

    def intersect_area(self, other: Polygon) -> float:
        verts = self.clip(other)
        if len(verts) < 3:
            return 0.0
        return abs(_signed_area(verts))

    def transformed(self, o: numpy.ndarray, p: numpy.ndarray) -> Polygon:
        return Polygon(tuple(tuple(float(c) for c in o @ numpy.asarray(v) + p) for v in self.vertices))

    def to_dict(self) -> dict:
        return {'polygon': [list(v) for v in self.vertices]}


Part = Union[Box, Polygon]


class Region:
    """
    Finite union of boxes (any dimension) or convex polygons (plane)
        Box parts are normalized to disjoint pieces; polygon parts must not overlap
    """

    def __init__(self, parts: Sequence[Part] = (), dim: Union[int, None] = None, label: str = '') -> None:
        parts = list(parts)
        dims = {p.dim if isinstance(p, Box) else 2 for p in parts}
        if dim is not None:
            dims.add(dim)
        if len(dims) > 1:
            raise GeometryException(f'Region parts have mixed dimensions: {sorted(dims)}')
        self.dim = dims.pop() if dims else 1
        """Ambient dimension d"""
        self.label = label
        """Identifier shown in reports"""

        boxes: list[Box] = []
        for part in (p for p in parts if isinstance(p, Box)):
            pieces = [part] if not part.is_empty else []
            for accepted in boxes:
                pieces = [q for piece in pieces for q in piece.subtract(accepted)]
            boxes.extend(pieces)
        polygons = [p for p in parts if isinstance(p, Polygon) and p.area > 0]
        if polygons:
            polygons = [Polygon(tuple(b.corners_2d())) for b in boxes] + polygons
            boxes = []
            for i, a in enumerate(polygons):
                for b in polygons[i + 1:]:
                    overlap = a.intersect_area(b)
                    if overlap > 1e-12 * max(1.0, a.area, b.area):
                        raise GeometryException(f'Polygons within one region must not overlap (overlap area {overlap:g})')
        self.boxes: tuple[Box, ...] = tuple(boxes)
        """Pairwise disjoint box parts"""
        self.polygons: tuple[Polygon, ...] = tuple(polygons)
        """Non-overlapping polygon parts"""

    @property
    def parts(self) -> tuple[Part, ...]:
        return self.boxes + self.polygons

    @property
    def is_box_only(self) -> bool:
        return not self.polygons

    @property
    def is_empty(self) -> bool:
        return not self.parts

    def as_polygons(self) -> list[Polygon]:
        """All parts as polygons (plane only)"""
        if self.dim != 2:
            raise GeometryException(f'Polygon operations need dimension 2, got {self.dim}')
        return [Polygon(tuple(b.corners_2d())) for b in self.boxes] + list(self.polygons)

    def to_dict(self) -> dict:
        parts = [p.to_dict() for p in self.parts]
        if len(parts) == 1:
            return parts[0]
        return {'union': parts}

    def __repr__(self) -> str:
        return f'Region({self.label or "-"}, dim={self.dim}, parts={len(self.parts)})'


def _check_same_dim(*regions: Region):
    dims = {r.dim for r in regions if not r.is_empty}
    if len(dims) > 1:
        raise GeometryException(f'Regions live in different dimensions: {sorted(dims)}')


def measure(r: Region) -> float:
    """Lebesgue measure"""
    return sum(b.volume for b in r.boxes) + sum(p.area for p in r.polygons)


def exact_measure(r: Region) -> Fraction:
    """Lebesgue measure in exact arithmetic (box-only regions)"""
    if not r.is_box_only:
        raise GeometryException('Exact measures are only available for box-only regions')
    return sum((b.exact_volume for b in r.boxes), Fraction(0))


def intersect_measure(r1: Region, r2: Region) -> float:
    """Lebesgue measure of r1 intersected with r2"""
    if r1.is_empty or r2.is_empty:
        return 0.0
    _check_same_dim(r1, r2)
    if r1.is_box_only and r2.is_box_only:
        total = 0.0
        for a in r1.boxes:
            for b in r2.boxes:
                c = a.intersect(b)
                if c is not None:
                    total += c.volume
        return total
    total = 0.0
    for a in r1.as_polygons():
        for b in r2.as_polygons():
            total += a.intersect_area(b)
    return total


def exact_intersect_measure(r1: Region, r2: Region) -> Fraction:
    """Exact measure of the intersection of two box-only regions"""
    if not (r1.is_box_only and r2.is_box_only):
        raise GeometryException('Exact measures are only available for box-only regions')
    _check_same_dim(r1, r2)
    total = Fraction(0)
    for a in r1.boxes:
        for b in r2.boxes:
            c = a.intersect(b)
            if c is not None:
                total += c.exact_volume
    return total


def union(a: Region, b: Region) -> Region:
    """A u B"""
    _check_same_dim(a, b)
    return Region(list(a.parts) + list(b.parts), dim=a.dim, label=f'{a.label}|{b.label}' if a.label or b.label else '')


def intersection(a: Region, b: Region) -> Region:
    """A n B (box-only regions)"""
    if not (a.is_box_only and b.is_box_only):
        raise GeometryException('Region intersection is only available for box-only regions')
    _check_same_dim(a, b)
    parts = [c for x in a.boxes for y in b.boxes if (c := x.intersect(y)) is not None]
    return Region(parts, dim=a.dim, label=f'{a.label}&{b.label}' if a.label or b.label else '')


def symmetric_difference_measure(a: Region, b: Region) -> float:
    """lambda(A) + lambda(B) - 2 lambda(A n B)"""
    return measure(a) + measure(b) - 2.0 * intersect_measure(a, b)


def origin_box(x: Sequence[float]) -> Region:
    """The box (0 ^ x, 0 v x], index set of the field W_x"""
    x = _finite_tuple(x, 'Point')
    return Region([Box(tuple(min(0.0, v) for v in x), tuple(max(0.0, v) for v in x))], dim=len(x), label=f'(0,{list(x)}]')


class GramLaw:
    """
    A finite-dimensional G-normal law: the Gram matrix of intersection measures (or of L2
        inner products) with the ambiguity parameters
    """

    def __init__(self, lam, params: GParams, labels: Sequence[str] = (), exact: Union[Sequence[Sequence[Fraction]], None] = None,
                 tol: Union[ToleranceConfig, None] = None) -> None:
        tol = resolve_tolerances(tol)
        lam = numpy.array(lam, dtype=float, ndmin=2)
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
            raise GeometryException(f'Gram matrix must be square, got shape {lam.shape}')
        if not numpy.all(numpy.isfinite(lam)):
            raise GeometryException('Gram matrix must be finite')
        if not numpy.array_equal(lam, lam.T):
            if numpy.max(numpy.abs(lam - lam.T)) > tol.get('psd_eig') * max(1.0, float(numpy.trace(lam))):
                raise GeometryException('Gram matrix must be symmetric')
            lam = 0.5 * (lam + lam.T)
        self.lam = lam
        """Gram matrix Lambda (n x n)"""
        self.params = params
        """Ambiguity parameters"""
        self.labels = list(labels) if labels else [f'A{i + 1}' for i in range(lam.shape[0])]
        """One label per coordinate"""
        self.exact = None if exact is None else tuple(tuple(Fraction(v) for v in row) for row in exact)
        """Gram matrix in exact arithmetic, when available"""
        if self.n and self.min_eigenvalue < -tol.get('psd_eig') * max(1.0, self.trace):
            raise GeometryException(f'Gram matrix is not positive semi-definite (smallest eigenvalue {self.min_eigenvalue:g})')

    @property
    def n(self) -> int:
        return self.lam.shape[0]

    @property
    def trace(self) -> float:
        return float(numpy.trace(self.lam))

    @property
    def min_eigenvalue(self) -> float:
        return float(numpy.linalg.eigvalsh(self.lam)[0]) if self.n else 0.0

    def contract(self, q) -> Union[float, Fraction]:
        """<Q, Lambda>, exact when the exact Gram matrix is known"""
        q = numpy.asarray(q, dtype=float) if not isinstance(q, (list, tuple)) else q
        if numpy.shape(q) != self.lam.shape:
            raise GeometryException(f'Q must have shape {self.lam.shape}, got {numpy.shape(q)}')
        if self.exact is not None:
            return contract([[v if isinstance(v, Fraction) else Fraction(float(v)) for v in row] for row in q], self.exact)
        return contract(q, self.lam)

    def generating(self, q) -> Union[float, Fraction]:
        """G(<Q, Lambda>): the generating function of this law"""
        return g_scalar(self.contract(q), self.params)

    def permuted(self, perm: Sequence[int]) -> GramLaw:
        """Law of the coordinates reordered as (X_perm[0], ..., X_perm[n-1])"""
        perm = list(perm)
        if sorted(perm) != list(range(self.n)):
            raise GeometryException(f'Not a permutation of 0..{self.n - 1}: {perm}')
        exact = None if self.exact is None else [[self.exact[i][j] for j in perm] for i in perm]
        return GramLaw(self.lam[numpy.ix_(perm, perm)], self.params, [self.labels[i] for i in perm], exact)

    def restricted(self, indices: Sequence[int]) -> GramLaw:
        """Law of a sub-vector"""
        indices = list(indices)
        exact = None if self.exact is None else [[self.exact[i][j] for j in indices] for i in indices]
        return GramLaw(self.lam[numpy.ix_(indices, indices)], self.params, [self.labels[i] for i in indices], exact)

    def to_dict(self) -> dict:
        return {'lambda': self.lam.tolist(), 'params': self.params.to_dict(), 'labels': list(self.labels)}

    def __repr__(self) -> str:
        return f'GramLaw(n={self.n}, trace={self.trace:g}, {self.params!r})'


def gram_matrix(regions: Sequence[Region], p: GParams, tol: Union[ToleranceConfig, None] = None) -> GramLaw:
    """Lambda_ij = lambda(A_i n A_j); exact arithmetic is attached when every region is box-only"""
    regions = list(regions)
    if not regions:
        raise GeometryException('At least one region is required')
    _check_same_dim(*regions)
    n = len(regions)
    exact = None
    if all(r.is_box_only for r in regions):
        exact = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                exact[i][j] = exact[j][i] = exact_intersect_measure(regions[i], regions[j])
        lam = numpy.array([[float(v) for v in row] for row in exact])
    else:
        lam = numpy.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                lam[i, j] = lam[j, i] = intersect_measure(regions[i], regions[j])
    labels = [r.label or f'A{i + 1}' for i, r in enumerate(regions)]
    law = GramLaw(lam, p, labels, exact, tol)
    log.debug(f'Gram matrix of {n} region(s): trace={law.trace:g}, exact={exact is not None}')
    return law


def _is_signed_permutation(o: numpy.ndarray) -> bool:
    """(internal) exactly one +-1 per row and column, zeros elsewhere"""
    if not numpy.all(numpy.isin(o, (-1.0, 0.0, 1.0))):
        return False
    return bool(numpy.all(numpy.sum(o != 0, axis=0) == 1) and numpy.all(numpy.sum(o != 0, axis=1) == 1))


def transform_region(r: Region, p: Sequence[float], o: Union[Sequence[Sequence[float]], numpy.ndarray, None] = None,
                     tol: Union[ToleranceConfig, None] = None) -> Region:
    """
    T(A) = {O x + p : x in A}
        signed permutations keep boxes as boxes in any dimension; a general orthogonal O needs d = 2
        and turns boxes into polygons
    """
    tol = resolve_tolerances(tol)
    d = r.dim
    shift = numpy.array(_finite_tuple(p, 'Translation'))
    if shift.shape != (d,):
        raise GeometryException(f'Translation must have {d} coordinates, got {shift.shape[0]}')
    o = numpy.eye(d) if o is None else numpy.array(o, dtype=float)
    if o.shape != (d, d):
        raise GeometryException(f'O must be {d}x{d}, got shape {o.shape}')
    if not numpy.all(numpy.isfinite(o)) or numpy.max(numpy.abs(o.T @ o - numpy.eye(d))) > tol.get('orthogonal'):
        raise GeometryException('Transformation matrix is not orthogonal')

    if _is_signed_permutation(o):
        boxes = []
        for b in r.boxes:
            lo, hi = [0.0] * d, [0.0] * d
            for i in range(d):
                j = int(numpy.nonzero(o[i])[0][0])
                if o[i, j] > 0:
                    lo[i], hi[i] = b.lo[j] + shift[i], b.hi[j] + shift[i]
                else:
                    lo[i], hi[i] = -b.hi[j] + shift[i], -b.lo[j] + shift[i]
            boxes.append(Box(tuple(lo), tuple(hi)))
        polygons = [poly.transformed(o, shift) for poly in r.polygons]
        return Region(boxes + polygons, dim=d, label=r.label)
    if d != 2:
        raise GeometryException(f'General rotations are only supported in dimension 2, got {d}')
    return Region([poly.transformed(o, shift) for poly in r.as_polygons()], dim=2, label=r.label)


def rotation(theta: float) -> numpy.ndarray:
    """Planar rotation matrix"""
    c, s = math.cos(theta), math.sin(theta)
    return numpy.array([[c, -s], [s, c]])


def region_from_literal(literal: Any, label: str = '') -> Region:
    """
    Parse a region literal:
        {"box": {"lo": [...], "hi": [...]}} | {"polygon": [[x, y], ...]} | {"union": [...]}
    """
    if isinstance(literal, Region):
        return literal
    if not isinstance(literal, dict) or len(literal) != 1:
        raise GeometryException(f'Region literal must be an object with one of box / polygon / union, got: {literal!r}')
    kind, body = next(iter(literal.items()))
    if kind == 'box':
        if not isinstance(body, dict) or 'lo' not in body or 'hi' not in body:
            raise GeometryException(f'Box literal needs lo and hi, got: {body!r}')
        box = Box(tuple(body['lo']), tuple(body['hi']))
        return Region([box], dim=box.dim, label=label)
    if kind == 'polygon':
        if not isinstance(body, list):
            raise GeometryException(f'Polygon literal must be a list of vertices, got: {body!r}')
        return Region([Polygon(tuple(tuple(v) for v in body))], dim=2, label=label)
    if kind == 'union':
        if not isinstance(body, list) or not body:
            raise GeometryException(f'Union literal must be a nonempty list, got: {body!r}')
        members = [region_from_literal(item) for item in body]
        _check_same_dim(*members)
        return Region([part for m in members for part in m.parts], dim=members[0].dim, label=label)
    raise GeometryException(f'Unknown region kind: {kind!r}')


def region_to_literal(r: Region) -> dict:
    """Inverse of region_from_literal (normalized parts)"""
    return r.to_dict()
