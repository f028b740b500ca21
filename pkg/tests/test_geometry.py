"""
GField - regions, measures and Gram laws
"""
# License: GPLv3, see License.txt

import math

from fractions import Fraction

import numpy
import pytest

from hypothesis import given, strategies as st

from gfield.geometry import (GeometryException, GramLaw, exact_intersect_measure, exact_measure, gram_matrix, intersect_measure, intersection,
                             measure, origin_box, region_from_literal, rotation, symmetric_difference_measure, transform_region, union)
from gfield.vartypes import GParams

from .conftest import box

coords = st.integers(min_value=-8, max_value=8).map(lambda k: k / 4)


@st.composite
def boxes(draw, dim=2):
    lo, hi = [], []
    for _ in range(dim):
        a, b = draw(coords), draw(coords)
        lo.append(min(a, b))
        hi.append(max(a, b) + 0.25)
    return box(lo, hi)


def test_box_measure(unit_square):
    assert measure(unit_square) == 1.0
    assert exact_measure(box([0.0], [0.1])) == Fraction(0.1)
    assert measure(box([0.0, 0.0], [2.0, 0.0])) == 0.0


def test_invalid_boxes():
    with pytest.raises(GeometryException):
        box([1.0], [0.0])
    with pytest.raises(GeometryException):
        box([0.0, 0.0], [1.0])
    with pytest.raises(GeometryException):
        box([0.0], [math.inf])


def test_union_is_normalized(unit_square):
    shifted = box([0.5, 0.0], [1.5, 1.0])
    both = union(unit_square, shifted)
    assert measure(both) == pytest.approx(1.5)
    assert exact_measure(both) == Fraction(3, 2)
    assert measure(intersection(unit_square, shifted)) == pytest.approx(0.5)


@given(boxes(), boxes())
def test_inclusion_exclusion_is_exact(a, b):
    lhs = exact_measure(union(a, b)) + exact_intersect_measure(a, b)
    assert lhs == exact_measure(a) + exact_measure(b)


@given(boxes(), boxes(), boxes())
def test_gram_is_psd(a, b, c):
    law = gram_matrix([a, b, c], GParams(1.0, 2.0))
    assert law.min_eigenvalue >= -1e-10 * max(1.0, law.trace)
    assert law.exact is not None
    assert float(law.exact[0][1]) == law.lam[0, 1]


def test_polygon_measures():
    triangle = region_from_literal({'polygon': [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]})
    assert measure(triangle) == pytest.approx(0.5)
    square = box([0.0, 0.0], [1.0, 1.0])
    assert intersect_measure(triangle, square) == pytest.approx(0.5)
    assert intersect_measure(triangle, box([0.5, 0.5], [1.0, 1.0])) == pytest.approx(0.0, abs=1e-12)
    assert symmetric_difference_measure(triangle, square) == pytest.approx(0.5)
    with pytest.raises(GeometryException):
        exact_measure(triangle)


def test_clockwise_polygon_is_reoriented():
    cw = region_from_literal({'polygon': [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]})
    assert measure(cw) == pytest.approx(0.5)


@pytest.mark.parametrize('literal', [
    {'polygon': [[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [1.0, 2.0]]},
    {'polygon': [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]},
    {'polygon': [[0.0, 0.0], [1.0, 0.0]]},
    {'circle': 1},
    {'box': {'lo': [0.0]}},
    {'union': []},
    [0, 1],
])
def test_rejected_literals(literal):
    with pytest.raises(GeometryException):
        region_from_literal(literal)


def test_mixed_dimensions():
    with pytest.raises(GeometryException):
        gram_matrix([box([0.0], [1.0]), box([0.0, 0.0], [1.0, 1.0])], GParams())


def test_literal_round_trip_through_to_dict():
    r = union(box([0.0, 0.0], [1.0, 1.0]), box([2.0, 0.0], [3.0, 1.0]))
    again = region_from_literal(r.to_dict())
    assert exact_measure(again) == exact_measure(r) == 2


def test_origin_box():
    r = origin_box([-1.0, 2.0])
    assert r.boxes[0].lo == (-1.0, 0.0)
    assert r.boxes[0].hi == (0.0, 2.0)
    assert measure(r) == 2.0


def test_gram_law_generating(ambiguous):
    law = gram_matrix([box([0.0], [1.0]), box([0.5], [2.0])], ambiguous)
    assert law.exact[0][1] == Fraction(1, 2)
    assert law.generating([[Fraction(1, 2), 0], [0, 0]]) == Fraction(1)
    assert law.generating([[Fraction(-1, 2), 0], [0, 0]]) == Fraction(-1, 4)
    swapped = law.permuted([1, 0])
    assert swapped.lam[0, 0] == 1.5
    assert swapped.labels == ['A2', 'A1']
    assert law.restricted([1]).lam.tolist() == [[1.5]]


def test_gram_law_rejects_bad_matrices():
    with pytest.raises(GeometryException):
        GramLaw([[1.0, 2.0], [2.0, 1.0]], GParams())
    with pytest.raises(GeometryException):
        GramLaw([[1.0, 0.5], [0.0, 1.0]], GParams())
    with pytest.raises(GeometryException):
        gram_matrix([], GParams())


@given(st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False),
       st.floats(min_value=-5.0, max_value=5.0, allow_nan=False), st.floats(min_value=-5.0, max_value=5.0, allow_nan=False))
def test_rigid_motions_preserve_measures(theta, px, py):
    a = box([0.0, 0.0], [1.0, 2.0], 'A')
    b = region_from_literal({'polygon': [[0.5, 0.5], [2.0, 0.5], [0.5, 3.0]]}, 'B')
    o = rotation(theta)
    before = gram_matrix([a, b], GParams()).lam
    after = gram_matrix([transform_region(a, [px, py], o), transform_region(b, [px, py], o)], GParams()).lam
    assert numpy.allclose(before, after, atol=1e-9)


def test_signed_permutations_keep_boxes():
    r = box([0.0, 1.0, 2.0], [1.0, 3.0, 5.0])
    o = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
    moved = transform_region(r, [1.0, 1.0, 1.0], o)
    assert moved.is_box_only
    assert moved.boxes[0].lo == (2.0, 0.0, 3.0)
    assert moved.boxes[0].hi == (4.0, 1.0, 6.0)


def test_transform_validation(unit_square):
    with pytest.raises(GeometryException):
        transform_region(unit_square, [0.0, 0.0], [[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(GeometryException):
        transform_region(unit_square, [0.0], None)
    with pytest.raises(GeometryException):
        transform_region(box([0.0] * 3, [1.0] * 3), [0.0] * 3, [[0.6, -0.8, 0.0], [0.8, 0.6, 0.0], [0.0, 0.0, 1.0]])
