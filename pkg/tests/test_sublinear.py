"""
GField - the sublinear core: G, moments, and the axiom harness
"""
# License: GPLv3, see License.txt

import math

from fractions import Fraction

import numpy
import pytest

from hypothesis import given, strategies as st

from gfield.phi import parse
from gfield.sublinear import (SublinearException, check_sublinear_axioms, contract, double_factorial, g_matrix, g_scalar, gnormal_abs_moment,
                              gnormal_even_moment, gnormal_positive_part)
from gfield.vartypes import GParams, GParamsException, SublinearValue, VarTypeException

variances = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)
reals = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


def test_g_scalar(ambiguous):
    assert g_scalar(2.0, ambiguous) == 4.0
    assert g_scalar(-2.0, ambiguous) == -1.0
    assert g_scalar(0.0, ambiguous) == 0.0
    values = g_scalar(numpy.array([2.0, -2.0]), ambiguous)
    assert list(values) == [4.0, -1.0]


def test_g_scalar_exact(ambiguous):
    assert g_scalar(Fraction(1, 3), ambiguous) == Fraction(2, 3)
    assert g_scalar(Fraction(-1, 3), ambiguous) == Fraction(-1, 6)


@given(variances, variances, reals, reals, st.floats(min_value=0.0, max_value=100.0, allow_nan=False))
def test_g_is_sublinear(v1, v2, a, b, lam):
    p = GParams(min(v1, v2), max(v1, v2))
    scale = 1e-9 * (1.0 + abs(a) + abs(b)) * (1.0 + p.sigma_hi_sq) * (1.0 + lam)
    assert g_scalar(a + b, p) <= g_scalar(a, p) + g_scalar(b, p) + scale
    assert g_scalar(lam * a, p) == pytest.approx(lam * g_scalar(a, p), abs=scale)
    if a <= b:
        assert g_scalar(a, p) <= g_scalar(b, p)


def test_contract():
    assert contract([[1.0, 2.0], [3.0, 4.0]], [[1.0, 0.0], [0.0, 1.0]]) == 5.0
    exact = contract([[Fraction(1, 2)]], [[Fraction(2, 3)]])
    assert exact == Fraction(1, 3)
    with pytest.raises(SublinearException):
        contract([[1.0]], [[1.0, 2.0]])


def test_g_matrix(ambiguous):
    lam = [[Fraction(1), Fraction(1, 2)], [Fraction(1, 2), Fraction(1)]]
    assert g_matrix([[Fraction(1, 2), 0], [0, 0]], lam, ambiguous) == Fraction(1)
    assert g_matrix([[0, Fraction(1, 2)], [Fraction(1, 2), 0]], lam, ambiguous) == Fraction(1)


def test_double_factorial():
    assert [double_factorial(n) for n in (-1, 0, 1, 3, 5, 6)] == [1, 1, 1, 3, 15, 48]
    with pytest.raises(SublinearException):
        double_factorial(-3)


def test_even_moments(ambiguous):
    assert gnormal_even_moment(1, 1.0, ambiguous).to_dict() == {'upper': 4.0, 'lower': 1.0}
    assert gnormal_even_moment(2, 0.5, ambiguous).upper == pytest.approx(3.0 * 4.0)
    assert gnormal_even_moment(3, 1.0, ambiguous).upper == pytest.approx(15.0 * 64.0)
    with pytest.raises(SublinearException):
        gnormal_even_moment(0, 1.0, ambiguous)
    with pytest.raises(SublinearException):
        gnormal_even_moment(1, -1.0, ambiguous)


def test_abs_and_positive_part(zero_floor):
    value = gnormal_abs_moment(1.0, zero_floor)
    assert value.upper == pytest.approx(math.sqrt(2.0) * math.sqrt(2.0 / math.pi))
    assert value.lower == 0.0
    assert gnormal_positive_part(1.0, zero_floor).upper == pytest.approx(value.upper / 2.0)


def test_params_validation():
    with pytest.raises(GParamsException):
        GParams(2.0, 1.0)
    with pytest.raises(GParamsException):
        GParams(-1.0, 1.0)
    with pytest.raises(GParamsException):
        GParams(0.0, math.inf)
    with pytest.raises(GParamsException):
        GParams.from_dict({'sigma_hi_sq': 1.0})
    assert GParams.from_dict({'sigma_lo_sq': 0.5, 'sigma_hi_sq': 2}).to_dict() == {'sigma_lo_sq': 0.5, 'sigma_hi_sq': 2.0}
    assert GParams(2.0, 2.0).is_degenerate


def test_sublinear_value():
    value = SublinearValue(2.0, -1.0)
    assert value.width == 3.0
    assert value.negate().to_dict() == {'upper': 1.0, 'lower': -2.0}
    assert value.scale(-2.0).to_dict() == {'upper': 2.0, 'lower': -4.0}
    assert value.shift(1.0).upper == 3.0
    assert SublinearValue(1.0, 1.0 + 1e-14).lower == 1.0
    with pytest.raises(VarTypeException):
        SublinearValue(1.0, 2.0)
    with pytest.raises(VarTypeException):
        SublinearValue(math.nan, 0.0)


PAIRS = [('x1^2', 'x2'), ('max(x1, x2)', '-x1'), ('abs(x2)', 'x1 * x2')]


def _pairs():
    return [(parse(x, arity=2), parse(y, arity=2)) for x, y in PAIRS]


def test_axioms_hold_for_point_evaluation():
    report = check_sublinear_axioms(lambda f: f(0.5, -1.5), _pairs(), mode='closed_form')
    assert report.passed, report.to_dict()
    assert {r.name for r in report.results} == {'monotonicity', 'constant_preserving', 'sub_additivity', 'positive_homogeneity'}


def test_axioms_hold_for_a_maximum_of_linear_functionals():
    points = [(0.5, -1.5), (2.0, 1.0), (-1.0, 0.25)]
    report = check_sublinear_axioms(lambda f: max(f(*x) for x in points), _pairs(), mode='closed_form')
    assert report.passed, report.to_dict()


def test_violations_are_reported_not_raised():
    report = check_sublinear_axioms(lambda f: 2.0 * f(0.5, -1.5) + 1.0, _pairs(), mode='closed_form')
    assert not report.passed
    assert not report.get('constant_preserving').passed
    assert report.get('constant_preserving').worst_violation > 0


def test_axiom_harness_arguments():
    with pytest.raises(SublinearException):
        check_sublinear_axioms(lambda f: 0.0, [], mode='closed_form')
    with pytest.raises(SublinearException):
        check_sublinear_axioms(lambda f: 0.0, _pairs(), mode='exact')
