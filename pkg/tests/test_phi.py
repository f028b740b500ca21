"""
GField - test function parsing and evaluation
"""
# License: GPLv3, see License.txt

import math

import numpy
import pytest

from hypothesis import given, strategies as st

from gfield.phi import (LinearPullback, PhiException, PhiSyntaxError, compose_sum, constant, expand_square, maximum, negate, parse,
                        split_terms, variable)

finite = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


@pytest.mark.parametrize('text, point, expected', [
    ('x1^2', [3.0], 9.0),
    ('-x1^2', [3.0], -9.0),
    ('x1 - x2 - x3', [1.0, 2.0, 3.0], -4.0),
    ('2 * x1 * x2 + 1', [1.5, -2.0], -5.0),
    ('max(x1, 0)', [-1.0], 0.0),
    ('min(x1^2, 4)', [3.0], 4.0),
    ('abs(x1 - x2)', [1.0, 4.0], 3.0),
    ('(x1 + x2)^3', [1.0, 1.0], 8.0),
    ('1.5e1 * x1', [2.0], 30.0),
    ('min(x1, x2)', [1.0, -1.0], -1.0),
    ('abs(x1)^3', [-2.0], 8.0),
    ('x1^6', [-2.0], 64.0),
    ('max(x1 - 1, 0)', [3.5], 2.5),
    ('max(x1, x2) - min(x1, x2)', [2.0, -3.0], 5.0),
    ('x1 * x2 * x3', [1.0, -2.0, 0.5], -1.0),
    ('(x1 - x2)^2 + x1', [2.0, 0.5], 4.25),
    ('-max(x1, 0) + 3', [2.0], 1.0),
    ('min(max(x1, -1), 1)', [-5.0], -1.0),
    ('0.5 * x1^4 - x1^2', [2.0], 4.0),
    ('abs(x1) + abs(x2) + abs(x3) + abs(x4)', [1.0, -2.0, 3.0, -4.0], 10.0),
])
def test_eval(text, point, expected):
    assert parse(text).eval(point) == pytest.approx(expected)


def test_arity_is_highest_variable():
    assert parse('x1 + x3').arity == 3
    assert parse('7').arity == 0
    assert parse('x1', arity=4).arity == 4
    with pytest.raises(PhiException):
        parse('x3', arity=2)


def test_layered_variables():
    f = parse('x1_2 + x2_1', layer_width=3)
    assert f.variables() == frozenset({2, 4})
    with pytest.raises(PhiSyntaxError):
        parse('x1_4', layer_width=3)
    with pytest.raises(PhiSyntaxError):
        parse('x1_1')


@pytest.mark.parametrize('text, position', [
    ('x1 +', 4),
    ('x1 $ x2', 3),
    ('foo(x1)', 0),
    ('x1^x2', 3),
    ('max(x1 x2)', 7),
    ('', 0),
    ('x0', 0),
])
def test_syntax_error_position(text, position):
    with pytest.raises(PhiSyntaxError) as info:
        parse(text)
    assert info.value.position == position


def test_power_limit():
    with pytest.raises(PhiSyntaxError):
        parse('x1^999')


@pytest.mark.parametrize('text, position', [
    ('(' * 5000 + 'x1' + ')' * 5000, 100),
    ('-' * 5000 + 'x1', 100),
    ('abs(' * 500 + 'x1' + ')' * 500, 400),
])
def test_deep_nesting_is_a_syntax_error(text, position):
    with pytest.raises(PhiSyntaxError) as info:
        parse(text)
    assert info.value.position == position
    assert parse('(' * 99 + 'x1' + ')' * 99) == parse('x1')


def test_not_text():
    with pytest.raises(PhiException):
        parse(3)


@given(finite, finite)
def test_vectorized_matches_pointwise(a, b):
    f = parse('max(x1, x2) * x1 - abs(x2) + min(x1, 1)^2')
    cols = [numpy.array([a, b]), numpy.array([b, a])]
    values = f.evaluate(cols)
    assert values[0] == pytest.approx(f.eval([a, b]), rel=1e-12, abs=1e-12)
    assert values[1] == pytest.approx(f.eval([b, a]), rel=1e-12, abs=1e-12)


@given(finite)
def test_canonical_text_reparses(a):
    f = parse('-(x1 - 2)^2 * max(x1, -1) + 0.25')
    g = parse(f.text)
    assert g.eval([a]) == pytest.approx(f.eval([a]), rel=1e-12, abs=1e-12)


def test_degree():
    assert parse('x1^3 + x1 * x2').degree() == 3
    assert parse('max(x1, 0)').degree() == 1
    assert parse('5').degree() == 0


def test_growth_bound_is_conservative():
    f = parse('x1^2 - 3 * x1')
    bound = f.growth_bound(2.0)
    xs = numpy.linspace(-2.0, 2.0, 401)
    values = f.evaluate([xs])
    assert bound.sup >= numpy.max(numpy.abs(values)) - 1e-12
    slopes = numpy.abs(numpy.diff(values) / numpy.diff(xs))
    assert bound.lipschitz >= numpy.max(slopes) - 1e-9


def test_algebra():
    x1, x2 = variable(1), variable(2)
    f = compose_sum([2.0 * x1, x1 * x2, constant(-1.0)])
    assert f.eval([1.0, 3.0]) == pytest.approx(4.0)
    assert maximum(x1, x2).eval([1.0, 3.0]) == 3.0
    assert negate(f).eval([1.0, 3.0]) == pytest.approx(-4.0)
    assert (f - f).eval([0.3, 0.7]) == pytest.approx(0.0)


def test_split_and_square():
    f = parse('x1 - 2 * x2 + 3')
    terms = split_terms(f)
    assert len(terms) == 3
    assert sum(t.eval([1.0, 1.0]) for t in terms) == pytest.approx(f.eval([1.0, 1.0]))
    square = expand_square(f)
    for point in ([0.0, 0.0], [1.0, -2.0], [0.5, 3.0]):
        assert square.eval(point) == pytest.approx(f.eval(point) ** 2)


def test_linear_pullback():
    base = parse('x1 * x2')
    factor = numpy.array([[1.0, 0.0], [1.0, 2.0]])
    pulled = LinearPullback(base, factor)
    assert pulled.arity == 2
    assert pulled(1.0, 1.0) == pytest.approx(3.0)
    assert pulled.variables() == frozenset({1, 2})
    with pytest.raises(PhiException):
        LinearPullback(parse('x3'), factor)


def test_hashable_and_equal():
    assert parse('x1 + x2') == parse('x1+x2')
    assert len({parse('x1^2'), parse('x1 ^ 2')}) == 1
    assert math.isclose(parse('x1').with_arity(3).eval([2.0, 0.0, 0.0]), 2.0)
