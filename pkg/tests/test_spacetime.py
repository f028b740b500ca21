"""
GField - layered space-time noise
"""
# License: GPLv3, see License.txt

import math

import numpy
import pytest

from gfield.engine import ExpectationEngine
from gfield.phi import expand_square, parse
from gfield.spacetime import (AdaptednessException, CylinderFunctional, LayeredModel, SimpleAdaptedProcess, SpaceTimeException, TabulatedPayoff,
                              bohner_integral, conditional_expectation, conditional_property_suite, expectation,
                              independence_order_witness, integral_property_suite, ito_integral, m2_norm, process_from_literal,
                              squared_norm_integrand, temporal_gaussian_witness, witness_report)
from gfield.vartypes import GParams

from .conftest import box


@pytest.fixture
def one_cell(ambiguous):
    return LayeredModel([0.0, 1.0, 2.0], [box([0.0], [1.0])], ambiguous)


@pytest.fixture
def two_by_two(ambiguous):
    return LayeredModel([0.0, 1.0, 2.0], [box([0.0], [1.0]), box([1.0], [2.0])], ambiguous)


def test_model_validation(ambiguous):
    cell = [box([0.0], [1.0])]
    with pytest.raises(SpaceTimeException):
        LayeredModel([0.0], cell, ambiguous)
    with pytest.raises(SpaceTimeException):
        LayeredModel([0.5, 1.0], cell, ambiguous)
    with pytest.raises(SpaceTimeException):
        LayeredModel([0.0, 1.0, 1.0], cell, ambiguous)
    with pytest.raises(SpaceTimeException):
        LayeredModel([0.0, 1.0], [], ambiguous)
    with pytest.raises(SpaceTimeException):
        LayeredModel([0.0, 1.0], [box([0.0], [1.0]), box([0.5], [1.5])], ambiguous)


def test_model_indexing(ambiguous):
    model = LayeredModel([0.0, 0.5, 2.0], [box([0.0], [1.0]), box([1.0], [3.0])], ambiguous)
    assert (model.n_layers, model.n_cells, model.n_vars) == (2, 2, 4)
    assert model.var_index(2, 1) == 3
    assert (model.layer_of(3), model.cell_of(3)) == (2, 1)
    assert model.variance(4) == pytest.approx(3.0)
    assert model.layer_vars(1) == [1, 2]
    with pytest.raises(SpaceTimeException):
        model.var_index(3, 1)
    assert model.completed_layers(0.5) == (1, False)
    assert model.completed_layers(1.0) == (1, True)
    assert model.completed_layers(5.0) == (2, False)
    with pytest.raises(SpaceTimeException):
        model.completed_layers(-1.0)
    restored = LayeredModel.from_dict(model.to_dict())
    assert restored.times == model.times
    assert restored.lam.tolist() == model.lam.tolist()
    with pytest.raises(SpaceTimeException):
        LayeredModel.from_dict({'times': [0.0, 1.0]})


def test_functional_layers(two_by_two):
    x = two_by_two.parse('x1_2^2 * x2_1')
    assert x.layers() == [1, 2]
    assert not x.measurable_at(1)
    assert x.measurable_at(2)
    assert x(1.0, 2.0, 3.0) == pytest.approx(12.0)
    with pytest.raises(SpaceTimeException):
        CylinderFunctional(two_by_two, parse('x5'))


def test_expectation_of_squares(one_cell):
    value = expectation(one_cell, 'x1_1^2 + x2_1^2')
    assert value.upper == pytest.approx(8.0, rel=1e-3)
    assert value.lower == pytest.approx(2.0, rel=1e-3)
    with pytest.raises(SpaceTimeException):
        expectation(one_cell, 'x1', order='sideways')


def test_expectation_rejects_foreign_functionals(one_cell, ambiguous):
    other = LayeredModel([0.0, 1.0, 2.0], [box([0.0], [1.0])], ambiguous)
    with pytest.raises(SpaceTimeException):
        expectation(one_cell, other.parse('x1'))


def test_layered_noise_is_not_a_gaussian_field(ambiguous):
    layered, gaussian = temporal_gaussian_witness(ambiguous)
    assert layered == pytest.approx(3.0, rel=1e-2)
    assert gaussian == pytest.approx(0.0, abs=1e-2)


def test_independence_is_not_symmetric(ambiguous):
    backward, forward = independence_order_witness(ambiguous)
    assert backward == pytest.approx(0.0, abs=1e-2)
    assert forward == pytest.approx(6.0 / math.sqrt(2.0 * math.pi), rel=2e-2)


def test_witness_report(ambiguous, flat):
    assert witness_report(ambiguous).passed
    skipped = witness_report(flat)
    assert skipped.passed
    assert [r.name for r in skipped.results] == ['witnesses_skipped']


def test_conditional_expectation_keeps_the_past(one_cell):
    cond = conditional_expectation(one_cell, 'x1_1^2 + x2_1^2', 1.0)
    points = numpy.array([[1.0, 0.0], [-2.0, 0.0]])
    assert cond.evaluate(points).tolist() == pytest.approx([5.0, 8.0], rel=1e-3)
    assert cond.layers() == [1]


def test_conditional_expectation_tabulates(one_cell):
    cond = conditional_expectation(one_cell, 'x1_1 * x2_1^2', 1.0)
    values = cond.evaluate(numpy.array([[4.0, 0.0], [-4.0, 0.0]]))
    assert values.tolist() == pytest.approx([16.0, -4.0], abs=1e-2)
    assert cond.layers() == [1]


def test_conditioning_inside_a_used_layer(one_cell):
    with pytest.raises(SpaceTimeException):
        conditional_expectation(one_cell, 'x2_1', 1.5)
    cond = conditional_expectation(one_cell, 'x1_1', 1.5)
    assert cond(3.0) == pytest.approx(3.0)


def test_retention_limit(ambiguous):
    model = LayeredModel([0.0, 1.0, 2.0, 3.0, 4.0, 5.0], [box([0.0], [1.0])], ambiguous)
    with pytest.raises(SpaceTimeException):
        expectation(model, 'x5 * x1 + x5 * x2 + x5 * x3 + x5 * x4')


def test_tabulated_payoff():
    axis = numpy.linspace(-2.0, 2.0, 9)
    cubic = TabulatedPayoff([1], [axis], axis ** 3, 2)
    assert cubic.evaluate([numpy.array([0.5, 1.25]), numpy.zeros(2)]).tolist() == pytest.approx([0.125, 1.25 ** 3])
    assert cubic.variables() == frozenset({1})
    coarse = numpy.array([0.0, 1.0, 2.0])
    linear = TabulatedPayoff([2], [coarse], coarse * 2.0, 2)
    assert linear.evaluate([numpy.zeros(1), numpy.array([1.5])]).tolist() == pytest.approx([3.0])
    grid = numpy.linspace(-1.0, 1.0, 5)
    plane = TabulatedPayoff([1, 2], [grid, grid], grid[:, None] + 2.0 * grid[None, :], 2)
    assert plane.evaluate([numpy.array([0.3]), numpy.array([-0.6])]).tolist() == pytest.approx([-0.9])
    with pytest.raises(SpaceTimeException):
        TabulatedPayoff([1], [axis], axis[:-1], 1)


def test_adaptedness(two_by_two):
    SimpleAdaptedProcess(two_by_two, {(2, 1): 'x1_1 + x1_2'})
    with pytest.raises(AdaptednessException):
        SimpleAdaptedProcess(two_by_two, {(1, 1): 'x1_2'})
    with pytest.raises(AdaptednessException):
        SimpleAdaptedProcess(two_by_two, {(2, 2): 'x2_1'})
    with pytest.raises(SpaceTimeException):
        SimpleAdaptedProcess(two_by_two, {(1, 1): 'x1_ +'})
    with pytest.raises(SpaceTimeException):
        SimpleAdaptedProcess(two_by_two, {(1, 1): True})
    with pytest.raises(SpaceTimeException):
        SimpleAdaptedProcess(two_by_two, {(3, 1): 1.0})


def test_process_literals(two_by_two):
    example = process_from_literal(two_by_two, {'example': True})
    assert example.to_dict() == SimpleAdaptedProcess.example(two_by_two).to_dict()
    indicator = process_from_literal(two_by_two, {'indicator': {'layers': [2], 'cells': [1, 2], 'value': 3}})
    assert sorted(indicator.coefficients) == [(2, 1), (2, 2)]
    keyed = process_from_literal(two_by_two, {'coefficients': {'2_1': 'x1_1', '1_2': 0.5}})
    assert sorted(keyed.coefficients) == [(1, 2), (2, 1)]
    rows = process_from_literal(two_by_two, {'coefficients': [[1, 0], ['x1_2', 2]]})
    assert rows.coefficient(2, 1).eval([0.0, 5.0, 0.0, 0.0]) == 5.0
    with pytest.raises(SpaceTimeException):
        process_from_literal(two_by_two, {'coefficients': {'layer2': 1}})
    with pytest.raises(SpaceTimeException):
        process_from_literal(two_by_two, {'kind': 'other'})
    with pytest.raises(SpaceTimeException):
        process_from_literal(two_by_two, 'example')


def test_integrals_of_an_indicator(two_by_two):
    f = SimpleAdaptedProcess.indicator(two_by_two, [1, 2], [1, 2])
    integral = ito_integral(two_by_two, f)
    assert integral(1.0, 2.0, 3.0, 4.0) == pytest.approx(10.0)
    assert bohner_integral(two_by_two, f)(0.0) == pytest.approx(4.0)
    assert squared_norm_integrand(two_by_two, f)(0.0) == pytest.approx(4.0)
    assert m2_norm(two_by_two, f) == pytest.approx(2.0, rel=1e-3)
    second = expectation(two_by_two, CylinderFunctional(two_by_two, expand_square(integral.phi)))
    assert second.upper == pytest.approx(16.0, rel=1e-3)
    assert second.lower == pytest.approx(4.0, rel=1e-3)


def test_integral_of_an_adapted_process(two_by_two):
    f = SimpleAdaptedProcess(two_by_two, {(1, 1): 1.0, (2, 1): 'x1_1'})
    integral = ito_integral(two_by_two, f)
    assert integral(2.0, 0.0, 3.0, 0.0) == pytest.approx(8.0)
    value = expectation(two_by_two, integral)
    assert max(abs(value.upper), abs(value.lower)) < 1e-6
    assert bohner_integral(two_by_two, f)(2.0) == pytest.approx(3.0)


@pytest.mark.parametrize('params', [GParams(1.0, 4.0), GParams(0.0, 2.0), GParams(1.0, 1.0)])
def test_integral_property_suite(params):
    model = LayeredModel([0.0, 1.0, 2.0, 3.0], [box([0.0], [1.0]), box([1.0], [2.0])], params)
    report = integral_property_suite(model, SimpleAdaptedProcess.example(model), seed=3)
    assert report.passed, report.to_dataframe().to_string()
    assert report.get('adaptedness_gate').passed


def test_conditional_property_suite(ambiguous):
    report = conditional_property_suite(ambiguous, draws=3, seed=2)
    assert report.passed, report.to_dataframe().to_string()
    with pytest.raises(SpaceTimeException):
        conditional_property_suite(ambiguous, draws=0)


def test_oracle_engine_on_layers(one_cell):
    value = expectation(one_cell, 'x1_1^2 + x2_1^2', ExpectationEngine('oracle'))
    assert value.upper == pytest.approx(8.0, rel=1e-3)
    assert value.lower == pytest.approx(2.0, rel=1e-3)
