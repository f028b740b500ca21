"""
GField - spatial white noise: laws, axioms, integrals and paths
"""
# License: GPLv3, see License.txt

import math

from fractions import Fraction

import numpy
import pytest

from hypothesis import given, strategies as st

from gfield.geometry import gram_matrix, rotation, transform_region
from gfield.whitenoise import (FieldLaw, FieldPolicy, GridFunction, IndicatorFunction, Lattice, SimpleFunction, WhiteNoiseException,
                               brownian_index_law, brownian_index_report, check_compatibility, check_symmetry, consistency_suite,
                               continuity_suite, holder_exponent, inner, integral_isometry, integrand_from_literal, invariance_suite,
                               isometry_suite, kolmogorov_bound, moment_surface, norm_sq, sample_paths, simple, spatial_integral_law,
                               spatial_temporal_contrast, gaussian_family_suite, whitenoise_axiom_suite)
from gfield.phi import parse
from gfield.vartypes import GParams

from .conftest import box


def test_field_law(ambiguous, unit_interval):
    law = FieldLaw([unit_interval, box([0.5], [2.0])], ambiguous)
    assert law.generating([[1, 0], [0, 0]]) == Fraction(2)
    assert law.generating([[0, 0], [0, -1]]) == Fraction(-3, 4)
    value = law.expectation(parse('x2^2'))
    assert value.upper == pytest.approx(6.0, rel=1e-3)
    assert value.lower == pytest.approx(1.5, rel=1e-3)
    assert law.to_dict()['law']['lambda'] == [[1.0, 0.5], [0.5, 1.5]]


def test_inner_products(unit_interval):
    wide = box([1.0], [3.0])
    f = simple((2, unit_interval), (-1, wide))
    assert norm_sq(f) == Fraction(6)
    assert inner(f, IndicatorFunction(box([0.5], [1.5])), exact=True) == Fraction(1, 2)
    grid = GridFunction((0.0,), (2.0,), [1.0, 2.0, 3.0, 4.0])
    assert inner(grid, IndicatorFunction(unit_interval)) == pytest.approx(1.5)
    coarse = GridFunction((0.0,), (2.0,), [1.0, 1.0])
    assert inner(grid, coarse) == pytest.approx(5.0)
    assert grid.norm_sq() == pytest.approx(15.0)
    with pytest.raises(WhiteNoiseException):
        inner(grid, GridFunction((0.0, 0.0), (1.0, 1.0), [[1.0]]))
    triangle = integrand_from_literal({'indicator': {'polygon': [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]}})
    with pytest.raises(WhiteNoiseException):
        inner(triangle, triangle, exact=True)


def test_grid_against_polygon():
    grid = GridFunction((0.0, 0.0), (1.0, 1.0), [[1.0, 1.0], [1.0, 1.0]])
    triangle = integrand_from_literal({'indicator': {'polygon': [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]}})
    assert inner(grid, triangle) == pytest.approx(0.5)


def test_integrand_validation():
    with pytest.raises(WhiteNoiseException):
        GridFunction((0.0,), (1.0,), [[1.0]])
    with pytest.raises(WhiteNoiseException):
        GridFunction((1.0,), (0.0,), [1.0])
    with pytest.raises(WhiteNoiseException):
        GridFunction((0.0,), (1.0,), [math.nan])
    with pytest.raises(WhiteNoiseException):
        IndicatorFunction(box([0.0], [1.0]), math.inf)
    with pytest.raises(WhiteNoiseException):
        SimpleFunction(())
    with pytest.raises(WhiteNoiseException):
        integrand_from_literal({'spline': []})
    with pytest.raises(WhiteNoiseException):
        integrand_from_literal({'grid': {'lo': [0.0]}})
    with pytest.raises(WhiteNoiseException):
        integrand_from_literal([1, 2])


def test_integrand_literals():
    f = integrand_from_literal({'simple': [{'indicator': {'box': {'lo': [0.0], 'hi': [1.0]}}, 'coefficient': 2},
                                           {'indicator': {'box': {'lo': [1.0], 'hi': [2.0]}}}]})
    assert isinstance(f, SimpleFunction)
    assert norm_sq(f) == Fraction(5)
    g = integrand_from_literal({'grid': {'lo': [0.0], 'hi': [1.0], 'values': [1.0, 3.0]}})
    assert g.to_dict() == {'grid': {'lo': [0.0], 'hi': [1.0], 'values': [1.0, 3.0]}}


def test_spatial_integral_law(ambiguous, unit_interval):
    law = spatial_integral_law([IndicatorFunction(unit_interval), simple((3, box([0.5], [1.5])))], ambiguous)
    assert [list(row) for row in law.exact] == [[Fraction(1), Fraction(3, 2)], [Fraction(3, 2), Fraction(9)]]
    grid_law = spatial_integral_law([GridFunction((0.0,), (1.0,), [2.0])], ambiguous)
    assert grid_law.exact is None
    assert grid_law.lam.tolist() == [[4.0]]
    with pytest.raises(WhiteNoiseException):
        spatial_integral_law([], ambiguous)


@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(0, 8), st.integers(1, 4)), min_size=1, max_size=4))
def test_isometry_is_exact_for_simple_functions(terms):
    p = GParams(0.5, 3.0)
    f = simple(*[(c, box([a / 2], [(a + w) / 2])) for c, a, w in terms])
    lhs, rhs = integral_isometry(f, p)
    assert lhs == rhs


def test_axiom_suite_1d(ambiguous):
    regions = [box([0.0], [1.0], 'A'), box([0.5], [1.5], 'B'), box([2.0], [3.0], 'C')]
    report = whitenoise_axiom_suite(regions, ambiguous)
    assert report.passed, report.to_dataframe().to_string()
    names = {r.name for r in report.results}
    assert {'second_moment[A]', 'cross_moment[A,C]', 'additivity[B,C]', 'modularity[A,B]'} <= names
    assert 'cross_moment[A,B]' not in names


def test_axiom_suite_with_polygon(zero_floor, unit_square):
    triangle = integrand_from_literal({'indicator': {'polygon': [[2.0, 0.0], [3.0, 0.0], [2.0, 1.0]]}}).region
    report = whitenoise_axiom_suite([unit_square, triangle], zero_floor)
    assert report.passed, report.to_dataframe().to_string()


def test_compatibility_and_symmetry(ambiguous):
    regions = [box([0.0], [1.0]), box([0.5], [2.0]), box([3.0], [4.0])]
    q = [[Fraction(1), Fraction(-2), Fraction(0)], [Fraction(-2), Fraction(1, 3), Fraction(1)], [Fraction(0), Fraction(1), Fraction(-1)]]
    assert check_compatibility(regions, box([0.25], [0.75]), q, ambiguous)
    assert check_symmetry(regions, [2, 0, 1], q, ambiguous)
    with pytest.raises(WhiteNoiseException):
        check_symmetry(regions, [0, 0, 1], q, ambiguous)


@pytest.mark.parametrize('params', [GParams(1.0, 4.0), GParams(0.0, 2.0), GParams(1.0, 1.0)])
def test_consistency_suite(params):
    report = consistency_suite(params, instances=50, seed=5)
    assert report.passed


def test_gaussian_family_and_isometry_suites(ambiguous):
    assert gaussian_family_suite(ambiguous).passed
    report = isometry_suite(ambiguous)
    assert report.passed, report.to_dataframe().to_string()


def test_invariance_suite(ambiguous, unit_square):
    report = invariance_suite(ambiguous, scenes=2, seed=3)
    assert report.passed, report.to_dataframe().to_string()
    assert [r.name for r in report.results] == ['gram_invariance', 'expectation_invariance']
    assert report.results[0].worst_violation < 1e-9
    moved = transform_region(unit_square, [2.0, -1.0], rotation(math.pi / 3))
    lam = gram_matrix([unit_square, moved], ambiguous).lam
    assert lam[1, 1] == pytest.approx(1.0, abs=1e-12)
    assert lam[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_brownian_index(ambiguous):
    law = brownian_index_law([0.5, 2.0], ambiguous)
    assert law.lam.tolist() == [[0.5, 0.5], [0.5, 2.0]]
    with pytest.raises(WhiteNoiseException):
        brownian_index_law([0.0, 1.0], ambiguous)
    assert brownian_index_report(ambiguous).passed


def test_spatial_temporal_contrast(ambiguous):
    contrast = spatial_temporal_contrast(ambiguous)
    assert contrast['spatial_exact'] == 0.0
    assert contrast['spatial_engine'] == pytest.approx(0.0, abs=1e-2)
    assert contrast['temporal_expected'] == 3.0
    assert contrast['temporal'] == pytest.approx(3.0, rel=1e-2)


def test_lattice():
    lattice = Lattice((1.0, 2.0), (4, 8))
    assert lattice.n_cells == 32
    assert lattice.spacing == (0.25, 0.25)
    assert lattice.node_index((0.5, 1.75)) == (2, 7)
    with pytest.raises(WhiteNoiseException):
        lattice.node_index((0.3, 0.0))
    with pytest.raises(WhiteNoiseException):
        Lattice((1.0, 1.0, 1.0), (2, 2, 2))
    with pytest.raises(WhiteNoiseException):
        Lattice((1.0,), (0,))


def test_policies(ambiguous):
    lattice = Lattice((1.0, 1.0), (2, 2))
    board = FieldPolicy.checkerboard(lattice, ambiguous)
    assert board.variances.tolist() == [[4.0, 1.0], [1.0, 4.0]]
    assert board.within(ambiguous)
    assert not FieldPolicy.constant(lattice, 5.0).within(ambiguous)
    assert board.node_variances()[2, 2] == pytest.approx(2.5)
    assert board.node_variances()[1, 1] == pytest.approx(1.0)
    with pytest.raises(WhiteNoiseException):
        FieldPolicy(lattice, -1.0)


def test_sample_paths(ambiguous):
    lattice = Lattice((1.0, 1.0), (8, 8))
    policy = FieldPolicy.random(lattice, ambiguous, numpy.random.default_rng(0))
    one = sample_paths(lattice, policy, 30, seed=4, chunk_size=7)
    two = sample_paths(lattice, policy, 30, seed=4, chunk_size=7, workers=3)
    assert one.values.shape == (30, 9, 9)
    assert numpy.array_equal(one.values, two.values)
    assert numpy.all(one.values[:, 0, :] == 0.0)
    assert numpy.all(one.values[:, :, 0] == 0.0)
    frame = one.to_dataframe()
    assert list(frame.columns) == ['x1', 'x2', 'value', 'path_id']
    assert len(frame) == 30 * 81
    with pytest.raises(WhiteNoiseException):
        sample_paths(Lattice((1.0,), (8,)), policy, 3, 0)


def test_moment_surface(flat):
    lattice = Lattice((1.0,), (4,))
    policy = FieldPolicy.constant(lattice, 1.0)
    table = moment_surface(lattice, policy, [((0.25,), (0.75,))], paths=20_000, seed=2)
    assert table['reference'].iloc[0] == pytest.approx(1.875)
    assert table['measure'].iloc[0] == pytest.approx(0.5)
    assert abs(table['mc_mean'].iloc[0] - 1.875) < 4 * table['half_width'].iloc[0]
    with pytest.raises(WhiteNoiseException):
        moment_surface(lattice, policy, [((0.0,), (1.0,))], paths=100, seed=0, power=3)


def test_kolmogorov_bound_dominates(ambiguous):
    m = 1.0 * 1.0 - 0.25 * 0.5
    assert 15.0 * ambiguous.sigma_hi_sq ** 3 * m ** 3 <= kolmogorov_bound((0.25, 0.5), (1.0, 1.0), ambiguous)


def test_holder_exponent_of_brownian_paths():
    lattice = Lattice((1.0,), (64,))
    ensemble = sample_paths(lattice, FieldPolicy.constant(lattice, 1.0), 500, seed=9)
    estimate = holder_exponent(ensemble)
    assert estimate.exponent == pytest.approx(0.5, abs=0.05)
    assert estimate.ci_low <= estimate.exponent <= estimate.ci_high
    with pytest.raises(WhiteNoiseException):
        holder_exponent(ensemble, lags=(1, 64))


def test_continuity_suite(ambiguous):
    report = continuity_suite(ambiguous, paths=20_000, pairs=5, seed=1)
    assert report.passed, report.to_dataframe().to_string()
