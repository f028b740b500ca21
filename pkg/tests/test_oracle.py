"""
GField - scenario oracle: dynamic programming and Monte-Carlo lower bounds
"""
# License: GPLv3, see License.txt

import math

import numpy
import pytest

from hypothesis import given, strategies as st

from gfield.geometry import GramLaw
from gfield.gheat import law_expectation
from gfield.oracle import (OracleException, SigmaPolicy, classical_expectation, degeneration_suite, dp_convergence_table, dp_expectation,
                           dp_law_expectation, dp_upper_expectation, gauss_hermite, mc_lower_bound, oracle_equivalence_suite)
from gfield.phi import parse
from gfield.vartypes import DpSpec, GParams, VarTypeException

FAST = DpSpec(steps=50)


@pytest.mark.parametrize('order', [2, 5, 20])
def test_gauss_hermite_moments(order):
    nodes, probs = gauss_hermite(order)
    assert probs.sum() == pytest.approx(1.0)
    assert numpy.dot(probs, nodes) == pytest.approx(0.0, abs=1e-12)
    assert numpy.dot(probs, nodes ** 2) == pytest.approx(1.0)


def test_classical_expectation():
    assert classical_expectation(parse('x1^2'), [1.0], 2.0) == pytest.approx(2.0)
    assert classical_expectation(parse('x1^2 * x2^2'), [1.0, 3.0], 1.0) == pytest.approx(3.0)
    assert classical_expectation(parse('x1 * x2'), [1.0, 1.0], 1.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(OracleException):
        classical_expectation(parse('x1'), [1.0] * 5, 1.0)
    with pytest.raises(OracleException):
        classical_expectation(parse('x2'), [1.0], 1.0)


def test_dp_is_exact_on_quadratics(ambiguous):
    value = dp_expectation(parse('x1^2'), [1.0], 1.0, ambiguous, FAST)
    assert value.upper == pytest.approx(4.0, abs=1e-6)
    assert value.lower == pytest.approx(1.0, abs=1e-6)


def test_dp_agrees_with_pde(ambiguous):
    phi = parse('max(x1, 0)')
    dp_value = dp_expectation(phi, [1.0], 1.0, ambiguous)
    pde_value = law_expectation(GramLaw([[1.0]], ambiguous), phi)
    assert dp_value.upper == pytest.approx(pde_value.upper, abs=5e-3)
    assert dp_value.lower == pytest.approx(pde_value.lower, abs=5e-3)
    assert dp_value.upper == pytest.approx(2.0 / math.sqrt(2.0 * math.pi), abs=5e-3)


def test_degenerate_controls_collapse_to_quadrature(flat):
    phi = parse('min(x1^2, 4)')
    value = dp_upper_expectation(phi, [1.0], 1.0, flat, FAST)
    assert value == pytest.approx(classical_expectation(phi, [1.0], 1.0), abs=1e-12)


def test_law_expectation_point_mass(ambiguous):
    value = dp_law_expectation(GramLaw([[0.0]], ambiguous), parse('x1 + 2'))
    assert (value.upper, value.lower) == (2.0, 2.0)


def test_dp_law_expectation_two_regions(ambiguous):
    law = GramLaw([[1.0, 1.0], [1.0, 1.0]], ambiguous)
    value = dp_law_expectation(law, parse('x1 * x2'), 1.0, FAST)
    assert value.upper == pytest.approx(4.0, abs=1e-6)


def test_dp_guards(ambiguous):
    with pytest.raises(OracleException):
        dp_upper_expectation(parse('x1^12 * x1'), [1.0], 1.0, ambiguous)
    with pytest.raises(OracleException):
        dp_upper_expectation(parse('x1 + x2 + x3 + x4'), [1.0] * 4, 1.0, ambiguous)
    with pytest.raises(OracleException):
        dp_upper_expectation(parse('x1'), [1.0], -1.0, ambiguous)
    with pytest.raises(OracleException):
        dp_upper_expectation(parse('x1'), [1.0], 1.0, ambiguous, DpSpec(controls=[0.5]))


def test_dp_spec_validation():
    with pytest.raises(VarTypeException):
        DpSpec(steps=0)
    with pytest.raises(VarTypeException):
        DpSpec(quad_order=1)
    assert DpSpec().with_interior_controls(1.0, 4.0, 2).controls == (1.0, 2.0, 3.0, 4.0)
    assert not DpSpec.from_dict(DpSpec(extrapolate=False).to_dict()).with_steps(10).extrapolate


def test_convergence_table(ambiguous):
    table = dp_convergence_table(parse('x1^2'), [1.0], 1.0, ambiguous, steps=(10, 20))
    assert list(table.columns) == ['steps', 'upper', 'delta']
    assert table['upper'].tolist() == pytest.approx([4.0, 4.0], abs=1e-6)


def test_extrapolation_removes_the_first_order_step_error(ambiguous):
    phi = parse('x1^3')
    plain = dp_convergence_table(phi, [1.0], 1.0, ambiguous, DpSpec(extrapolate=False))
    deltas = plain['delta'].dropna()
    assert (deltas.iloc[:-1].to_numpy() / deltas.iloc[1:].to_numpy() > 1.5).all()
    table = dp_convergence_table(phi, [1.0], 1.0, ambiguous)
    assert table['delta'].iloc[-1] < 1e-3
    assert table['delta'].iloc[-1] < deltas.iloc[-1]
    assert table['upper'].iloc[-1] > 0.0


def test_interior_controls(ambiguous):
    spec = DpSpec(steps=100)
    for text in ('x1^2', '-x1^2', 'max(x1, 0)', 'abs(x1)'):
        phi = parse(text)
        wide = dp_upper_expectation(phi, [1.0], 1.0, ambiguous, spec.with_interior_controls(1.0, 4.0))
        assert wide == pytest.approx(dp_upper_expectation(phi, [1.0], 1.0, ambiguous, spec), abs=1e-6)
    # curvature changes sign: interior controls gain a little per step, and the gain vanishes as the step shrinks
    phi = parse('x1^3')
    gaps = []
    for steps in (50, 200):
        plain = DpSpec(steps=steps, extrapolate=False)
        endpoints = dp_upper_expectation(phi, [1.0], 1.0, ambiguous, plain)
        gaps.append(dp_upper_expectation(phi, [1.0], 1.0, ambiguous, plain.with_interior_controls(1.0, 4.0)) - endpoints)
    assert -1e-12 <= gaps[1] < gaps[0]
    assert gaps[1] < 1e-3


def test_policies(ambiguous):
    rng = numpy.random.default_rng(3)
    policy = SigmaPolicy.random(5, 3, ambiguous, rng)
    assert policy.is_admissible()
    assert policy.within(ambiguous)
    assert not SigmaPolicy.random(5, 3, ambiguous, rng, admissible=False).is_admissible()
    bang = SigmaPolicy.bang_bang([True, False], 2, ambiguous)
    assert bang.variances.tolist() == [[4.0, 4.0], [1.0, 1.0]]
    assert bang.total_variances([1.0, 0.5], 2.0).tolist() == [5.0, 2.5]
    with pytest.raises(OracleException):
        SigmaPolicy([[-1.0]])


def test_mc_is_deterministic_and_worker_independent(ambiguous):
    phi = parse('x1^2')
    policy = SigmaPolicy.constant(1, 1, ambiguous.sigma_hi_sq)
    one = mc_lower_bound(phi, policy, [1.0], 1.0, ambiguous, 5000, seed=11, chunk_size=1000, workers=1)
    two = mc_lower_bound(phi, policy, [1.0], 1.0, ambiguous, 5000, seed=11, chunk_size=1000, workers=2)
    assert one.estimate == two.estimate
    assert one.half_width == two.half_width
    assert abs(one.estimate - 4.0) < 3 * one.half_width


@given(st.integers(min_value=0, max_value=2 ** 32))
def test_mc_under_admissible_policy_stays_below_the_upper_value(seed):
    p = GParams(1.0, 4.0)
    phi = parse('max(x1, 0)')
    policy = SigmaPolicy.random(3, 1, p, numpy.random.default_rng(seed))
    estimate = mc_lower_bound(phi, policy, [1.0], 1.0, p, 2000, seed)
    assert estimate.estimate - 3 * estimate.half_width <= 2.0 / math.sqrt(2.0 * math.pi)


def test_mc_guards(ambiguous):
    phi = parse('x1 + x2')
    mixed = SigmaPolicy([[1.0, 4.0]])
    with pytest.raises(OracleException):
        mc_lower_bound(phi, mixed, [1.0, 1.0], 1.0, ambiguous, 1000, 0)
    estimate = mc_lower_bound(phi, mixed, [1.0, 1.0], 1.0, ambiguous, 1000, 0, allow_inadmissible=True)
    assert not estimate.admissible
    with pytest.raises(OracleException):
        mc_lower_bound(phi, SigmaPolicy.constant(1, 2, 1.0), [1.0, 1.0], 1.0, ambiguous, 10, 0)
    with pytest.raises(OracleException):
        mc_lower_bound(phi, SigmaPolicy.constant(1, 2, 9.0), [1.0, 1.0], 1.0, ambiguous, 1000, 0)


def test_oracle_equivalence_suite(ambiguous):
    report = oracle_equivalence_suite(ambiguous, DpSpec(steps=100), mc_paths=5000)
    assert report.passed, report.to_dataframe().to_string()
    names = {r.name for r in report.results}
    assert 'agreement[x1^3]' in names
    assert 'agreement_pair[3]' in names
    assert 'dp_convergence' in names


def test_degeneration_suite(flat):
    report = degeneration_suite(flat, paths=20_000)
    assert report.passed, report.to_dataframe().to_string()
    assert len(report.results) == 24
