"""
GField - Sublinear core

    The scalar generating function
        G(a) = 0.5 * sigma_hi_sq * a^+ - 0.5 * sigma_lo_sq * a^-
    closed form G-normal moments, and a harness that checks the four axioms
    of a sublinear expectation on any expectation functional
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math

from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

import numpy

from scipy.special import factorial2

from .common import log
from .config import ToleranceConfig, resolve_tolerances
from .phi import Payoff, TestFunction, constant, maximum
from .vartypes import GParams, SublinearValue, CheckReport


class SublinearException(Exception):
    """Invalid request to the sublinear core"""


Scalar = Union[float, int, Fraction]


def g_scalar(a, p: GParams):
    """
    G(a), total in a
        accepts floats, numpy arrays (elementwise) and Fractions (exact, the variances are
        converted with Fraction(float) which is lossless)
    """
    if isinstance(a, numpy.ndarray):
        return 0.5 * p.sigma_hi_sq * numpy.maximum(a, 0.0) - 0.5 * p.sigma_lo_sq * numpy.maximum(-a, 0.0)
    if isinstance(a, Fraction):
        if a >= 0:
            return Fraction(p.sigma_hi_sq) * a / 2
        return Fraction(p.sigma_lo_sq) * a / 2
    a = float(a)
    if a >= 0:
        return 0.5 * p.sigma_hi_sq * a
    return 0.5 * p.sigma_lo_sq * a


def contract(q, lam) -> Union[float, Fraction]:
    """
    Frobenius contraction <Q, Lambda> = sum_ij q_ij * lambda_ij
        exact (Fraction) when either operand holds Fractions
    """
    q_rows = [list(row) for row in q]
    lam_rows = [list(row) for row in lam]
    if len(q_rows) != len(lam_rows) or any(len(a) != len(b) for a, b in zip(q_rows, lam_rows)):
        raise SublinearException(f'Shape mismatch in contraction: {len(q_rows)} vs {len(lam_rows)} rows')
    exact = any(isinstance(v, Fraction) for row in q_rows + lam_rows for v in row)
    if not exact:
        return float(numpy.sum(numpy.asarray(q_rows, dtype=float) * numpy.asarray(lam_rows, dtype=float)))
    total = Fraction(0)
    for q_row, lam_row in zip(q_rows, lam_rows):
        for qv, lv in zip(q_row, lam_row):
            total += Fraction(qv) * Fraction(lv)
    return total


def g_matrix(q, lam, p: GParams):
    """Generating function of a finite-dimensional law with Gram matrix lam: G(<Q, Lambda>)"""
    return g_scalar(contract(q, lam), p)


def double_factorial(n: int) -> int:
    """n!! (with (-1)!! = 1)"""
    if n < -1:
        raise SublinearException(f'Double factorial undefined for {n}')
    if n <= 0:
        return 1
    return int(factorial2(n, exact=True))


def gaussian_even_moment(k: int, variance: float) -> float:
    """E[X^(2k)] of a classical centred Gaussian with the given variance"""
    return double_factorial(2 * k - 1) * variance ** k


def gnormal_even_moment(k: int, t: float, p: GParams) -> SublinearValue:
    """
    Both one-sided expectations of X^(2k), X G-normal with variance bounds scaled by t
        x^(2k) is convex, so the extreme volatilities attain the sup / inf
    """
    if isinstance(k, bool) or not isinstance(k, (int, numpy.integer)) or k < 1:
        raise SublinearException(f'Moment order must be a positive integer, got: {k!r}')
    if t < 0:
        raise SublinearException(f'Horizon must be nonnegative, got: {t}')
    k = int(k)
    return SublinearValue(gaussian_even_moment(k, p.sigma_hi_sq * t), gaussian_even_moment(k, p.sigma_lo_sq * t))


def gnormal_abs_moment(t: float, p: GParams) -> SublinearValue:
    """Pair for |X| (convex): sigma * sqrt(2t / pi) at the extreme volatilities"""
    if t < 0:
        raise SublinearException(f'Horizon must be nonnegative, got: {t}')
    c = math.sqrt(2.0 * t / math.pi)
    return SublinearValue(p.sigma_hi * c, p.sigma_lo * c)


def gnormal_positive_part(t: float, p: GParams) -> SublinearValue:
    """Pair for max(X, 0) (convex): sigma * sqrt(t / (2 pi)) at the extreme volatilities"""
    if t < 0:
        raise SublinearException(f'Horizon must be nonnegative, got: {t}')
    c = math.sqrt(t / (2.0 * math.pi))
    return SublinearValue(p.sigma_hi * c, p.sigma_lo * c)


def _worst(report: CheckReport, name: str, violations: Sequence[float], tolerances: Sequence[float], detail: str):
    """(internal) record the case with the largest excess over its tolerance"""
    if not violations:
        return
    excess = [v - t for v, t in zip(violations, tolerances)]
    i = int(numpy.argmax(excess))
    report.add(name, violations[i], tolerances[i], f'{detail}; worst case #{i} of {len(violations)}')


def check_sublinear_axioms(evaluate: Callable[[Payoff], float], pairs: Iterable[tuple[TestFunction, TestFunction]],
                           tol: Union[ToleranceConfig, None] = None, mode: str = 'pde',
                           constants: Sequence[float] = (-2.0, 0.0, 5.0), scalars: Sequence[float] = (0.0, 0.5, 2.0),
                           suite: str = 'sublinear-axioms') -> CheckReport:
    """
    Check monotonicity, constant preserving, sub-additivity and positive homogeneity of an
        upper expectation functional on the given payoff pairs (X, Y)
        mode 'closed_form' uses the absolute closed form tolerance, 'pde' scales with the value
        Violations are reported, never raised
    """
    if mode not in ('closed_form', 'pde'):
        raise SublinearException(f'Unknown tolerance mode: {mode}')
    tol = resolve_tolerances(tol)
    cache: dict = {}

    def value(f: Payoff) -> float:
        if f not in cache:
            cache[f] = float(evaluate(f))
        return cache[f]

    def tolerance(v: float) -> float:
        if mode == 'closed_form':
            return tol.get('closed_form_abs')
        return tol.pde_tolerance(v)

    pairs = list(pairs)
    if not pairs:
        raise SublinearException('At least one payoff pair is required')
    arity = max(max(x.arity, y.arity) for x, y in pairs)
    checks: dict[str, tuple[list, list]] = {key: ([], []) for key in ('monotonicity', 'constant_preserving', 'sub_additivity', 'positive_homogeneity')}

    for x, y in pairs:
        x = x.with_arity(arity)
        y = y.with_arity(arity)
        ex, ey = value(x), value(y)

        upper = maximum(x, y)
        eu = value(upper)
        checks['monotonicity'][0].append(max(0.0, ex - eu))
        checks['monotonicity'][1].append(tolerance(ex))

        exy = value(x + y)
        checks['sub_additivity'][0].append(max(0.0, exy - ex - ey))
        checks['sub_additivity'][1].append(tolerance(abs(ex) + abs(ey)))

        for lam in scalars:
            elx = value(lam * x)
            checks['positive_homogeneity'][0].append(abs(elx - lam * ex))
            checks['positive_homogeneity'][1].append(tolerance(lam * ex))

    for c in constants:
        ec = value(constant(c, arity))
        checks['constant_preserving'][0].append(abs(ec - c))
        checks['constant_preserving'][1].append(tolerance(c))

    report = CheckReport(suite)
    for name, (violations, tolerances) in checks.items():
        _worst(report, name, violations, tolerances, f'mode={mode}')
    log.debug(f'Sublinear axioms on {len(pairs)} payoff pair(s): {"pass" if report.passed else "FAIL"}')
    return report
