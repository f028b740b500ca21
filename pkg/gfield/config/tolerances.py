"""
GField - Config System - Tolerances

    Every numeric tolerance used by engines and property harnesses lives here,
        engines receive a ToleranceConfig and never hard-code a threshold
"""
# License: GPLv3, see License.txt

from __future__ import annotations

from typing import Any, Union

from ..vartypes import VarType
from .base import Config, ConfigSection, ConfigGroup, ConfigParameter


def _tol(key: str, default: float, description: str, maximum: float = None) -> ConfigParameter:
    """(internal) shorthand for a nonnegative float tolerance"""
    return ConfigParameter(key.replace('_', ' '), description, key, VarType.Float, default, minimum=0.0, maximum=maximum)


class ToleranceConfig(Config):
    """Tolerances, with their defaults"""
    sections = [
        ConfigSection('Exact identities', 'Identities that hold in (near) exact arithmetic', [
            ConfigGroup('Arithmetic', 'Closed forms and algebra', [
                _tol('closed_form_abs', 1e-9, 'Absolute tolerance on closed-form paths of the axiom harness'),
                _tol('inclusion_exclusion', 1e-12, 'measure(A u B) + measure(A n B) vs measure(A) + measure(B)'),
                _tol('orthogonal', 1e-12, 'Max entry of O^T O - I for a matrix to count as orthogonal'),
                _tol('gram_invariance', 1e-9, 'Entrywise Gram agreement before / after a rigid motion'),
                _tol('identity_pointwise', 1e-9, 'Pointwise agreement of symbolically equal functionals'),
            ]),
            ConfigGroup('Linear algebra', 'Gram matrices and their factors', [
                _tol('psd_eig', 1e-10, 'Smallest eigenvalue allowed for a Gram matrix to count as PSD'),
                _tol('rank_rel', 1e-12, 'Eigenvalues below rank_rel * trace are dropped when factoring'),
                _tol('reduce_neg_eig', 1e-8, 'Eigenvalues below -reduce_neg_eig * trace are rejected'),
                _tol('factor_abs', 1e-10, 'Entrywise |L L^T - Lambda| allowed for a factor'),
            ]),
        ]),
        ConfigSection('Engines', 'Discretization and statistical tolerances', [
            ConfigGroup('PDE', 'G-heat solver', [
                _tol('pde_rel', 1e-2, 'Relative tolerance (times max(1, |value|)) on PDE-backed axiom checks'),
                _tol('moment_rel', 5e-3, 'Relative tolerance for G-normal moment identities'),
                _tol('odd_abs', 1e-6, 'Absolute tolerance for odd payoffs whose value is 0'),
                _tol('cross_moment_rel', 5e-3, 'Signed cross moments of disjoint regions, times sqrt(lambda1 lambda2)'),
                _tol('degeneration_rel', 1e-3, 'PDE vs classical Gauss-Hermite when sigma_lo_sq == sigma_hi_sq'),
                _tol('same_law_abs', 1e-6, 'Values of two identical laws solved separately'),
                _tol('cfl_slack', 1e-12, 'Relative slack on the CFL bound'),
            ]),
            ConfigGroup('Oracle', 'Dynamic programming and Monte Carlo', [
                _tol('oracle_rel', 1e-2, 'PDE vs DP oracle, relative part'),
                _tol('oracle_abs', 5e-3, 'PDE vs DP oracle, absolute part'),
                _tol('dp_exact', 1e-6, 'DP value for payoffs where the recursion is exact (quadratics)'),
                _tol('dp_degeneration', 1e-8, 'DP vs classical quadrature without ambiguity'),
                _tol('dp_convergence', 1e-3, 'Successive delta of the DP convergence table at the finest step count'),
                _tol('bang_bang', 1e-6, 'Effect of interior controls on sign-definite curvature payoffs'),
                _tol('bang_bang_general', 1e-3, 'Effect of interior controls on payoffs with curvature sign changes'),
                ConfigParameter('mc ci level', 'Confidence level of Monte-Carlo intervals', 'mc_ci_level', VarType.Float, 0.99, minimum=0.5, maximum=0.999999),
            ]),
            ConfigGroup('Layers', 'Spatial-temporal recursions', [
                _tol('layer_exact', 1e-8, 'Identities exact per layer (odd payoffs, zero means)'),
                _tol('multi_layer', 1e-3, 'Multi-layer recursions (tower, martingale, domination slack)'),
                _tol('witness_gap', 1e-3, 'Minimum gap for a witness payoff to count as a counterexample'),
            ]),
        ]),
    ]

    @staticmethod
    def from_overrides(overrides: Union[dict[str, Any], None] = None) -> ToleranceConfig:
        """Defaults, updated with the given {key: value} overrides"""
        tol = ToleranceConfig()
        if overrides:
            tol.set_nested(overrides)
        return tol

    def pde_tolerance(self, value: float) -> float:
        """Tolerance of a PDE-backed check around the given value"""
        return self.get('pde_rel') * max(1.0, abs(value))

    def oracle_tolerance(self, value: float) -> float:
        """max(oracle_rel * |value|, oracle_abs)"""
        return max(self.get('oracle_rel') * abs(value), self.get('oracle_abs'))


_DEFAULT: Union[ToleranceConfig, None] = None


def default_tolerances() -> ToleranceConfig:
    """Shared default tolerances (treat as read-only)"""
    global _DEFAULT  # pylint: disable=global-statement
    if _DEFAULT is None:
        _DEFAULT = ToleranceConfig()
    return _DEFAULT


def resolve_tolerances(tol: Union[ToleranceConfig, None]) -> ToleranceConfig:
    """The given tolerances, or the defaults"""
    return default_tolerances() if tol is None else tol
