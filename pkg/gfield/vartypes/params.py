"""
GField - Special VarTypes: ambiguity parameters and sublinear values

"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math

from ..common import ensure_serializable
from .base import SpecialVarType, VarTypeException


class GParamsException(VarTypeException):
    """Invalid ambiguity parameters"""


class GParams(SpecialVarType):
    """
    The pair (sigma_lo_sq, sigma_hi_sq) defining the scalar function
        G(a) = 0.5 * sigma_hi_sq * a^+ - 0.5 * sigma_lo_sq * a^-
    """

    def __init__(self, sigma_lo_sq: float = 1.0, sigma_hi_sq: float = 1.0) -> None:
        super().__init__()
        try:
            lo = float(sigma_lo_sq)
            hi = float(sigma_hi_sq)
        except (TypeError, ValueError) as ex:
            raise GParamsException(f'Variances must be numbers, got: {sigma_lo_sq!r}, {sigma_hi_sq!r}') from ex
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise GParamsException(f'Variances must be finite, got: {lo}, {hi}')
        if lo < 0:
            raise GParamsException(f'sigma_lo_sq must be nonnegative, got: {lo}')
        if lo > hi:
            raise GParamsException(f'Need sigma_lo_sq <= sigma_hi_sq, got: {lo} > {hi}')
        self.sigma_lo_sq = lo
        """Lower variance bound"""
        self.sigma_hi_sq = hi
        """Upper variance bound"""

    @property
    def sigma_lo(self) -> float:
        """Lower volatility"""
        return math.sqrt(self.sigma_lo_sq)

    @property
    def sigma_hi(self) -> float:
        """Upper volatility"""
        return math.sqrt(self.sigma_hi_sq)

    @property
    def is_degenerate(self) -> bool:
        """No volatility ambiguity: the G-normal law is a classical Gaussian"""
        return self.sigma_lo_sq == self.sigma_hi_sq

    def contains(self, variance: float, slack: float = 0.0) -> bool:
        """Is the given variance within [sigma_lo_sq, sigma_hi_sq]"""
        return self.sigma_lo_sq - slack <= variance <= self.sigma_hi_sq + slack

    def __repr__(self) -> str:
        return f'GParams(sigma_lo_sq={self.sigma_lo_sq!r}, sigma_hi_sq={self.sigma_hi_sq!r})'

    @ensure_serializable
    def to_dict(self) -> dict:
        return {'sigma_lo_sq': self.sigma_lo_sq, 'sigma_hi_sq': self.sigma_hi_sq}

    @staticmethod
    def from_dict(data: dict) -> GParams:
        if not isinstance(data, dict):
            raise GParamsException(f'Expected an object with sigma_lo_sq and sigma_hi_sq, got: {data!r}')
        missing = [key for key in ('sigma_lo_sq', 'sigma_hi_sq') if key not in data]
        if missing:
            raise GParamsException(f'Missing keys for params: {", ".join(missing)}')
        return GParams(data['sigma_lo_sq'], data['sigma_hi_sq'])

    @staticmethod
    def default() -> GParams:
        return GParams(1.0, 1.0)


class SublinearValue(SpecialVarType):
    """
    Both one-sided expectations of one random variable
        upper = E[X], lower = -E[-X]
    """
    snap_slack = 1e-12
    """Rounding noise allowed on lower <= upper, relative to max(1, |upper|); smaller crossings are snapped"""

    def __init__(self, upper: float, lower: float) -> None:
        super().__init__()
        upper = float(upper)
        lower = float(lower)
        if math.isnan(upper) or math.isnan(lower):
            raise VarTypeException('SublinearValue cannot hold NaN')
        if lower > upper:
            if lower - upper > self.snap_slack * max(1.0, abs(upper)):
                raise VarTypeException(f'Need lower <= upper, got: lower={lower}, upper={upper}')
            lower = upper
        self.upper = upper
        """E[X]"""
        self.lower = lower
        """-E[-X]"""

    @property
    def width(self) -> float:
        """Spread between upper and lower expectation, zero when X has no mean uncertainty"""
        return self.upper - self.lower

    def is_mean_certain(self, tol: float = 0.0) -> bool:
        """E[X] == -E[-X] within tol"""
        return self.width <= tol

    def negate(self) -> SublinearValue:
        """The pair for -X"""
        return SublinearValue(-self.lower, -self.upper)

    def shift(self, c: float) -> SublinearValue:
        """The pair for X + c (constant preserving)"""
        return SublinearValue(self.upper + c, self.lower + c)

    def scale(self, lam: float) -> SublinearValue:
        """The pair for lam * X, any real lam"""
        if lam >= 0:
            return SublinearValue(lam * self.upper, lam * self.lower)
        return SublinearValue(lam * self.lower, lam * self.upper)

    def __repr__(self) -> str:
        return f'SublinearValue(upper={self.upper!r}, lower={self.lower!r})'

    @ensure_serializable
    def to_dict(self) -> dict:
        return {'upper': self.upper, 'lower': self.lower}

    @staticmethod
    def from_dict(data: dict) -> SublinearValue:
        return SublinearValue(data['upper'], data['lower'])

    @staticmethod
    def default() -> SublinearValue:
        return SublinearValue(0.0, 0.0)
