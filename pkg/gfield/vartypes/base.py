"""
GField - Var Types - Base classes

    a VarType names what a config parameter holds; plain JSON kinds are checked directly,
    SpecialVarType kinds are value classes that round-trip through plain dicts
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import enum

from abc import abstractmethod


class VarTypeException(Exception):
    """Exception in vartype processing"""


class VarType(enum.Enum):
    """What a config parameter holds"""

    # plain JSON
    Any = enum.auto()
    """No type check, the parameter validator decides"""
    Bool = enum.auto()
    Number = enum.auto()
    """Integer or Float"""
    Integer = enum.auto()
    Float = enum.auto()
    """JSON integers are accepted and widened"""
    String = enum.auto()
    List = enum.auto()
    """Region literals, partition times, number tuples"""
    Dict = enum.auto()
    """A JSON object kept as-is (integrand literals, tolerance overrides)"""

    # SpecialVarType sub-classes, defaults come from .default()
    GParams = enum.auto()
    """The ambiguity pair (sigma_lo_sq, sigma_hi_sq)"""


# keep in sync with the plain JSON members of VarType
VarTypeDefaults = {
    'Any': None,
    'Bool': False,
    'Number': 0,
    'Integer': 0,
    'Float': 0.0,
    'String': '',
    'List': [],
    'Dict': {},
}


class SpecialVarType:
    """
    Base class for value types carried in configs and result payloads
        sub-classes round-trip through to_dict() / from_dict(), equality and hashing go through to_dict()
    """

    def __eq__(self, other: object) -> bool:
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, SpecialVarType) else False
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash((self.__class__.__name__, repr(sorted(self.to_dict().items()))))

    def to_dict(self) -> dict:
        """Plain dict form, written as JSON"""
        raise NotImplementedError('Sub-classes must implement this method!')

    @staticmethod
    @abstractmethod
    def from_dict(data: dict) -> SpecialVarType:
        """Inverse of to_dict"""
        raise NotImplementedError('Sub-classes must implement this method!')

    @staticmethod
    @abstractmethod
    def default() -> SpecialVarType:
        """Value used when a config leaves the parameter unset"""
        raise NotImplementedError('Sub-classes must implement this method!')
