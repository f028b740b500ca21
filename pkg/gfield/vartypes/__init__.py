"""
GField - Var Types

"""
# License: GPLv3, see License.txt

from __future__ import annotations

from typing import Any
from inspect import isclass
from pkgutil import iter_modules
from importlib import import_module
from pathlib import Path

from .base import *
from .params import *
from .report import *
from .specs import *

from ..common import log


DEBUG_VARTYPE_VALIDATION = False

_PLAIN_CHECKS = {
    VarType.Bool: lambda v: isinstance(v, bool),
    VarType.Integer: lambda v: isinstance(v, int) and not isinstance(v, bool),
    VarType.Float: lambda v: isinstance(v, float),
    VarType.Number: lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    VarType.String: lambda v: isinstance(v, str),
    VarType.List: lambda v: isinstance(v, list),
    VarType.Dict: lambda v: isinstance(v, dict),
}


def validate_vartype(value: Any, vartype: VarType) -> bool:
    """
    Check that the given value is of the given VarType
        for List and Dict, cannot verify that items are of correct type
    """
    if DEBUG_VARTYPE_VALIDATION:
        log.debug(f'Validating type, expecting: {vartype.name}, got: {value.__class__.__name__}')
    if vartype == VarType.Any:
        return True
    check = _PLAIN_CHECKS.get(vartype)
    if check is not None:
        return check(value)
    special = collect_special_vartype_classes().get(vartype.name)
    return special is not None and isinstance(value, special)


def coerce_vartype(value: Any, vartype: VarType) -> Any:
    """
    Convert plain JSON values into the representation a VarType expects
        integers widen to Float, objects become SpecialVarTypes
        values that cannot be converted are returned unchanged (validation reports them)
    """
    if vartype == VarType.Float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    special = collect_special_vartype_classes().get(vartype.name)
    if special is not None and isinstance(value, dict):
        return special.from_dict(value)
    return value


_SPECIAL_VARTYPES: dict[str, type[SpecialVarType]] = {}


def collect_special_vartype_classes() -> dict[str, type[SpecialVarType]]:
    """SpecialVarType sub-classes of this package, by class name"""
    if _SPECIAL_VARTYPES:
        return _SPECIAL_VARTYPES
    package_dir = Path(__file__).resolve().parent
    for (_, module_name, _) in iter_modules([str(package_dir)]):
        module = import_module(f"{__name__}.{module_name}")
        for attribute_name in dir(module):
            attribute = getattr(module, attribute_name)
            if isclass(attribute) and issubclass(attribute, SpecialVarType) and attribute is not SpecialVarType:
                _SPECIAL_VARTYPES[attribute_name] = attribute
    return _SPECIAL_VARTYPES


def get_vartype_default(var: VarType) -> Any:
    """Default value for given VarType (a fresh copy for List and Dict)"""
    if var.name in VarTypeDefaults:
        default = VarTypeDefaults[var.name]
        return type(default)(default) if isinstance(default, (list, dict)) else default
    special = collect_special_vartype_classes().get(var.name)
    if special is None:
        raise VarTypeException(f'VarType {var.name} has neither a plain default nor a SpecialVarType class')
    return special.default()


def plain_value(value: Any) -> Any:
    """JSON form of a config value: SpecialVarTypes become their to_dict(), lists are walked"""
    if isinstance(value, SpecialVarType):
        return value.to_dict()
    if isinstance(value, list):
        return [plain_value(v) for v in value]
    return value
