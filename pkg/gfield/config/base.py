"""
GField - Config System - Base

    Within a config, parameters are organized within sections and groups,
        however the values are stored in a flat dictionary keyed by dotted paths
        (the JSON object {"grid": {"radius_mult": 8}} sets key "grid.radius_mult")
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import json
import math

from typing import Callable, Any, Union
from copy import deepcopy
from pathlib import Path

from ..common import log, ensure_serializable
from ..vartypes import VarType, VarTypeException, coerce_vartype, get_vartype_default, plain_value, validate_vartype


class ConfigException(Exception):
    """Config exception"""


class ConfigParameter:
    """A configuration parameter"""
    label: str
    """Short human readable name"""
    description: str
    """Description, shown by `gfield list` and in error messages"""
    key: str
    """Unique dotted key, mirrors the position of the value in the JSON config"""
    type: VarType
    """What kind of data is this?"""
    default: Any = None
    """Default value; if None is provided, will use the default value corresponding to the VarType"""
    minimum: float = None
    """Inclusive lower bound for Integer / Float / Number values"""
    maximum: float = None
    """Inclusive upper bound for Integer / Float / Number values"""
    choices: list = None
    """Allowed values, if restricted"""
    required: bool = False
    """Must be provided by the job config (the default is only a placeholder)"""
    validator: Callable[[Any], bool] = None
    """Extra check for values that VarType alone cannot describe, like "auto or a positive number" """

    def __init__(self, label: str, description: str, key: str, type_: VarType, default: Any = None, minimum: float = None, maximum: float = None,
                 choices: list = None, required: bool = False, validator: Callable[[Any], bool] = None) -> None:
        self.label = label
        self.description = description
        self.key = key
        self.type = type_
        self.minimum = minimum
        self.maximum = maximum
        self.choices = choices
        self.required = required
        self.validator = validator
        self.default = get_vartype_default(self.type)
        if default is not None:
            self.default = default

    def check_value(self, value: Any) -> Any:
        """Coerce and validate a candidate value, returning the value to store"""
        try:
            value = coerce_vartype(value, self.type)
        except VarTypeException as ex:
            raise ConfigException(f'Invalid value for {self.key}: {ex}') from ex
        if value is None and not self.required:
            return value
        if not validate_vartype(value, self.type):
            raise ConfigException(f'Value type mismatch for {self.key}, expecting: {self.type.name}, got: {type(value).__name__}')
        if self.type in (VarType.Integer, VarType.Float, VarType.Number):
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigException(f'Value for {self.key} must be finite, got: {value}')
            if self.minimum is not None and value < self.minimum:
                raise ConfigException(f'Value for {self.key} must be >= {self.minimum}, got: {value}')
            if self.maximum is not None and value > self.maximum:
                raise ConfigException(f'Value for {self.key} must be <= {self.maximum}, got: {value}')
        if self.choices is not None and value not in self.choices:
            raise ConfigException(f'Value for {self.key} must be one of {self.choices}, got: {value!r}')
        if self.validator is not None and not self.validator(value):
            raise ConfigException(f'Invalid value for {self.key}: {value!r} ({self.description})')
        return value


class ConfigGroup:
    """A second-level grouping of parameters"""

    def __init__(self, label: str, description: str, parameters: list[ConfigParameter]) -> None:
        self.label = label
        """Label for this group"""
        self.description = description
        """Description of this group"""
        self.parameters = parameters
        """Individual config parameters, in the order to be listed"""


class ConfigSection:
    """A high-level grouping of parameter groups"""

    def __init__(self, label: str, description: str, groups: list[ConfigGroup]) -> None:
        self.label = label
        """Label for this section"""
        self.description = description
        """Description of this section"""
        self.groups = groups
        """Config Groups, in the order to be listed"""


class Config:
    """
    A top-level grouping, full config for an object
        Sub-class this, and define sections
        Within a specific Config, all config parameter keys must be unique,
            regardless of which group or section they belong to
    """
    sections: list[ConfigSection] = []
    """Config Sections, in the order to be listed"""

    def __init__(self) -> None:
        self._config_dict: dict[str, Any] = {}
        """Internal storage for current config values"""
        self._explicit: set[str] = set()
        """Keys that were set explicitly (not defaults)"""
        self.sections = deepcopy(self.sections)
        self.check_for_duplicates()
        self.set_default_values()

    def parameters(self) -> list[ConfigParameter]:
        """All parameters, in declaration order"""
        return [param for section in self.sections for group in section.groups for param in group.parameters]

    def keys(self) -> list[str]:
        """All parameter keys, in declaration order"""
        return [param.key for param in self.parameters()]

    def check_for_duplicates(self):
        """Check for any duplicate keys"""
        seen_keys: set[str] = set()
        for param in self.parameters():
            if param.key in seen_keys:
                raise ConfigException(f'Duplicate config parameter key: {param.key}')
            seen_keys.add(param.key)

    def set_default_values(self):
        """Apply default values for all parameters"""
        for param in self.parameters():
            self._config_dict[param.key] = deepcopy(param.default)

    def get_param(self, param_key: str) -> ConfigParameter:
        """Get the parameter with given key"""
        for param in self.parameters():
            if param.key == param_key:
                return param
        raise ConfigException(f'Could not find parameter with key: {param_key}')

    @ensure_serializable
    def to_dict(self) -> dict[str, Any]:
        """Get this config as a flat dictionary, ready to be written as json"""
        return {key: plain_value(value) for key, value in self._config_dict.items()}

    def set_nested(self, data: dict[str, Any]):
        """
        Set config from a nested JSON object
            objects are walked until their dotted path matches a declared key,
            anything that matches no key is logged and discarded
        """
        if not isinstance(data, dict):
            raise ConfigException(f'Config must be a JSON object, got: {type(data).__name__}')
        declared = set(self.keys())
        for dotted, value in self._flatten(data, '', declared):
            self._set(dotted, value)

    def _flatten(self, data: dict[str, Any], prefix: str, declared: set[str]):
        """(internal) yield (dotted key, value) pairs for set_nested"""
        for key, value in data.items():
            dotted = f'{prefix}{key}'
            if dotted in declared:
                yield dotted, value
            elif isinstance(value, dict) and any(k.startswith(dotted + '.') for k in declared):
                yield from self._flatten(value, dotted + '.', declared)
            else:
                yield dotted, value  # _set will log and discard it

    def get(self, param_key: str) -> Any:
        """Get value of an individual config parameter"""
        if param_key in self._config_dict:
            return self._config_dict[param_key]
        raise ConfigException(f'Could not get config parameter with key: {param_key}; not found!')

    def is_explicit(self, param_key: str) -> bool:
        """Was this parameter set by the user rather than left at its default"""
        return param_key in self._explicit

    def check_required(self):
        """Raise if any required parameter was never set"""
        missing = [param.key for param in self.parameters() if param.required and param.key not in self._explicit]
        if missing:
            raise ConfigException(f'Missing required config parameter(s): {", ".join(missing)}')

    def _set(self, param_key: str, value: Any):
        """(internal) Set value of individual config parameter"""
        if param_key not in self._config_dict:
            log.warning(f'Cannot set config parameter with key: {param_key}; not found! Value from file discarded')
        else:
            param = self.get_param(param_key)
            value = param.check_value(value)
            self._config_dict[param_key] = value
            self._explicit.add(param_key)

    def set(self, param_key: str, value: Any):
        """Set value of individual config parameter"""
        self.get(param_key)  # unknown keys raise here, _set only warns
        self._set(param_key, value)

    def describe(self) -> list[tuple[str, str, str, str]]:
        """(key, type, default, description) for every parameter, used by `gfield list`"""
        rows = []
        for param in self.parameters():
            rows.append((param.key, param.type.name, json.dumps(plain_value(param.default)), param.description))
        return rows


class FileConfig(Config):
    """Config associated with a json file on disk"""
    extension = 'json'
    """File extension, without the leading ."""
    file_name = 'Config'
    """File name to use, when writing to disk. Just the name, no extension, no path"""

    def __init__(self, base_path: Union[Path, None] = None) -> None:
        log.debug(f'Initializing FileConfig: {self.__class__.__name__}')
        super().__init__()
        if base_path is None:
            base_path = Path.cwd()
        self.file_path = base_path.joinpath(f'{self.file_name}.{self.extension}')
        """Full path to the file, where we will save this config on disk"""

    def save(self, file_path: Union[Path, None] = None) -> bool:
        """Save the resolved config (flat form) to file, returns success"""
        file_path = self.file_path if file_path is None else file_path
        log.debug(f'Saving FileConfig: {self.__class__.__name__} to: {str(file_path)}')
        try:
            # break up steps into separate "dict", "json", "write",
            #   so that we don't try to write anything to disk if to_dict or json.dumps fails
            config_dict = self.to_dict()
            config_json = json.dumps(config_dict, indent=2, sort_keys=True)
            with open(file_path, 'wt', encoding='utf-8') as cf:
                cf.write(config_json + '\n')
        except Exception as ex:
            log.error(f'Exception while saving to file: {ex}')
            log.error(f'{self.__class__.__name__} parameter values will not be saved!')
            return False
        return True

    def load(self, file_path: Union[Path, None] = None):
        """
        Load a job file, nested or flat (a saved resolved config loads back unchanged)
            unlike a settings file, a job file is not optional: any failure raises ConfigException
        """
        file_path = self.file_path if file_path is None else file_path
        log.debug(f'Loading FileConfig: {self.__class__.__name__} from: {str(file_path)}')
        try:
            with open(file_path, 'rt', encoding='utf-8') as cf:
                config_json = json.load(cf)
        except FileNotFoundError as ex:
            raise ConfigException(f'Config file not found: {file_path}') from ex
        except json.JSONDecodeError as ex:
            raise ConfigException(f'Config file is not valid json: {file_path}: line {ex.lineno} column {ex.colno}: {ex.msg}') from ex
        self.file_path = Path(file_path)
        self.set_nested(config_json)
