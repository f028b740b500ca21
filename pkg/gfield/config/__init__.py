"""
GField - Config System

"""
# License: GPLv3, see License.txt

from .base import ConfigException, ConfigParameter, ConfigGroup, ConfigSection, Config, FileConfig
from .tolerances import ToleranceConfig, default_tolerances, resolve_tolerances
