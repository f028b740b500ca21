"""
GField - Commands Collection

"""
# License: GPLv3, see License.txt

from inspect import isclass
from pkgutil import iter_modules
from importlib import import_module
from pathlib import Path

from .base import Command, CommandException, CommandResult, JobConfig, RunContext


def get_package_dir() -> Path:
    """figure out absolute path to this package folder"""
    return Path(__file__).resolve().parent


def collect_command_classes() -> dict[str, type[Command]]:
    """Collect all command classes, keyed by command name"""
    all_command_classes: dict[str, type[Command]] = {}
    for (_, module_name, _) in iter_modules([str(get_package_dir())]):

        # import the module and iterate through its attributes
        module = import_module(f"{__name__}.{module_name}")

        for attribute_name in dir(module):
            attribute = getattr(module, attribute_name)

            if isclass(attribute) and issubclass(attribute, Command):
                if attribute.name != 'Unknown':
                    all_command_classes[attribute.name] = attribute
    return dict(sorted(all_command_classes.items()))

