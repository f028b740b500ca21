"""
GField - Commands: registry listing
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import pandas

from .base import Command, CommandResult, JobConfig, RunContext


class ListCommand(Command):
    name = 'list'
    description = 'List commands and job config keys'

    def run(self, ctx: RunContext) -> CommandResult:
        from . import collect_command_classes  # pylint: disable=import-outside-toplevel
        registry = collect_command_classes()
        keys = pandas.DataFrame(JobConfig().describe(), columns=['key', 'type', 'default', 'description'])
        payload = {
            'command': self.name,
            'commands': {name: class_.description for name, class_ in registry.items()},
            'keys': keys.to_dict(orient='records'),
        }
        return CommandResult(payload, [], {'keys': keys})
