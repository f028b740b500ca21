"""
GField - Command line

    gfield <command> --config job.json [--out dir] [--seed u64] [--engine pde|oracle] [--workers N] [--verbose]
    gfield check <suite> | --all
    gfield list

    Exit status: 0 on success (failed property checks included), 2 on a schema error, 3 on an engine error
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import argparse
import json
import logging
import sys

from pathlib import Path
from typing import Any, Union

import numpy
import pandas

from .backend import BackendException
from .commands import CommandException, CommandResult, JobConfig, RunContext, collect_command_classes
from .common import APP_NAME, get_version, log, set_log_level, time_nano, time_nano_pretty
from .config import ConfigException
from .geometry import GeometryException
from .gheat import SolverException
from .oracle import OracleException
from .phi import PhiException, PhiSyntaxError
from .spacetime import SpaceTimeException
from .sublinear import SublinearException
from .vartypes import VarTypeException
from .whitenoise import WhiteNoiseException

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_SCHEMA = 2
EXIT_ENGINE = 3

SCHEMA_ERRORS = (ConfigException, VarTypeException, PhiException, GeometryException, CommandException)
ENGINE_ERRORS = (SolverException, OracleException, WhiteNoiseException, SpaceTimeException, BackendException, SublinearException)

NO_CONFIG_COMMANDS = ('list',)


def _json_default(value: Any) -> Any:
    if isinstance(value, numpy.generic):
        return value.item()
    if isinstance(value, numpy.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f'Not serializable: {type(value).__name__}')


def to_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default)


def build_parser(commands: list[str]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='gfield', description=f'{APP_NAME} v{get_version()}: G-expectations of spatial and space-time white noise')
    parser.add_argument('command', choices=commands, help='What to compute')
    parser.add_argument('suite', nargs='?', default=None, help='Property suite of the check command')
    parser.add_argument('--config', type=Path, default=None, help='Job config (JSON)')
    parser.add_argument('--out', type=Path, default=None, help='Output directory (prints the result to stdout when omitted)')
    parser.add_argument('--seed', type=int, default=None, help='Seed, overrides the job config')
    parser.add_argument('--engine', choices=['pde', 'oracle'], default=None, help='Expectation engine, overrides the job config')
    parser.add_argument('--workers', type=int, default=None, help='Worker threads, capped by GFIELD_THREADS')
    parser.add_argument('--all', action='store_true', help='check: run every suite')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser


def load_job(args: argparse.Namespace) -> JobConfig:
    """Job config from --config (defaults for list), reconciled with the command line"""
    config = JobConfig()
    if args.config is not None:
        config.load(args.config)
    elif args.command not in NO_CONFIG_COMMANDS:
        raise ConfigException(f'{args.command} needs a job config (--config job.json)')
    declared = config.get('command')
    if declared and declared != args.command:
        raise ConfigException(f'Job config was written for {declared!r}, not {args.command!r}')
    if args.command == 'check':
        if args.all:
            config.set('check.suite', 'all')
        elif args.suite:
            config.set('check.suite', args.suite)
        elif not config.get('check.suite'):
            raise CommandException('check needs a suite name or --all')
    elif args.suite:
        raise CommandException(f'{args.command} takes no suite argument')
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise ConfigException(f'Seed must be an unsigned 64-bit integer, got: {args.seed}')
    if args.command not in NO_CONFIG_COMMANDS:
        config.check_required()
    return config


def write_outputs(out_dir: Path, result: CommandResult, config: JobConfig):
    """result.json, rows.jsonl (+ rows.csv), one csv per table, and the resolved config"""
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir.joinpath('result.json'), 'wt', encoding='utf-8') as rf:
        rf.write(to_json(result.payload) + '\n')
    if result.rows:
        with open(out_dir.joinpath('rows.jsonl'), 'wt', encoding='utf-8') as rf:
            for row in result.rows:
                rf.write(json.dumps(row, sort_keys=True, default=_json_default) + '\n')
        if config.get('output.format') == 'csv':
            pandas.DataFrame(result.rows).to_csv(out_dir.joinpath('rows.csv'), index=False)
    for name, table in result.tables.items():
        table.to_csv(out_dir.joinpath(f'{name}.csv'), index=False)
    if not config.save(out_dir.joinpath('resolved_config.json')):
        raise ConfigException(f'Could not write the resolved config to {out_dir}')
    log.debug(f'Wrote {2 + bool(result.rows) + len(result.tables)} artifact(s) to {out_dir}')


def run(config: JobConfig, command: str, seed: Union[int, None] = None, engine: Union[str, None] = None, workers: Union[int, None] = None,
        out_dir: Union[Path, None] = None) -> int:
    """Run one job; exceptions propagate to main, which maps them to exit codes"""
    registry = collect_command_classes()
    if command not in registry:
        raise CommandException(f'Unknown command {command!r}')
    ctx = RunContext(config, seed, engine, workers)
    started = time_nano()
    log.info(f'Running {command} (seed {ctx.seed}, engine {ctx.engine_name}, {ctx.workers} worker(s))')
    result = registry[command]().run(ctx)
    log.info(f'{command} finished in {time_nano_pretty(time_nano() - started)}')
    out_dir = out_dir or (Path(config.get('output.dir')) if config.get('output.dir') else None)
    if out_dir is None:
        print(to_json(result.payload))
    else:
        write_outputs(out_dir, result, config)
    return EXIT_OK


def main(argv: Union[list[str], None] = None) -> int:
    registry = collect_command_classes()
    args = build_parser(list(registry)).parse_args(argv)
    if args.verbose:
        set_log_level(logging.DEBUG)
    try:
        config = load_job(args)
        return run(config, args.command, args.seed, args.engine, args.workers, args.out)
    except PhiSyntaxError as ex:
        log.error(f'Invalid test function: {ex}')
        return EXIT_SCHEMA
    except SCHEMA_ERRORS as ex:
        log.error(f'{type(ex).__name__}: {ex}')
        return EXIT_SCHEMA
    except ENGINE_ERRORS as ex:
        log.error(f'{type(ex).__name__}: {ex}')
        return EXIT_ENGINE
    except Exception as ex:
        log.exception(f'Unexpected {type(ex).__name__}: {ex}')
        return EXIT_UNEXPECTED


if __name__ == '__main__':
    sys.exit(main())
