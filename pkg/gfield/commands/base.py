"""
GField - Base Command object

    A Command reads a resolved JobConfig through a RunContext and returns a CommandResult:
        a JSON payload, numeric result rows, and named tables for CSV output
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Any, Union

import pandas

from ..common import time_nano
from ..config import ConfigException, ConfigGroup, ConfigParameter, ConfigSection, FileConfig, ToleranceConfig
from ..engine import ENGINES, ExpectationEngine
from ..geometry import GeometryException, Region, region_from_literal
from ..phi import TestFunction, parse
from ..spacetime import LayeredModel, SimpleAdaptedProcess, SpaceTimeException, process_from_literal
from ..vartypes import DpSpec, GParams, VarType
from ..whitenoise import Integrand, WhiteNoiseException, integrand_from_literal


class CommandException(Exception):
    """Invalid use of a command"""


def _auto_or_positive(value: Any) -> bool:
    return value == 'auto' or _none_or_positive(value)


def _none_or_positive(value: Any) -> bool:
    return value is None or (isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value) and value > 0)


def _none_or_int(minimum: int):
    def check(value: Any) -> bool:
        return value is None or (isinstance(value, int) and not isinstance(value, bool) and value >= minimum)
    return check


def _none_or_numbers(value: Any) -> bool:
    return value is None or (isinstance(value, list) and bool(value) and
                             all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value))


def _none_or_time(value: Any) -> bool:
    return value is None or (isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value) and value >= 0)


class JobConfig(FileConfig):
    """A batch job, loaded from JSON"""
    file_name = 'job'
    sections = [
        ConfigSection('Job', 'What to compute', [
            ConfigGroup('Model', 'Ambiguity parameters and randomness', [
                ConfigParameter('Command', 'Command this job was written for (checked against the command line when given)', 'command', VarType.String, ''),
                ConfigParameter('Params', 'Variance bounds {"sigma_lo_sq", "sigma_hi_sq"}', 'params', VarType.GParams, required=True),
                ConfigParameter('Horizon', 'Time horizon t of finite-dimensional expectations', 't', VarType.Float, 1.0, minimum=0.0),
                ConfigParameter('Seed', 'Seed of every random draw', 'seed', VarType.Integer, 0, minimum=0, maximum=2 ** 64 - 1),
                ConfigParameter('Workers', 'Worker threads (capped by GFIELD_THREADS)', 'workers', VarType.Integer, 1, minimum=1),
            ]),
            ConfigGroup('Spatial', 'White noise over regions', [
                ConfigParameter('Payoff', 'Test function, like "x1^2 + max(x1, x2)"', 'phi', VarType.String, ''),
                ConfigParameter('Regions', 'Region literals: {"box": ...} | {"polygon": ...} | {"union": [...]}', 'regions', VarType.List, []),
                ConfigParameter('Integrand', 'Integrand literal: {"indicator": ...} | {"simple": [...]} | {"grid": ...}', 'f', VarType.Dict, {}),
                ConfigParameter('Integrands', 'Several integrand literals, for the joint law of their integrals', 'fs', VarType.List, []),
            ]),
            ConfigGroup('Space-time', 'Layered spatial-temporal noise', [
                ConfigParameter('Times', 'Partition times 0 = t0 < t1 < ...', 'times', VarType.List, []),
                ConfigParameter('Cells', 'Disjoint cell region literals', 'cells', VarType.List, []),
                ConfigParameter('Process', 'Simple adapted process literal', 'process', VarType.Any, None),
                ConfigParameter('Condition at', 'Conditioning time of st-expect (unconditional when null)', 'condition_at', VarType.Any, None,
                                validator=_none_or_time),
                ConfigParameter('Order', 'Layer integration order, forward only exists for the independence witness', 'order', VarType.String,
                                'backward', choices=['backward', 'forward']),
                ConfigParameter('Properties', 'Run the integral property suite in st-integral', 'st.properties', VarType.Bool, False),
            ]),
        ]),
        ConfigSection('Engines', 'Discretization', [
            ConfigGroup('Engine', 'Which engine', [
                ConfigParameter('Engine', 'Expectation engine', 'engine', VarType.String, 'pde', choices=list(ENGINES)),
            ]),
            ConfigGroup('Grid', 'G-heat solver', [
                ConfigParameter('Radius', 'Truncation radius in standard deviations', 'grid.radius_mult', VarType.Float, 8.0, minimum=1.0),
                ConfigParameter('Half nodes', 'Nodes per side of the origin (null picks by dimension)', 'grid.half_nodes', VarType.Any, None,
                                validator=_none_or_int(2)),
                ConfigParameter('Spacing', 'Grid spacing h (overrides half nodes)', 'grid.h', VarType.Any, None, validator=_none_or_positive),
                ConfigParameter('Time step', '"auto" (CFL limit) or a positive step', 'grid.dt', VarType.Any, 'auto', validator=_auto_or_positive),
                ConfigParameter('Layer half nodes', 'Nodes per side for one-layer integrations of space-time functionals', 'grid.layer_half_nodes',
                                VarType.Any, None, validator=_none_or_int(2)),
            ]),
            ConfigGroup('Oracle', 'Dynamic programming', [
                ConfigParameter('Steps', 'Time steps N', 'dp.steps', VarType.Integer, 200, minimum=1),
                ConfigParameter('Quadrature', 'Gauss-Hermite order q', 'dp.quad', VarType.Integer, 20, minimum=2),
                ConfigParameter('Controls', 'Control variances (null means the two endpoints)', 'dp.controls', VarType.Any, None,
                                validator=_none_or_numbers),
                ConfigParameter('Lattice', 'State lattice points per axis (null picks by dimension)', 'dp.lattice_points', VarType.Any, None,
                                validator=_none_or_int(5)),
                ConfigParameter('Radius', 'State lattice half width in standard deviations', 'dp.radius_mult', VarType.Float, 8.0, minimum=1.0),
                ConfigParameter('Extrapolate', 'Combine N and N // 2 step values into a second order estimate', 'dp.extrapolate', VarType.Bool, True),
                ConfigParameter('Convergence', 'Add the step convergence table to oracle results', 'dp.convergence', VarType.Bool, False),
            ]),
        ]),
        ConfigSection('Sampling', 'Paths and property suites', [
            ConfigGroup('Simulation', 'Fields under one representing measure', [
                ConfigParameter('Extent', 'Lattice upper corner, the field is sampled on (0, extent]', 'lattice.extent', VarType.List, [1.0, 1.0]),
                ConfigParameter('Cells', 'Lattice cells per axis', 'lattice.cells', VarType.List, [16, 16]),
                ConfigParameter('Paths', 'Sampled paths written to paths.csv', 'simulate.paths', VarType.Integer, 100, minimum=1),
                ConfigParameter('Policy', 'Representing measure', 'simulate.policy', VarType.String, 'sigma_hi',
                                choices=['sigma_hi', 'sigma_lo', 'checkerboard', 'random']),
                ConfigParameter('Moment paths', 'Paths behind the moment table', 'simulate.moment_paths', VarType.Integer, 10_000, minimum=2),
                ConfigParameter('Pairs', 'Nested node pairs of the moment table', 'simulate.pairs', VarType.Integer, 10, minimum=1),
                ConfigParameter('Chunk', 'Paths per sampling job', 'simulate.chunk_size', VarType.Integer, 1000, minimum=1),
            ]),
            ConfigGroup('Checks', 'Property suites', [
                ConfigParameter('Suite', 'Suite run by the check command', 'check.suite', VarType.String, ''),
                ConfigParameter('Instances', 'Random instances of the consistency suite', 'check.instances', VarType.Integer, 1000, minimum=1),
                ConfigParameter('Draws', 'Random draws of the conditional expectation suite', 'check.draws', VarType.Integer, 100, minimum=1),
                ConfigParameter('Paths', 'Monte-Carlo paths of the continuity and degeneration suites', 'check.paths', VarType.Integer, 100_000,
                                minimum=100),
                ConfigParameter('Dominance paths', 'Monte-Carlo paths per payoff of the dominance check', 'check.mc_paths', VarType.Integer, 20_000,
                                minimum=100),
            ]),
        ]),
        ConfigSection('Output', 'Artifacts', [
            ConfigGroup('Files', 'What gets written', [
                ConfigParameter('Format', 'Format of the result rows besides rows.jsonl', 'output.format', VarType.String, 'json', choices=['json', 'csv']),
                ConfigParameter('Record runtime', 'Write measured runtimes (false writes 0 so reruns reproduce byte for byte)',
                                'output.record_runtime', VarType.Bool, True),
                ConfigParameter('Directory', 'Output directory (the --out flag wins)', 'output.dir', VarType.String, ''),
            ]),
            ConfigGroup('Tolerances', 'Overrides of the default tolerances', [
                ConfigParameter('Tolerances', 'Map of tolerance name to value', 'tolerances', VarType.Dict, {}),
            ]),
        ]),
    ]


@dataclass
class CommandResult:
    """What a command produced"""
    payload: dict = field(default_factory=dict)
    """JSON result"""
    rows: list[dict] = field(default_factory=list)
    """Numeric result rows, each carrying value_upper, value_lower, engine, grid_descriptor, runtime_ms"""
    tables: dict[str, pandas.DataFrame] = field(default_factory=dict)
    """Named tables, written as <name>.csv"""


class RunContext:
    """Everything a command needs, resolved once from the job config and the command line"""

    def __init__(self, config: JobConfig, seed: Union[int, None] = None, engine: Union[str, None] = None, workers: Union[int, None] = None) -> None:
        self.config = config
        self.params: GParams = config.get('params')
        self.seed: int = config.get('seed') if seed is None else int(seed)
        self.workers: int = config.get('workers') if workers is None else max(1, int(workers))
        self.tol = ToleranceConfig.from_overrides(config.get('tolerances'))
        self.engine_name: str = config.get('engine') if engine is None else engine
        if self.engine_name not in ENGINES:
            raise ConfigException(f'Unknown engine {self.engine_name!r}, expected one of {ENGINES}')
        self.record_runtime: bool = config.get('output.record_runtime')
        self._engines: dict[str, ExpectationEngine] = {}

    def get(self, key: str) -> Any:
        return self.config.get(key)

    def dp_spec(self) -> DpSpec:
        return DpSpec(self.get('dp.steps'), self.get('dp.quad'), self.get('dp.controls'), self.get('dp.lattice_points'), self.get('dp.radius_mult'),
                      self.get('dp.extrapolate'))

    def engine(self, name: Union[str, None] = None) -> ExpectationEngine:
        """Configured engine (cached, so layer integrators are shared between calls)"""
        name = name or self.engine_name
        if name not in self._engines:
            dt = self.get('grid.dt')
            self._engines[name] = ExpectationEngine(name, self.get('grid.radius_mult'), self.get('grid.half_nodes'), self.get('grid.h'),
                                                    None if dt == 'auto' else float(dt), self.get('grid.layer_half_nodes'),
                                                    self.dp_spec(), tol=self.tol)
        return self._engines[name]

    def require(self, *keys: str):
        """Raise if any key was left at its default"""
        missing = [key for key in keys if not self.config.is_explicit(key)]
        if missing:
            raise CommandException(f'Job config is missing: {", ".join(missing)}')

    def regions(self) -> list[Region]:
        literals = self.get('regions')
        if not literals:
            raise CommandException('At least one region is required')
        return [region_from_literal(literal, f'A{i + 1}') for i, literal in enumerate(literals)]

    def payoff(self, arity: int) -> TestFunction:
        """The job's test function over `arity` coordinates"""
        phi = parse(self.get('phi'))
        if phi.arity > arity:
            raise CommandException(f'Payoff uses x{phi.arity} but only {arity} coordinate(s) are defined')
        return phi.with_arity(arity)

    def integrands(self) -> list[Integrand]:
        literals = self.get('fs') or ([self.get('f')] if self.get('f') else [])
        if not literals:
            raise CommandException('An integrand "f" (or a list "fs") is required')
        try:
            return [integrand_from_literal(literal) for literal in literals]
        except (WhiteNoiseException, GeometryException) as ex:
            raise CommandException(f'Invalid integrand: {ex}') from ex

    def model(self) -> LayeredModel:
        try:
            return LayeredModel.from_dict({'times': self.get('times'), 'cells': self.get('cells')}, self.params)
        except SpaceTimeException as ex:
            raise CommandException(f'Invalid layered model: {ex}') from ex

    def process(self, model: LayeredModel) -> SimpleAdaptedProcess:
        literal = self.get('process')
        if literal is None:
            raise CommandException('A process is required')
        return process_from_literal(model, literal)

    def row(self, upper: float, lower: float, engine: str, descriptor: str, started: int, **extra) -> dict:
        """A result row, runtime measured from `started` (time_nano)"""
        runtime_ms = (time_nano() - started) / 1e6 if self.record_runtime else 0
        row = {'value_upper': float(upper), 'value_lower': float(lower), 'engine': engine, 'grid_descriptor': descriptor, 'runtime_ms': runtime_ms}
        row.update(extra)
        return row


class Command:
    """A CLI command"""
    name: str = 'Unknown'
    """Name on the command line; "Unknown" keeps a class out of the registry"""
    description: str = 'Unknown command'
    """One line shown by `gfield list`"""

    def run(self, ctx: RunContext) -> CommandResult:
        raise NotImplementedError('Sub-classes must implement this method!')
