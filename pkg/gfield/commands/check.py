"""
GField - Commands: property suites

    Failed properties are reported in the result, they do not make the command fail
"""
# License: GPLv3, see License.txt

from __future__ import annotations

from typing import Callable

import pandas

from ..backend import run_parallel
from ..common import log, time_nano, time_nano_pretty
from ..geometry import gram_matrix, region_from_literal
from ..gheat import moment_suite
from ..oracle import degeneration_suite, oracle_equivalence_suite
from ..phi import Payoff, parse
from ..spacetime import LayeredModel, SimpleAdaptedProcess, conditional_property_suite, integral_property_suite, witness_report
from ..sublinear import check_sublinear_axioms
from ..vartypes import CheckReport, SuiteSummary
from ..whitenoise import (brownian_index_report, consistency_suite, continuity_suite, invariance_suite, isometry_suite, gaussian_family_suite,
                          whitenoise_axiom_suite)

from .base import Command, CommandException, CommandResult, RunContext

DEFAULT_REGIONS = [
    {'box': {'lo': [0.0, 0.0], 'hi': [1.0, 1.0]}},
    {'box': {'lo': [0.5, 0.0], 'hi': [1.5, 1.0]}},
    {'box': {'lo': [2.0, 0.0], 'hi': [3.0, 1.0]}},
    {'polygon': [[0.0, 2.0], [1.0, 2.0], [0.0, 3.0]]},
]

SUBLINEAR_PAIRS = [
    ('x1^2', 'x2^2'),
    ('max(x1, x2)', 'x1 * x2'),
    ('x1', '-x2'),
    ('abs(x1 - x2)', 'min(x1, 1)'),
]


def _default_regions(ctx: RunContext):
    literals = ctx.get('regions') if ctx.config.is_explicit('regions') else DEFAULT_REGIONS
    return [region_from_literal(literal, f'A{i + 1}') for i, literal in enumerate(literals)]


def sublinear_axioms(ctx: RunContext) -> CheckReport:
    """Axioms of the configured engine on the law of the first two regions"""
    regions = _default_regions(ctx)[:2]
    law = gram_matrix(regions, ctx.params, ctx.tol)
    engine = ctx.engine()

    def evaluate(f: Payoff) -> float:
        return engine.law_expectation(law, f, ctx.get('t'))[0].upper

    pairs = [(parse(x, arity=len(regions)), parse(y, arity=len(regions))) for x, y in SUBLINEAR_PAIRS]
    return check_sublinear_axioms(evaluate, pairs, ctx.tol, 'pde')


def whitenoise_axioms(ctx: RunContext) -> CheckReport:
    report = whitenoise_axiom_suite(_default_regions(ctx), ctx.params, ctx.engine(), ctx.tol)
    return report.merge(brownian_index_report(ctx.params, engine=ctx.engine(), tol=ctx.tol), 'brownian_index.')


def spacetime(ctx: RunContext) -> CheckReport:
    """Witnesses, then the integral properties on a 3 layer x 2 cell model"""
    report = witness_report(ctx.params, ctx.engine(), ctx.tol)
    cells = [region_from_literal({'box': {'lo': [0.0], 'hi': [1.0]}}), region_from_literal({'box': {'lo': [1.0], 'hi': [2.0]}})]
    model = LayeredModel([0.0, 1.0, 2.0, 3.0], cells, ctx.params, ctx.tol)
    return report.merge(integral_property_suite(model, SimpleAdaptedProcess.example(model), ctx.engine(), ctx.tol, ctx.seed))


SUITES: dict[str, Callable[[RunContext], CheckReport]] = {
    'sublinear-axioms': sublinear_axioms,
    'whitenoise-axioms': whitenoise_axioms,
    'consistency': lambda ctx: consistency_suite(ctx.params, ctx.get('check.instances'), ctx.seed),
    'invariance': lambda ctx: invariance_suite(ctx.params, ctx.engine(), seed=ctx.seed, tol=ctx.tol),
    'isometry': lambda ctx: isometry_suite(ctx.params, tol=ctx.tol),
    'gaussian-family': lambda ctx: gaussian_family_suite(ctx.params, ctx.engine(), ctx.tol),
    'oracle-equivalence': lambda ctx: oracle_equivalence_suite(ctx.params, ctx.dp_spec(), ctx.get('check.mc_paths'), ctx.seed, ctx.workers, ctx.tol),
    'degeneration': lambda ctx: degeneration_suite(ctx.params, ctx.dp_spec(), ctx.get('check.paths'), ctx.seed, ctx.workers, ctx.tol),
    'moments': lambda ctx: moment_suite(ctx.params, tol=ctx.tol),
    'spacetime': spacetime,
    'conditional': lambda ctx: conditional_property_suite(ctx.params, ctx.engine(), ctx.get('check.draws'), ctx.seed, ctx.tol),
    'continuity': lambda ctx: continuity_suite(ctx.params, ctx.get('check.paths'), seed=ctx.seed, workers=ctx.workers, tol=ctx.tol),
}


def run_suite(ctx: RunContext, name: str) -> CheckReport:
    started = time_nano()
    report = SUITES[name](ctx)
    report.suite = name
    log.info(f'check {name}: {"pass" if report.passed else "FAIL"} ({len(report.results)} checks, {time_nano_pretty(time_nano() - started)})')
    for failure in report.failures():
        log.warning(f'check {name}: {failure.name} violated by {failure.worst_violation:.3g} (tolerance {failure.tolerance:.3g}) {failure.detail}')
    return report


class CheckCommand(Command):
    """One property suite, or all of them with --all"""
    name = 'check'
    description = f'Property suites: {", ".join(SUITES)} (or --all)'

    def run(self, ctx: RunContext) -> CommandResult:
        suite = ctx.get('check.suite')
        if suite == 'all':
            names = list(SUITES)
        elif suite in SUITES:
            names = [suite]
        else:
            raise CommandException(f'Unknown suite {suite!r}, expected one of: {", ".join(SUITES)}')
        ctx.engine()  # built once, shared by the workers
        reports = run_parallel(run_suite, [(ctx, name) for name in names], ctx.workers)
        summary = SuiteSummary(reports)
        checks = pandas.concat([report.to_dataframe() for report in reports], ignore_index=True)
        payload = {'command': self.name, 'params': ctx.params.to_dict(), 'seed': ctx.seed, **summary.to_dict()}
        log.info(f'check: {sum(r.passed for r in reports)}/{len(reports)} suite(s) passed')
        return CommandResult(payload, [], {'checks': checks})
