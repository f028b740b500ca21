"""
GField - Commands: finite-dimensional expectations

"""
# License: GPLv3, see License.txt

from __future__ import annotations

import numpy

from ..common import log, time_nano, time_nano_pretty
from ..geometry import gram_matrix
from ..gheat import reduce
from ..oracle import dp_convergence_table
from ..phi import LinearPullback

from .base import Command, CommandResult, RunContext


class ExpectCommand(Command):
    """E[phi(W_A1, ..., W_An)] and -E[-phi(...)] over the configured regions"""
    name = 'expect'
    description = 'Upper and lower expectation of phi(W_A1, ..., W_An) with the configured engine'
    engine_override: str = None

    def run(self, ctx: RunContext) -> CommandResult:
        ctx.require('phi', 'regions')
        regions = ctx.regions()
        phi = ctx.payoff(len(regions))
        law = gram_matrix(regions, ctx.params, ctx.tol)
        engine = ctx.engine(self.engine_override)
        t = ctx.get('t')
        started = time_nano()
        value, descriptor = engine.law_expectation(law, phi, t)
        row = ctx.row(value.upper, value.lower, engine.name, descriptor, started, phi=phi.text, t=t)
        log.info(f'{self.name}: E[{phi.text}] = {value.upper:.10g}, -E[-{phi.text}] = {value.lower:.10g} '
                 f'in {time_nano_pretty(time_nano() - started)}')
        result = CommandResult({
            'command': self.name,
            'params': ctx.params.to_dict(),
            'phi': phi.text,
            't': t,
            'regions': [r.to_dict() for r in regions],
            'law': law.to_dict(),
            'result': row,
        }, [row])
        return result


class OracleCommand(ExpectCommand):
    """Same job solved by the scenario oracle, optionally with its step convergence table"""
    name = 'oracle'
    description = 'Expectation by backward dynamic programming over volatility scenarios'
    engine_override = 'oracle'

    def run(self, ctx: RunContext) -> CommandResult:
        result = super().run(ctx)
        if ctx.get('dp.convergence'):
            regions = ctx.regions()
            phi = ctx.payoff(len(regions))
            rp = reduce(gram_matrix(regions, ctx.params, ctx.tol), phi, 1.0, ctx.tol)
            if rp.rank:
                table = dp_convergence_table(LinearPullback(phi, rp.factor), numpy.ones(rp.rank), ctx.get('t'), ctx.params, ctx.dp_spec())
                result.tables['dp_convergence'] = table
                result.payload['dp_convergence'] = table.to_dict(orient='list')
        return result
