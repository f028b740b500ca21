"""
GField - Commands: layered spatial-temporal noise
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import itertools

import numpy
import pandas

from ..common import log, time_nano
from ..spacetime import (CylinderFunctional, LayeredModel, bohner_integral, conditional_expectation, expectation, integral_property_suite,
                         ito_integral, m2_norm, squared_norm_integrand)
from ..phi import expand_square

from .base import Command, CommandResult, RunContext

TABLE_NODES = 21


def conditional_table(model: LayeredModel, upper: CylinderFunctional, lower: CylinderFunctional) -> pandas.DataFrame:
    """Upper and lower conditional values on the tabulation nodes of the variables they depend on (at most two)"""
    variables = sorted(upper.phi.variables() | lower.phi.variables())
    axes = [model.tab_axis(v, TABLE_NODES) for v in variables]
    points = numpy.zeros((TABLE_NODES ** len(variables), model.n_vars))
    for row, values in enumerate(itertools.product(*axes)):
        for v, value in zip(variables, values):
            points[row, v - 1] = value
    table = pandas.DataFrame({f'x{v}': points[:, v - 1] for v in variables})
    table['value_upper'] = upper.evaluate(points)
    table['value_lower'] = lower.evaluate(points)
    return table


class StExpectCommand(Command):
    """E[X] (or E[X | F_t]) of a cylinder functional of the layered noise"""
    name = 'st-expect'
    description = 'Expectation of a functional of space-time increments, optionally conditioned at a time'

    def run(self, ctx: RunContext) -> CommandResult:
        ctx.require('phi', 'times', 'cells')
        model = ctx.model()
        x = model.parse(ctx.get('phi'))
        engine = ctx.engine()
        order = ctx.get('order')
        condition_at = ctx.get('condition_at')
        payload = {'command': self.name, 'params': ctx.params.to_dict(), 'model': model.to_dict(), 'phi': x.text, 'order': order}
        tables = {}
        started = time_nano()
        if condition_at is None:
            value = expectation(model, x, engine, order)
            upper, lower = value.upper, value.lower
        else:
            cond_upper = conditional_expectation(model, x, float(condition_at), engine)
            cond_lower = -conditional_expectation(model, -x, float(condition_at), engine)
            origin = numpy.zeros((1, model.n_vars))
            upper, lower = float(cond_upper.evaluate(origin)[0]), float(cond_lower.evaluate(origin)[0])
            depends_on = sorted(cond_upper.phi.variables() | cond_lower.phi.variables())
            payload['condition_at'] = float(condition_at)
            payload['depends_on'] = depends_on
            if 0 < len(depends_on) <= 2:
                tables['conditional'] = conditional_table(model, cond_upper, cond_lower)
        row = ctx.row(upper, lower, engine.name, engine.describe(), started, phi=x.text)
        if condition_at is not None:
            row['condition_at'] = float(condition_at)
        payload['result'] = row
        log.info(f'{self.name}: {x.text} -> [{lower:.10g}, {upper:.10g}]'
                 + ('' if condition_at is None else f' at the origin, conditioned at t={condition_at}'))
        return CommandResult(payload, [row], tables)


class StIntegralCommand(Command):
    """Stochastic integral of a simple adapted process: its mean, second moment and M2 norm"""
    name = 'st-integral'
    description = 'Integral of a simple adapted process against the space-time noise'

    def run(self, ctx: RunContext) -> CommandResult:
        ctx.require('times', 'cells', 'process')
        model = ctx.model()
        f = ctx.process(model)
        engine = ctx.engine()
        descriptor = engine.describe()
        integral = ito_integral(model, f)
        rows = []

        started = time_nano()
        value = expectation(model, integral, engine)
        rows.append(ctx.row(value.upper, value.lower, engine.name, descriptor, started, quantity='E[int f dW]'))

        started = time_nano()
        value = expectation(model, CylinderFunctional(model, expand_square(integral.phi)), engine)
        rows.append(ctx.row(value.upper, value.lower, engine.name, descriptor, started, quantity='E[(int f dW)^2]'))

        started = time_nano()
        value = expectation(model, squared_norm_integrand(model, f), engine)
        rows.append(ctx.row(value.upper, value.lower, engine.name, descriptor, started, quantity='E[int f^2 dt dx]'))

        bohner = bohner_integral(model, f)
        payload = {
            'command': self.name,
            'params': ctx.params.to_dict(),
            'model': model.to_dict(),
            'process': f.to_dict(),
            'integral': integral.to_dict(),
            'bohner': bohner.to_dict(),
            'm2_norm': m2_norm(model, f, engine),
            'results': rows,
        }
        if ctx.get('st.properties'):
            report = integral_property_suite(model, f, engine, ctx.tol, ctx.seed)
            payload['properties'] = report.to_dict()
            log.info(f'{self.name}: property suite {"passed" if report.passed else "FAILED"}')
        log.info(f'{self.name}: E[(int f dW)^2] = {rows[1]["value_upper"]:.10g}, ||f||_M2 = {payload["m2_norm"]:.10g}')
        return CommandResult(payload, rows)
