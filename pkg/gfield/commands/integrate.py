"""
GField - Commands: spatial stochastic integrals and sampled paths

"""
# License: GPLv3, see License.txt

from __future__ import annotations

from fractions import Fraction

import numpy

from ..common import log, time_nano
from ..whitenoise import (FieldPolicy, Lattice, WhiteNoiseException, holder_exponent, integral_isometry, moment_surface, nested_pairs,
                          sample_paths, spatial_integral_law)

from .base import Command, CommandException, CommandResult, RunContext


def _number(value) -> dict:
    """Float value, plus the exact fraction when there is one"""
    if isinstance(value, Fraction):
        return {'value': float(value), 'exact': f'{value.numerator}/{value.denominator}'}
    return {'value': float(value), 'exact': None}


class IntegrateCommand(Command):
    """Law of (int f_1 dW, ..., int f_n dW), the isometry of each integrand, and E[phi] of the integrals when phi is given"""
    name = 'integrate'
    description = 'Stochastic integrals of deterministic integrands: Gram law, isometry, and E[phi(integrals)]'

    def run(self, ctx: RunContext) -> CommandResult:
        fs = ctx.integrands()
        law = spatial_integral_law(fs, ctx.params, ctx.tol)
        isometry = []
        for i, f in enumerate(fs):
            lhs, rhs = integral_isometry(f, ctx.params)
            isometry.append({'integrand': f'f{i + 1}', 'second_moment': _number(lhs), 'sigma_hi_sq_norm_sq': _number(rhs), 'equal': lhs == rhs})
        payload = {'command': self.name, 'params': ctx.params.to_dict(), 'law': law.to_dict(), 'isometry': isometry}
        rows = []
        if ctx.get('phi'):
            phi = ctx.payoff(len(fs))
            engine = ctx.engine()
            started = time_nano()
            value, descriptor = engine.law_expectation(law, phi, 1.0)
            rows.append(ctx.row(value.upper, value.lower, engine.name, descriptor, started, phi=phi.text))
            payload['phi'] = phi.text
            payload['result'] = rows[0]
        return CommandResult(payload, rows)


class SimulateCommand(Command):
    """Classical fields under one representing measure: sampled paths, a sixth moment table and a Holder estimate"""
    name = 'simulate'
    description = 'Sample the field on a lattice under one volatility policy (paths.csv, moments.csv)'

    def policy(self, ctx: RunContext, lattice: Lattice) -> FieldPolicy:
        p = ctx.params
        match ctx.get('simulate.policy'):
            case 'sigma_hi':
                return FieldPolicy.constant(lattice, p.sigma_hi_sq)
            case 'sigma_lo':
                return FieldPolicy.constant(lattice, p.sigma_lo_sq)
            case 'checkerboard':
                return FieldPolicy.checkerboard(lattice, p)
            case _:
                return FieldPolicy.random(lattice, p, numpy.random.default_rng([ctx.seed, 1]))

    def run(self, ctx: RunContext) -> CommandResult:
        try:
            lattice = Lattice(tuple(float(e) for e in ctx.get('lattice.extent')), tuple(int(n) for n in ctx.get('lattice.cells')))
        except (TypeError, ValueError, WhiteNoiseException) as ex:
            raise CommandException(f'Invalid lattice: {ex}') from ex
        policy = self.policy(ctx, lattice)
        ensemble = sample_paths(lattice, policy, ctx.get('simulate.paths'), ctx.seed, ctx.get('simulate.chunk_size'), ctx.workers)
        tables = {'paths': ensemble.to_dataframe()}
        payload = {'command': self.name, 'params': ctx.params.to_dict(), 'lattice': lattice.to_dict(), 'policy': ctx.get('simulate.policy'),
                   'paths': ensemble.paths, 'seed': ctx.seed}

        pairs = nested_pairs(lattice, ctx.get('simulate.pairs'), numpy.random.default_rng([ctx.seed, 2]))
        moments = moment_surface(lattice, policy, pairs, ctx.get('simulate.moment_paths'), ctx.seed + 1, level=ctx.tol.get('mc_ci_level'),
                                 workers=ctx.workers, p=ctx.params)
        tables['moments'] = moments
        payload['moments_within_ci'] = int(moments['within_ci'].sum())
        if lattice.cells[0] > 8 and numpy.all(policy.variances > 0):
            estimate = holder_exponent(ensemble)
            payload['holder'] = {'exponent': estimate.exponent, 'ci_low': estimate.ci_low, 'ci_high': estimate.ci_high}
            tables['holder'] = estimate.table
        log.info(f'{self.name}: {ensemble.paths} path(s) on {lattice.cells} cells, '
                 f'{payload["moments_within_ci"]}/{len(moments)} moment(s) within their CI')
        return CommandResult(payload, [], tables)
