"""
GField - Expectation engines

    One front for the two independent ways of evaluating a G-normal expectation:
        'pde'    explicit monotone scheme for the G-heat equation
        'oracle' backward dynamic programming over volatility scenarios
"""
# License: GPLv3, see License.txt

from __future__ import annotations

from typing import Protocol, Sequence, Union

import numpy

from .common import log
from .config import ConfigException, ToleranceConfig, resolve_tolerances
from .geometry import GramLaw
from .gheat import DEFAULT_RADIUS_MULT, GridIntegrator, auto_grid, reduce, solve
from .oracle import DpIntegrator, dp_law_expectation
from .phi import Payoff
from .vartypes import DpSpec, GParams, SublinearValue


ENGINES = ('pde', 'oracle')

LAYER_HALF_NODES = {1: 100, 2: 32, 3: 12}
"""PDE grid size per layer integration, by number of diffusing coordinates"""

LAYER_DP = DpSpec(steps=50, quad_order=12, extrapolate=False)
"""Layer integrators run the plain step recursion on tabulated values"""
LAYER_DP_LATTICE = {1: 201, 2: 41, 3: 17}


class LayerIntegrator(Protocol):
    """Maps values tabulated on `axes` (with a leading batch axis) to upper expectations at the origin"""
    kept: list[int]
    axes: list[numpy.ndarray]

    def upper(self, values: numpy.ndarray) -> numpy.ndarray:
        ...

    def describe(self) -> str:
        ...


class ExpectationEngine:
    """A configured engine"""

    def __init__(self, name: str = 'pde', radius_mult: float = DEFAULT_RADIUS_MULT, half_nodes: Union[int, None] = None,
                 h: Union[float, None] = None, dt: Union[float, None] = None, layer_half_nodes: Union[int, None] = None,
                 dp: Union[DpSpec, None] = None, layer_dp: Union[DpSpec, None] = None, tol: Union[ToleranceConfig, None] = None) -> None:
        if name not in ENGINES:
            raise ConfigException(f'Unknown engine {name!r}, expected one of {ENGINES}')
        self.name = name
        self.radius_mult = radius_mult
        self.half_nodes = half_nodes
        self.h = h
        self.dt = dt
        self.layer_half_nodes = layer_half_nodes
        self.dp = dp or DpSpec()
        self.layer_dp = layer_dp
        self.tol = resolve_tolerances(tol)
        self._integrators: dict[tuple, LayerIntegrator] = {}

    def law_expectation(self, law: GramLaw, phi: Payoff, t: float = 1.0) -> tuple[SublinearValue, str]:
        """E[phi(X)] and -E[-phi(X)] for X ~ law at horizon t, with a description of the discretization"""
        if self.name == 'oracle':
            return dp_law_expectation(law, phi, t, self.dp, self.tol), self.dp.describe()
        rp = reduce(law, phi, t, self.tol)
        if rp.rank == 0 or law.params.sigma_hi_sq == 0 or t == 0:
            return solve(rp, None, self.tol), 'pde point-mass'
        gs = auto_grid(rp.rank, t, law.params, self.radius_mult, self.half_nodes, self.h, self.dt)
        return solve(rp, gs, self.tol), gs.describe()

    def integrator(self, variances: Sequence[float], params: GParams) -> LayerIntegrator:
        """One-layer integrator for independent coordinates, cached by (variances, params)"""
        key = (tuple(float(v) for v in variances), params.sigma_lo_sq, params.sigma_hi_sq)
        if key not in self._integrators:
            dims = sum(1 for v in variances if v > 0)
            if self.name == 'oracle':
                spec = self.layer_dp or DpSpec(LAYER_DP.steps, LAYER_DP.quad_order, self.dp.controls,
                                               LAYER_DP_LATTICE.get(dims, 17), self.radius_mult, LAYER_DP.extrapolate)
                integrator = DpIntegrator(variances, params, spec)
            else:
                half_nodes = self.layer_half_nodes or LAYER_HALF_NODES.get(dims, 12)
                integrator = GridIntegrator(variances, params, half_nodes, self.radius_mult, self.tol)
            log.debug(f'New layer integrator: {integrator.describe()}')
            self._integrators[key] = integrator
        return self._integrators[key]

    def describe(self) -> str:
        if self.name == 'oracle':
            return f'oracle {self.dp.describe()}'
        grid = f'M={self.half_nodes}' if self.half_nodes else ('h=' + str(self.h) if self.h else 'M=auto')
        return f'pde radius_mult={self.radius_mult:g} {grid}'
