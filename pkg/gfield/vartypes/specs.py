"""
GField - Special VarTypes: discretization specs

"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math

from typing import Sequence, Union

from ..common import ensure_serializable
from .base import SpecialVarType, VarTypeException


class GridSpec(SpecialVarType):
    """
    Uniform grid for the explicit G-heat scheme in r reduced coordinates
        nodes -R + k*h, k = 0..2M, with h = R / M, and N steps of size dt
    """

    def __init__(self, dims: int = 1, radius: float = 8.0, half_nodes: int = 400, steps: int = 1, dt: float = 1.0) -> None:
        super().__init__()
        if int(dims) != dims or dims < 1:
            raise VarTypeException(f'Grid dimension must be a positive integer, got: {dims}')
        if not (math.isfinite(radius) and radius > 0):
            raise VarTypeException(f'Grid radius must be positive, got: {radius}')
        if int(half_nodes) != half_nodes or half_nodes < 2:
            raise VarTypeException(f'Need at least 2 half nodes, got: {half_nodes}')
        if int(steps) != steps or steps < 1:
            raise VarTypeException(f'Step count must be a positive integer, got: {steps}')
        if not (math.isfinite(dt) and dt > 0):
            raise VarTypeException(f'Time step must be positive, got: {dt}')
        self.dims = int(dims)
        """Reduced dimension r"""
        self.radius = float(radius)
        """Truncation radius R per coordinate"""
        self.half_nodes = int(half_nodes)
        """Nodes on each side of the origin, M"""
        self.steps = int(steps)
        """Number of time steps N"""
        self.dt = float(dt)
        """Time step"""

    @property
    def h(self) -> float:
        """Spacing"""
        return self.radius / self.half_nodes

    @property
    def nodes(self) -> int:
        """Nodes per axis"""
        return 2 * self.half_nodes + 1

    @property
    def horizon(self) -> float:
        return self.steps * self.dt

    def cfl_limit(self, sigma_hi_sq: float) -> float:
        """Largest monotone time step: h^2 / (2 r sigma_hi_sq)"""
        if sigma_hi_sq <= 0:
            return math.inf
        return self.h ** 2 / (2.0 * self.dims * sigma_hi_sq)

    def describe(self) -> str:
        return f'pde r={self.dims} R={self.radius:.6g} M={self.half_nodes} h={self.h:.6g} N={self.steps} dt={self.dt:.6g}'

    def __repr__(self) -> str:
        return f'GridSpec({self.describe()})'

    @ensure_serializable
    def to_dict(self) -> dict:
        return {'dims': self.dims, 'radius': self.radius, 'half_nodes': self.half_nodes, 'steps': self.steps, 'dt': self.dt}

    @staticmethod
    def from_dict(data: dict) -> GridSpec:
        return GridSpec(data['dims'], data['radius'], data['half_nodes'], data['steps'], data['dt'])

    @staticmethod
    def default() -> GridSpec:
        return GridSpec()


DEFAULT_LATTICE_POINTS = {1: 801, 2: 81, 3: 31}
"""State lattice size per axis of the DP oracle, by state dimension"""


class DpSpec(SpecialVarType):
    """Backward dynamic programming discretization: steps, Gauss-Hermite order, control variances"""

    def __init__(self, steps: int = 200, quad_order: int = 20, controls: Union[Sequence[float], None] = None,
                 lattice_points: Union[int, None] = None, radius_mult: float = 8.0, extrapolate: bool = True) -> None:
        super().__init__()
        if int(steps) != steps or steps < 1:
            raise VarTypeException(f'DP needs at least one step, got: {steps}')
        if int(quad_order) != quad_order or quad_order < 2:
            raise VarTypeException(f'Quadrature order must be >= 2, got: {quad_order}')
        if lattice_points is not None and (int(lattice_points) != lattice_points or lattice_points < 5):
            raise VarTypeException(f'Need at least 5 lattice points, got: {lattice_points}')
        if not (math.isfinite(radius_mult) and radius_mult > 0):
            raise VarTypeException(f'Radius multiplier must be positive, got: {radius_mult}')
        self.steps = int(steps)
        """Time steps N"""
        self.quad_order = int(quad_order)
        """Gauss-Hermite nodes q"""
        self.controls = None if controls is None else tuple(sorted(float(c) for c in controls))
        """Control variances; None means the endpoints {sigma_lo_sq, sigma_hi_sq}"""
        self.lattice_points = None if lattice_points is None else int(lattice_points)
        """State lattice points per axis; None picks by dimension"""
        self.radius_mult = float(radius_mult)
        """State lattice half width in standard deviations"""
        self.extrapolate = bool(extrapolate)
        """Combine the N and N // 2 step values to cancel the first order time error"""

    def lattice_size(self, dims: int) -> int:
        if self.lattice_points is not None:
            return self.lattice_points
        return DEFAULT_LATTICE_POINTS.get(dims, 21)

    def resolve_controls(self, sigma_lo_sq: float, sigma_hi_sq: float, slack: float = 1e-12) -> tuple[float, ...]:
        """The control grid, checked against [sigma_lo_sq, sigma_hi_sq]"""
        if self.controls is None:
            return tuple(sorted({sigma_lo_sq, sigma_hi_sq}))
        for c in self.controls:
            if not sigma_lo_sq - slack <= c <= sigma_hi_sq + slack:
                raise VarTypeException(f'Control variance {c} outside [{sigma_lo_sq}, {sigma_hi_sq}]')
        return tuple(sorted(set(min(max(c, sigma_lo_sq), sigma_hi_sq) for c in self.controls)))

    def with_interior_controls(self, sigma_lo_sq: float, sigma_hi_sq: float, count: int = 5) -> DpSpec:
        """Same spec, controls = endpoints plus count evenly spaced interior variances"""
        step = (sigma_hi_sq - sigma_lo_sq) / (count + 1)
        controls = [sigma_lo_sq, sigma_hi_sq] + [sigma_lo_sq + step * (i + 1) for i in range(count)]
        return DpSpec(self.steps, self.quad_order, controls, self.lattice_points, self.radius_mult, self.extrapolate)

    def with_steps(self, steps: int) -> DpSpec:
        return DpSpec(steps, self.quad_order, self.controls, self.lattice_points, self.radius_mult, self.extrapolate)

    def describe(self) -> str:
        controls = 'endpoints' if self.controls is None else f'{len(self.controls)} controls'
        return f'dp N={self.steps} q={self.quad_order} {controls}{" extrapolated" if self.extrapolate else ""}'

    def __repr__(self) -> str:
        return f'DpSpec({self.describe()})'

    @ensure_serializable
    def to_dict(self) -> dict:
        return {
            'steps': self.steps,
            'quad_order': self.quad_order,
            'controls': None if self.controls is None else list(self.controls),
            'lattice_points': self.lattice_points,
            'radius_mult': self.radius_mult,
            'extrapolate': self.extrapolate,
        }

    @staticmethod
    def from_dict(data: dict) -> DpSpec:
        return DpSpec(data.get('steps', 200), data.get('quad_order', 20), data.get('controls'), data.get('lattice_points'), data.get('radius_mult', 8.0), data.get('extrapolate', True))

    @staticmethod
    def default() -> DpSpec:
        return DpSpec()
