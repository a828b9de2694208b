"""Grid-forming angle generators.

Two flavors:

* DC-link-driven: the frequency reference moves with the squared DC
  voltage error through a tracking/inertia/damping transfer function, so
  the DC capacitor plays the role of the rotating mass.
* Swing-emulation: the frequency reference integrates the power error
  through a first-order inertia/damping block.

Both return the frequency command in pu and the integrated, wrapped
angle.  These are the textbook-sign forms: the closed-loop engine wires
them with export-positive power measurement, which flips the deviation
sign (see the engine module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..params import VicParams, VsmParams
from .blocks import FirstOrderBlock


@dataclass
class VicAngle:
    """DC-link-voltage-driven angle generator.

    omega* = omega0 + [(s + k_T) / (s*k_J + k_D)] * (v_dc_ref^2 - v_dc^2)
    discretized with the bilinear rule; theta integrates omega*.
    """

    params: VicParams = field(default_factory=VicParams)
    w_base: float = 2.0 * math.pi * 60.0
    theta: float = 0.0
    _blk: FirstOrderBlock = field(init=False)

    def __post_init__(self):
        p = self.params
        self._blk = FirstOrderBlock(b1=1.0, b0=p.k_t, a1=p.k_j, a0=p.k_d)

    def step(self, v_dc: float, v_dc_ref: float, dt: float) -> tuple[float, float]:
        e = v_dc_ref * v_dc_ref - v_dc * v_dc
        d_omega = self._blk.step(e, dt)
        omega_ref = 1.0 + d_omega
        self.theta = (self.theta + dt * omega_ref * self.w_base) % (2.0 * math.pi)
        return omega_ref, self.theta


def vic_angle(v_dc: float, v_dc_ref: float, params: VicParams, dt: float,
              state: VicAngle | None = None) -> tuple[float, float]:
    """Functional form of :class:`VicAngle`; pass ``state`` to persist."""
    gen = state if state is not None else VicAngle(params=params)
    return gen.step(v_dc, v_dc_ref, dt)


@dataclass
class VsmAngle:
    """Swing-emulation angle generator.

    omega* = omega0 - [1 / (J*s + D)] * (p_ref - p_meas), bilinear
    discretization; theta integrates omega*.
    """

    params: VsmParams = field(default_factory=VsmParams)
    w_base: float = 2.0 * math.pi * 60.0
    theta: float = 0.0
    _blk: FirstOrderBlock = field(init=False)

    def __post_init__(self):
        p = self.params
        self._blk = FirstOrderBlock(b1=0.0, b0=1.0, a1=p.j, a0=p.d)

    def step(self, p_ref: float, p_meas: float, dt: float) -> tuple[float, float]:
        d_omega = -self._blk.step(p_ref - p_meas, dt)
        omega_ref = 1.0 + d_omega
        self.theta = (self.theta + dt * omega_ref * self.w_base) % (2.0 * math.pi)
        return omega_ref, self.theta


def vsm_angle(p_ref: float, p_meas: float, params: VsmParams, dt: float,
              state: VsmAngle | None = None) -> tuple[float, float]:
    """Functional form of :class:`VsmAngle`; pass ``state`` to persist."""
    gen = state if state is not None else VsmAngle(params=params)
    return gen.step(p_ref, p_meas, dt)
