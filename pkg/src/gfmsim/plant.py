"""Physical models: rotor aerodynamics, drivetrain, DC link with chopper,
and the quasi-static Thevenin grid interface.

These are the stand-alone, record-in/record-out forms of the physics; the
simulation engine runs the same equations through the flat-array kernel.
Both share one Cp surface and one set of calibration constants, so the
unit-level oracles here pin down the behavior of the full loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import backend
from .params import (TurbineParams, GridParams, ConfigError,
                     optimal_gain_si, BETZ_LIMIT)

_K = backend.kernel()


class SingularNetwork(ValueError):
    """The quasi-static network has no solution (zero-impedance short)."""


@dataclass(frozen=True)
class DrivetrainState:
    """Single-mass drivetrain state."""

    omega_r: float = 1.0     # pu
    theta_r: float = 0.0     # rad, wrapped to [0, 2*pi)
    h: float = 5.0           # s

    def __post_init__(self):
        if self.omega_r < 0.0:
            raise ConfigError("omega_r must be non-negative")
        object.__setattr__(self, "theta_r",
                           self.theta_r % (2.0 * math.pi))


@dataclass(frozen=True)
class DcLinkState:
    """DC-link capacitor with hysteretic chopper."""

    v_dc: float = 1.0
    c_dc: float = 0.8         # pu*s, energy-normalized
    chopper_on: bool = False
    v_chop_on: float = 1.1
    v_chop_off: float = 1.05
    r_chop: float = 1.21

    def __post_init__(self):
        if self.v_dc < 0.0:
            raise ConfigError("v_dc must be non-negative")
        if not self.v_chop_off < self.v_chop_on:
            raise ConfigError("v_chop_off must be below v_chop_on")


@dataclass(frozen=True)
class PmsgParams:
    """Surface-mount PMSG electrical parameters (pu)."""

    r_s: float = 0.01
    l_d: float = 0.4
    l_q: float = 0.4
    psi_pm: float = 1.0
    pole_pairs: int = 100

    def __post_init__(self):
        if self.l_d != self.l_q:
            raise ConfigError("surface-mount assumption requires l_d == l_q")
        if self.pole_pairs < 1:
            raise ConfigError("pole_pairs must be >= 1")


def cp(lam: float, beta: float, turbine: TurbineParams | None = None) -> float:
    """Rotor power coefficient, calibrated so cp(lambda_opt, 0) == cp_max.

    Out-of-range pitch is clamped; the output never exceeds the Betz limit.
    """
    t = turbine if turbine is not None else TurbineParams()
    from .params import Params
    pp = Params(turbine=t).pack()
    return float(_K.cp_eval(float(lam), float(beta), pp))


def aero_torque(v_w: float, omega_r: float, beta: float,
                turbine: TurbineParams | None = None) -> float:
    """Aerodynamic torque in pu on the machine base.

    T = 0.5*rho*pi*R^2*cp(lambda, beta)*v_w^3 / omega_mech, converted to
    per-unit; the v_w = 0 and omega_r = 0 limits return exactly 0.
    """
    t = turbine if turbine is not None else TurbineParams()
    from .params import Params
    pp = Params(turbine=t).pack()
    return float(_K.aero_torque_eval(float(v_w), float(omega_r),
                                     float(beta), pp))


def optimal_gain(turbine: TurbineParams) -> float:
    """Optimal torque-law gain in SI units (N*m*s^2)."""
    return optimal_gain_si(turbine)


def dc_link_step(state: DcLinkState, p_msc: float, p_gsc: float,
                 dt: float) -> DcLinkState:
    """Advance the DC link by one step of the energy balance.

    Integrates C_dc * d(v_dc^2/2)/dt = p_msc - p_gsc - p_chopper using the
    exact solution of the (linear-in-v^2) balance over the step.  Chopper
    hysteresis: on at v_chop_on, off at v_chop_off; when on it dissipates
    v_dc^2 / r_chop.
    """
    if dt <= 0.0:
        raise ConfigError("dt must be positive")
    chop = state.chopper_on
    if state.v_dc >= state.v_chop_on:
        chop = True
    elif state.v_dc <= state.v_chop_off:
        chop = False

    e0 = state.v_dc ** 2
    p_net = p_msc - p_gsc
    if chop:
        # dE/dt = (2/C)*(p_net - E/R): exponential relaxation to p_net*R
        e_inf = p_net * state.r_chop
        k = 2.0 / (state.r_chop * state.c_dc)
        e1 = e_inf + (e0 - e_inf) * math.exp(-k * dt)
    else:
        e1 = e0 + 2.0 * p_net * dt / state.c_dc
    if e1 < 0.0:
        e1 = 0.0
    return DcLinkState(v_dc=math.sqrt(e1), c_dc=state.c_dc, chopper_on=chop,
                       v_chop_on=state.v_chop_on, v_chop_off=state.v_chop_off,
                       r_chop=state.r_chop)


def grid_interface(v_t_dq: tuple[float, float], grid: GridParams,
                   fault_active: bool = False) -> tuple[float, float]:
    """Quasi-static current drawn from the PCC into grid (+ fault) branches.

    The grid is a stiff source v_grid at angle 0 behind z_g = 1/scr split
    per x_r_ratio; a fault adds a shunt r_fault at the PCC.  Returns the
    dq current flowing out of the PCC node.
    """
    vd, vq = float(v_t_dq[0]), float(v_t_dq[1])
    if fault_active and grid.r_fault <= 0.0:
        raise SingularNetwork("zero-resistance fault at the PCC")
    g, b = grid.admittance
    # branch current toward the grid source
    id_ = g * (vd - grid.v_grid) - b * vq
    iq_ = g * vq + b * (vd - grid.v_grid)
    if fault_active:
        id_ += vd / grid.r_fault
        iq_ += vq / grid.r_fault
    return id_, iq_


def betz_limit() -> float:
    return BETZ_LIMIT
