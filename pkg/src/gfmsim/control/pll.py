"""Synchronous-reference-frame phase-locked loop.

Second-order PLL: the measured terminal voltage is rotated into the PLL
frame and a PI on the q-axis component drives the frame frequency, so the
locked condition aligns the frame d-axis with the voltage phasor."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class PllState:
    """PLL state plus gains; angles in rad, frequency in pu."""

    theta: float = 0.0
    omega: float = 1.0          # pu estimated frequency
    kp_pll: float = 177.7       # rad/s per pu q-voltage
    ki_pll: float = 15791.0     # rad/s^2 per pu q-voltage
    w_base: float = 2.0 * math.pi * 60.0
    freq_limit: float = 0.3     # pu clamp on the frequency deviation
    xi: float = 0.0             # integrator, rad/s
    e_prev: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", self.theta % (2.0 * math.pi))


def pll_step(v_t_dq: tuple[float, float], state: PllState,
             dt: float) -> PllState:
    """One trapezoidal PLL update on the global-frame voltage measurement."""
    vd, vq = float(v_t_dq[0]), float(v_t_dq[1])
    sn = math.sin(state.theta)
    cs = math.cos(state.theta)
    vq_pll = -vd * sn + vq * cs
    lim = state.freq_limit * state.w_base
    xi = state.xi + 0.5 * state.ki_pll * dt * (vq_pll + state.e_prev)
    xi = min(max(xi, -lim), lim)
    dw = min(max(state.kp_pll * vq_pll + xi, -lim), lim)
    # measurements are in a frame already rotating at nominal frequency, so
    # theta tracks the deviation angle; omega reports the absolute estimate
    theta = (state.theta + dt * dw) % (2.0 * math.pi)
    return replace(state, theta=theta, omega=1.0 + dw / state.w_base,
                   xi=xi, e_prev=vq_pll)
