"""Outer voltage / inner current dq control cascade with magnitude-type
current-reference saturation (multi-loop modes)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..params import LimiterConfig, ConfigError
from .blocks import PiController


def current_saturation(i_ref_dq: tuple[float, float],
                       i_max: float) -> tuple[tuple[float, float], bool]:
    """Clamp the current-reference magnitude to i_max, preserving angle.

    Returns (clamped reference, saturation-engaged flag).  Idempotent.
    """
    id_, iq_ = float(i_ref_dq[0]), float(i_ref_dq[1])
    mag = math.hypot(id_, iq_)
    if mag <= i_max or mag == 0.0:
        return (id_, iq_), False
    s = i_max / mag
    return (id_ * s, iq_ * s), True


@dataclass
class CascadeController:
    """Voltage PI -> saturated current reference -> current PI with
    voltage feed-forward and inductive cross-decoupling.

    All quantities are in the controller dq frame; gains follow the
    pole-placement design in the parameter layer.
    """

    kp_v: float
    ki_v: float
    kp_i: float
    ki_i: float
    l_f: float
    limiter: LimiterConfig = field(default_factory=LimiterConfig)
    # Low-passed output-current feedforward: unit DC gain keeps the power
    # flow tracking the controller frame; the lag breaks the fast positive
    # loop through the grid admittance and the current-loop delay.
    k_ff: float = 1.0
    tau_ff: float = 0.005
    # Lag on the PCC voltage seen by the voltage PI; keeps the stiffness
    # gain from exciting the filter/line LC resonance.
    tau_vm: float = 0.002
    saturated: bool = False

    def __post_init__(self):
        if self.limiter.scheme != "current_saturation":
            raise ConfigError("the cascade requires the current_saturation "
                              "limiter scheme")
        self._vd = PiController(self.kp_v, self.ki_v)
        self._vq = PiController(self.kp_v, self.ki_v)
        self._id = PiController(self.kp_i, self.ki_i)
        self._iq = PiController(self.kp_i, self.ki_i)
        self._ff = [0.0, 0.0]
        self._vm = [0.0, 0.0]

    def step(self, v_ref_dq, v_meas_dq, i_meas_dq, dt: float,
             i_ff_dq=(0.0, 0.0)) -> tuple[float, float]:
        """One cascade update; returns the converter voltage command."""
        self._vm[0] += (dt / self.tau_vm) * (v_meas_dq[0] - self._vm[0])
        self._vm[1] += (dt / self.tau_vm) * (v_meas_dq[1] - self._vm[1])
        evd = v_ref_dq[0] - self._vm[0]
        evq = v_ref_dq[1] - self._vm[1]
        self._ff[0] += (dt / self.tau_ff) * (i_ff_dq[0] - self._ff[0])
        self._ff[1] += (dt / self.tau_ff) * (i_ff_dq[1] - self._ff[1])
        ffd = self.k_ff * self._ff[0]
        ffq = self.k_ff * self._ff[1]
        idr = self._vd.step(evd, dt, feedforward=ffd)
        iqr = self._vq.step(evq, dt, feedforward=ffq)
        (idr, iqr), sat = current_saturation((idr, iqr), self.limiter.i_max)
        if sat:
            # keep the voltage-loop integrators consistent with the clamp
            self._vd.xi = idr - self._vd.kp * evd - ffd
            self._vq.xi = iqr - self._vq.kp * evq - ffq
        self.saturated = sat
        eid = idr - i_meas_dq[0]
        eiq = iqr - i_meas_dq[1]
        # low-passed voltage feed-forward: the raw capacitor voltage would
        # hand the filter/line LC resonance unity positive feedback
        ud = self._id.step(eid, dt) + self._vm[0] - self.l_f * i_meas_dq[1]
        uq = self._iq.step(eiq, dt) + self._vm[1] + self.l_f * i_meas_dq[0]
        return ud, uq


def inner_cascade(v_ref_dq, v_meas_dq, i_meas_dq, limiter: LimiterConfig,
                  dt: float, state: CascadeController | None = None,
                  **gains) -> tuple[float, float]:
    """Functional wrapper; pass ``state`` to persist the loop integrators."""
    if state is None:
        state = CascadeController(kp_v=gains.get("kp_v", 0.025),
                                  ki_v=gains.get("ki_v", 0.47),
                                  kp_i=gains.get("kp_i", 0.5),
                                  ki_i=gains.get("ki_i", 94.2),
                                  l_f=gains.get("l_f", 0.1),
                                  limiter=limiter)
    return state.step(v_ref_dq, v_meas_dq, i_meas_dq, dt)
