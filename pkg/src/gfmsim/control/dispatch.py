"""Mode dispatch: one controller update mapping measurements to a
converter command, mirroring the wiring used inside the simulation
engine (which runs the same structure through the flat-array kernel).

Grid-following: PLL + outer DC-voltage PI + saturated current loop.
Multi-loop grid-forming: angle generator + voltage/current cascade.
Single-loop grid-forming: angle generator + modulation wave + overload
mitigation.

The angle generators are defined with the textbook sign (see
``control.angle``); the closed loop here feeds them with the arguments
swapped, which realizes the negative-feedback convention used by the
engine for export-positive power measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..params import (ControllerConfig, ElectricalParams, GridParams,
                      ConfigError, MULTI_LOOP_MODES, SINGLE_LOOP_MODES)
from .angle import VicAngle, VsmAngle
from .blocks import PiController
from .cascade import CascadeController, current_saturation
from .modulation import modulation_wave
from .overload import OverloadMitigation
from .pll import PllState, pll_step


@dataclass(frozen=True)
class Measurements:
    v_dq: tuple[float, float] = (1.0, 0.0)
    i_dq: tuple[float, float] = (0.0, 0.0)
    i_out_dq: tuple[float, float] = (0.0, 0.0)
    v_dc: float = 1.0
    p: float = 0.0
    q: float = 0.0
    omega_r: float = 1.0


@dataclass(frozen=True)
class References:
    v_dc_ref: float = 1.0
    p_ref: float = 1.0
    e_star: float = 1.0


@dataclass(frozen=True)
class ControlCommand:
    """Held converter outputs for one plant step."""

    e_dq: tuple[float, float] = (0.0, 0.0)
    u_abc: tuple[float, float, float] = (0.0, 0.0, 0.0)
    theta: float = 0.0
    omega_ref: float = 1.0
    p_cmd_msc: float = 0.0
    saturated: bool = False


class ControllerRuntime:
    """Stateful per-run controller for stand-alone (non-engine) stepping."""

    def __init__(self, config: ControllerConfig,
                 electrical: ElectricalParams | None = None,
                 grid: GridParams | None = None):
        self.config = config
        e = electrical if electrical is not None else ElectricalParams()
        g = grid if grid is not None else GridParams()
        wb = g.w_base
        self.w_base = wb
        mode = config.mode
        wn = 2.0 * math.pi * config.pll_bandwidth_hz
        self._pll = PllState(kp_pll=2.0 * config.pll_zeta * wn, ki_pll=wn * wn,
                             w_base=wb, freq_limit=config.pll_freq_limit)
        wdc = 2.0 * math.pi * config.vdc_loop_hz
        self._vdc_pi = PiController(kp=wdc * e.c_dc, ki=wdc * e.c_dc * wdc / 10.0)
        wv = 2.0 * math.pi * config.voltage_loop_hz
        wi = 2.0 * math.pi * config.current_loop_hz
        kp_v = wv * e.c_f / wb + config.voltage_loop_stiffness
        if mode in MULTI_LOOP_MODES:
            self._cascade = CascadeController(
                kp_v=kp_v, ki_v=kp_v * wv / 10.0,
                kp_i=wi * e.l_f / wb, ki_i=wi * e.l_f / wb * wi / 10.0,
                l_f=e.l_f, limiter=config.limiter, k_ff=config.k_ff,
                tau_ff=config.tau_ff, tau_vm=config.tau_vm)
            self._overload = None
        elif mode in SINGLE_LOOP_MODES:
            self._cascade = None
            self._overload = OverloadMitigation(
                limiter=config.limiter, k_ol=config.k_ol,
                tau_ol=config.tau_ol, tau_rec=config.tau_rec)
        if mode in ("g-mgfm", "g-sgfm"):
            self._vic = VicAngle(params=config.vic, w_base=wb)
        else:
            self._vic = None
        if mode in ("m-mgfm", "m-sgfm"):
            self._vsm = VsmAngle(params=config.vsm, w_base=wb)
        else:
            self._vsm = None
        self._theta = 0.0

    def step(self, meas: Measurements, refs: References,
             dt: float) -> ControlCommand:
        mode = self.config.mode
        if mode == "gfl":
            return self._step_gfl(meas, refs, dt)
        if mode in ("g-mgfm", "g-sgfm"):
            # swapped arguments realize the closed-loop sign convention
            omega_ref, _ = self._vic.step(refs.v_dc_ref, meas.v_dc, dt)
        elif mode in ("m-mgfm", "m-sgfm"):
            omega_ref, _ = self._vsm.step(meas.p, refs.p_ref, dt)
        else:
            raise ConfigError(f"unknown mode {mode!r}")
        # the angle blocks emit a rad/s deviation; normalize to pu for the
        # frequency command and limiter (matches the simulation engine)
        dw = (omega_ref - 1.0) / self.w_base
        dw = min(max(dw, -self.config.dw_lim), self.config.dw_lim)
        omega_ref = 1.0 + dw

        if mode in SINGLE_LOOP_MODES:
            scale, w_off = self._overload.step(meas.p, dt)
            omega_ref += w_off
            self._theta = (self._theta
                           + dt * omega_ref * self.w_base) % (2.0 * math.pi)
            theta = self._theta
            amp = refs.e_star * scale
            e_dq = (amp * math.cos(theta), amp * math.sin(theta))
            return ControlCommand(e_dq=e_dq,
                                  u_abc=modulation_wave(theta, amp),
                                  theta=theta, omega_ref=omega_ref,
                                  p_cmd_msc=0.0,
                                  saturated=self._overload.engaged)

        # multi-loop grid forming: cascade runs in the frame at theta
        self._theta = (self._theta
                       + dt * omega_ref * self.w_base) % (2.0 * math.pi)
        theta = self._theta
        sn, cs = math.sin(theta), math.cos(theta)
        vd, vq = meas.v_dq
        id_, iq_ = meas.i_dq
        vdf = vd * cs + vq * sn
        vqf = -vd * sn + vq * cs
        idf = id_ * cs + iq_ * sn
        iqf = -id_ * sn + iq_ * cs
        iod, ioq = meas.i_out_dq
        iff = (iod * cs + ioq * sn, -iod * sn + ioq * cs)
        ud, uq = self._cascade.step((refs.e_star, 0.0), (vdf, vqf),
                                    (idf, iqf), dt, i_ff_dq=iff)
        e_dq = (ud * cs - uq * sn, ud * sn + uq * cs)
        amp = math.hypot(ud, uq)
        ang = theta + math.atan2(uq, ud)
        return ControlCommand(e_dq=e_dq, u_abc=modulation_wave(ang, amp),
                              theta=theta, omega_ref=omega_ref,
                              p_cmd_msc=0.0, saturated=self._cascade.saturated)

    def _step_gfl(self, meas: Measurements, refs: References,
                  dt: float) -> ControlCommand:
        self._pll = pll_step(meas.v_dq, self._pll, dt)
        theta = self._pll.theta
        sn, cs = math.sin(theta), math.cos(theta)
        e_vdc = meas.v_dc - refs.v_dc_ref
        v_ff = max(math.hypot(*meas.v_dq), 0.5)
        idr = self._vdc_pi.step(e_vdc, dt, feedforward=refs.p_ref / v_ff)
        (idr, iqr), sat = current_saturation((idr, 0.0),
                                             self.config.limiter.i_max)
        if sat:
            self._vdc_pi.xi = idr - self._vdc_pi.kp * e_vdc - refs.p_ref / v_ff
        vd, vq = meas.v_dq
        id_, iq_ = meas.i_dq
        vdf = vd * cs + vq * sn
        vqf = -vd * sn + vq * cs
        idf = id_ * cs + iq_ * sn
        iqf = -id_ * sn + iq_ * cs
        c = self.config
        # inner current PI shares the cascade gains
        if not hasattr(self, "_gfl_id"):
            e = ElectricalParams()
            wi = 2.0 * math.pi * c.current_loop_hz
            kp = wi * e.l_f / self._pll.w_base
            self._gfl_id = PiController(kp, kp * wi / 10.0)
            self._gfl_iq = PiController(kp, kp * wi / 10.0)
            self._l_f = e.l_f
        ud = self._gfl_id.step(idr - idf, dt) + vdf - self._l_f * iqf
        uq = self._gfl_iq.step(iqr - iqf, dt) + vqf + self._l_f * idf
        e_dq = (ud * cs - uq * sn, ud * sn + uq * cs)
        amp = math.hypot(ud, uq)
        ang = theta + math.atan2(uq, ud)
        return ControlCommand(e_dq=e_dq, u_abc=modulation_wave(ang, amp),
                              theta=theta, omega_ref=self._pll.omega,
                              p_cmd_msc=0.0, saturated=sat)


def controller_step(mode_or_runtime, measurements: Measurements,
                    refs: References, dt: float) -> ControlCommand:
    """One controller update.  Accepts a :class:`ControllerRuntime` (to
    persist loop state) or a mode string / :class:`ControllerConfig` for a
    cold single step."""
    if isinstance(mode_or_runtime, ControllerRuntime):
        rt = mode_or_runtime
    elif isinstance(mode_or_runtime, ControllerConfig):
        rt = ControllerRuntime(mode_or_runtime)
    else:
        from ..params import controller_for_mode
        rt = ControllerRuntime(controller_for_mode(str(mode_or_runtime)))
    return rt.step(measurements, refs, dt)
