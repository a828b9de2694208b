"""Simulation engine: deterministic fixed-step integration of the coupled
plant + controller with a scheduled event timeline.

A run proceeds in two phases.  For equilibrium starts, the engine first
computes an analytic approximate operating point (phasor solve of the
quasi-static network plus the turbine power balance), seeds the
controller integrators consistently, and then integrates an unrecorded
settling interval ("soak") so the recorded portion begins from a numeric
equilibrium.  De-energized (black-start) runs skip both.

All heavy lifting happens inside the flat-array kernel; this module owns
setup, event compilation, and the TimeSeries assembly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, fsolve

from . import backend
from .params import (Params, ControllerConfig, GridParams, ConfigError,
                     controller_for_mode)

_K = backend.kernel()
_LX = _K.LAYOUT_X
_LC = _K.LAYOUT_C
_LU = _K.LAYOUT_U
_LP = _K.LAYOUT_P

EVENT_KINDS = ("wind_step", "power_setpoint", "fault_apply", "fault_clear",
               "enable_gsc", "enable_msc", "connect_load", "disconnect_grid")

DEFAULT_SOAK = 40.0


class NonFiniteState(RuntimeError):
    """A state variable became NaN/inf outside of a managed run."""


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings."""

    dt: float = 1.0e-4
    t_end: float = 10.0
    record_every: int = 10
    solver: str = "semi_implicit"

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ConfigError("t_end must be at least one step")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.solver not in _K.SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from "
                              f"{sorted(_K.SOLVERS)}")

    def validate_against(self, params: Params) -> None:
        """Reject steps too coarse for the configured lag time constants."""
        tc = params.fastest_time_constant()
        if tc < 10.0 * self.dt:
            raise ConfigError(
                f"dt={self.dt:g} s is too coarse: fastest configured time "
                f"constant {tc:g} s must be >= 10*dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class Event:
    """One scheduled change of inputs or topology."""

    time: float
    kind: str
    payload: object = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ConfigError(f"unknown event kind {self.kind!r}")
        if self.time < 0.0:
            raise ConfigError("event time must be >= 0")


@dataclass
class TimeSeries:
    """Uniformly sampled named channels with run metadata."""

    t: np.ndarray
    channels: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t)
        for name, v in self.channels.items():
            if len(v) != n:
                raise ConfigError(f"channel {name!r} length {len(v)} != {n}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    @property
    def diverged(self) -> bool:
        return bool(self.meta.get("diverged", False))


@dataclass(frozen=True)
class PlantState:
    """Continuous plant state at one instant (pu)."""

    omega_r: float = 1.0
    beta: float = 0.0
    p_msc: float = 0.0
    v_dc: float = 1.0
    i_f_dq: tuple[float, float] = (0.0, 0.0)
    v_c_dq: tuple[float, float] = (1.0, 0.0)
    i_g_dq: tuple[float, float] = (0.0, 0.0)

    def to_vector(self) -> np.ndarray:
        x = np.zeros(_K.N_X)
        x[_LX["wr"]] = self.omega_r
        x[_LX["beta"]] = self.beta
        x[_LX["p_msc"]] = self.p_msc
        x[_LX["e_dc"]] = self.v_dc ** 2
        x[_LX["i_fd"]], x[_LX["i_fq"]] = self.i_f_dq
        x[_LX["v_cd"]], x[_LX["v_cq"]] = self.v_c_dq
        x[_LX["i_gd"]], x[_LX["i_gq"]] = self.i_g_dq
        return x

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "PlantState":
        return cls(omega_r=float(x[_LX["wr"]]),
                   beta=float(x[_LX["beta"]]),
                   p_msc=float(x[_LX["p_msc"]]),
                   v_dc=float(math.sqrt(max(x[_LX["e_dc"]], 0.0))),
                   i_f_dq=(float(x[_LX["i_fd"]]), float(x[_LX["i_fq"]])),
                   v_c_dq=(float(x[_LX["v_cd"]]), float(x[_LX["v_cq"]])),
                   i_g_dq=(float(x[_LX["i_gd"]]), float(x[_LX["i_gq"]])))


def step(state: PlantState, controls, dt: float,
         params: Params | None = None, v_w: float = 0.0,
         grid_connected: bool = True, gsc_on: bool | None = None,
         fault: bool = False, load: tuple[float, float] | None = None,
         solver: str = "semi_implicit") -> PlantState:
    """Advance the plant one step under held converter commands.

    ``controls`` is a :class:`gfmsim.control.ControlCommand` (or anything
    with e_dq / p_cmd_msc attributes plus optional beta_cmd, chopper).
    """
    p = params if params is not None else Params()
    pp = p.pack()
    x = state.to_vector()
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("plant state contains NaN/inf")
    ed, eq = getattr(controls, "e_dq", (0.0, 0.0))
    pcmd = getattr(controls, "p_cmd_msc", 0.0)
    bcmd = getattr(controls, "beta_cmd", state.beta)
    chop = 1.0 if getattr(controls, "chopper", False) else 0.0
    if gsc_on is None:
        gsc_on = abs(ed) + abs(eq) > 0.0
    gsum = bsum = 0.0
    grid_on = 1.0 if grid_connected else 0.0
    if fault:
        gsum += 1.0 / p.grid.r_fault
    if load is not None:
        gsum += load[0]
        bsum += load[1]
    dummy = np.zeros((6, 6))
    dummyb = np.zeros(6)
    if solver != "rk4":
        m1, m2, b0 = _semi_matrices(pp, gsum, bsum, grid_on,
                                    1.0 if gsc_on else 0.0, dt)
    else:
        m1, m2, b0 = dummy, dummy, dummyb
    flag = _K.plant_step(_K.SOLVERS[solver], x, pp, dt, float(ed), float(eq),
                         float(pcmd), float(bcmd), chop, float(v_w),
                         gsum, bsum, grid_on,
                         1.0 if gsc_on else 0.0, m1, m2, b0)
    if flag:
        raise NonFiniteState("plant state diverged (non-finite or > 100 pu)")
    return PlantState.from_vector(x)


# ----------------------------------------------------- network equilibria --

def _network_from_pcc(v: complex, params: Params,
                      load: complex | None = None) -> tuple[complex, complex, complex]:
    """Given the PCC phasor, return (converter EMF, filter current,
    measured output current) of the quasi-static network."""
    e = params.electrical
    zf = complex(e.r_f, e.l_f)
    gg, bg = params.grid.admittance
    yg = complex(gg, bg)
    io = (v - params.grid.v_grid) * yg
    if load is not None:
        io += v * load
    i_f = io + v * complex(0.0, e.c_f)
    emf = v + zf * i_f
    return emf, i_f, io


def _solve_equilibrium_network(params: Params, mode: str, p_target: float
                               ) -> tuple[complex, complex, complex]:
    """Solve the PCC phasor so the mode's regulated quantities hold.

    Multi-loop modes regulate |v_pcc| = E*; single-loop modes hold the
    converter EMF amplitude at E*; GFL injects current aligned with the
    PCC voltage.  G-modes and GFL balance converter power to the machine
    feed (p_target = p_msc); M-modes hit p_target at the PCC.
    """
    estar = params.controller.e_star

    def residuals(z):
        v = complex(z[0], z[1])
        emf, i_f, io = _network_from_pcc(v, params)
        p_conv = (emf * i_f.conjugate()).real
        p_pcc = (v * io.conjugate()).real
        if mode == "gfl":
            r1 = p_conv - p_target
            r2 = (i_f * v.conjugate()).imag
        elif mode == "g-mgfm":
            r1 = p_conv - p_target
            r2 = abs(v) - estar
        elif mode == "m-mgfm":
            r1 = p_pcc - p_target
            r2 = abs(v) - estar
        elif mode == "g-sgfm":
            r1 = p_conv - p_target
            r2 = abs(emf) - estar
        else:  # m-sgfm
            r1 = p_pcc - p_target
            r2 = abs(emf) - estar
        return [r1, r2]

    sol, info, ier, _ = fsolve(residuals, [1.0, 0.05], full_output=True)
    if ier != 1:
        sol = np.array([1.0, 0.0])
    v = complex(sol[0], sol[1])
    return _network_from_pcc(v, params)


def _turbine_equilibrium(params: Params, v_w: float, p_ref: float,
                         aero_target: float | None = None
                         ) -> tuple[float, float, float]:
    """(omega_r, beta, t_e) at the analytic operating point."""
    t = params.turbine
    pp = params.pack()
    if p_ref < 1.0:
        wr, te = 1.0, p_ref
    elif v_w >= t.v_rated:
        wr, te = 1.0, 1.0
    else:
        wr = max(v_w / t.v_rated, t.omega_min)
        te = t.k_opt_pu * wr * wr
    target = aero_target if aero_target is not None else te
    f0 = _K.aero_torque_eval(v_w, wr, 0.0, pp) - target
    if f0 <= 0.0:
        return wr, 0.0, te
    fmax = _K.aero_torque_eval(v_w, wr, t.beta_max, pp) - target
    if fmax >= 0.0:
        return wr, t.beta_max, te
    beta = brentq(lambda b: _K.aero_torque_eval(v_w, wr, b, pp) - target,
                  0.0, t.beta_max, xtol=1e-12)
    return wr, float(beta), te


# ------------------------------------------------------- state seeding ----

def _seed_equilibrium(params: Params, v_w: float, p_ref: float
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Analytic approximate equilibrium: plant vector + controller vector."""
    mode = params.controller.mode
    e = params.electrical
    t = params.turbine
    x = np.zeros(_K.N_X)
    c = np.zeros(_K.N_C)

    # provisional mechanical point to learn te and the power target
    wr0, _, te = _turbine_equilibrium(params, v_w, p_ref)
    if mode in ("m-mgfm", "m-sgfm"):
        p_target = te * wr0                       # held at the PCC
    else:
        p_target = min(te * wr0, e.p_msc_max)     # machine feed
    emf, i_f, io = _solve_equilibrium_network(params, mode, p_target)
    p_conv = (emf * i_f.conjugate()).real
    p_msc = p_conv                                 # DC balance
    wr, beta, te = _turbine_equilibrium(params, v_w, p_ref,
                                        aero_target=p_msc / max(wr0, 0.1))
    v = emf - complex(e.r_f, e.l_f) * i_f          # PCC phasor

    x[_LX["wr"]] = wr
    x[_LX["beta"]] = beta
    x[_LX["p_msc"]] = p_msc
    x[_LX["e_dc"]] = 1.0
    x[_LX["i_fd"]], x[_LX["i_fq"]] = i_f.real, i_f.imag
    x[_LX["v_cd"]], x[_LX["v_cq"]] = v.real, v.imag
    # only the grid branch is connected at the seeded operating point, so
    # the measured output current is entirely grid line current
    x[_LX["i_gd"]], x[_LX["i_gq"]] = io.real, io.imag

    c[_LC["charged"]] = 1.0
    c[_LC["ol_scale"]] = 1.0
    c[_LC["p_filt"]] = (v * io.conjugate()).real
    c[_LC["p_out"]] = c[_LC["p_filt"]]
    c[_LC["e_d"]], c[_LC["e_q"]] = emf.real, emf.imag
    c[_LC["p_cmd"]] = p_msc
    c[_LC["w_star"]] = 1.0
    c[_LC["beta_cmd"]] = beta
    c[_LC["pitch_xi"]] = beta
    if mode in ("m-mgfm", "m-sgfm"):
        c[_LC["msc_xi"]] = p_msc

    pp = params.pack()
    if mode in ("g-sgfm", "m-sgfm"):
        th = math.atan2(emf.imag, emf.real)
        c[_LC["theta"]] = th % (2.0 * math.pi)
    elif mode in ("g-mgfm", "m-mgfm"):
        th = math.atan2(v.imag, v.real)
        c[_LC["theta"]] = th % (2.0 * math.pi)
        cs, sn = math.cos(th), math.sin(th)
        idf = i_f.real * cs + i_f.imag * sn
        iqf = -i_f.real * sn + i_f.imag * cs
        iod = io.real * cs + io.imag * sn
        ioq = -io.real * sn + io.imag * cs
        vdf = v.real * cs + v.imag * sn
        vqf = -v.real * sn + v.imag * cs
        udf = emf.real * cs + emf.imag * sn
        uqf = -emf.real * sn + emf.imag * cs
        k_ff = params.controller.k_ff
        c[_LC["ff_d"]] = iod
        c[_LC["ff_q"]] = ioq
        c[_LC["vm_d"]] = vdf
        c[_LC["vm_q"]] = vqf
        c[_LC["vd_xi"]] = idf - k_ff * iod
        c[_LC["vq_xi"]] = iqf - k_ff * ioq
        c[_LC["id_xi"]] = udf - vdf + pp[_LP["l_f"]] * iqf
        c[_LC["iq_xi"]] = uqf - vqf - pp[_LP["l_f"]] * idf
    else:  # gfl
        th = math.atan2(v.imag, v.real)
        c[_LC["pll_th"]] = th % (2.0 * math.pi)
        cs, sn = math.cos(th), math.sin(th)
        idf = i_f.real * cs + i_f.imag * sn
        iqf = -i_f.real * sn + i_f.imag * cs
        vdf = v.real * cs + v.imag * sn
        vqf = -v.real * sn + v.imag * cs
        udf = emf.real * cs + emf.imag * sn
        uqf = -emf.real * sn + emf.imag * cs
        vff = max(abs(v), 0.5)
        c[_LC["vdc_xi"]] = idf - p_msc / vff
        c[_LC["vm_d"]] = vdf
        c[_LC["vm_q"]] = vqf
        c[_LC["id_xi"]] = udf - vdf + pp[_LP["l_f"]] * iqf
        c[_LC["iq_xi"]] = uqf - vqf - pp[_LP["l_f"]] * idf
    return x, c


def _seed_deenergized(params: Params) -> tuple[np.ndarray, np.ndarray]:
    """Black-start initial condition: spinning feathered rotor, dead bus."""
    t = params.turbine
    x = np.zeros(_K.N_X)
    c = np.zeros(_K.N_C)
    x[_LX["wr"]] = 1.0
    x[_LX["beta"]] = t.beta_max
    c[_LC["beta_cmd"]] = t.beta_max
    c[_LC["pitch_xi"]] = t.beta_max
    c[_LC["ol_scale"]] = 1.0
    c[_LC["w_star"]] = 1.0
    return x, c


# -------------------------------------------------------- event packing ---

_EV_PRIORITY = {k: i for i, k in enumerate(EVENT_KINDS)}


def _compile_events(events: list[Event], params: Params
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    order = sorted(range(len(events)), key=lambda i: (events[i].time, i))
    n = len(events)
    ev_t = np.zeros(n)
    ev_k = np.zeros(n, dtype=np.int64)
    ev_v = np.zeros(n)
    ev_v2 = np.zeros(n)
    kindmap = _K.EVENT_KINDS
    fault_open = False
    for j, i in enumerate(order):
        ev = events[i]
        ev_t[j] = ev.time
        ev_k[j] = kindmap[ev.kind]
        if ev.kind == "wind_step":
            ev_v[j] = float(ev.payload)
        elif ev.kind == "power_setpoint":
            ev_v[j] = float(ev.payload)
        elif ev.kind == "fault_apply":
            r = float(ev.payload) if ev.payload is not None else params.grid.r_fault
            if r <= 0.0:
                raise ConfigError("fault resistance must be positive")
            ev_v[j] = 1.0 / r
            fault_open = True
        elif ev.kind == "fault_clear":
            if not fault_open:
                raise ConfigError("fault_clear without a prior fault_apply")
            fault_open = False
        elif ev.kind == "connect_load":
            g, b = _load_admittance(ev.payload)
            ev_v[j], ev_v2[j] = g, b
    return ev_t, ev_k, ev_v, ev_v2


def _load_admittance(payload) -> tuple[float, float]:
    """Shunt (g, b) for a constant-impedance load sized at nominal voltage."""
    if payload is None:
        payload = {"p": 0.5, "pf": 0.95}
    p = float(payload.get("p", 0.5))
    if "q" in payload:
        q = float(payload["q"])
    else:
        pf = float(payload.get("pf", 0.95))
        q = p * math.tan(math.acos(pf))
    # with i = (g + jb) v and export-positive measurement, an absorbing
    # inductive load has g > 0, b < 0
    return p, -q


# ------------------------------------------------- semi-implicit tables ---

def _electrical_a(pp: np.ndarray, gsum: float, bsum: float,
                  grid_on: float, gsc_on: float) -> np.ndarray:
    """State matrix of [i_fd, i_fq, v_cd, v_cq, i_gd, i_gq]."""
    wb = pp[_LP["w_b"]]
    lf = pp[_LP["l_f"]]
    rf = pp[_LP["r_f"]]
    cf = pp[_LP["c_f"]]
    lg = pp[_LP["l_g"]]
    rg = pp[_LP["r_g"]]
    a = np.zeros((6, 6))
    if gsc_on > 0.5:
        a[0, :4] = [-wb * rf / lf, wb, -wb / lf, 0.0]
        a[1, :4] = [-wb, -wb * rf / lf, 0.0, -wb / lf]
    else:
        a[0, 0] = -1000.0
        a[1, 1] = -1000.0
    a[2, :4] = [wb / cf, 0.0, -wb * gsum / cf, wb * bsum / cf + wb]
    a[3, :4] = [0.0, wb / cf, -wb * bsum / cf - wb, -wb * gsum / cf]
    if grid_on > 0.5:
        a[2, 4] = -wb / cf
        a[3, 5] = -wb / cf
        a[4] = [0.0, 0.0, wb / lg, 0.0, -wb * rg / lg, wb]
        a[5] = [0.0, 0.0, 0.0, wb / lg, -wb, -wb * rg / lg]
    else:
        a[4, 4] = -1000.0
        a[5, 5] = -1000.0
    return a


def _semi_matrices(pp, gsum, bsum, grid_on, gsc_on, dt):
    a = _electrical_a(pp, gsum, bsum, grid_on, gsc_on)
    eye = np.eye(6)
    lhs = eye - 0.5 * dt * a
    m1 = np.linalg.solve(lhs, eye + 0.5 * dt * a)
    m2 = np.linalg.solve(lhs, dt * eye)
    wb = pp[_LP["w_b"]]
    lg = pp[_LP["l_g"]]
    b0 = np.zeros(6)
    if grid_on > 0.5:
        b0[4] = -wb * pp[_LP["v_g"]] / lg
    return (np.ascontiguousarray(m1), np.ascontiguousarray(m2),
            np.ascontiguousarray(b0))


def _semi_tables(params: Params, events: list[Event], dt: float):
    """Per-topology trapezoidal update tables (16 grid/fault/load/gsc combos)."""
    pp = params.pack()
    gf = 1.0 / params.grid.r_fault
    gl = bl = 0.0
    for ev in events:
        if ev.kind == "fault_apply" and ev.payload is not None:
            gf = 1.0 / float(ev.payload)
        if ev.kind == "connect_load":
            gl, bl = _load_admittance(ev.payload)
    m1 = np.zeros((16, 6, 6))
    m2 = np.zeros((16, 6, 6))
    b0 = np.zeros((16, 6))
    for topo in range(16):
        grid = (topo >> 3) & 1
        fault = (topo >> 2) & 1
        load = (topo >> 1) & 1
        gsc = topo & 1
        gsum = fault * gf + load * gl
        bsum = load * bl
        a, b, c0 = _semi_matrices(pp, gsum, bsum, float(grid),
                                  float(gsc), dt)
        m1[topo], m2[topo], b0[topo] = a, b, c0
    return m1, m2, b0


# --------------------------------------------------------------- run ------

def run(scenario, config: ControllerConfig | str | None = None,
        sim: SimConfig | None = None, params: Params | None = None,
        soak: float | None = None) -> TimeSeries:
    """Execute a scenario timeline and return the recorded TimeSeries.

    ``scenario`` provides: name, scr, events, t_end, initial
    ("rated_equilibrium" | "de_energized"), initial_wind, initial_p_ref.
    ``config`` may be a ControllerConfig or a mode string.
    """
    if isinstance(config, str):
        config = controller_for_mode(config)
    if params is None:
        if config is None:
            config = controller_for_mode("g-sgfm")
        params = Params(grid=GridParams(scr=getattr(scenario, "scr", 10.0)),
                        controller=config)
    elif config is not None:
        params = params.replace(controller=config)
    if sim is None:
        sim = SimConfig(t_end=getattr(scenario, "t_end", 10.0))
    sim.validate_against(params)

    events = list(getattr(scenario, "events", []))
    t_end = sim.t_end
    for ev in events:
        if ev.time > t_end + 1e-12:
            raise ConfigError(f"event at t={ev.time} s is beyond "
                              f"t_end={t_end} s")
    ev_t, ev_k, ev_v, ev_v2 = _compile_events(events, params)

    initial = getattr(scenario, "initial", "rated_equilibrium")
    v_w0 = float(getattr(scenario, "initial_wind", 11.0))
    p_ref0 = float(getattr(scenario, "initial_p_ref", 1.0))

    pp = params.pack()
    u = np.zeros(_K.N_U)
    u[_LU["v_w"]] = v_w0
    u[_LU["p_ref"]] = p_ref0

    if initial == "de_energized":
        x, c = _seed_deenergized(params)
        u[_LU["grid"]] = 0.0
        u[_LU["gsc"]] = 0.0
        u[_LU["msc"]] = 0.0
        t_soak = 0.0
    else:
        x, c = _seed_equilibrium(params, v_w0, p_ref0)
        u[_LU["grid"]] = 1.0
        u[_LU["gsc"]] = 1.0
        u[_LU["msc"]] = 1.0
        t_soak = DEFAULT_SOAK if soak is None else float(soak)

    mode = _K.MODES[params.controller.mode]
    solver = _K.SOLVERS[sim.solver]
    if sim.solver == "semi_implicit":
        m1, m2, b0 = _semi_tables(params, events, sim.dt)
    else:
        m1 = np.zeros((16, 4, 4))
        m2 = np.zeros((16, 4, 4))
        b0 = np.zeros((16, 4))

    diverged = 0
    if t_soak > 0.0:
        n_soak = int(round(t_soak / sim.dt))
        empty = np.zeros(0)
        empty_k = np.zeros(0, dtype=np.int64)
        out1 = np.zeros((1, _K.N_CH))
        out1_t = np.zeros(1)
        diverged = _K.run_loop(mode, solver, x, c, u, pp, sim.dt, n_soak,
                               n_soak + 1, -t_soak, empty, empty_k, empty,
                               empty, m1, m2, b0, out1, out1_t)

    n_steps = sim.n_steps
    rec = sim.record_every
    n_rec = n_steps // rec + 1
    out = np.zeros((n_rec, _K.N_CH))
    out_t = np.zeros(n_rec)
    flag = _K.run_loop(mode, solver, x, c, u, pp, sim.dt, n_steps, rec,
                       0.0, ev_t, ev_k, ev_v, ev_v2, m1, m2, b0, out, out_t)
    diverged = int(diverged or flag)

    channels = {name: np.ascontiguousarray(out[:, i])
                for i, name in enumerate(_K.CHANNELS)}
    meta = {
        "scenario": getattr(scenario, "name", "custom"),
        "mode": params.controller.mode,
        "scr": params.grid.scr,
        "dt": sim.dt,
        "record_every": sim.record_every,
        "solver": sim.solver,
        "diverged": bool(diverged),
        "backend": backend.backend_name(),
    }
    return TimeSeries(t=out_t, channels=channels, meta=meta)
