"""Built-in study scenarios and the cross-controller comparison harness.

Four studies: operating-region transition under a wind step, active-power
curtailment, a three-phase PCC fault with current limiting, and an
islanded black start.  Each builder returns a declarative ScenarioSpec;
``compare`` runs a spec under several controller modes and classifies the
outcomes with documented detectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import (Params, GridParams, ConfigError, controller_for_mode,
                     MODES, GFM_MODES)
from .simcore import Event, SimConfig, TimeSeries, run

# detector thresholds (see module docstrings / tests)
STABLE_P2P_LIMIT = 0.05       # pu peak-to-peak of P over the final window
STABLE_WINDOW = 5.0           # s
RECOVERY_TOL = 0.1            # pu band around the pre-fault power
RECOVERY_DEADLINE = 2.0       # s after fault clearing
RECOVERY_SMOOTH = 0.5         # s rolling mean applied before banding; the
                              # band judges the operating point, not the
                              # residual electromechanical swing


@dataclass(frozen=True)
class ScenarioSpec:
    """Declarative description of one study."""

    name: str
    scr: float = 10.0
    mode_list: tuple[str, ...] = tuple(MODES)
    events: tuple[Event, ...] = ()
    t_end: float = 10.0
    initial: str = "rated_equilibrium"
    initial_wind: float = 11.0
    initial_p_ref: float = 1.0
    record_every: int = 10

    def __post_init__(self):
        if self.initial not in ("rated_equilibrium", "de_energized"):
            raise ConfigError(f"unknown initial state {self.initial!r}")
        if self.initial == "de_energized" and any(
                m not in ("m-mgfm", "m-sgfm") for m in self.mode_list):
            raise ConfigError("de-energized start requires machine-side "
                              "DC regulation (m-mgfm / m-sgfm)")
        for m in self.mode_list:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r}")


@dataclass(frozen=True)
class Verdict:
    stable: bool
    peak_current: float
    peak_vdc_dev: float
    recovered_post_fault: bool

    def to_dict(self) -> dict:
        return {"stable": self.stable,
                "peak_current": self.peak_current,
                "peak_vdc_dev": self.peak_vdc_dev,
                "recovered_post_fault": self.recovered_post_fault}


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    series: dict[str, TimeSeries] = field(default_factory=dict)
    verdicts: dict[str, Verdict] = field(default_factory=dict)


def region_control_scenario(scr: float = 10.0) -> ScenarioSpec:
    """Wind step through the rated boundary: 10 -> 15 m/s at t = 30 s."""
    return ScenarioSpec(
        name="region",
        scr=scr,
        events=(Event(30.0, "wind_step", 15.0),),
        t_end=60.0,
        initial_wind=10.0,
    )


def curtailment_scenario(scr: float = 10.0) -> ScenarioSpec:
    """Plant setpoint step 1.0 -> 0.8 pu at rated wind."""
    return ScenarioSpec(
        name="curtailment",
        scr=scr,
        events=(Event(10.0, "power_setpoint", 0.8),),
        t_end=30.0,
        initial_wind=11.0,
    )


def fault_scenario(scr: float = 10.0, t_fault: float = 5.0,
                   duration: float = 0.15,
                   r_fault: float | None = None) -> ScenarioSpec:
    """Three-phase shunt fault at the PCC, cleared after ``duration``."""
    if duration <= 0.0:
        raise ConfigError("fault duration must be positive")
    return ScenarioSpec(
        name="fault",
        scr=scr,
        events=(Event(t_fault, "fault_apply", r_fault),
                Event(t_fault + duration, "fault_clear")),
        t_end=12.0,
        initial_wind=11.0,
        record_every=2,
    )


def black_start_scenario() -> ScenarioSpec:
    """Islanded energization: charge the DC link, form the AC bus at 20 s,
    pick up an RL load (0.5 pu, power factor 0.95) at 25 s."""
    return ScenarioSpec(
        name="black_start",
        scr=10.0,
        mode_list=("m-mgfm", "m-sgfm"),
        events=(Event(0.0, "disconnect_grid"),
                Event(0.0, "enable_msc"),
                Event(20.0, "enable_gsc"),
                Event(25.0, "connect_load", {"p": 0.5, "pf": 0.95})),
        t_end=30.0,
        initial="de_energized",
        initial_wind=11.0,
        initial_p_ref=0.5,
    )


BUILTIN_SCENARIOS = {
    "region": region_control_scenario,
    "curtailment": curtailment_scenario,
    "fault": fault_scenario,
    "black_start": black_start_scenario,
}


def build_scenario(name: str, scr: float = 10.0, **kw) -> ScenarioSpec:
    if name not in BUILTIN_SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; available: "
                          f"{sorted(BUILTIN_SCENARIOS)}")
    builder = BUILTIN_SCENARIOS[name]
    if name == "black_start":
        return builder()
    return builder(scr=scr, **kw)


# ------------------------------------------------------------ detectors ---

def detect_stable(series: TimeSeries,
                  window: float = STABLE_WINDOW,
                  p2p_limit: float = STABLE_P2P_LIMIT) -> bool:
    """Bounded states and a quiet active-power tail."""
    if series.diverged:
        return False
    t = series.t
    p = series["p"]
    mask = t >= t[-1] - window
    tail = p[mask]
    if tail.size == 0 or not np.all(np.isfinite(tail)):
        return False
    return float(tail.max() - tail.min()) < p2p_limit


def detect_recovery(series: TimeSeries, t_clear: float,
                    deadline: float = RECOVERY_DEADLINE,
                    tol: float = RECOVERY_TOL) -> bool:
    """Power returns to the pre-fault band within the deadline and stays."""
    if series.diverged:
        return False
    t = series.t
    p = series["p"]
    if len(t) > 2:
        dt_s = float(t[1] - t[0])
        n_win = max(int(round(RECOVERY_SMOOTH / dt_s)), 1)
        if n_win > 1:
            kern = np.ones(n_win) / n_win
            padded = np.pad(p, n_win, mode="edge")
            p = np.convolve(padded, kern, mode="same")[n_win:-n_win]
    pre = p[t < t_clear - 0.2]
    if pre.size == 0:
        return False
    p_ref = float(np.median(pre[-max(pre.size // 10, 1):]))
    after = t >= t_clear
    t_a = t[after]
    p_a = p[after]
    inside = np.abs(p_a - p_ref) <= tol
    # first instant from which the signal stays inside the band
    stay_from = None
    for i in range(len(t_a)):
        if inside[i] and (stay_from is None):
            stay_from = t_a[i]
        elif not inside[i]:
            stay_from = None
    if stay_from is None:
        return False
    return stay_from - t_clear <= deadline


def _fault_clear_time(spec: ScenarioSpec) -> float | None:
    for ev in spec.events:
        if ev.kind == "fault_clear":
            return ev.time
    return None


def make_verdict(spec: ScenarioSpec, series: TimeSeries) -> Verdict:
    t_clear = _fault_clear_time(spec)
    recovered = (detect_recovery(series, t_clear)
                 if t_clear is not None else detect_stable(series))
    i_mag = series["i_mag"]
    v_dc = series["v_dc"]
    finite_i = i_mag[np.isfinite(i_mag)]
    finite_v = v_dc[np.isfinite(v_dc)]
    return Verdict(
        stable=detect_stable(series),
        peak_current=float(finite_i.max()) if finite_i.size else math.inf,
        peak_vdc_dev=(float(np.abs(finite_v - 1.0).max())
                      if finite_v.size else math.inf),
        recovered_post_fault=recovered,
    )


def compare(modes, scenario: ScenarioSpec, sim: SimConfig | None = None,
            params: Params | None = None) -> ScenarioResult:
    """Run a scenario under each mode and classify the outcomes.

    Every mode sees the identical event list; results are keyed and
    ordered by the given mode order.
    """
    result = ScenarioResult(spec=scenario)
    for mode in modes:
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}")
        cfg = controller_for_mode(mode)
        s = sim if sim is not None else SimConfig(
            t_end=scenario.t_end, record_every=scenario.record_every)
        p = params
        if p is not None:
            p = p.replace(grid=GridParams(
                scr=scenario.scr, x_r_ratio=p.grid.x_r_ratio,
                f0=p.grid.f0, v_grid=p.grid.v_grid,
                r_fault=p.grid.r_fault))
        series = run(scenario, cfg, s, params=p)
        result.series[mode] = series
        result.verdicts[mode] = make_verdict(scenario, series)
    return result
