"""Parameter records for the turbine, electrical network, and controllers.

Everything is per-unit on the machine base (rated apparent power, rated
line voltage, nominal grid frequency).  Construction performs validation
and derives the calibration constants consumed by the simulation kernel:
the analytic rotor-coefficient surface is rescaled so its maximum sits
exactly at (lambda_opt, cp_max), and rated wind speed is solved from the
rated-power condition so that rated wind + rated speed + zero pitch give
exactly 1.0 pu mechanical power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import backend

_K = backend.kernel()
_LP = _K.LAYOUT_P

BETZ_LIMIT = 16.0 / 27.0

# Base coefficients of the analytic Cp surface (exponential form); the
# uncalibrated surface peaks at lambda ~= 8.10 with value ~= 0.480.
CP_COEFFS = (0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068)

MODES = ("gfl", "g-mgfm", "g-sgfm", "m-mgfm", "m-sgfm")
MULTI_LOOP_MODES = ("gfl", "g-mgfm", "m-mgfm")
SINGLE_LOOP_MODES = ("g-sgfm", "m-sgfm")
GFM_MODES = ("g-mgfm", "g-sgfm", "m-mgfm", "m-sgfm")


class ConfigError(ValueError):
    """Raised when a parameter or configuration value fails validation."""


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _cp_base(lam: float, beta: float) -> float:
    c1, c2, c3, c4, c5, c6 = CP_COEFFS
    b = min(max(beta, 0.0), 45.0)
    if lam <= 1e-6:
        return 0.0
    il = 1.0 / (lam + 0.08 * b) - 0.035 / (b ** 3 + 1.0)
    return c1 * (c2 * il - c3 * b - c4) * math.exp(-c5 * il) + c6 * lam


def _cp_base_peak() -> tuple[float, float]:
    """Locate the zero-pitch maximum of the base Cp surface."""
    lams = np.linspace(2.0, 14.0, 4001)
    vals = np.array([_cp_base(l, 0.0) for l in lams])
    i = int(np.argmax(vals))
    # parabolic refinement
    if 0 < i < len(lams) - 1:
        y0, y1, y2 = vals[i - 1], vals[i], vals[i + 1]
        denom = y0 - 2.0 * y1 + y2
        off = 0.5 * (y0 - y2) / denom if denom != 0.0 else 0.0
        lam = lams[i] + off * (lams[1] - lams[0])
    else:
        lam = lams[i]
    return float(lam), float(_cp_base(lam, 0.0))


_BASE_LAM_PEAK, _BASE_CP_PEAK = _cp_base_peak()


@dataclass(frozen=True)
class TurbineParams:
    """Rotor, drivetrain, and pitch-actuator parameters."""

    rho: float = 1.225            # air density, kg/m^3
    radius: float = 120.0         # rotor radius, m
    cp_max: float = 0.489         # peak power coefficient
    lambda_opt: float = 9.0       # tip-speed ratio at the peak
    p_rated: float = 15.0e6       # rated mechanical power, W
    h: float = 5.0                # inertia constant, s
    v_cut_in: float = 3.0         # m/s
    v_inter: float = 6.98         # m/s, region 1.5 / 2 boundary
    v_cut_out: float = 25.0       # m/s
    beta_max: float = 30.0        # deg
    beta_rate: float = 10.0       # deg/s
    tau_beta: float = 0.1         # pitch actuator lag, s
    kp_pitch: float = 100.0       # deg per pu speed error
    ki_pitch: float = 25.0        # deg/s per pu speed error

    def __post_init__(self):
        _check(0.0 < self.cp_max < BETZ_LIMIT,
               f"cp_max must be in (0, {BETZ_LIMIT:.3f}), got {self.cp_max}")
        _check(self.rho > 0.0, "rho must be positive")
        _check(self.radius > 0.0, "radius must be positive")
        _check(self.lambda_opt > 0.0, "lambda_opt must be positive")
        _check(self.p_rated > 0.0, "p_rated must be positive")
        _check(self.h > 0.0, "h must be positive")
        _check(self.v_cut_in < self.v_inter < self.v_rated < self.v_cut_out,
               "wind thresholds must satisfy v_cut_in < v_inter < v_rated "
               f"< v_cut_out (v_rated derived as {self.v_rated:.2f} m/s)")
        _check(self.beta_max > 0.0, "beta_max must be positive")
        _check(self.beta_rate > 0.0, "beta_rate must be positive")
        _check(self.tau_beta > 0.0, "tau_beta must be positive")

    @property
    def swept_coeff(self) -> float:
        """0.5 * rho * pi * R^2 in SI (W per (m/s)^3 per unit Cp)."""
        return 0.5 * self.rho * math.pi * self.radius ** 2

    @property
    def v_rated(self) -> float:
        """Rated wind speed solved from 0.5*rho*pi*R^2*cp_max*v^3 = P_rated."""
        return (self.p_rated / (self.swept_coeff * self.cp_max)) ** (1.0 / 3.0)

    @property
    def omega_base_mech(self) -> float:
        """Mechanical speed base (rad/s): optimal tip speed at rated wind."""
        return self.lambda_opt * self.v_rated / self.radius

    @property
    def omega_min(self) -> float:
        """Region-1.5 minimum speed in pu (optimal speed at v_inter)."""
        return self.v_inter / self.v_rated

    @property
    def k_opt_pu(self) -> float:
        """Optimal-torque-law gain in per-unit (T* = k_opt_pu * omega^2)."""
        k_si = optimal_gain_si(self)
        t_base = self.p_rated / self.omega_base_mech
        return k_si * self.omega_base_mech ** 2 / t_base

    @property
    def cp_scale(self) -> tuple[float, float]:
        """(amplitude, tip-speed) calibration so max Cp = cp_max at lambda_opt."""
        s = _BASE_LAM_PEAK / self.lambda_opt
        a = self.cp_max / _BASE_CP_PEAK
        return a, s


def optimal_gain_si(params: TurbineParams) -> float:
    """Optimal torque gain in SI units (N*m*s^2): T = k * omega_mech^2."""
    return (0.5 * params.rho * math.pi * params.radius ** 2
            * params.cp_max * (params.radius / params.lambda_opt) ** 3)


@dataclass(frozen=True)
class GridParams:
    """Thevenin grid equivalent plus fault description."""

    scr: float = 10.0            # short-circuit ratio; z_g = 1/scr pu
    x_r_ratio: float = 8.0       # grid reactance / resistance
    f0: float = 60.0             # nominal frequency, Hz
    v_grid: float = 1.0          # stiff-source magnitude, pu
    r_fault: float = 0.1         # three-phase shunt fault resistance, pu

    def __post_init__(self):
        _check(self.scr > 0.0, "scr must be positive")
        _check(self.x_r_ratio > 0.0, "x_r_ratio must be positive")
        _check(self.f0 > 0.0, "f0 must be positive")
        _check(self.r_fault > 0.0, "r_fault must be positive")

    @property
    def w_base(self) -> float:
        return 2.0 * math.pi * self.f0

    @property
    def impedance(self) -> tuple[float, float]:
        """(R_g, X_g) in pu."""
        z = 1.0 / self.scr
        r = z / math.sqrt(1.0 + self.x_r_ratio ** 2)
        return r, r * self.x_r_ratio

    @property
    def admittance(self) -> tuple[float, float]:
        """(g, b) of the series grid branch, b < 0 for inductive."""
        r, x = self.impedance
        z2 = r * r + x * x
        return r / z2, -x / z2


@dataclass(frozen=True)
class ElectricalParams:
    """Back-to-back converter, DC link, and AC filter (all pu)."""

    c_dc: float = 0.8            # DC capacitance, pu*s (energy-normalized); sized so the
                                 # DC-link angle loop crosses over near its phase-lead peak
    v_chop_on: float = 1.1       # chopper hysteresis thresholds on v_dc
    v_chop_off: float = 1.05
    r_chop: float = 1.21         # sized to absorb ~1 pu at threshold
    l_f: float = 0.1             # GSC filter inductance
    r_f: float = 0.003           # GSC filter resistance
    c_f: float = 0.05            # PCC shunt capacitance
    tau_msc: float = 0.005       # MSC power-tracking lag, s
    p_msc_max: float = 1.2       # MSC power magnitude limit
    p_charge: float = 0.6        # MSC limit during black-start precharge

    def __post_init__(self):
        _check(self.c_dc > 0.0, "c_dc must be positive")
        _check(self.v_chop_off < self.v_chop_on,
               "v_chop_off must be below v_chop_on")
        _check(self.r_chop > 0.0, "r_chop must be positive")
        _check(self.l_f > 0.0, "l_f must be positive")
        _check(self.r_f >= 0.0, "r_f must be non-negative")
        _check(self.c_f > 0.0, "c_f must be positive")
        _check(self.tau_msc > 0.0, "tau_msc must be positive")


@dataclass(frozen=True)
class VicParams:
    """DC-link-driven angle block coefficients (tracking/inertia/damping)."""

    k_t: float = 41.89
    k_j: float = 0.029
    k_d: float = 3.70

    def __post_init__(self):
        _check(self.k_t >= 0.0, "k_t must be non-negative")
        _check(self.k_j > 0.0, "k_j must be positive")
        _check(self.k_d > 0.0, "k_d must be positive")


@dataclass(frozen=True)
class VsmParams:
    """Swing-equation emulation coefficients."""

    j: float = 0.608
    d: float = 5.080

    def __post_init__(self):
        _check(self.j > 0.0, "vsm j must be positive")
        _check(self.d > 0.0, "vsm d must be positive")


@dataclass(frozen=True)
class LimiterConfig:
    """Fault-current limiting configuration."""

    scheme: str = "current_saturation"   # or "overload_mitigation"
    i_max: float = 1.2
    p_max: float = 1.2
    # Hardware overcurrent trip level as a multiple of i_max.  Converters
    # with an inner current loop fold the modulation back within one
    # switching cycle; modes without a current loop are not protected.
    hw_trip: float = 1.04

    def __post_init__(self):
        _check(self.scheme in ("current_saturation", "overload_mitigation"),
               f"unknown limiter scheme {self.scheme!r}")
        _check(self.i_max > 0.0, "i_max must be positive")
        _check(self.p_max > 0.0, "p_max must be positive")
        _check(self.hw_trip >= 1.0, "hw_trip must be at least 1")


@dataclass(frozen=True)
class ControllerConfig:
    """Mode selection plus every loop gain and limit."""

    mode: str = "g-sgfm"
    vic: VicParams = field(default_factory=VicParams)
    vsm: VsmParams = field(default_factory=VsmParams)
    limiter: LimiterConfig | None = None   # default derived from mode
    pll_bandwidth_hz: float = 40.0
    pll_zeta: float = 0.707
    pll_freq_limit: float = 0.3            # pu clamp on PLL frequency deviation
    current_loop_hz: float = 300.0
    voltage_loop_hz: float = 30.0
    vdc_loop_hz: float = 10.0              # GFL outer DC loop / MSC DC loop
    e_star: float = 1.0                    # AC voltage amplitude reference
    tau_pm: float = 0.02                   # power measurement lag, s
    dw_lim: float = 0.2                    # GFM frequency deviation clamp, pu
    k_ol: float = 0.05                     # overload frequency droop, pu/pu
    tau_ol: float = 0.01                   # overload engagement lag, s
    tau_rec: float = 0.1                   # overload recovery constant, s
    e_max_k: float = 1.4                   # modulation ceiling vs v_dc
    # Output-current feedforward in the AC voltage loop.  The feedforward is
    # low-passed: unit DC gain keeps the delivered power tracking the
    # controller frame, while the lag breaks the fast positive loop formed
    # through the grid admittance and the current-loop delay.
    k_ff: float = 1.0
    tau_ff: float = 0.005
    # First-order lag on the PCC voltage used by the voltage-loop PI.  It
    # rolls the loop gain off below the filter/line LC resonance so the
    # voltage loop cannot excite it.
    tau_vm: float = 0.002
    # Virtual resistance on the filter-capacitor current, subtracted from
    # the converter voltage command.  The current loop feeds the measured
    # PCC voltage forward unfiltered (fast fault disturbance rejection);
    # this term supplies the damping of the filter/line LC resonance that
    # the raw feed-forward would otherwise cancel.
    active_damping: float = 1.2
    # Proportional stiffness of the AC voltage loop, in pu current per pu
    # voltage error.  Sizing the PI against the filter capacitor alone gives
    # a loop that cannot move the terminal voltage against the grid
    # admittance (the effective plant gain collapses from an integrator to
    # ~1/|y_grid|), which starves the outer angle loop of power response.
    # The stiffness term keeps the voltage-loop crossover near
    # voltage_loop_hz even on a stiff grid.
    voltage_loop_stiffness: float = 5.0

    def __post_init__(self):
        _check(self.mode in MODES, f"unknown controller mode {self.mode!r}")
        lim = self.limiter
        if lim is None:
            scheme = ("overload_mitigation" if self.mode in SINGLE_LOOP_MODES
                      else "current_saturation")
            object.__setattr__(self, "limiter", LimiterConfig(scheme=scheme))
        else:
            if self.mode in SINGLE_LOOP_MODES:
                _check(lim.scheme == "overload_mitigation",
                       f"mode {self.mode} requires the overload_mitigation "
                       "limiter scheme")
            else:
                _check(lim.scheme == "current_saturation",
                       f"mode {self.mode} requires the current_saturation "
                       "limiter scheme")
        _check(self.pll_bandwidth_hz > 0.0, "pll_bandwidth_hz must be positive")
        _check(self.tau_pm > 0.0, "tau_pm must be positive")
        _check(self.tau_ol > 0.0, "tau_ol must be positive")
        _check(self.tau_rec > 0.0, "tau_rec must be positive")
        _check(self.dw_lim > 0.0, "dw_lim must be positive")
        _check(0.0 <= self.k_ff <= 1.0, "k_ff must be in [0, 1]")
        _check(self.tau_ff > 0.0, "tau_ff must be positive")
        _check(self.tau_vm > 0.0, "tau_vm must be positive")
        _check(self.active_damping >= 0.0, "active_damping must be non-negative")
        _check(self.voltage_loop_stiffness >= 0.0,
               "voltage_loop_stiffness must be non-negative")


# Per-mode angle-block defaults (used when the caller does not override).
DEFAULT_VIC = {
    "g-mgfm": VicParams(k_t=41.89, k_j=0.029, k_d=3.70),
    "g-sgfm": VicParams(k_t=55.04, k_j=0.053, k_d=7.07),
}
DEFAULT_VSM = {
    "m-mgfm": VsmParams(j=0.608, d=5.080),
    "m-sgfm": VsmParams(j=0.3, d=2.9),
}


def controller_for_mode(mode: str, **overrides) -> ControllerConfig:
    """Controller config with the documented per-mode angle-block defaults."""
    kw = {}
    if mode in DEFAULT_VIC:
        kw["vic"] = DEFAULT_VIC[mode]
    if mode in DEFAULT_VSM:
        kw["vsm"] = DEFAULT_VSM[mode]
    kw.update(overrides)
    return ControllerConfig(mode=mode, **kw)


@dataclass(frozen=True)
class Params:
    """Complete parameter set for one simulation run."""

    turbine: TurbineParams = field(default_factory=TurbineParams)
    grid: GridParams = field(default_factory=GridParams)
    electrical: ElectricalParams = field(default_factory=ElectricalParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)

    def replace(self, **kw) -> "Params":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    def fastest_time_constant(self) -> float:
        """Smallest explicitly configured first-order time constant."""
        c = self.controller
        return min(self.turbine.tau_beta, self.electrical.tau_msc,
                   c.tau_pm, c.tau_ol, c.tau_rec, c.tau_ff, c.tau_vm)

    def pack(self) -> np.ndarray:
        """Flatten into the kernel parameter vector."""
        t, g, e, c = self.turbine, self.grid, self.electrical, self.controller
        pp = np.zeros(_K.N_P)

        def put(name, value):
            pp[_LP[name]] = value

        wb = g.w_base
        put("w_b", wb)
        put("h", t.h)
        put("aero_scale", t.swept_coeff / t.p_rated)
        put("lam_k", t.lambda_opt * t.v_rated)
        c1, c2, c3, c4, c5, c6 = CP_COEFFS
        put("cp_c1", c1)
        put("cp_c2", c2)
        put("cp_c3", c3)
        put("cp_c4", c4)
        put("cp_c5", c5)
        put("cp_c6", c6)
        a, s = t.cp_scale
        put("cp_a", a)
        put("cp_s", s)
        put("beta_max", t.beta_max)
        put("beta_rate", t.beta_rate)
        put("tau_beta", t.tau_beta)
        put("kp_pitch", t.kp_pitch)
        put("ki_pitch", t.ki_pitch)
        put("v_cut_in", t.v_cut_in)
        put("v_inter", t.v_inter)
        put("v_rated", t.v_rated)
        put("v_cut_out", t.v_cut_out)
        put("k_opt", t.k_opt_pu)
        put("w_min", t.omega_min)
        put("tau_msc", e.tau_msc)
        put("p_msc_max", e.p_msc_max)
        wdc = 2.0 * math.pi * c.vdc_loop_hz
        # MSC DC regulator acts on v_dc^2: plant gain 2/C_dc
        put("kp_edc", wdc * e.c_dc / 2.0)
        put("ki_edc", wdc * e.c_dc / 2.0 * (wdc / 10.0))
        put("p_charge", e.p_charge)
        put("c_dc", e.c_dc)
        put("e_chop_on", e.v_chop_on ** 2)
        put("e_chop_off", e.v_chop_off ** 2)
        put("r_chop", e.r_chop)
        put("e_ref", 1.0)
        put("l_f", e.l_f)
        put("r_f", e.r_f)
        put("c_f", e.c_f)
        gg, bg = g.admittance
        put("g_g", gg)
        put("b_g", bg)
        rg, xg = g.impedance
        put("l_g", xg)
        put("r_g", rg)
        put("v_g", g.v_grid)
        wn = 2.0 * math.pi * c.pll_bandwidth_hz
        put("kp_pll", 2.0 * c.pll_zeta * wn)
        put("ki_pll", wn * wn)
        put("pll_lim", c.pll_freq_limit * wb)
        put("kp_vdc", wdc * e.c_dc)
        put("ki_vdc", wdc * e.c_dc * (wdc / 10.0))
        wv = 2.0 * math.pi * c.voltage_loop_hz
        kp_v = wv * e.c_f / wb + c.voltage_loop_stiffness
        put("kp_v", kp_v)
        put("ki_v", kp_v * (wv / 10.0))
        wi = 2.0 * math.pi * c.current_loop_hz
        put("kp_i", wi * e.l_f / wb)
        put("ki_i", wi * e.l_f / wb * (wi / 10.0))
        put("i_max", c.limiter.i_max)
        put("k_t", c.vic.k_t)
        put("k_j", c.vic.k_j)
        put("k_d", c.vic.k_d)
        put("vsm_j", c.vsm.j)
        put("vsm_d", c.vsm.d)
        put("e_star", c.e_star)
        put("tau_pm", c.tau_pm)
        put("dw_lim", c.dw_lim)
        put("p_lim_max", c.limiter.p_max)
        put("k_ol", c.k_ol)
        put("tau_ol", c.tau_ol)
        put("tau_rec", c.tau_rec)
        put("div_lim", 100.0)
        put("e_max_k", c.e_max_k)
        put("k_ff", c.k_ff)
        put("tau_ff", c.tau_ff)
        put("tau_vm", c.tau_vm)
        put("r_ad", c.active_damping)
        put("i_hw", c.limiter.i_max * c.limiter.hw_trip)
        return pp
