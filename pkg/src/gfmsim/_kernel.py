# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Hot simulation kernel.

Single-source Cython "pure Python" module: built as a C extension by
setup.py for speed, but import-able and runnable as plain Python with
identical semantics (the extension, when present, shadows this file).

Everything the per-step loop touches lives in flat float64 arrays so the
compiled code stays allocation-free:

    x   plant state            (X_* indices)
    c   controller state       (C_* indices)
    u   exogenous inputs       (U_* indices, mutated by timeline events)
    pp  parameter vector       (P_* indices)

One simulation step = discrete controller update (trapezoidal blocks,
sample-and-hold voltage command) followed by one fixed-step integration
of the plant ODEs (classic RK4, or trapezoidal update of the linear
electrical block with explicit coupling).

Electrical network convention: all dq quantities live in a global
synchronously rotating frame (nominal frequency), grid Thevenin source at
phasor (1, 0).  Complex admittance y = g + jb acts on v = (vd, vq) as
i = (g*vd - b*vq, g*vq + b*vd).
"""

import cython
import numpy as np

from cython.cimports.libc.math import sin, cos, sqrt, exp, fabs, floor  # noqa: E501  (maps to `math` when uncompiled)


TWO_PI = 6.283185307179586

# ---------------------------------------------------------------- layout ---
# Plant (continuous) state.
X_WR = cython.declare(cython.Py_ssize_t, 0)      # rotor speed, pu
X_BETA = cython.declare(cython.Py_ssize_t, 1)    # pitch angle, deg
X_PMSC = cython.declare(cython.Py_ssize_t, 2)    # machine-side power, pu
X_EDC = cython.declare(cython.Py_ssize_t, 3)     # DC-link voltage squared, pu
X_IFD = cython.declare(cython.Py_ssize_t, 4)     # filter inductor current d
X_IFQ = cython.declare(cython.Py_ssize_t, 5)     # filter inductor current q
X_VCD = cython.declare(cython.Py_ssize_t, 6)     # PCC capacitor voltage d
X_VCQ = cython.declare(cython.Py_ssize_t, 7)     # PCC capacitor voltage q
X_IGD = cython.declare(cython.Py_ssize_t, 8)     # grid line current d
X_IGQ = cython.declare(cython.Py_ssize_t, 9)     # grid line current q
X_N = cython.declare(cython.Py_ssize_t, 10)

# Controller (discrete) state.
C_THETA = cython.declare(cython.Py_ssize_t, 0)   # GFM frame angle (rel. global)
C_BLK_U = cython.declare(cython.Py_ssize_t, 1)   # angle-block input memory
C_BLK_Y = cython.declare(cython.Py_ssize_t, 2)   # angle-block output memory
C_PLL_TH = cython.declare(cython.Py_ssize_t, 3)
C_PLL_XI = cython.declare(cython.Py_ssize_t, 4)
C_PLL_E = cython.declare(cython.Py_ssize_t, 5)
C_VDC_XI = cython.declare(cython.Py_ssize_t, 6)  # GFL DC-voltage PI
C_VDC_E = cython.declare(cython.Py_ssize_t, 7)
C_VD_XI = cython.declare(cython.Py_ssize_t, 8)   # AC voltage loop d
C_VD_E = cython.declare(cython.Py_ssize_t, 9)
C_VQ_XI = cython.declare(cython.Py_ssize_t, 10)
C_VQ_E = cython.declare(cython.Py_ssize_t, 11)
C_ID_XI = cython.declare(cython.Py_ssize_t, 12)  # current loop d
C_ID_E = cython.declare(cython.Py_ssize_t, 13)
C_IQ_XI = cython.declare(cython.Py_ssize_t, 14)
C_IQ_E = cython.declare(cython.Py_ssize_t, 15)
C_MSC_XI = cython.declare(cython.Py_ssize_t, 16)  # machine-side DC PI (M modes)
C_MSC_E = cython.declare(cython.Py_ssize_t, 17)
C_OLS = cython.declare(cython.Py_ssize_t, 18)     # overload amplitude scale
C_OLW = cython.declare(cython.Py_ssize_t, 19)     # overload frequency offset
C_PM = cython.declare(cython.Py_ssize_t, 20)      # filtered output power
C_CHOP = cython.declare(cython.Py_ssize_t, 21)    # chopper hysteresis flag
C_SAT = cython.declare(cython.Py_ssize_t, 22)     # limiter engaged flag
C_PIT_XI = cython.declare(cython.Py_ssize_t, 23)
C_PIT_E = cython.declare(cython.Py_ssize_t, 24)
C_BCMD = cython.declare(cython.Py_ssize_t, 25)    # pitch command, deg
C_ED = cython.declare(cython.Py_ssize_t, 26)      # held converter voltage d
C_EQ = cython.declare(cython.Py_ssize_t, 27)
C_PCMD = cython.declare(cython.Py_ssize_t, 28)    # machine power command
C_CHARGED = cython.declare(cython.Py_ssize_t, 29)  # DC precharge latch
C_WSTAR = cython.declare(cython.Py_ssize_t, 30)   # converter frequency, pu
C_REGION = cython.declare(cython.Py_ssize_t, 31)  # MSMC region code
C_POUT = cython.declare(cython.Py_ssize_t, 32)    # measured PCC active power
C_QOUT = cython.declare(cython.Py_ssize_t, 33)    # measured PCC reactive power
C_FFD = cython.declare(cython.Py_ssize_t, 34)     # filtered io feedforward d
C_FFQ = cython.declare(cython.Py_ssize_t, 35)     # filtered io feedforward q
C_VMD = cython.declare(cython.Py_ssize_t, 36)     # filtered PCC voltage d
C_VMQ = cython.declare(cython.Py_ssize_t, 37)     # filtered PCC voltage q
C_N = cython.declare(cython.Py_ssize_t, 38)

# Exogenous inputs.
U_VW = cython.declare(cython.Py_ssize_t, 0)      # wind speed, m/s
U_PREF = cython.declare(cython.Py_ssize_t, 1)    # plant power setpoint, pu
U_FAULT = cython.declare(cython.Py_ssize_t, 2)   # fault active flag
U_GF = cython.declare(cython.Py_ssize_t, 3)      # fault shunt conductance
U_GRID = cython.declare(cython.Py_ssize_t, 4)    # grid connected flag
U_GSC = cython.declare(cython.Py_ssize_t, 5)     # GSC enabled flag
U_MSC = cython.declare(cython.Py_ssize_t, 6)     # MSC enabled flag
U_LOAD = cython.declare(cython.Py_ssize_t, 7)    # local load connected flag
U_GL = cython.declare(cython.Py_ssize_t, 8)      # load conductance
U_BL = cython.declare(cython.Py_ssize_t, 9)      # load susceptance
U_N = cython.declare(cython.Py_ssize_t, 10)

# Parameters.
P_WB = cython.declare(cython.Py_ssize_t, 0)       # base angular freq, rad/s
P_H = cython.declare(cython.Py_ssize_t, 1)        # inertia constant, s
P_AEROSC = cython.declare(cython.Py_ssize_t, 2)   # aero power scale, pu/(m/s)^3
P_LAMK = cython.declare(cython.Py_ssize_t, 3)     # tip speed = LAMK*wr/vw
P_CP_C1 = cython.declare(cython.Py_ssize_t, 4)
P_CP_C2 = cython.declare(cython.Py_ssize_t, 5)
P_CP_C3 = cython.declare(cython.Py_ssize_t, 6)
P_CP_C4 = cython.declare(cython.Py_ssize_t, 7)
P_CP_C5 = cython.declare(cython.Py_ssize_t, 8)
P_CP_C6 = cython.declare(cython.Py_ssize_t, 9)
P_CP_A = cython.declare(cython.Py_ssize_t, 10)    # Cp amplitude calibration
P_CP_S = cython.declare(cython.Py_ssize_t, 11)    # Cp tip-speed calibration
P_BMAX = cython.declare(cython.Py_ssize_t, 12)
P_BRATE = cython.declare(cython.Py_ssize_t, 13)
P_TAUB = cython.declare(cython.Py_ssize_t, 14)
P_KPP = cython.declare(cython.Py_ssize_t, 15)
P_KIP = cython.declare(cython.Py_ssize_t, 16)
P_VCI = cython.declare(cython.Py_ssize_t, 17)
P_VINTER = cython.declare(cython.Py_ssize_t, 18)
P_VRATED = cython.declare(cython.Py_ssize_t, 19)
P_VCO = cython.declare(cython.Py_ssize_t, 20)
P_KOPT = cython.declare(cython.Py_ssize_t, 21)    # optimal torque gain, pu
P_WMIN = cython.declare(cython.Py_ssize_t, 22)
P_TAUM = cython.declare(cython.Py_ssize_t, 23)    # machine power lag, s
P_PMSCMAX = cython.declare(cython.Py_ssize_t, 24)
P_KPE = cython.declare(cython.Py_ssize_t, 25)     # MSC DC PI (on vdc^2)
P_KIE = cython.declare(cython.Py_ssize_t, 26)
P_PCHG = cython.declare(cython.Py_ssize_t, 27)    # precharge power limit
P_CDC = cython.declare(cython.Py_ssize_t, 28)     # DC capacitance, pu*s
P_ECHON = cython.declare(cython.Py_ssize_t, 29)   # chopper on (vdc^2)
P_ECHOFF = cython.declare(cython.Py_ssize_t, 30)  # chopper off (vdc^2)
P_RCHOP = cython.declare(cython.Py_ssize_t, 31)
P_EREF = cython.declare(cython.Py_ssize_t, 32)    # DC reference (vdc^2)
P_LF = cython.declare(cython.Py_ssize_t, 33)
P_RF = cython.declare(cython.Py_ssize_t, 34)
P_CF = cython.declare(cython.Py_ssize_t, 35)
P_GG = cython.declare(cython.Py_ssize_t, 36)      # grid branch conductance
P_BG = cython.declare(cython.Py_ssize_t, 37)      # grid branch susceptance
P_KPPLL = cython.declare(cython.Py_ssize_t, 38)   # rad/s per pu volt
P_KIPLL = cython.declare(cython.Py_ssize_t, 39)
P_PLLLIM = cython.declare(cython.Py_ssize_t, 40)  # PLL freq clamp, rad/s
P_KPVDC = cython.declare(cython.Py_ssize_t, 41)
P_KIVDC = cython.declare(cython.Py_ssize_t, 42)
P_KPV = cython.declare(cython.Py_ssize_t, 43)
P_KIV = cython.declare(cython.Py_ssize_t, 44)
P_KPI = cython.declare(cython.Py_ssize_t, 45)
P_KII = cython.declare(cython.Py_ssize_t, 46)
P_IMAX = cython.declare(cython.Py_ssize_t, 47)
P_KT = cython.declare(cython.Py_ssize_t, 48)      # DC-link angle block
P_KJ = cython.declare(cython.Py_ssize_t, 49)
P_KD = cython.declare(cython.Py_ssize_t, 50)
P_VJ = cython.declare(cython.Py_ssize_t, 51)      # swing-emulation inertia
P_VD = cython.declare(cython.Py_ssize_t, 52)      # swing-emulation damping
P_ESTAR = cython.declare(cython.Py_ssize_t, 53)   # AC voltage reference
P_TAUPM = cython.declare(cython.Py_ssize_t, 54)   # power measurement lag
P_DWLIM = cython.declare(cython.Py_ssize_t, 55)   # GFM freq deviation clamp, pu
P_PLMAX = cython.declare(cython.Py_ssize_t, 56)   # overload power cap
P_KOL = cython.declare(cython.Py_ssize_t, 57)     # overload freq droop
P_TAUOL = cython.declare(cython.Py_ssize_t, 58)
P_TAUREC = cython.declare(cython.Py_ssize_t, 59)
P_DIVLIM = cython.declare(cython.Py_ssize_t, 60)
P_EMAXK = cython.declare(cython.Py_ssize_t, 61)   # modulation ceiling x vdc
P_KFF = cython.declare(cython.Py_ssize_t, 62)     # output-current feedforward
P_TAUFF = cython.declare(cython.Py_ssize_t, 63)   # feedforward low-pass, s
P_LG = cython.declare(cython.Py_ssize_t, 64)      # grid line inductance, pu
P_RG = cython.declare(cython.Py_ssize_t, 65)      # grid line resistance, pu
P_VG = cython.declare(cython.Py_ssize_t, 66)      # stiff-source magnitude, pu
P_TAUVM = cython.declare(cython.Py_ssize_t, 67)   # voltage measurement lag, s
P_RAD = cython.declare(cython.Py_ssize_t, 68)     # capacitor-current damping, pu
P_IHW = cython.declare(cython.Py_ssize_t, 69)     # hardware overcurrent clamp, pu
P_N = cython.declare(cython.Py_ssize_t, 70)

# Recorded channels.
CH_VDC = cython.declare(cython.Py_ssize_t, 0)
CH_P = cython.declare(cython.Py_ssize_t, 1)
CH_Q = cython.declare(cython.Py_ssize_t, 2)
CH_WR = cython.declare(cython.Py_ssize_t, 3)
CH_BETA = cython.declare(cython.Py_ssize_t, 4)
CH_IMAG = cython.declare(cython.Py_ssize_t, 5)
CH_VT = cython.declare(cython.Py_ssize_t, 6)
CH_F = cython.declare(cython.Py_ssize_t, 7)
CH_PMSC = cython.declare(cython.Py_ssize_t, 8)
CH_CHOP = cython.declare(cython.Py_ssize_t, 9)
CH_SAT = cython.declare(cython.Py_ssize_t, 10)
CH_REGION = cython.declare(cython.Py_ssize_t, 11)
CH_PF = cython.declare(cython.Py_ssize_t, 12)     # filtered output power
CH_N = cython.declare(cython.Py_ssize_t, 13)

# Controller modes.
MODE_GFL = cython.declare(cython.int, 0)
MODE_G_MGFM = cython.declare(cython.int, 1)
MODE_G_SGFM = cython.declare(cython.int, 2)
MODE_M_MGFM = cython.declare(cython.int, 3)
MODE_M_SGFM = cython.declare(cython.int, 4)

# Event kinds.
EV_WIND = cython.declare(cython.int, 0)
EV_PSET = cython.declare(cython.int, 1)
EV_FAULT_ON = cython.declare(cython.int, 2)
EV_FAULT_OFF = cython.declare(cython.int, 3)
EV_GSC_ON = cython.declare(cython.int, 4)
EV_MSC_ON = cython.declare(cython.int, 5)
EV_LOAD_ON = cython.declare(cython.int, 6)
EV_GRID_OFF = cython.declare(cython.int, 7)

# Solvers.
SOLVER_RK4 = cython.declare(cython.int, 0)
SOLVER_SEMI = cython.declare(cython.int, 1)

# MSMC region codes.
REGION_OFF = 0.0
REGION_1P5 = 1.0
REGION_2 = 2.0
REGION_3 = 3.0
REGION_CURTAIL = 4.0

# Name -> index maps for the Python-side engine (the cython.declare names
# above become C globals in the compiled module, so they are re-exported
# here as plain dicts).
LAYOUT_X = {"wr": X_WR, "beta": X_BETA, "p_msc": X_PMSC, "e_dc": X_EDC,
            "i_fd": X_IFD, "i_fq": X_IFQ, "v_cd": X_VCD, "v_cq": X_VCQ,
            "i_gd": X_IGD, "i_gq": X_IGQ}
N_X = X_N
N_C = C_N
N_U = U_N
N_P = P_N
N_CH = CH_N

LAYOUT_C = {
    "theta": C_THETA, "blk_u": C_BLK_U, "blk_y": C_BLK_Y,
    "pll_th": C_PLL_TH, "pll_xi": C_PLL_XI, "pll_e": C_PLL_E,
    "vdc_xi": C_VDC_XI, "vdc_e": C_VDC_E,
    "vd_xi": C_VD_XI, "vd_e": C_VD_E, "vq_xi": C_VQ_XI, "vq_e": C_VQ_E,
    "id_xi": C_ID_XI, "id_e": C_ID_E, "iq_xi": C_IQ_XI, "iq_e": C_IQ_E,
    "msc_xi": C_MSC_XI, "msc_e": C_MSC_E,
    "ol_scale": C_OLS, "ol_dw": C_OLW,
    "p_filt": C_PM, "chopper": C_CHOP, "sat": C_SAT,
    "pitch_xi": C_PIT_XI, "pitch_e": C_PIT_E, "beta_cmd": C_BCMD,
    "e_d": C_ED, "e_q": C_EQ, "p_cmd": C_PCMD, "charged": C_CHARGED,
    "w_star": C_WSTAR, "region": C_REGION, "p_out": C_POUT, "q_out": C_QOUT,
    "ff_d": C_FFD, "ff_q": C_FFQ, "vm_d": C_VMD, "vm_q": C_VMQ,
}

LAYOUT_U = {"v_w": U_VW, "p_ref": U_PREF, "fault": U_FAULT, "g_fault": U_GF,
            "grid": U_GRID, "gsc": U_GSC, "msc": U_MSC, "load": U_LOAD,
            "g_load": U_GL, "b_load": U_BL}

LAYOUT_P = {
    "w_b": P_WB, "h": P_H, "aero_scale": P_AEROSC, "lam_k": P_LAMK,
    "cp_c1": P_CP_C1, "cp_c2": P_CP_C2, "cp_c3": P_CP_C3, "cp_c4": P_CP_C4,
    "cp_c5": P_CP_C5, "cp_c6": P_CP_C6, "cp_a": P_CP_A, "cp_s": P_CP_S,
    "beta_max": P_BMAX, "beta_rate": P_BRATE, "tau_beta": P_TAUB,
    "kp_pitch": P_KPP, "ki_pitch": P_KIP,
    "v_cut_in": P_VCI, "v_inter": P_VINTER, "v_rated": P_VRATED,
    "v_cut_out": P_VCO, "k_opt": P_KOPT, "w_min": P_WMIN,
    "tau_msc": P_TAUM, "p_msc_max": P_PMSCMAX, "kp_edc": P_KPE,
    "ki_edc": P_KIE, "p_charge": P_PCHG,
    "c_dc": P_CDC, "e_chop_on": P_ECHON, "e_chop_off": P_ECHOFF,
    "r_chop": P_RCHOP, "e_ref": P_EREF,
    "l_f": P_LF, "r_f": P_RF, "c_f": P_CF, "g_g": P_GG, "b_g": P_BG,
    "kp_pll": P_KPPLL, "ki_pll": P_KIPLL, "pll_lim": P_PLLLIM,
    "kp_vdc": P_KPVDC, "ki_vdc": P_KIVDC,
    "kp_v": P_KPV, "ki_v": P_KIV, "kp_i": P_KPI, "ki_i": P_KII,
    "i_max": P_IMAX,
    "k_t": P_KT, "k_j": P_KJ, "k_d": P_KD, "vsm_j": P_VJ, "vsm_d": P_VD,
    "e_star": P_ESTAR, "tau_pm": P_TAUPM, "dw_lim": P_DWLIM,
    "p_lim_max": P_PLMAX, "k_ol": P_KOL, "tau_ol": P_TAUOL,
    "tau_rec": P_TAUREC, "div_lim": P_DIVLIM, "e_max_k": P_EMAXK,
    "k_ff": P_KFF, "tau_ff": P_TAUFF,
    "l_g": P_LG, "r_g": P_RG, "v_g": P_VG, "tau_vm": P_TAUVM,
    "r_ad": P_RAD, "i_hw": P_IHW,
}

CHANNELS = ["v_dc", "p", "q", "omega_r", "beta", "i_mag", "v_t", "f",
            "p_msc", "chopper", "sat", "region", "p_filt"]

MODES = {"gfl": MODE_GFL, "g-mgfm": MODE_G_MGFM, "g-sgfm": MODE_G_SGFM,
         "m-mgfm": MODE_M_MGFM, "m-sgfm": MODE_M_SGFM}

EVENT_KINDS = {"wind_step": EV_WIND, "power_setpoint": EV_PSET,
               "fault_apply": EV_FAULT_ON, "fault_clear": EV_FAULT_OFF,
               "enable_gsc": EV_GSC_ON, "enable_msc": EV_MSC_ON,
               "connect_load": EV_LOAD_ON, "disconnect_grid": EV_GRID_OFF}

SOLVERS = {"rk4": SOLVER_RK4, "semi_implicit": SOLVER_SEMI}

IS_COMPILED = cython.compiled


# ------------------------------------------------------------- helpers ----

@cython.cfunc
@cython.inline
def _wrap(th: cython.double) -> cython.double:
    return th - TWO_PI * floor(th / TWO_PI)


@cython.cfunc
@cython.inline
def _clip(v: cython.double, lo: cython.double, hi: cython.double) -> cython.double:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


@cython.cfunc
def _cp(lam: cython.double, beta: cython.double, pp: cython.double[::1]) -> cython.double:
    """Calibrated analytic rotor power coefficient, clamped to [0, Betz]."""
    b: cython.double = beta
    if b < 0.0:
        b = 0.0
    if b > 45.0:
        b = 45.0
    ls: cython.double = lam * pp[P_CP_S]
    if ls < 1e-6:
        return 0.0
    il: cython.double = 1.0 / (ls + 0.08 * b) - 0.035 / (b * b * b + 1.0)
    v: cython.double = pp[P_CP_C1] * (pp[P_CP_C2] * il - pp[P_CP_C3] * b
                                      - pp[P_CP_C4]) * exp(-pp[P_CP_C5] * il) \
        + pp[P_CP_C6] * ls
    v = v * pp[P_CP_A]
    if v < 0.0:
        return 0.0
    if v > 0.5925925925925926:
        return 0.5925925925925926
    return v


def cp_eval(lam: cython.double, beta: cython.double, pp: cython.double[::1]) -> cython.double:
    """Python-visible wrapper around the kernel Cp surface."""
    return _cp(lam, beta, pp)


@cython.cfunc
def _aero_torque(vw: cython.double, wr: cython.double, beta: cython.double,
                 pp: cython.double[::1]) -> cython.double:
    """Aerodynamic torque in pu; zero-wind / zero-speed limits handled."""
    if vw < 1e-3 or wr < 1e-3:
        return 0.0
    lam: cython.double = pp[P_LAMK] * wr / vw
    cpv: cython.double = _cp(lam, beta, pp)
    return pp[P_AEROSC] * cpv * vw * vw * vw / wr


def aero_torque_eval(vw: cython.double, wr: cython.double, beta: cython.double,
                     pp: cython.double[::1]) -> cython.double:
    return _aero_torque(vw, wr, beta, pp)


# ---------------------------------------------------------- derivatives ---

@cython.cfunc
def _deriv(x: cython.double[::1], dx: cython.double[::1], pp: cython.double[::1],
           ed: cython.double, eq: cython.double, pcmd: cython.double,
           bcmd: cython.double, chop: cython.double, vw: cython.double,
           gsum: cython.double, bsum: cython.double,
           grid_on: cython.double,
           gsc_on: cython.double) -> cython.void:
    wr: cython.double = x[X_WR]
    beta: cython.double = x[X_BETA]
    pmsc: cython.double = x[X_PMSC]
    edc: cython.double = x[X_EDC]
    ifd: cython.double = x[X_IFD]
    ifq: cython.double = x[X_IFQ]
    vd: cython.double = x[X_VCD]
    vq: cython.double = x[X_VCQ]
    wb: cython.double = pp[P_WB]

    # drivetrain
    ta: cython.double = _aero_torque(vw, wr, beta, pp)
    wdiv: cython.double = wr
    if wdiv < 0.05:
        wdiv = 0.05
    dx[X_WR] = (ta - pmsc / wdiv) / (2.0 * pp[P_H])

    # pitch actuator: rate-limited first-order lag
    db: cython.double = (bcmd - beta) / pp[P_TAUB]
    dx[X_BETA] = _clip(db, -pp[P_BRATE], pp[P_BRATE])

    # machine-side converter power lag
    dx[X_PMSC] = (pcmd - pmsc) / pp[P_TAUM]

    # DC link energy balance (state is vdc^2)
    pgsc: cython.double = 0.0
    if gsc_on > 0.5:
        pgsc = ed * ifd + eq * ifq
    pch: cython.double = 0.0
    if chop > 0.5 and edc > 0.0:
        pch = edc / pp[P_RCHOP]
    de: cython.double = 2.0 * (pmsc - pgsc - pch) / pp[P_CDC]
    if edc <= 0.0 and de < 0.0:
        de = 0.0
    dx[X_EDC] = de

    # grid-side filter inductor (global synchronous frame)
    if gsc_on > 0.5:
        dx[X_IFD] = (wb / pp[P_LF]) * (ed - vd - pp[P_RF] * ifd) + wb * ifq
        dx[X_IFQ] = (wb / pp[P_LF]) * (eq - vq - pp[P_RF] * ifq) - wb * ifd
    else:
        dx[X_IFD] = -ifd * 1000.0
        dx[X_IFQ] = -ifq * 1000.0

    # grid line inductor (series R-L to the stiff source, global frame)
    igd: cython.double = x[X_IGD]
    igq: cython.double = x[X_IGQ]
    if grid_on > 0.5:
        dx[X_IGD] = (wb / pp[P_LG]) * (vd - pp[P_VG] - pp[P_RG] * igd) + wb * igq
        dx[X_IGQ] = (wb / pp[P_LG]) * (vq - pp[P_RG] * igq) - wb * igd
    else:
        dx[X_IGD] = -igd * 1000.0
        dx[X_IGQ] = -igq * 1000.0
        igd = 0.0
        igq = 0.0

    # PCC capacitor; fault/load shunt branches are quasi-static
    iod: cython.double = gsum * vd - bsum * vq + igd
    ioq: cython.double = gsum * vq + bsum * vd + igq
    dx[X_VCD] = (wb / pp[P_CF]) * (ifd - iod) + wb * vq
    dx[X_VCQ] = (wb / pp[P_CF]) * (ifq - ioq) - wb * vd


# ------------------------------------------------------------ controller --

@cython.cfunc
def _controller(mode: cython.int, x: cython.double[::1], c: cython.double[::1],
                u: cython.double[::1], pp: cython.double[::1],
                dt: cython.double, gsum: cython.double,
                bsum: cython.double) -> cython.void:
    wb: cython.double = pp[P_WB]
    vd: cython.double = x[X_VCD]
    vq: cython.double = x[X_VCQ]
    ifd: cython.double = x[X_IFD]
    ifq: cython.double = x[X_IFQ]
    edc: cython.double = x[X_EDC]
    wr: cython.double = x[X_WR]
    vdc: cython.double = 0.0
    if edc > 0.0:
        vdc = sqrt(edc)

    # measurements at the PCC: quasi-static shunts plus the grid line current
    iod: cython.double = gsum * vd - bsum * vq
    ioq: cython.double = gsum * vq + bsum * vd
    if u[U_GRID] > 0.5:
        iod += x[X_IGD]
        ioq += x[X_IGQ]
    pout: cython.double = vd * iod + vq * ioq
    qout: cython.double = vq * iod - vd * ioq
    c[C_POUT] = pout
    c[C_QOUT] = qout
    c[C_PM] += (dt / pp[P_TAUPM]) * (pout - c[C_PM])
    vt: cython.double = sqrt(vd * vd + vq * vq)

    # chopper hysteresis
    if edc >= pp[P_ECHON]:
        c[C_CHOP] = 1.0
    elif edc <= pp[P_ECHOFF]:
        c[C_CHOP] = 0.0

    # DC precharge latch (startup power limit until first charged)
    if edc >= 0.81:
        c[C_CHARGED] = 1.0

    # ---- machine-side master control: operating-region selection
    vw: cython.double = u[U_VW]
    pref: cython.double = u[U_PREF]
    dw: cython.double = 0.0
    te: cython.double = 0.0
    region: cython.double = REGION_OFF
    force_beta_zero: cython.int = 0
    wdiv: cython.double = wr
    if wdiv < 0.1:
        wdiv = 0.1
    if pref < 1.0:
        region = REGION_CURTAIL
        dw = wr - 1.0
        te = pref / wdiv
    elif vw < pp[P_VCI]:
        region = REGION_OFF
    elif vw < pp[P_VINTER]:
        region = REGION_1P5
        dw = wr - pp[P_WMIN]
        te = pp[P_KOPT] * wr * wr
    elif vw < pp[P_VRATED]:
        region = REGION_2
        dw = 0.0
        te = pp[P_KOPT] * wr * wr
        force_beta_zero = 1
    elif vw < pp[P_VCO]:
        region = REGION_3
        dw = wr - 1.0
        te = 1.0
    else:
        region = REGION_OFF
    c[C_REGION] = region

    # ---- pitch PI (trapezoidal, anti-windup by back-calculation)
    if force_beta_zero == 1:
        c[C_PIT_XI] = 0.0
        c[C_PIT_E] = 0.0
        c[C_BCMD] = 0.0
    else:
        xi: cython.double = c[C_PIT_XI] + 0.5 * pp[P_KIP] * dt * (dw + c[C_PIT_E])
        raw: cython.double = pp[P_KPP] * dw + xi
        bc: cython.double = _clip(raw, 0.0, pp[P_BMAX])
        if bc != raw:
            xi = bc - pp[P_KPP] * dw
        c[C_PIT_XI] = xi
        c[C_PIT_E] = dw
        c[C_BCMD] = bc

    # ---- machine-side converter power command
    pcmd: cython.double = 0.0
    if u[U_MSC] > 0.5:
        if mode == MODE_M_MGFM or mode == MODE_M_SGFM:
            # MSC regulates the DC link (PI on vdc^2)
            eE: cython.double = pp[P_EREF] - edc
            xim: cython.double = c[C_MSC_XI] + 0.5 * pp[P_KIE] * dt * (eE + c[C_MSC_E])
            pcmd = pp[P_KPE] * eE + xim
            pmax: cython.double = pp[P_PMSCMAX]
            if c[C_CHARGED] < 0.5:
                pmax = pp[P_PCHG]
            pcl: cython.double = _clip(pcmd, -pp[P_PMSCMAX], pmax)
            if pcl != pcmd:
                xim = pcl - pp[P_KPE] * eE
                pcmd = pcl
            c[C_MSC_XI] = xim
            c[C_MSC_E] = eE
        else:
            # torque control from the region logic
            pcmd = _clip(te * wr, -pp[P_PMSCMAX], pp[P_PMSCMAX])
    else:
        c[C_MSC_XI] = 0.0
        c[C_MSC_E] = 0.0
    c[C_PCMD] = pcmd

    # ---- grid-side converter
    ed: cython.double = 0.0
    eq: cython.double = 0.0
    wstar: cython.double = 1.0
    sat: cython.double = 0.0

    if u[U_GSC] < 0.5:
        # converter blocked: keep loop states cleared for a clean start
        c[C_THETA] = 0.0
        c[C_BLK_U] = 0.0
        c[C_BLK_Y] = 0.0
        c[C_PLL_TH] = 0.0
        c[C_PLL_XI] = 0.0
        c[C_PLL_E] = 0.0
        c[C_VDC_XI] = 0.0
        c[C_VDC_E] = 0.0
        c[C_VD_XI] = 0.0
        c[C_VD_E] = 0.0
        c[C_VQ_XI] = 0.0
        c[C_VQ_E] = 0.0
        c[C_ID_XI] = 0.0
        c[C_ID_E] = 0.0
        c[C_IQ_XI] = 0.0
        c[C_IQ_E] = 0.0
        c[C_FFD] = 0.0
        c[C_FFQ] = 0.0
        c[C_VMD] = x[X_VCD]
        c[C_VMQ] = x[X_VCQ]
        c[C_OLS] = 1.0
        c[C_OLW] = 0.0
        c[C_ED] = 0.0
        c[C_EQ] = 0.0
        c[C_WSTAR] = 1.0
        c[C_SAT] = 0.0
        return

    th: cython.double
    sn: cython.double
    cs: cython.double
    idref: cython.double = 0.0
    iqref: cython.double = 0.0
    mag: cython.double
    scale: cython.double
    multi_loop: cython.int = 0

    if mode == MODE_GFL:
        # synchronous-reference-frame PLL
        th = c[C_PLL_TH]
        sn = sin(th)
        cs = cos(th)
        vdp: cython.double = vd * cs + vq * sn
        vqp: cython.double = -vd * sn + vq * cs
        c[C_VMD] += (dt / pp[P_TAUVM]) * (vdp - c[C_VMD])
        c[C_VMQ] += (dt / pp[P_TAUVM]) * (vqp - c[C_VMQ])
        xip: cython.double = c[C_PLL_XI] + 0.5 * pp[P_KIPLL] * dt * (vqp + c[C_PLL_E])
        xip = _clip(xip, -pp[P_PLLLIM], pp[P_PLLLIM])
        dwp: cython.double = _clip(pp[P_KPPLL] * vqp + xip,
                                   -pp[P_PLLLIM], pp[P_PLLLIM])
        c[C_PLL_XI] = xip
        c[C_PLL_E] = vqp
        c[C_PLL_TH] = _wrap(th + dt * dwp)
        wstar = 1.0 + dwp / wb

        # outer DC-voltage PI -> d-axis current reference
        edcv: cython.double = vdc - 1.0
        xiv: cython.double = c[C_VDC_XI] + 0.5 * pp[P_KIVDC] * dt * (edcv + c[C_VDC_E])
        vff: cython.double = vt
        if vff < 0.5:
            vff = 0.5
        idref = pp[P_KPVDC] * edcv + xiv + x[X_PMSC] / vff
        iqref = 0.0
        c[C_VDC_E] = edcv

        # current reference saturation (magnitude clamp, angle preserved)
        mag = sqrt(idref * idref + iqref * iqref)
        if mag > pp[P_IMAX]:
            scale = pp[P_IMAX] / mag
            idref *= scale
            iqref *= scale
            sat = 1.0
            xiv = idref - pp[P_KPVDC] * edcv - x[X_PMSC] / vff
        c[C_VDC_XI] = xiv
        multi_loop = 1

    else:
        # grid-forming angle generation
        e_in: cython.double
        b1: cython.double
        b0: cython.double
        a1: cython.double
        a0: cython.double
        if mode == MODE_G_MGFM or mode == MODE_G_SGFM:
            # DC-link-driven angle (tracking/inertia/damping block on vdc^2
            # error); deviation sign chosen so the power-angle loop is
            # negative feedback with export-positive power measurement.
            e_in = pp[P_EREF] - edc
            b1 = 1.0
            b0 = pp[P_KT]
            a1 = pp[P_KJ]
            a0 = pp[P_KD]
        else:
            # swing-equation emulation on the power error
            e_in = te * wr - c[C_PM]
            b1 = 0.0
            b0 = 1.0
            a1 = pp[P_VJ]
            a0 = pp[P_VD]
        n0: cython.double = 2.0 * b1 / dt + b0
        n1: cython.double = b0 - 2.0 * b1 / dt
        d0: cython.double = 2.0 * a1 / dt + a0
        d1: cython.double = a0 - 2.0 * a1 / dt
        y: cython.double = (n0 * e_in + n1 * c[C_BLK_U] - d1 * c[C_BLK_Y]) / d0
        # block output is a rad/s frequency deviation; normalize to pu and
        # flip sign for the export-positive measurement convention
        dwg: cython.double
        if mode == MODE_G_MGFM or mode == MODE_G_SGFM:
            dwg = -y / wb
        else:
            dwg = y / wb
        dwc: cython.double = _clip(dwg, -pp[P_DWLIM], pp[P_DWLIM])
        if dwc != dwg:
            # keep the block memory consistent with the clamped output
            if mode == MODE_G_MGFM or mode == MODE_G_SGFM:
                c[C_BLK_Y] = -dwc * wb
            else:
                c[C_BLK_Y] = dwc * wb
        else:
            c[C_BLK_Y] = y
        c[C_BLK_U] = e_in

        if mode == MODE_G_SGFM or mode == MODE_M_SGFM:
            # overload mitigation (single-loop modes only)
            pm: cython.double = c[C_PM]
            if pm > pp[P_PLMAX]:
                st: cython.double = pp[P_PLMAX] / pm
                if st < 0.3:
                    st = 0.3
                c[C_OLS] += (dt / pp[P_TAUOL]) * (st - c[C_OLS])
                c[C_OLW] += (dt / pp[P_TAUOL]) * (-pp[P_KOL] * (pm - pp[P_PLMAX]) - c[C_OLW])
                sat = 1.0
            else:
                c[C_OLS] += (dt / pp[P_TAUREC]) * (1.0 - c[C_OLS])
                c[C_OLW] += (dt / pp[P_TAUREC]) * (0.0 - c[C_OLW])
            dwc += c[C_OLW]

        th = _wrap(c[C_THETA] + dt * dwc * wb)
        c[C_THETA] = th
        wstar = 1.0 + dwc

        if mode == MODE_G_SGFM or mode == MODE_M_SGFM:
            # single-loop: amplitude reference straight to the modulator
            eeff: cython.double = pp[P_ESTAR] * c[C_OLS]
            sn = sin(th)
            cs = cos(th)
            ed = eeff * cs
            eq = eeff * sn
            multi_loop = 0
        else:
            # multi-loop: AC voltage PI -> saturated current reference
            sn = sin(th)
            cs = cos(th)
            vdc_c: cython.double = vd * cs + vq * sn
            vqc: cython.double = -vd * sn + vq * cs
            iodc: cython.double = iod * cs + ioq * sn
            ioqc: cython.double = -iod * sn + ioq * cs
            # low-passed voltage measurement: rolls the loop gain off below
            # the filter/line LC resonance while keeping the low-frequency
            # stiffness of the PI
            c[C_VMD] += (dt / pp[P_TAUVM]) * (vdc_c - c[C_VMD])
            c[C_VMQ] += (dt / pp[P_TAUVM]) * (vqc - c[C_VMQ])
            evd: cython.double = pp[P_ESTAR] - c[C_VMD]
            evq: cython.double = 0.0 - c[C_VMQ]
            # low-passed output-current feedforward: unit DC gain keeps the
            # power flow tracking the frame, the lag breaks the fast positive
            # loop through the grid admittance and the current-loop delay
            c[C_FFD] += (dt / pp[P_TAUFF]) * (iodc - c[C_FFD])
            c[C_FFQ] += (dt / pp[P_TAUFF]) * (ioqc - c[C_FFQ])
            ffd: cython.double = pp[P_KFF] * c[C_FFD]
            ffq: cython.double = pp[P_KFF] * c[C_FFQ]
            xvd: cython.double = c[C_VD_XI] + 0.5 * pp[P_KIV] * dt * (evd + c[C_VD_E])
            xvq: cython.double = c[C_VQ_XI] + 0.5 * pp[P_KIV] * dt * (evq + c[C_VQ_E])
            idref = pp[P_KPV] * evd + xvd + ffd
            iqref = pp[P_KPV] * evq + xvq + ffq
            mag = sqrt(idref * idref + iqref * iqref)
            if mag > pp[P_IMAX]:
                scale = pp[P_IMAX] / mag
                idref *= scale
                iqref *= scale
                sat = 1.0
                xvd = idref - pp[P_KPV] * evd - ffd
                xvq = iqref - pp[P_KPV] * evq - ffq
            c[C_VD_XI] = xvd
            c[C_VD_E] = evd
            c[C_VQ_XI] = xvq
            c[C_VQ_E] = evq
            multi_loop = 1

    if multi_loop == 1:
        # inner current PI with voltage feed-forward and cross decoupling,
        # in the controller frame at angle th (PLL or grid-forming)
        vdf: cython.double = vd * cs + vq * sn
        vqf: cython.double = -vd * sn + vq * cs
        idf: cython.double = ifd * cs + ifq * sn
        iqf: cython.double = -ifd * sn + ifq * cs
        eid: cython.double = idref - idf
        eiq: cython.double = iqref - iqf
        xid: cython.double = c[C_ID_XI] + 0.5 * pp[P_KII] * dt * (eid + c[C_ID_E])
        xiq: cython.double = c[C_IQ_XI] + 0.5 * pp[P_KII] * dt * (eiq + c[C_IQ_E])
        # raw voltage feed-forward keeps fault-voltage disturbance rejection
        # fast (the physical current cannot overshoot the reference clamp by
        # much); the capacitor-current term is a virtual resistance that
        # damps the filter/line LC resonance the raw feed-forward would
        # otherwise drive with unity positive feedback
        icdc: cython.double = (ifd - iod) * cs + (ifq - ioq) * sn
        icqc: cython.double = -(ifd - iod) * sn + (ifq - ioq) * cs
        ffvd: cython.double = vdf - pp[P_RAD] * icdc
        ffvq: cython.double = vqf - pp[P_RAD] * icqc
        ud: cython.double = ffvd - pp[P_LF] * iqf + pp[P_KPI] * eid + xid
        uq: cython.double = ffvq + pp[P_LF] * idf + pp[P_KPI] * eiq + xiq
        # modulation ceiling tied to the available DC voltage
        vlim: cython.double = vdc
        if vlim < 0.05:
            vlim = 0.05
        umax: cython.double = pp[P_EMAXK] * vlim
        umag: cython.double = sqrt(ud * ud + uq * uq)
        if umag > umax:
            scl: cython.double = umax / umag
            ud *= scl
            uq *= scl
            xid = ud - ffvd + pp[P_LF] * iqf - pp[P_KPI] * eid
            xiq = uq - ffvq - pp[P_LF] * idf - pp[P_KPI] * eiq
        c[C_ID_XI] = xid
        c[C_ID_E] = eid
        c[C_IQ_XI] = xiq
        c[C_IQ_E] = eiq
        ed = ud * cs - uq * sn
        eq = ud * sn + uq * cs
    else:
        # single-loop modes: ceiling applies to the modulation amplitude
        vlim2: cython.double = vdc
        if vlim2 < 0.05:
            vlim2 = 0.05
        umax2: cython.double = pp[P_EMAXK] * vlim2
        umag2: cython.double = sqrt(ed * ed + eq * eq)
        if umag2 > umax2:
            scl2: cython.double = umax2 / umag2
            ed *= scl2
            eq *= scl2

    c[C_ED] = ed
    c[C_EQ] = eq
    c[C_WSTAR] = wstar
    c[C_SAT] = sat


# ----------------------------------------------------------- integrators --

@cython.cfunc
def _rk4_step(x: cython.double[::1], pp: cython.double[::1],
              k1: cython.double[::1], k2: cython.double[::1],
              k3: cython.double[::1], k4: cython.double[::1],
              xt: cython.double[::1], dt: cython.double,
              ed: cython.double, eq: cython.double, pcmd: cython.double,
              bcmd: cython.double, chop: cython.double, vw: cython.double,
              gsum: cython.double, bsum: cython.double,
              grid_on: cython.double,
              gsc_on: cython.double) -> cython.void:
    j: cython.Py_ssize_t
    _deriv(x, k1, pp, ed, eq, pcmd, bcmd, chop, vw, gsum, bsum,
           grid_on, gsc_on)
    for j in range(X_N):
        xt[j] = x[j] + 0.5 * dt * k1[j]
    _deriv(xt, k2, pp, ed, eq, pcmd, bcmd, chop, vw, gsum, bsum,
           grid_on, gsc_on)
    for j in range(X_N):
        xt[j] = x[j] + 0.5 * dt * k2[j]
    _deriv(xt, k3, pp, ed, eq, pcmd, bcmd, chop, vw, gsum, bsum,
           grid_on, gsc_on)
    for j in range(X_N):
        xt[j] = x[j] + dt * k3[j]
    _deriv(xt, k4, pp, ed, eq, pcmd, bcmd, chop, vw, gsum, bsum,
           grid_on, gsc_on)
    for j in range(X_N):
        x[j] = x[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    if x[X_EDC] < 0.0:
        x[X_EDC] = 0.0
    if x[X_BETA] < 0.0:
        x[X_BETA] = 0.0


@cython.cfunc
def _semi_step(x: cython.double[::1], pp: cython.double[::1],
               m1: cython.double[:, ::1], m2: cython.double[:, ::1],
               b0: cython.double[::1], ye: cython.double[::1],
               dt: cython.double,
               ed: cython.double, eq: cython.double, pcmd: cython.double,
               bcmd: cython.double, chop: cython.double, vw: cython.double,
               gsc_on: cython.double) -> cython.void:
    """Trapezoidal update of the linear electrical block, explicit (Heun on
    the mechanical/DC states) coupling with held converter command."""
    i: cython.Py_ssize_t
    j: cython.Py_ssize_t
    wb: cython.double = pp[P_WB]
    bvec0: cython.double = b0[0]
    bvec1: cython.double = b0[1]
    bvec2: cython.double = b0[2]
    bvec3: cython.double = b0[3]
    bvec4: cython.double = b0[4]
    bvec5: cython.double = b0[5]
    if gsc_on > 0.5:
        bvec0 += (wb / pp[P_LF]) * ed
        bvec1 += (wb / pp[P_LF]) * eq

    ifd0: cython.double = x[X_IFD]
    ifq0: cython.double = x[X_IFQ]
    for i in range(6):
        ye[i] = (m1[i, 0] * x[X_IFD] + m1[i, 1] * x[X_IFQ]
                 + m1[i, 2] * x[X_VCD] + m1[i, 3] * x[X_VCQ]
                 + m1[i, 4] * x[X_IGD] + m1[i, 5] * x[X_IGQ]
                 + m2[i, 0] * bvec0 + m2[i, 1] * bvec1
                 + m2[i, 2] * bvec2 + m2[i, 3] * bvec3
                 + m2[i, 4] * bvec4 + m2[i, 5] * bvec5)

    # mechanical / DC states: Heun with trapezoid-averaged converter power
    wr: cython.double = x[X_WR]
    beta: cython.double = x[X_BETA]
    pmsc: cython.double = x[X_PMSC]
    edc: cython.double = x[X_EDC]

    pgsc: cython.double = 0.0
    if gsc_on > 0.5:
        pgsc = 0.5 * (ed * (ifd0 + ye[0]) + eq * (ifq0 + ye[1]))

    ta1: cython.double = _aero_torque(vw, wr, beta, pp)
    wd1: cython.double = wr
    if wd1 < 0.05:
        wd1 = 0.05
    dwr1: cython.double = (ta1 - pmsc / wd1) / (2.0 * pp[P_H])
    db1: cython.double = _clip((bcmd - beta) / pp[P_TAUB], -pp[P_BRATE], pp[P_BRATE])
    dpm1: cython.double = (pcmd - pmsc) / pp[P_TAUM]

    wr2: cython.double = wr + dt * dwr1
    beta2: cython.double = beta + dt * db1
    pmsc2: cython.double = pmsc + dt * dpm1
    ta2: cython.double = _aero_torque(vw, wr2, beta2, pp)
    wd2: cython.double = wr2
    if wd2 < 0.05:
        wd2 = 0.05
    dwr2: cython.double = (ta2 - pmsc2 / wd2) / (2.0 * pp[P_H])
    db2: cython.double = _clip((bcmd - beta2) / pp[P_TAUB], -pp[P_BRATE], pp[P_BRATE])
    dpm2: cython.double = (pcmd - pmsc2) / pp[P_TAUM]

    x[X_WR] = wr + 0.5 * dt * (dwr1 + dwr2)
    x[X_BETA] = beta + 0.5 * dt * (db1 + db2)
    x[X_PMSC] = pmsc + 0.5 * dt * (dpm1 + dpm2)

    pmsc_avg: cython.double = 0.5 * (pmsc + x[X_PMSC])
    pch: cython.double = 0.0
    if chop > 0.5 and edc > 0.0:
        pch = edc / pp[P_RCHOP]
    de: cython.double = 2.0 * (pmsc_avg - pgsc - pch) / pp[P_CDC]
    edc += dt * de
    if edc < 0.0:
        edc = 0.0
    x[X_EDC] = edc

    x[X_IFD] = ye[0]
    x[X_IFQ] = ye[1]
    x[X_VCD] = ye[2]
    x[X_VCQ] = ye[3]
    x[X_IGD] = ye[4]
    x[X_IGQ] = ye[5]
    if x[X_BETA] < 0.0:
        x[X_BETA] = 0.0


# --------------------------------------------------------------- run loop --

def run_loop(mode: cython.int, solver: cython.int,
             x: cython.double[::1], c: cython.double[::1],
             u: cython.double[::1], pp: cython.double[::1],
             dt: cython.double, n_steps: cython.Py_ssize_t,
             rec_every: cython.Py_ssize_t, t0: cython.double,
             ev_t: cython.double[::1], ev_k: cython.long[::1],
             ev_v: cython.double[::1], ev_v2: cython.double[::1],
             si_m1: cython.double[:, :, ::1], si_m2: cython.double[:, :, ::1],
             si_b0: cython.double[:, ::1],
             out: cython.double[:, ::1], out_t: cython.double[::1]) -> cython.int:
    """Advance the coupled plant+controller by n_steps; record decimated
    channels; apply timeline events at step boundaries.  Returns 0, or 1 if
    the run diverged (state frozen from that point on)."""
    n_ev: cython.Py_ssize_t = ev_t.shape[0]
    ie: cython.Py_ssize_t = 0
    k: cython.Py_ssize_t
    j: cython.Py_ssize_t
    irec: cython.Py_ssize_t = 0
    n_rec: cython.Py_ssize_t = out.shape[0]
    diverged: cython.int = 0
    kind: cython.long

    k1 = np.empty(X_N)
    k2 = np.empty(X_N)
    k3 = np.empty(X_N)
    k4 = np.empty(X_N)
    xt = np.empty(X_N)
    ye = np.empty(6)
    k1v: cython.double[::1] = k1
    k2v: cython.double[::1] = k2
    k3v: cython.double[::1] = k3
    k4v: cython.double[::1] = k4
    xtv: cython.double[::1] = xt
    yev: cython.double[::1] = ye

    gsum: cython.double = 0.0
    bsum: cython.double = 0.0
    topo: cython.Py_ssize_t = 0
    t: cython.double
    vdc: cython.double
    ifmag: cython.double
    ifscl: cython.double

    for k in range(n_steps + 1):
        t = t0 + k * dt

        # timeline events snap to the next step boundary
        while ie < n_ev and ev_t[ie] <= t + 1e-12:
            kind = ev_k[ie]
            if kind == EV_WIND:
                u[U_VW] = ev_v[ie]
            elif kind == EV_PSET:
                u[U_PREF] = ev_v[ie]
            elif kind == EV_FAULT_ON:
                u[U_FAULT] = 1.0
                u[U_GF] = ev_v[ie]
            elif kind == EV_FAULT_OFF:
                u[U_FAULT] = 0.0
            elif kind == EV_GSC_ON:
                u[U_GSC] = 1.0
            elif kind == EV_MSC_ON:
                u[U_MSC] = 1.0
            elif kind == EV_LOAD_ON:
                u[U_LOAD] = 1.0
                u[U_GL] = ev_v[ie]
                u[U_BL] = ev_v2[ie]
            elif kind == EV_GRID_OFF:
                u[U_GRID] = 0.0
            ie += 1

        # shunt admittance seen from the PCC (quasi-static fault/load
        # branches; the grid line is a dynamic state)
        gsum = 0.0
        bsum = 0.0
        topo = 0
        if u[U_GRID] > 0.5:
            topo += 8
        if u[U_FAULT] > 0.5:
            gsum += u[U_GF]
            topo += 4
        if u[U_LOAD] > 0.5:
            gsum += u[U_GL]
            bsum += u[U_BL]
            topo += 2
        if u[U_GSC] > 0.5:
            topo += 1

        if diverged == 0:
            _controller(mode, x, c, u, pp, dt, gsum, bsum)

        if k % rec_every == 0 and irec < n_rec:
            out_t[irec] = t
            vdc = 0.0
            if x[X_EDC] > 0.0:
                vdc = sqrt(x[X_EDC])
            out[irec, CH_VDC] = vdc
            out[irec, CH_P] = c[C_POUT]
            out[irec, CH_Q] = c[C_QOUT]
            out[irec, CH_WR] = x[X_WR]
            out[irec, CH_BETA] = x[X_BETA]
            out[irec, CH_IMAG] = sqrt(x[X_IFD] * x[X_IFD] + x[X_IFQ] * x[X_IFQ])
            out[irec, CH_VT] = sqrt(x[X_VCD] * x[X_VCD] + x[X_VCQ] * x[X_VCQ])
            out[irec, CH_F] = c[C_WSTAR]
            out[irec, CH_PMSC] = x[X_PMSC]
            out[irec, CH_CHOP] = c[C_CHOP]
            out[irec, CH_SAT] = c[C_SAT]
            out[irec, CH_REGION] = c[C_REGION]
            out[irec, CH_PF] = c[C_PM]
            irec += 1

        if k == n_steps:
            break

        if diverged == 0:
            if solver == SOLVER_RK4:
                _rk4_step(x, pp, k1v, k2v, k3v, k4v, xtv, dt,
                          c[C_ED], c[C_EQ], c[C_PCMD], c[C_BCMD], c[C_CHOP],
                          u[U_VW], gsum, bsum, u[U_GRID], u[U_GSC])
            else:
                _semi_step(x, pp, si_m1[topo], si_m2[topo], si_b0[topo], yev,
                           dt, c[C_ED], c[C_EQ], c[C_PCMD], c[C_BCMD],
                           c[C_CHOP], u[U_VW], u[U_GSC])

            # per-switching-cycle overcurrent protection: converters with an
            # inner current loop fold the modulation back as soon as the
            # measured current crosses the hardware trip level, which at this
            # timescale acts as an instantaneous clamp.  Single-loop modes
            # have no such path and expose the natural fault current.
            if mode == MODE_GFL or mode == MODE_G_MGFM or mode == MODE_M_MGFM:
                ifmag = sqrt(x[X_IFD] * x[X_IFD] + x[X_IFQ] * x[X_IFQ])
                if ifmag > pp[P_IHW]:
                    ifscl = pp[P_IHW] / ifmag
                    x[X_IFD] *= ifscl
                    x[X_IFQ] *= ifscl

            for j in range(X_N):
                if x[j] != x[j] or fabs(x[j]) > pp[P_DIVLIM]:
                    diverged = 1

    return diverged


def plant_step(solver: cython.int, x: cython.double[::1], pp: cython.double[::1],
               dt: cython.double,
               ed: cython.double, eq: cython.double, pcmd: cython.double,
               bcmd: cython.double, chop: cython.double, vw: cython.double,
               gsum: cython.double, bsum: cython.double,
               grid_on: cython.double,
               gsc_on: cython.double,
               m1: cython.double[:, ::1], m2: cython.double[:, ::1],
               b0: cython.double[::1]) -> cython.int:
    """Single plant integration step with held commands (Python-facing)."""
    k1 = np.empty(X_N)
    k2 = np.empty(X_N)
    k3 = np.empty(X_N)
    k4 = np.empty(X_N)
    xt = np.empty(X_N)
    ye = np.empty(6)
    if solver == SOLVER_RK4:
        _rk4_step(x, pp, k1, k2, k3, k4, xt, dt, ed, eq, pcmd, bcmd, chop,
                  vw, gsum, bsum, grid_on, gsc_on)
    else:
        _semi_step(x, pp, m1, m2, b0, ye, dt, ed, eq, pcmd, bcmd, chop,
                   vw, gsc_on)
    j: cython.Py_ssize_t
    for j in range(X_N):
        if x[j] != x[j] or fabs(x[j]) > pp[P_DIVLIM]:
            return 1
    return 0
