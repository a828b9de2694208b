"""Machine-side master control: operating-region selection.

Maps (wind speed, rotor speed, plant power setpoint) to a torque
reference and the speed error handed to the pitch regulator.  Region
boundaries use closed lower bounds and open upper bounds, so exactly one
branch fires for every input.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..params import TurbineParams

REGION_OFF = "off"
REGION_1P5 = "1.5"
REGION_2 = "2"
REGION_3 = "3"
REGION_CURTAIL = "curtail"


@dataclass(frozen=True)
class MsmcOutput:
    """Region-selection result."""

    delta_omega: float   # pu speed error fed to the pitch regulator
    t_e_ref: float       # pu torque reference
    region: str


def msmc(v_w: float, omega_r: float, p_ref_plant: float,
         params: TurbineParams) -> MsmcOutput:
    """Select the operating region and produce torque / pitch references.

    Curtailment takes priority whenever the plant setpoint is below rated;
    otherwise the wind speed selects region 1/1.5/2/3/4.  Regions 1 and 4
    (below cut-in, above cut-out) zero the torque reference.
    """
    w = max(omega_r, 0.1)
    if p_ref_plant < 1.0:
        return MsmcOutput(delta_omega=omega_r - 1.0,
                          t_e_ref=p_ref_plant / w,
                          region=REGION_CURTAIL)
    if v_w < params.v_cut_in:
        return MsmcOutput(0.0, 0.0, REGION_OFF)
    if v_w < params.v_inter:
        return MsmcOutput(delta_omega=omega_r - params.omega_min,
                          t_e_ref=params.k_opt_pu * omega_r * omega_r,
                          region=REGION_1P5)
    if v_w < params.v_rated:
        return MsmcOutput(delta_omega=0.0,
                          t_e_ref=params.k_opt_pu * omega_r * omega_r,
                          region=REGION_2)
    if v_w < params.v_cut_out:
        return MsmcOutput(delta_omega=omega_r - 1.0,
                          t_e_ref=1.0,
                          region=REGION_3)
    return MsmcOutput(0.0, 0.0, REGION_OFF)


def optimal_power_ref(t_e_ref: float, omega_r: float) -> float:
    """Power reference from the torque law: P* = T_e* * omega_r."""
    return t_e_ref * omega_r
