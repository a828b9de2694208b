"""Controller implementations: region logic, pitch, PLL, grid-forming
angle generators, modulation, cascades, and fault-current limiters."""

from .msmc import MsmcOutput, msmc, optimal_power_ref
from .pitch import PitchController
from .pll import PllState, pll_step
from .blocks import FirstOrderBlock, PiController
from .angle import VicAngle, VsmAngle, vic_angle, vsm_angle
from .modulation import modulation_wave
from .cascade import CascadeController, current_saturation, inner_cascade
from .overload import OverloadMitigation, overload_mitigation
from .dispatch import (Measurements, References, ControlCommand,
                       ControllerRuntime, controller_step)

__all__ = [
    "MsmcOutput", "msmc", "optimal_power_ref",
    "PitchController",
    "PllState", "pll_step",
    "FirstOrderBlock", "PiController",
    "VicAngle", "VsmAngle", "vic_angle", "vsm_angle",
    "modulation_wave",
    "CascadeController", "current_saturation", "inner_cascade",
    "OverloadMitigation", "overload_mitigation",
    "Measurements", "References", "ControlCommand",
    "ControllerRuntime", "controller_step",
]
