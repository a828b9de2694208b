"""gfmsim: desk-scale dynamic simulator of a full-converter wind turbine
generator with grid-following and grid-forming controls.

Five controller modes (one grid-following, four grid-forming variants
differing in which converter regulates the DC link and whether the AC
side uses cascaded loops or direct modulation), built-in study scenarios
(operating-region transition, curtailment, three-phase fault, black
start), and a tuning harness (Monte Carlo sensitivity + bounded SLSQP)
for the angle-generator gains.
"""

__version__ = "0.1.0"

from . import backend
from .params import (Params, TurbineParams, GridParams, ElectricalParams,
                     ControllerConfig, VicParams, VsmParams, LimiterConfig,
                     ConfigError, controller_for_mode, MODES, GFM_MODES)
from .simcore import (SimConfig, Event, TimeSeries, PlantState,
                      NonFiniteState, step, run)
from .scenarios import (ScenarioSpec, ScenarioResult, Verdict,
                        region_control_scenario, curtailment_scenario,
                        fault_scenario, black_start_scenario,
                        build_scenario, compare)
from .tuning import (ObjectiveValues, SensitivityReport, TuneResult,
                     compute_objectives, monte_carlo_sensitivity, optimize,
                     PARAM_BOUNDS)

__all__ = [
    "backend", "__version__",
    "Params", "TurbineParams", "GridParams", "ElectricalParams",
    "ControllerConfig", "VicParams", "VsmParams", "LimiterConfig",
    "ConfigError", "controller_for_mode", "MODES", "GFM_MODES",
    "SimConfig", "Event", "TimeSeries", "PlantState", "NonFiniteState",
    "step", "run",
    "ScenarioSpec", "ScenarioResult", "Verdict",
    "region_control_scenario", "curtailment_scenario", "fault_scenario",
    "black_start_scenario", "build_scenario", "compare",
    "ObjectiveValues", "SensitivityReport", "TuneResult",
    "compute_objectives", "monte_carlo_sensitivity", "optimize",
    "PARAM_BOUNDS",
]
