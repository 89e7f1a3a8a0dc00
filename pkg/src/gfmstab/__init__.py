"""Transient-stability toolkit for grid-forming converter
self-synchronisation strategies on a single-converter infinite-bus system.

Library surface:

- params:     parameter dataclasses and their invariants
- model:      dq-frame network, current setpoints, saturation, current control
- control:    the four synchronisation strategies, PLL, PFR, VAPC, FLC
- simulator:  steady-state initialization, fixed-step simulation, verdicts
- analysis:   design rules, power-angle curves, clearing-time search, sweeps
- scenario:   TOML scenario files
- output:     CSV exports and report formatting
- plots:      matplotlib rendering of trajectories, curves and sweeps
"""

from .params import (CctBounds, ConfigError, ConverterParams, FaultEvent,
                     FlcConfig, GridScenario, PfrConfig, SimConfig,
                     SyncStrategyConfig, IP_CONTROL, STRATEGY_KINDS,
                     VSM_NO_PLL, VSM_PLL, VSM_WASHOUT)
from .model import (Dq, ElectricalState, active_reactive_power, csa_limit,
                    current_controller_derivatives, current_setpoints,
                    electrical_derivatives, network_voltages)
from .control import (FlcState, PllState, SyncDerivatives, SyncState,
                      flc_step, pfr_output, pll_derivatives, sync_derivatives,
                      vapc_feedback)
from .simulator import (InitResult, InitializationError, Trajectory, Verdict,
                        classify, init_steady_state, simulate)
from .analysis import (CctResult, DesignSpec, PdeltaCurve, SweepRow,
                       cct_search, closed_loop_tf_response,
                       damping_ratio_from_d, design_ip, design_vsm, pdelta,
                       sweep)
from .scenario import (LoadedScenario, ScenarioError, apply_overrides,
                       build_scenario, dump_resolved, load_scenario,
                       parse_scenario)
from .output import export_trajectory

__version__ = "0.1.0"

__all__ = [
    "CctBounds", "CctResult", "ConfigError", "ConverterParams", "DesignSpec",
    "Dq", "ElectricalState", "FaultEvent", "FlcConfig", "FlcState",
    "GridScenario", "InitResult", "InitializationError", "LoadedScenario",
    "PdeltaCurve", "PfrConfig", "PllState", "ScenarioError", "SimConfig",
    "SweepRow", "SyncDerivatives", "SyncState", "SyncStrategyConfig",
    "Trajectory", "Verdict",
    "IP_CONTROL", "STRATEGY_KINDS", "VSM_NO_PLL", "VSM_PLL", "VSM_WASHOUT",
    "active_reactive_power", "apply_overrides", "build_scenario",
    "cct_search", "classify", "closed_loop_tf_response", "csa_limit",
    "current_controller_derivatives", "current_setpoints",
    "damping_ratio_from_d", "design_ip", "design_vsm",
    "dump_resolved", "electrical_derivatives", "export_trajectory",
    "flc_step", "init_steady_state", "load_scenario", "network_voltages",
    "parse_scenario", "pdelta", "pfr_output", "pll_derivatives", "simulate",
    "sweep", "sync_derivatives", "vapc_feedback",
]
