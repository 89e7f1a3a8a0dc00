"""Parameter containers for the converter, grid, fault and controls.

All electrical quantities are per-unit on the converter MVA / system kV base.
Every container validates its own invariants at construction time, so an
instance that exists is a usable one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """A parameter set violates one of its declared constraints."""


# Self-synchronisation strategy identifiers (scenario-file spelling).
VSM_NO_PLL = "vsm_no_pll"
VSM_PLL = "vsm_pll"
VSM_WASHOUT = "vsm_washout"
IP_CONTROL = "ip_control"
STRATEGY_KINDS = (VSM_NO_PLL, VSM_PLL, VSM_WASHOUT, IP_CONTROL)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class ConverterParams:
    """Electrical and control constants of the converter."""

    s_rated: float = 100.0   # MVA apparent-power base
    v_ac_rated: float = 220.0  # kV AC voltage base
    f_nom: float = 50.0      # Hz nominal frequency
    r_c: float = 0.005       # pu series resistance (reactor + transformer)
    x_c: float = 0.15        # pu series reactance
    x_v: float = 0.0         # pu virtual reactance, current-setpoint path only
    i_max: float = 1.2       # pu current limit magnitude
    k_cc_p: float = 1.0027   # pu current-controller proportional gain
    k_cc_i: float = 1074.3   # pu/s current-controller integral gain
    e_m0: float = 1.0057     # pu modulated-voltage magnitude setpoint

    def __post_init__(self):
        _require(self.f_nom > 0, "f_nom must be > 0")
        _require(self.x_c > 0, "x_c must be > 0")
        _require(self.x_cv > 0, "x_cv = x_c + x_v must be > 0")
        _require(self.i_max > 0, "i_max must be > 0")
        _require(self.s_rated > 0, "s_rated must be > 0")

    @property
    def omega_b(self) -> float:
        """Nominal angular frequency, rad/s."""
        return 2.0 * math.pi * self.f_nom

    @property
    def x_cv(self) -> float:
        """Setpoint-calculation reactance: physical plus virtual."""
        return self.x_c + self.x_v


@dataclass(frozen=True)
class FaultEvent:
    """Bolted three-phase fault on the grid branch."""

    t_apply: float = 1.0           # s
    t_clear: float = 1.15          # s
    location_fraction: float = 0.0  # electrical distance from the PCC, 0..1

    def __post_init__(self):
        _require(self.t_apply >= 0.0, "t_apply must be >= 0")
        _require(self.t_clear > self.t_apply, "t_clear must be > t_apply")
        _require(0.0 <= self.location_fraction <= 1.0,
                 "location_fraction must lie in [0, 1]")

    @property
    def duration(self) -> float:
        return self.t_clear - self.t_apply


@dataclass(frozen=True)
class GridScenario:
    """Infinite-bus grid, operating point and fault script."""

    r_g: float = 0.01     # pu branch resistance PCC -> infinite bus
    x_g: float = 0.1      # pu branch reactance
    v_e: float = 1.0      # pu infinite-bus voltage magnitude
    omega_e: float = 1.0  # pu infinite-bus frequency
    p_g0: float = 0.7     # pu active-power setpoint
    v_g0: float = 1.0     # pu target PCC voltage at initialization
    fault: FaultEvent = field(default_factory=FaultEvent)

    def __post_init__(self):
        _require(self.x_g >= 0.0, "x_g must be >= 0")
        _require(self.v_e > 0.0, "v_e must be > 0")
        _require(self.omega_e > 0.0, "omega_e must be > 0")
        _require(self.v_g0 > 0.0, "v_g0 must be > 0")


@dataclass(frozen=True)
class PfrConfig:
    """Explicit primary-frequency-response loop (droop + low-pass + limit)."""

    k_pfr: float = 20.0  # pu proportional gain
    t_pfr: float = 1.0   # s low-pass time constant; 0 = algebraic
    dp_max: float = 1.0  # pu output saturation

    def __post_init__(self):
        _require(self.t_pfr >= 0.0, "t_pfr must be >= 0")
        _require(self.dp_max > 0.0, "dp_max must be > 0")


@dataclass(frozen=True)
class FlcConfig:
    """Fault-triggered frequency limiter (voltage hysteresis + clamp)."""

    dw_max: float = 0.005  # pu band half-width around the pre-fault frequency
    v_a: float = 0.5       # pu detection threshold (limiter arms at v_g <= v_a)
    v_b: float = 0.9       # pu release threshold (limiter drops at v_g > v_b)
    reset_integrator: bool = False  # snap the inertia integrator to the clamp
                                    # value instead of holding it

    def __post_init__(self):
        _require(self.dw_max > 0.0, "dw_max must be > 0")
        _require(self.v_a < self.v_b, "v_a < v_b required")


@dataclass(frozen=True)
class SyncStrategyConfig:
    """One of the four self-synchronisation strategies plus its options."""

    kind: str
    h_gfm: float = 5.0    # s emulated inertia constant
    d_gfm: float = 0.0    # pu damping coefficient (VSM variants)
    k_p: float = 0.0      # pu proportional power gain (IP control only)
    t_wd: float = 0.0     # s washout time constant (washout variant only)
    pfr: PfrConfig = field(default_factory=PfrConfig)
    use_vapc: bool = False
    flc: FlcConfig | None = None
    omega_0: float = 1.0  # pu frequency reference
    # PCC frequency estimator (used by the vsm_pll strategy)
    k_p_pll: float = 3.1831     # pu
    k_i_pll: float = 795.7747   # pu/s
    dw_pll_max: float = 0.1     # pu estimator frequency saturation
    # Feed the PFR droop from the PLL frequency estimate instead of the
    # converter's own frequency (vsm_pll only).
    pfr_uses_pll_freq: bool = False

    def __post_init__(self):
        _require(self.kind in STRATEGY_KINDS,
                 f"unknown strategy kind {self.kind!r}; "
                 f"expected one of {STRATEGY_KINDS}")
        _require(self.h_gfm > 0.0, "h_gfm must be > 0")
        _require(self.d_gfm >= 0.0, "d_gfm must be >= 0")
        if self.kind == VSM_WASHOUT:
            _require(self.t_wd > 0.0, "t_wd must be > 0 for vsm_washout")
        if self.kind == VSM_PLL:
            _require(self.k_p_pll > 0.0 and self.k_i_pll > 0.0,
                     "PLL gains must be > 0")
            _require(self.dw_pll_max > 0.0, "dw_pll_max must be > 0")

    @property
    def has_explicit_pfr(self) -> bool:
        """The vsm_no_pll strategy carries its frequency droop inside d_gfm."""
        return self.kind != VSM_NO_PLL


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration and instability-detection settings."""

    dt: float = 1e-4          # s integration step
    t_end: float | None = None  # s horizon; None = fault clearing + 10 s
    record_stride: int = 10   # keep one sample every N steps
    delta_limit: float = math.pi  # rad excursion treated as loss of synchronism
    settle_band: float = 1e-4     # pu frequency band for the settled check
    settle_window: float = 2.0    # s trailing window for the settled check

    def __post_init__(self):
        _require(self.dt > 0.0, "dt must be > 0")
        _require(self.record_stride >= 1, "record_stride must be >= 1")
        _require(self.delta_limit > 0.0, "delta_limit must be > 0")
        _require(self.settle_band > 0.0, "settle_band must be > 0")
        _require(self.settle_window > 0.0, "settle_window must be > 0")

    def horizon(self, fault: FaultEvent) -> float:
        return self.t_end if self.t_end is not None else fault.t_clear + 10.0


@dataclass(frozen=True)
class CctBounds:
    """Search bounds for critical-clearing-time bisection."""

    t_lo: float = 0.0        # s fault duration known (or assumed) stable
    t_hi: float = 5.0        # s fault duration known (or assumed) unstable
    resolution: float = 0.01  # s reporting quantum

    def __post_init__(self):
        _require(0.0 <= self.t_lo < self.t_hi, "need 0 <= t_lo < t_hi")
        _require(self.resolution > 0.0, "resolution must be > 0")
