"""Closed-form design rules, power-angle curves and clearing-time search.

The design rules come from the small-signal closed loop between the power
setpoint and the injection, a second-order system with

    omega_n = sqrt(omega_b / (2 H x_c)),   zeta = D / (4 H omega_n)

and the proven small-signal equivalence D = 2 H K_P omega_b / x_c between
the damped VSM and the integral-proportional controller.

Power-angle curves neglect series resistances and assume a constant
modulated-voltage magnitude.  With the radial current limiter active the
injection follows the reduced characteristic

    p = e v sin(d) * i_max / |e - v exp(-jd)|        (saturated)

while the unsaturated virtual power seen by a VAPC-fed strategy follows

    p = e v sin(d) / (x_c + x_g / K_CL(d))           (virtual)

with K_CL the unsaturated-to-limited reference ratio along the
quasi-static locus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .params import (CctBounds, ConfigError, ConverterParams, FlcConfig,
                     GridScenario, FaultEvent, SimConfig, SyncStrategyConfig)
from .simulator import HORIZON_UNDECIDED, init_steady_state, simulate

UNSATURATED = "unsaturated"
SATURATED = "saturated"
VAPC_VIRTUAL = "vapc_virtual"
PDELTA_MODES = (UNSATURATED, SATURATED, VAPC_VIRTUAL)

SWEEP_AXES = ("kind", "t_wd", "d_gfm", "use_vapc", "flc", "enhancement")


@dataclass(frozen=True)
class DesignSpec:
    """Inputs of the second-order design rules."""

    h_gfm: float          # s
    zeta: float           # damping ratio
    x_c: float = 0.15     # pu
    omega_b: float = 100.0 * math.pi  # rad/s

    def __post_init__(self):
        if min(self.h_gfm, self.x_c, self.omega_b) <= 0:
            raise ConfigError("h_gfm, x_c and omega_b must be > 0")
        if self.zeta < 0:
            raise ConfigError("zeta must be >= 0")


def natural_frequency(spec: DesignSpec) -> float:
    return math.sqrt(spec.omega_b / (2.0 * spec.h_gfm * spec.x_c))


def design_vsm(spec: DesignSpec) -> dict:
    """Damping coefficient and natural frequency for the VSM variants."""
    omega_n = natural_frequency(spec)
    return {"d_gfm": 4.0 * spec.h_gfm * spec.zeta * omega_n,
            "omega_n": omega_n}


def design_ip(spec: DesignSpec) -> dict:
    """Proportional power gain and natural frequency for IP control."""
    omega_n = natural_frequency(spec)
    return {"k_p": spec.zeta * math.sqrt(2.0 * spec.x_c
                                         / (spec.h_gfm * spec.omega_b)),
            "omega_n": omega_n}


def damping_ratio_from_d(d_gfm: float, h_gfm: float, x_c: float,
                         omega_b: float = 100.0 * math.pi) -> float:
    """Invert the VSM design rule for a given damping coefficient."""
    omega_n = math.sqrt(omega_b / (2.0 * h_gfm * x_c))
    return d_gfm / (4.0 * h_gfm * omega_n)


def closed_loop_tf_response(spec: DesignSpec, d_gfm: float,
                            t_grid: np.ndarray) -> np.ndarray:
    """Unit-step response of the setpoint-to-injection transfer function."""
    wn2 = spec.omega_b / (2.0 * spec.h_gfm * spec.x_c)
    sys = signal.lti([wn2], [1.0, d_gfm / (2.0 * spec.h_gfm), wn2])
    _, y = signal.step(sys, T=np.asarray(t_grid, dtype=float))
    return y


# --- power-angle curves ------------------------------------------------------

@dataclass
class PdeltaCurve:
    delta_grid: np.ndarray  # rad, [0, pi]
    p: np.ndarray           # pu
    delta_a: float | None   # rad, current-limit onset angle (None: unreachable)
    p_max1: float           # pu, unlimited sine ceiling e v / x_tot
    p_max2: float           # pu, maximum of this curve
    mode: str


def saturation_onset_angle(e_m: float, v_e: float, x_tot: float,
                           i_max: float) -> float | None:
    """Angle at which |e - v exp(-jd)| / x_tot first reaches i_max.

    Returns 0.0 when the limit is exceeded already at zero angle and None
    when it is unreachable on [0, pi].
    """
    c = (e_m * e_m + v_e * v_e - (i_max * x_tot) ** 2) / (2.0 * e_m * v_e)
    if c > 1.0:
        return 0.0
    if c < -1.0:
        return None
    return math.acos(c)


def k_cl_quasi_static(delta, e_m, v_e, x_c, x_g, i_max):
    """Unsaturated-to-limited reference ratio along the saturated locus."""
    chord = np.sqrt(e_m * e_m + v_e * v_e - 2.0 * e_m * v_e * np.cos(delta))
    return chord / (x_c * i_max) - x_g / x_c


def pdelta(params: ConverterParams, scenario: GridScenario, mode: str,
           n_points: int = 721) -> PdeltaCurve:
    """Active power versus modulated-voltage angle, series resistances
    neglected.  The setpoint reactance x_cv stands in for the converter
    reactance, which is exact in the usual x_v = 0 configuration."""
    if mode not in PDELTA_MODES:
        raise ConfigError(f"unknown pdelta mode {mode!r}; "
                          f"expected one of {PDELTA_MODES}")
    e_m = params.e_m0
    v_e = scenario.v_e
    x_c = params.x_cv
    x_g = scenario.x_g
    x_tot = x_c + x_g
    i_max = params.i_max

    d = np.linspace(0.0, math.pi, n_points)
    p_unsat = e_m * v_e * np.sin(d) / x_tot
    delta_a = saturation_onset_angle(e_m, v_e, x_tot, i_max)

    if mode == UNSATURATED or delta_a is None:
        p = p_unsat
        delta_a_out = None if mode == UNSATURATED else delta_a
    else:
        sat = d >= delta_a
        p = p_unsat.copy()
        if mode == SATURATED:
            chord = np.sqrt(e_m * e_m + v_e * v_e
                            - 2.0 * e_m * v_e * np.cos(d[sat]))
            chord = np.maximum(chord, 1e-12)
            p[sat] = e_m * v_e * np.sin(d[sat]) * i_max / chord
        else:  # VAPC_VIRTUAL
            k_cl = k_cl_quasi_static(d[sat], e_m, v_e, x_c, x_g, i_max)
            p[sat] = e_m * v_e * np.sin(d[sat]) / (x_c + x_g / k_cl)
        delta_a_out = delta_a

    return PdeltaCurve(delta_grid=d, p=p, delta_a=delta_a_out,
                       p_max1=e_m * v_e / x_tot, p_max2=float(np.max(p)),
                       mode=mode)


# --- critical clearing time --------------------------------------------------

@dataclass
class CctResult:
    """Bisection outcome.  cct is the longest stable fault duration found;
    with status 'above_upper_bound' it is only a lower bound, with
    'below_lower_bound' only an upper bound."""

    cct: float
    bracket: tuple[float, float]
    probes: int
    resolution: float
    status: str = "ok"
    undecided: int = 0
    probe_log: list = field(default_factory=list)  # (duration_s, verdict)


def _probe_scenario(grid: GridScenario, duration: float) -> GridScenario:
    t_apply = grid.fault.t_apply
    lam = grid.fault.location_fraction
    if duration <= 0.0:
        # zero-duration fault: run the bare steady state over the same window
        fault = FaultEvent(t_apply=t_apply + 11.0, t_clear=t_apply + 12.0,
                           location_fraction=lam)
    else:
        fault = FaultEvent(t_apply=t_apply, t_clear=t_apply + duration,
                           location_fraction=lam)
    return replace(grid, fault=fault)


def cct_search(params: ConverterParams, grid: GridScenario,
               ctrl: SyncStrategyConfig, sim: SimConfig,
               bounds: CctBounds = CctBounds()) -> CctResult:
    """Bisect the fault duration on the resolution grid.

    Probes share one solved steady state and each runs to its own clearing
    time plus ten seconds (sim.t_end is ignored here so the horizon can
    follow the probe).  Undecided verdicts count as unstable for the
    bracketing and are reported in the result.
    """
    res = bounds.resolution
    init = init_steady_state(params, grid, ctrl)
    sim_open = replace(sim, t_end=None)
    log = []
    undecided = 0

    def probe(k: int) -> bool:
        nonlocal undecided
        duration = k * res
        if duration > 0.0:
            g = _probe_scenario(grid, duration)
            s = sim_open
        else:
            g = _probe_scenario(grid, 0.0)
            s = replace(sim, t_end=grid.fault.t_apply + 10.0)
        _, verdict = simulate(params, g, ctrl, s, init=init)
        if verdict.reason == HORIZON_UNDECIDED:
            undecided += 1
        log.append((duration, verdict))
        return verdict.stable

    k_lo = int(math.floor(bounds.t_lo / res + 1e-9))
    k_hi = int(math.ceil(bounds.t_hi / res - 1e-9))

    if not probe(k_lo):
        return CctResult(cct=k_lo * res, bracket=(float("-inf"), k_lo * res),
                         probes=len(log), resolution=res,
                         status="below_lower_bound", undecided=undecided,
                         probe_log=log)
    if probe(k_hi):
        return CctResult(cct=k_hi * res, bracket=(k_hi * res, float("inf")),
                         probes=len(log), resolution=res,
                         status="above_upper_bound", undecided=undecided,
                         probe_log=log)

    while k_hi - k_lo > 1:
        k_mid = (k_lo + k_hi) // 2
        if probe(k_mid):
            k_lo = k_mid
        else:
            k_hi = k_mid
    return CctResult(cct=k_lo * res, bracket=(k_lo * res, k_hi * res),
                     probes=len(log), resolution=res, undecided=undecided,
                     probe_log=log)


# --- parameter sweeps --------------------------------------------------------

ENHANCEMENT_TABLE = {
    "base": (False, False), "none": (False, False),
    "vapc": (True, False), "flc": (False, True),
    "flc+vapc": (True, True), "flc_vapc": (True, True),
    "vapc+flc": (True, True),
}


@dataclass
class SweepRow:
    value: object
    result: CctResult | None = None
    error: str | None = None


def apply_axis(ctrl: SyncStrategyConfig, axis: str,
               value) -> SyncStrategyConfig:
    """Return a strategy config with one swept parameter replaced."""
    if axis == "kind":
        return replace(ctrl, kind=str(value))
    if axis == "t_wd":
        return replace(ctrl, t_wd=float(value))
    if axis == "d_gfm":
        return replace(ctrl, d_gfm=float(value))
    if axis == "use_vapc":
        return replace(ctrl, use_vapc=bool(value))
    if axis == "flc":
        if bool(value):
            return replace(ctrl, flc=ctrl.flc or FlcConfig())
        return replace(ctrl, flc=None)
    if axis == "enhancement":
        key = str(value).lower()
        if key not in ENHANCEMENT_TABLE:
            raise ConfigError(f"unknown enhancement {value!r}; expected one "
                              f"of {sorted(set(ENHANCEMENT_TABLE))}")
        vapc, flc_on = ENHANCEMENT_TABLE[key]
        return replace(ctrl, use_vapc=vapc,
                       flc=(ctrl.flc or FlcConfig()) if flc_on else None)
    raise ConfigError(f"unknown sweep axis {axis!r}; "
                      f"expected one of {SWEEP_AXES}")


def sweep(axis: str, values, params: ConverterParams, grid: GridScenario,
          ctrl: SyncStrategyConfig, sim: SimConfig,
          bounds: CctBounds = CctBounds()) -> list[SweepRow]:
    """Clearing-time search per value of one swept parameter.

    Cells that fail to initialize or validate are marked with the error
    instead of aborting the whole table.  Row order follows the input.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; "
                          f"expected one of {SWEEP_AXES}")
    rows = []
    for value in values:
        try:
            ctrl_v = apply_axis(ctrl, axis, value)
            result = cct_search(params, grid, ctrl_v, sim, bounds)
            rows.append(SweepRow(value=value, result=result))
        except (ConfigError, RuntimeError) as exc:
            rows.append(SweepRow(value=value, error=str(exc)))
    return rows
