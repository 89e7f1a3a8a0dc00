"""Self-synchronisation strategies and their companion loops.

Four strategies produce the converter frequency from the active-power error:

  vsm_no_pll   2H dw/dt = p* - p_fb - D (w - w0)           (droop implicit in D)
  vsm_pll      2H dw/dt = p* - p_fb - D (w - w_pll)
  vsm_washout  2H dw/dt = p* - p_fb - D hp(w - w0)         (hp = washout filter)
  ip_control   dchi/dt  = (p* - p_fb) / (2H),  w = w0 + chi - K_P p_fb

p* is the power setpoint plus the explicit primary-frequency-response output
(zero for vsm_no_pll, whose damping term doubles as the droop).  p_fb is the
measured injection p_g, or the unsaturated virtual power when VAPC is active.

The frequency limiter (FLC) arms on a PCC-voltage hysteresis and clamps the
strategy frequency to a band around the latched pre-fault value; while the
clamp is engaged the inertia integrator is held (or snapped, see
FlcConfig.reset_integrator) so it cannot wind up beyond the band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from numba import njit

from .params import (ConfigError, FlcConfig, SyncStrategyConfig,
                     IP_CONTROL, VSM_NO_PLL, VSM_PLL, VSM_WASHOUT)
from .model import Dq

# Integer strategy codes used inside jit-compiled code.
KIND_CODES = {VSM_NO_PLL: 0, VSM_PLL: 1, VSM_WASHOUT: 2, IP_CONTROL: 3}
K_NO_PLL, K_PLL, K_WASHOUT, K_IP = 0, 1, 2, 3


# --- scalar kernels ----------------------------------------------------------

@njit(cache=True)
def _pll_derivatives(v_gd, v_gq, theta, theta_pll, xi_pll,
                     k_p, k_i, dw_max, omega_0, omega_b):
    # error = projection of v_g onto the estimator's q axis
    rel = theta - theta_pll
    eps = v_gd * math.sin(rel) + v_gq * math.cos(rel)
    u = k_p * eps + k_i * xi_pll
    sat_dir = 0
    if u > dw_max:
        u = dw_max
        sat_dir = 1
    elif u < -dw_max:
        u = -dw_max
        sat_dir = -1
    omega_pll = omega_0 + u
    # conditional integration: freeze while saturated and driven outward
    if (sat_dir > 0 and eps > 0.0) or (sat_dir < 0 and eps < 0.0):
        dxi = 0.0
    else:
        dxi = eps
    return omega_b * omega_pll, dxi, omega_pll


@njit(cache=True)
def _pfr_output(omega, x_pfr, omega_0, k_pfr, t_pfr, dp_max):
    if t_pfr > 0.0:
        dp = x_pfr
        dx = (-k_pfr * (omega - omega_0) - x_pfr) / t_pfr
    else:
        dp = -k_pfr * (omega - omega_0)
        dx = 0.0
    if dp > dp_max:
        dp = dp_max
    elif dp < -dp_max:
        dp = -dp_max
    return dp, dx


@njit(cache=True)
def _swing(kind, sync_state, x_wash, omega_out, omega_pll,
           p_star, p_fb, h, d, t_wd, omega_0):
    # sync_state is omega for the VSM kinds and chi for IP control;
    # omega_out is the (possibly clamped) frequency the loops act on.
    dx_wash = 0.0
    if kind == K_NO_PLL:
        dsync = (p_star - p_fb - d * (omega_out - omega_0)) / (2.0 * h)
    elif kind == K_PLL:
        dsync = (p_star - p_fb - d * (omega_out - omega_pll)) / (2.0 * h)
    elif kind == K_WASHOUT:
        w = (omega_out - omega_0) - x_wash
        dsync = (p_star - p_fb - d * w) / (2.0 * h)
        dx_wash = ((omega_out - omega_0) - x_wash) / t_wd
    else:  # K_IP
        dsync = (p_star - p_fb) / (2.0 * h)
    return dsync, dx_wash


@njit(cache=True)
def _flc_hysteresis(v_mag, gamma_prev, v_a, v_b):
    if gamma_prev:
        return v_mag <= v_b
    return v_mag <= v_a


@njit(cache=True)
def _flc_clamp(omega, omega_ss, dw_max):
    hi = omega_ss + dw_max
    lo = omega_ss - dw_max
    if omega >= hi:
        return hi, 1
    if omega <= lo:
        return lo, -1
    return omega, 0


# --- public operations -------------------------------------------------------

@dataclass
class PllState:
    theta_pll: float = 0.0  # rad, same reference as the converter angle
    xi_pll: float = 0.0


@dataclass
class FlcState:
    gamma1: bool = False
    omega_ss: float = 1.0  # pu latched pre-fault steady-state frequency


@dataclass
class SyncState:
    """Dynamic state of one self-synchronisation strategy instance."""

    omega: float = 1.0       # pu converter frequency (VSM kinds)
    theta: float = 0.0       # rad converter angle, unwrapped
    delta: float = 0.0       # rad theta - theta_grid
    washout_state: float = 0.0
    ip_integrator: float = 0.0
    pfr_filter_state: float = 0.0
    pll: PllState = field(default_factory=PllState)
    flc: FlcState = field(default_factory=FlcState)


@dataclass
class SyncDerivatives:
    domega: float = 0.0      # d(omega)/dt, or d(chi)/dt for ip_control
    dtheta: float = 0.0
    dwashout_state: float = 0.0
    dpfr_filter_state: float = 0.0
    dtheta_pll: float = 0.0
    dxi_pll: float = 0.0


def pll_derivatives(v_g: Dq, theta: float, pll_state: PllState,
                    cfg: SyncStrategyConfig, omega_b: float,
                    ) -> tuple[float, float, float]:
    """PCC frequency estimator with saturation and anti-windup.

    theta is the converter angle; v_g is expressed in the converter frame,
    so the phase error is reconstructed from both.  A collapsed voltage
    (|v_g| = 0) gives zero error: the estimator freezes at its last
    frequency.  Returns (dtheta_pll, dxi_pll, omega_pll).
    """
    return _pll_derivatives(v_g.d, v_g.q, theta,
                            pll_state.theta_pll, pll_state.xi_pll,
                            cfg.k_p_pll, cfg.k_i_pll, cfg.dw_pll_max,
                            cfg.omega_0, omega_b)


def pfr_output(cfg: SyncStrategyConfig, omega: float,
               pfr_filter_state: float) -> tuple[float, float]:
    """Primary-frequency-response correction and its filter derivative.

    Droop -k_pfr (omega - omega_0) through a first-order low-pass (algebraic
    when t_pfr = 0), saturated at +/- dp_max.  The vsm_no_pll strategy has no
    explicit loop and gets (0, 0).
    """
    if not cfg.has_explicit_pfr:
        return 0.0, 0.0
    return _pfr_output(omega, pfr_filter_state, cfg.omega_0,
                       cfg.pfr.k_pfr, cfg.pfr.t_pfr, cfg.pfr.dp_max)


def vapc_feedback(v_g: Dq, i_ref_unsat: Dq) -> float:
    """Unsaturated virtual active power: v_g dot unsaturated setpoints."""
    return v_g.d * i_ref_unsat.d + v_g.q * i_ref_unsat.q


def flc_step(flc_cfg: FlcConfig, v_g_mag: float, gamma1_prev: bool,
             omega_candidate: float, omega_ss: float,
             ) -> tuple[float, bool, bool]:
    """One evaluation of the frequency limiter.

    Hysteresis: the limiter arms when v_g_mag <= v_a and stays armed until
    v_g_mag > v_b.  While armed the candidate frequency is clamped to
    omega_ss +/- dw_max; the caller must hold the inertia integrator while
    the clamp pushes against it.  Returns (omega_limited, gamma1,
    antiwindup_active).
    """
    gamma1 = _flc_hysteresis(v_g_mag, gamma1_prev, flc_cfg.v_a, flc_cfg.v_b)
    if not gamma1:
        return omega_candidate, False, False
    omega_limited, clamp_dir = _flc_clamp(omega_candidate, omega_ss,
                                          flc_cfg.dw_max)
    return omega_limited, True, clamp_dir != 0


def sync_derivatives(cfg: SyncStrategyConfig, state: SyncState,
                     p_set: float, p_feedback: float, v_g: Dq,
                     omega_b: float) -> tuple[SyncDerivatives, float]:
    """Derivatives of the strategy states and the frequency it imposes.

    Composes the strategy swing law with the PLL (vsm_pll), the explicit
    PFR loop and, when configured, the frequency limiter acting on the
    candidate frequency.  p_set is the active-power setpoint; p_feedback
    is p_g, or the virtual power when VAPC is in use.
    """
    if cfg.kind not in KIND_CODES:
        raise ConfigError(f"unknown strategy kind {cfg.kind!r}")
    kind = KIND_CODES[cfg.kind]
    out = SyncDerivatives()

    omega_pll = cfg.omega_0
    if kind == K_PLL:
        out.dtheta_pll, out.dxi_pll, omega_pll = pll_derivatives(
            v_g, state.theta, state.pll, cfg, omega_b)

    if kind == K_IP:
        candidate = cfg.omega_0 + state.ip_integrator - cfg.k_p * p_feedback
    else:
        candidate = state.omega

    clamp_dir = 0
    omega_out = candidate
    if cfg.flc is not None and state.flc.gamma1:
        omega_out, clamp_dir = _flc_clamp(candidate, state.flc.omega_ss,
                                          cfg.flc.dw_max)

    omega_for_pfr = omega_pll if (cfg.pfr_uses_pll_freq and kind == K_PLL) \
        else omega_out
    dp_pfr, out.dpfr_filter_state = pfr_output(cfg, omega_for_pfr,
                                               state.pfr_filter_state)
    p_star = p_set + dp_pfr

    out.domega, out.dwashout_state = _swing(
        kind, state.omega, state.washout_state, omega_out, omega_pll,
        p_star, p_feedback, cfg.h_gfm, cfg.d_gfm, cfg.t_wd, cfg.omega_0)
    # anti-windup: hold the inertia integrator while the clamp pushes outward
    if (clamp_dir > 0 and out.domega > 0.0) or \
            (clamp_dir < 0 and out.domega < 0.0):
        out.domega = 0.0
    out.dtheta = omega_b * omega_out
    return out, omega_out
