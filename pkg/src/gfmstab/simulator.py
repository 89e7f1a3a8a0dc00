"""Steady-state initialization, simulation driver and verdict classification.

The pre-fault operating point is an algebraic fixed point: the converter
current equals its quasi-static setpoints, the injected power matches the
strategy's steady-state target, and every integrator sits where its
derivative vanishes.  Finding it reduces to a one-dimensional root find on
the frame angle delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import kernel
from .kernel import (N_STATE, I_D, I_Q, XI_D, XI_Q, TH, TH_E, SYNC, X_WASH,
                     X_PFR, TH_PLL, XI_PLL, KernelParams, pack_params,
                     run_fixed_step, rhs, STATUS_BLOWUP)
from .control import K_IP, K_PLL, KIND_CODES
from .model import Dq, _network_voltages, _pq
from .params import (ConfigError, ConverterParams, GridScenario, SimConfig,
                     SyncStrategyConfig, VSM_NO_PLL)

# Frequency escape band for the loss-of-synchronism check (pu).
OMEGA_MIN = 0.5
OMEGA_MAX = 1.5
# Angle flatness tolerance for the settled check (rad).
SETTLE_DELTA_BAND = math.radians(5.0)

SETTLED = "settled"
ANGLE_DIVERGED = "angle_diverged"
NUMERICAL_BLOWUP = "numerical_blowup"
HORIZON_UNDECIDED = "horizon_undecided"


class InitializationError(RuntimeError):
    """The requested operating point could not be established."""


@dataclass
class Verdict:
    stable: bool
    reason: str

    def __str__(self):
        return f"{'stable' if self.stable else 'unstable'} ({self.reason})"


@dataclass
class Trajectory:
    """Uniformly sampled simulation record."""

    t: np.ndarray
    delta: np.ndarray       # rad
    omega: np.ndarray       # pu
    p_g: np.ndarray         # pu
    q_g: np.ndarray         # pu
    v_g_mag: np.ndarray     # pu
    i_mag: np.ndarray       # pu
    p_virt: np.ndarray      # pu
    gamma1: np.ndarray      # 0/1
    k_cl: np.ndarray
    states: np.ndarray      # raw state vectors, one row per sample
    omega_e: float = 1.0
    status: int = 0

    def __len__(self):
        return len(self.t)


@dataclass
class InitResult:
    """Solved pre-fault operating point."""

    y0: np.ndarray
    delta0: float
    i: Dq
    v_g: Dq
    e_m: Dq
    p_g: float
    q_g: float
    p_target: float
    residual: float
    gamma1: bool = False
    omega_ss: float = 1.0

    @property
    def v_g_mag(self) -> float:
        return self.v_g.mag


def _quasi_static_current(delta, params, grid):
    """Current satisfying i = setpoints(v_g(i)) at a given frame angle."""
    a = params.x_cv + grid.x_g
    c = grid.r_g
    b0 = grid.v_e * math.sin(delta)
    b1 = grid.v_e * math.cos(delta) - params.e_m0
    det = a * a + c * c
    i_d = (a * b0 - c * b1) / det
    i_q = (c * b0 + a * b1) / det
    return i_d, i_q


def _quasi_static_power(delta, params, grid):
    i_d, i_q = _quasi_static_current(delta, params, grid)
    v_gd, v_gq, _, _ = _network_voltages(i_d, i_q, delta, grid.r_g, grid.x_g,
                                         grid.v_e, 0.0, False)
    p, _ = _pq(v_gd, v_gq, i_d, i_q)
    return p


def _steady_state_power_target(grid: GridScenario,
                               ctrl: SyncStrategyConfig) -> float:
    """Injection at which the strategy's derivatives vanish at omega_e."""
    dw = grid.omega_e - ctrl.omega_0
    if ctrl.kind == VSM_NO_PLL:
        return grid.p_g0 - ctrl.d_gfm * dw
    dp = -ctrl.pfr.k_pfr * dw
    dp = min(max(dp, -ctrl.pfr.dp_max), ctrl.pfr.dp_max)
    return grid.p_g0 + dp


def init_steady_state(params: ConverterParams, grid: GridScenario,
                      ctrl: SyncStrategyConfig) -> InitResult:
    """Solve the pre-fault fixed point.

    Raises InitializationError when no admissible angle exists or the
    operating point needs more current than the limiter allows.
    """
    p_target = _steady_state_power_target(grid, ctrl)
    p_cap = params.i_max * grid.v_g0
    if abs(grid.p_g0) > p_cap:
        raise InitializationError(
            f"setpoint p_g0={grid.p_g0} exceeds the deliverable "
            f"i_max*v_g0={p_cap:.3f} pu")

    def mismatch(delta):
        return _quasi_static_power(delta, params, grid) - p_target

    lo, hi = -0.45 * math.pi, 0.5 * math.pi
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if f_lo * f_hi > 0.0:
        raise InitializationError(
            f"no steady-state angle for p_target={p_target:.4f} pu "
            f"(mismatch {f_lo:.3f} .. {f_hi:.3f})")
    delta0 = brentq(mismatch, lo, hi, xtol=1e-13, rtol=1e-15)

    i_d, i_q = _quasi_static_current(delta0, params, grid)
    if math.hypot(i_d, i_q) >= params.i_max:
        raise InitializationError(
            f"operating point needs |i|={math.hypot(i_d, i_q):.4f} pu, "
            f"over the limit i_max={params.i_max} pu")
    v_gd, v_gq, vr_d, vr_q = _network_voltages(
        i_d, i_q, delta0, grid.r_g, grid.x_g, grid.v_e, 0.0, False)
    p_g, q_g = _pq(v_gd, v_gq, i_d, i_q)

    w_e = grid.omega_e
    x_tot = params.x_c + grid.x_g
    r_tot = params.r_c + grid.r_g
    # exact series KVL at the grid frequency fixes the modulated voltage,
    # and the current-controller integrators absorb the remainder
    e_md = vr_d + r_tot * i_d - w_e * x_tot * i_q
    e_mq = vr_q + r_tot * i_q + w_e * x_tot * i_d
    xi_d = (e_md - v_gd + w_e * params.x_c * i_q) / params.k_cc_i
    xi_q = (e_mq - v_gq - w_e * params.x_c * i_d) / params.k_cc_i

    dw = w_e - ctrl.omega_0
    y0 = np.zeros(N_STATE)
    y0[I_D] = i_d
    y0[I_Q] = i_q
    y0[XI_D] = xi_d
    y0[XI_Q] = xi_q
    y0[TH] = delta0
    y0[TH_E] = 0.0
    kind = KIND_CODES[ctrl.kind]
    if kind == K_IP:
        y0[SYNC] = dw + ctrl.k_p * p_target
    else:
        y0[SYNC] = w_e
    y0[X_WASH] = dw
    if ctrl.has_explicit_pfr and ctrl.pfr.t_pfr > 0.0:
        y0[X_PFR] = -ctrl.pfr.k_pfr * dw
    if kind == K_PLL:
        y0[TH_PLL] = delta0 + math.atan2(v_gq, v_gd)
        y0[XI_PLL] = dw / ctrl.k_i_pll

    kp = pack_params(params, grid, ctrl)
    residual = steady_state_residual(y0, kp)
    return InitResult(y0=y0, delta0=delta0, i=Dq(i_d, i_q),
                      v_g=Dq(v_gd, v_gq), e_m=Dq(e_md, e_mq),
                      p_g=p_g, q_g=q_g, p_target=p_target,
                      residual=residual, omega_ss=w_e)


def steady_state_residual(y: np.ndarray, kp: KernelParams) -> float:
    """Largest state-derivative magnitude, net of the rigid frame rotation."""
    dy = np.empty(N_STATE)
    rhs(y, dy, kp, False, False, kp.omega_e)
    rigid = kp.omega_b * kp.omega_e
    r = max(abs(dy[I_D]), abs(dy[I_Q]), abs(dy[XI_D]), abs(dy[XI_Q]),
            abs(dy[SYNC]), abs(dy[X_WASH]), abs(dy[X_PFR]),
            abs(dy[TH] - rigid), abs(dy[TH_E] - rigid))
    if kp.kind == K_PLL:
        r = max(r, abs(dy[TH_PLL] - rigid), abs(dy[XI_PLL]))
    return r


def simulate(params: ConverterParams, grid: GridScenario,
             ctrl: SyncStrategyConfig, sim: SimConfig,
             init: InitResult | None = None,
             ) -> tuple[Trajectory, Verdict]:
    """Run one fault scenario from the solved steady state.

    Fault application and clearing are aligned to integration-step
    boundaries.  A fault scheduled at or after the horizon never applies.
    """
    t_end = sim.horizon(grid.fault)
    dt = sim.dt
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise ConfigError("horizon shorter than one integration step")
    if grid.fault.t_apply < t_end and t_end <= grid.fault.t_clear:
        raise ConfigError("t_end must be > fault.t_clear")
    n_apply = int(round(grid.fault.t_apply / dt))
    n_clear = int(round(grid.fault.t_clear / dt))
    if n_apply >= n_steps:
        n_apply = n_clear = n_steps + 1  # fault disabled

    if init is None:
        init = init_steady_state(params, grid, ctrl)
    kp = pack_params(params, grid, ctrl)
    n_buf = max(1, int(round(0.1 / dt)))

    rec, states, n_rec, status, _, _ = run_fixed_step(
        init.y0, kp, dt, n_steps, n_apply, n_clear, sim.record_stride,
        init.gamma1, init.omega_ss, n_buf)

    rec = rec[:n_rec]
    traj = Trajectory(
        t=rec[:, kernel.R_T].copy(), delta=rec[:, kernel.R_DELTA].copy(),
        omega=rec[:, kernel.R_OMEGA].copy(), p_g=rec[:, kernel.R_PG].copy(),
        q_g=rec[:, kernel.R_QG].copy(), v_g_mag=rec[:, kernel.R_VMAG].copy(),
        i_mag=rec[:, kernel.R_IMAG].copy(),
        p_virt=rec[:, kernel.R_PVIRT].copy(),
        gamma1=rec[:, kernel.R_GAMMA].astype(np.int8),
        k_cl=rec[:, kernel.R_KCL].copy(), states=states[:n_rec].copy(),
        omega_e=grid.omega_e, status=status)
    return traj, classify(traj, sim)


def classify(traj: Trajectory, sim: SimConfig) -> Verdict:
    """Loss-of-synchronism verdict for a completed trajectory.

    Unstable on angle excursion beyond delta_limit, frequency escape or
    numerical blowup.  Stable when the trailing settle_window shows the
    frequency pinned to the grid and a flat angle.  Anything else is
    undecided (treated as unstable by the search routines, reported
    distinctly).
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if traj.status == STATUS_BLOWUP:
        return Verdict(False, NUMERICAL_BLOWUP)
    delta0 = traj.delta[0]
    if np.max(np.abs(traj.delta - delta0)) > sim.delta_limit:
        return Verdict(False, ANGLE_DIVERGED)
    if np.min(traj.omega) < OMEGA_MIN or np.max(traj.omega) > OMEGA_MAX:
        return Verdict(False, ANGLE_DIVERGED)

    t_last = traj.t[-1]
    window = traj.t >= t_last - sim.settle_window
    if np.count_nonzero(window) >= 2:
        omega_ok = np.all(np.abs(traj.omega[window] - traj.omega_e)
                          < sim.settle_band)
        d = traj.delta[window]
        delta_ok = (np.max(d) - np.min(d)) <= 2.0 * SETTLE_DELTA_BAND
        if omega_ok and delta_ok:
            return Verdict(True, SETTLED)
    return Verdict(False, HORIZON_UNDECIDED)
