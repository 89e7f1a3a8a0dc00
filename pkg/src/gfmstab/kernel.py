"""Flattened state vector and the jit-compiled fixed-step integration loop.

One state layout serves all four strategies; slots a strategy does not use
stay at zero with zero derivatives.  The SYNC slot holds the converter
frequency for the VSM kinds and the power integrator chi for ip_control
(whose frequency is algebraic).

Discrete actions happen at step boundaries, never inside a stage: the fault
flag toggles, the limiter hysteresis updates from the freshly computed PCC
voltage, the pre-fault frequency is latched, and the frequency clamp is
projected onto the VSM state.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from .control import (K_IP, K_PLL, KIND_CODES, _flc_clamp,
                      _flc_hysteresis, _pfr_output, _pll_derivatives, _swing)
from .model import (_csa_limit, _current_controller, _current_setpoints,
                    _electrical_derivatives, _network_voltages, _pq)
from .params import ConverterParams, GridScenario, SyncStrategyConfig

# State vector slots.
I_D, I_Q, XI_D, XI_Q, TH, TH_E, SYNC, X_WASH, X_PFR, TH_PLL, XI_PLL = range(11)
N_STATE = 11

# Trajectory record columns.
R_T, R_DELTA, R_OMEGA, R_PG, R_QG, R_VMAG, R_IMAG, R_PVIRT, R_GAMMA, R_KCL = \
    range(10)
N_REC = 10

BLOWUP_LIMIT = 1e6

STATUS_OK = 0
STATUS_BLOWUP = 1


class KernelParams(NamedTuple):
    omega_b: float
    r_c: float
    x_c: float
    x_cv: float
    i_max: float
    k_cc_p: float
    k_cc_i: float
    e_m0: float
    r_g: float
    x_g: float
    v_e: float
    omega_e: float
    p_set: float
    lam: float
    kind: int
    h: float
    d: float
    k_p_ip: float
    t_wd: float
    pfr_explicit: bool
    k_pfr: float
    t_pfr: float
    dp_max: float
    pfr_on_pll: bool
    use_vapc: bool
    flc_on: bool
    dw_max: float
    v_a: float
    v_b: float
    flc_reset: bool
    omega_0: float
    k_p_pll: float
    k_i_pll: float
    dw_pll_max: float


def pack_params(params: ConverterParams, grid: GridScenario,
                ctrl: SyncStrategyConfig,
                p_set: float | None = None) -> KernelParams:
    """Flatten the parameter dataclasses for the jit-compiled kernels."""
    flc = ctrl.flc
    return KernelParams(
        omega_b=params.omega_b, r_c=params.r_c, x_c=params.x_c,
        x_cv=params.x_cv, i_max=params.i_max, k_cc_p=params.k_cc_p,
        k_cc_i=params.k_cc_i, e_m0=params.e_m0,
        r_g=grid.r_g, x_g=grid.x_g, v_e=grid.v_e, omega_e=grid.omega_e,
        p_set=grid.p_g0 if p_set is None else p_set,
        lam=grid.fault.location_fraction,
        kind=KIND_CODES[ctrl.kind], h=ctrl.h_gfm, d=ctrl.d_gfm,
        k_p_ip=ctrl.k_p, t_wd=ctrl.t_wd,
        pfr_explicit=ctrl.has_explicit_pfr, k_pfr=ctrl.pfr.k_pfr,
        t_pfr=ctrl.pfr.t_pfr, dp_max=ctrl.pfr.dp_max,
        pfr_on_pll=ctrl.pfr_uses_pll_freq, use_vapc=ctrl.use_vapc,
        flc_on=flc is not None,
        dw_max=flc.dw_max if flc is not None else 1.0,
        v_a=flc.v_a if flc is not None else 0.0,
        v_b=flc.v_b if flc is not None else 0.0,
        flc_reset=flc.reset_integrator if flc is not None else False,
        omega_0=ctrl.omega_0, k_p_pll=ctrl.k_p_pll, k_i_pll=ctrl.k_i_pll,
        dw_pll_max=ctrl.dw_pll_max)


@njit(cache=True)
def rhs(y, dy, kp, faulted, gamma1, omega_ss):
    """Full model derivative.  Fills dy, returns the measured outputs
    (omega_out, p_g, q_g, v_gd, v_gq, p_virt, k_cl)."""
    i_d = y[I_D]
    i_q = y[I_Q]
    delta = y[TH] - y[TH_E]

    v_gd, v_gq, vr_d, vr_q = _network_voltages(
        i_d, i_q, delta, kp.r_g, kp.x_g, kp.v_e, kp.lam, faulted)
    iref_d_u, iref_q_u = _current_setpoints(v_gd, v_gq, kp.e_m0, kp.x_cv)
    iref_d, iref_q, k_cl = _csa_limit(iref_d_u, iref_q_u, kp.i_max)

    p_g, q_g = _pq(v_gd, v_gq, i_d, i_q)
    p_virt = v_gd * iref_d_u + v_gq * iref_q_u
    p_fb = p_virt if kp.use_vapc else p_g

    omega_pll = kp.omega_0
    dth_pll = 0.0
    dxi_pll = 0.0
    if kp.kind == K_PLL:
        dth_pll, dxi_pll, omega_pll = _pll_derivatives(
            v_gd, v_gq, y[TH], y[TH_PLL], y[XI_PLL],
            kp.k_p_pll, kp.k_i_pll, kp.dw_pll_max, kp.omega_0, kp.omega_b)

    if kp.kind == K_IP:
        candidate = kp.omega_0 + y[SYNC] - kp.k_p_ip * p_fb
    else:
        candidate = y[SYNC]

    clamp_dir = 0
    omega_out = candidate
    if kp.flc_on and gamma1:
        omega_out, clamp_dir = _flc_clamp(candidate, omega_ss, kp.dw_max)

    dp_pfr = 0.0
    dx_pfr = 0.0
    if kp.pfr_explicit:
        omega_for_pfr = omega_pll if (kp.pfr_on_pll and kp.kind == K_PLL) \
            else omega_out
        dp_pfr, dx_pfr = _pfr_output(omega_for_pfr, y[X_PFR], kp.omega_0,
                                     kp.k_pfr, kp.t_pfr, kp.dp_max)
    p_star = kp.p_set + dp_pfr

    dsync, dx_wash = _swing(kp.kind, y[SYNC], y[X_WASH], omega_out,
                            omega_pll, p_star, p_fb, kp.h, kp.d, kp.t_wd,
                            kp.omega_0)
    if (clamp_dir > 0 and dsync > 0.0) or (clamp_dir < 0 and dsync < 0.0):
        dsync = 0.0  # hold the inertia integrator at the clamp

    e_md, e_mq, dxi_d, dxi_q = _current_controller(
        i_d, i_q, y[XI_D], y[XI_Q], iref_d, iref_q, v_gd, v_gq,
        omega_out, kp.x_c, kp.k_cc_p, kp.k_cc_i)

    if faulted:
        r_tot = kp.r_c + kp.lam * kp.r_g
        x_tot = kp.x_c + kp.lam * kp.x_g
    else:
        r_tot = kp.r_c + kp.r_g
        x_tot = kp.x_c + kp.x_g
    di_d, di_q = _electrical_derivatives(i_d, i_q, e_md, e_mq, vr_d, vr_q,
                                         omega_out, r_tot, x_tot, kp.omega_b)

    dy[I_D] = di_d
    dy[I_Q] = di_q
    dy[XI_D] = dxi_d
    dy[XI_Q] = dxi_q
    dy[TH] = kp.omega_b * omega_out
    dy[TH_E] = kp.omega_b * kp.omega_e
    dy[SYNC] = dsync
    dy[X_WASH] = dx_wash
    dy[X_PFR] = dx_pfr
    dy[TH_PLL] = dth_pll
    dy[XI_PLL] = dxi_pll
    return omega_out, p_g, q_g, v_gd, v_gq, p_virt, k_cl


@njit(cache=True)
def _quick_meas(y, kp, faulted, gamma1, omega_ss):
    """PCC voltage magnitude and output frequency, without derivatives."""
    delta = y[TH] - y[TH_E]
    v_gd, v_gq, _, _ = _network_voltages(
        y[I_D], y[I_Q], delta, kp.r_g, kp.x_g, kp.v_e, kp.lam, faulted)
    if kp.kind == K_IP:
        if kp.use_vapc:
            iref_d_u, iref_q_u = _current_setpoints(v_gd, v_gq, kp.e_m0,
                                                    kp.x_cv)
            p_fb = v_gd * iref_d_u + v_gq * iref_q_u
        else:
            p_fb = v_gd * y[I_D] + v_gq * y[I_Q]
        candidate = kp.omega_0 + y[SYNC] - kp.k_p_ip * p_fb
    else:
        candidate = y[SYNC]
    omega_out = candidate
    if kp.flc_on and gamma1:
        omega_out, _ = _flc_clamp(candidate, omega_ss, kp.dw_max)
    return math.sqrt(v_gd * v_gd + v_gq * v_gq), omega_out, candidate


@njit(cache=True)
def run_fixed_step(y0, kp, dt, n_steps, n_apply, n_clear, stride, gamma1_0,
                   omega_ss_0, n_buf):
    """Classic fourth-order fixed-step integration with event scheduling.

    Fault on for steps n_apply <= k < n_clear.  Records every `stride`
    steps (sample 0 included).  Returns (rec, states, n_rec, status,
    gamma1, omega_ss).
    """
    n_cap = n_steps // stride + 1
    rec = np.zeros((n_cap, N_REC))
    states = np.zeros((n_cap, N_STATE))

    y = y0.copy()
    k1 = np.empty(N_STATE)
    k2 = np.empty(N_STATE)
    k3 = np.empty(N_STATE)
    k4 = np.empty(N_STATE)
    yt = np.empty(N_STATE)
    dyw = np.empty(N_STATE)

    gamma1 = gamma1_0
    omega_ss = omega_ss_0
    status = STATUS_OK

    # rolling pre-fault frequency history for the omega_ss latch
    buf = np.empty(n_buf)
    faulted = n_apply <= 0 < n_clear
    v_mag, omega_out, _ = _quick_meas(y, kp, faulted, gamma1, omega_ss)
    for i in range(n_buf):
        buf[i] = omega_out

    aux = rhs(y, dyw, kp, faulted, gamma1, omega_ss)
    rec[0, R_T] = 0.0
    rec[0, R_DELTA] = y[TH] - y[TH_E]
    rec[0, R_OMEGA] = aux[0]
    rec[0, R_PG] = aux[1]
    rec[0, R_QG] = aux[2]
    rec[0, R_VMAG] = math.sqrt(aux[3] * aux[3] + aux[4] * aux[4])
    rec[0, R_IMAG] = math.sqrt(y[I_D] * y[I_D] + y[I_Q] * y[I_Q])
    rec[0, R_PVIRT] = aux[5]
    rec[0, R_GAMMA] = 1.0 if gamma1 else 0.0
    rec[0, R_KCL] = aux[6]
    states[0] = y
    n_rec = 1

    for k in range(n_steps):
        faulted = n_apply <= k < n_clear

        rhs(y, k1, kp, faulted, gamma1, omega_ss)
        for i in range(N_STATE):
            yt[i] = y[i] + 0.5 * dt * k1[i]
        rhs(yt, k2, kp, faulted, gamma1, omega_ss)
        for i in range(N_STATE):
            yt[i] = y[i] + 0.5 * dt * k2[i]
        rhs(yt, k3, kp, faulted, gamma1, omega_ss)
        for i in range(N_STATE):
            yt[i] = y[i] + dt * k3[i]
        rhs(yt, k4, kp, faulted, gamma1, omega_ss)
        for i in range(N_STATE):
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

        ok = True
        for i in range(N_STATE):
            if not math.isfinite(y[i]) or abs(y[i]) > BLOWUP_LIMIT:
                ok = False
        if not ok:
            status = STATUS_BLOWUP
            break

        faulted = n_apply <= k + 1 < n_clear
        v_mag, omega_out, candidate = _quick_meas(y, kp, faulted, gamma1,
                                                  omega_ss)
        if kp.flc_on:
            g_new = _flc_hysteresis(v_mag, gamma1, kp.v_a, kp.v_b)
            if g_new and not gamma1:
                omega_ss = buf.mean()  # latch the pre-fault frequency
            gamma1 = g_new
            if gamma1:
                hi = omega_ss + kp.dw_max
                lo = omega_ss - kp.dw_max
                if kp.kind != K_IP:
                    # project the frequency state onto the admissible band
                    if y[SYNC] > hi:
                        y[SYNC] = hi
                    elif y[SYNC] < lo:
                        y[SYNC] = lo
                elif kp.flc_reset:
                    # one-shot reset of the power integrator to the clamp
                    if candidate > hi:
                        y[SYNC] -= candidate - hi
                    elif candidate < lo:
                        y[SYNC] += lo - candidate
                v_mag, omega_out, candidate = _quick_meas(
                    y, kp, faulted, gamma1, omega_ss)
        buf[(k + 1) % n_buf] = omega_out

        if (k + 1) % stride == 0:
            aux = rhs(y, dyw, kp, faulted, gamma1, omega_ss)
            rec[n_rec, R_T] = (k + 1) * dt
            rec[n_rec, R_DELTA] = y[TH] - y[TH_E]
            rec[n_rec, R_OMEGA] = aux[0]
            rec[n_rec, R_PG] = aux[1]
            rec[n_rec, R_QG] = aux[2]
            rec[n_rec, R_VMAG] = math.sqrt(aux[3] * aux[3] + aux[4] * aux[4])
            rec[n_rec, R_IMAG] = math.sqrt(y[I_D] * y[I_D] + y[I_Q] * y[I_Q])
            rec[n_rec, R_PVIRT] = aux[5]
            rec[n_rec, R_GAMMA] = 1.0 if gamma1 else 0.0
            rec[n_rec, R_KCL] = aux[6]
            states[n_rec] = y
            n_rec += 1

    return rec, states, n_rec, status, gamma1, omega_ss
