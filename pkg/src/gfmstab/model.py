"""dq-frame electrical model of the converter branch.

Single series path: modulated voltage -> connection impedance -> PCC ->
grid branch -> infinite bus.  The converter dq frame is aligned with the
modulated voltage and rotates at the strategy frequency omega; delta is the
frame angle relative to the infinite bus.  Convention used everywhere:

    v_e in the converter frame = v_e * (cos(-delta), sin(-delta))

The PCC voltage is the quasi-static phasor relation v_g = v_e + z_g o i
(complex product expanded in dq).  A bolted three-phase fault at fraction
lam of the grid branch grounds the fault node, so v_g = lam * z_g o i and
the remote source drops out of the converter's loop.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from numba import njit

from .params import ConverterParams, GridScenario


class Dq(NamedTuple):
    """A dq component pair (pu)."""

    d: float
    q: float

    @property
    def mag(self) -> float:
        return math.hypot(self.d, self.q)


class ElectricalState(NamedTuple):
    """Series-branch current and current-controller integrator states."""

    i_d: float
    i_q: float
    xi_d: float = 0.0
    xi_q: float = 0.0


# --- scalar kernels (shared with the jit-compiled simulation loop) ----------

@njit(cache=True)
def _current_setpoints(v_gd, v_gq, e_m0, x_cv):
    # quasi-static current through x_cv for a target voltage (e_m0, 0)
    i_d_ref = (0.0 - v_gq) / x_cv
    i_q_ref = (v_gd - e_m0) / x_cv
    return i_d_ref, i_q_ref


@njit(cache=True)
def _csa_limit(i_d, i_q, i_max):
    mag = math.sqrt(i_d * i_d + i_q * i_q)
    if mag <= i_max:
        return i_d, i_q, 1.0
    scale = i_max / mag
    return i_d * scale, i_q * scale, mag / i_max


@njit(cache=True)
def _current_controller(i_d, i_q, xi_d, xi_q, iref_d, iref_q,
                        v_gd, v_gq, omega, x_c, k_p, k_i):
    # synchronous-frame PI with voltage feed-forward and x_c decoupling
    e_md = v_gd + k_p * (iref_d - i_d) + k_i * xi_d - omega * x_c * i_q
    e_mq = v_gq + k_p * (iref_q - i_q) + k_i * xi_q + omega * x_c * i_d
    return e_md, e_mq, iref_d - i_d, iref_q - i_q


@njit(cache=True)
def _network_voltages(i_d, i_q, delta, r_g, x_g, v_e, lam, faulted):
    if faulted:
        r = lam * r_g
        x = lam * x_g
        vr_d = 0.0
        vr_q = 0.0
    else:
        r = r_g
        x = x_g
        vr_d = v_e * math.cos(delta)
        vr_q = -v_e * math.sin(delta)
    v_gd = vr_d + r * i_d - x * i_q
    v_gq = vr_q + r * i_q + x * i_d
    return v_gd, v_gq, vr_d, vr_q


@njit(cache=True)
def _electrical_derivatives(i_d, i_q, e_md, e_mq, vr_d, vr_q,
                            omega, r_tot, x_tot, omega_b):
    di_d = (omega_b / x_tot) * (e_md - vr_d - r_tot * i_d + omega * x_tot * i_q)
    di_q = (omega_b / x_tot) * (e_mq - vr_q - r_tot * i_q - omega * x_tot * i_d)
    return di_d, di_q


@njit(cache=True)
def _pq(v_gd, v_gq, i_d, i_q):
    p = v_gd * i_d + v_gq * i_q
    q = v_gq * i_d - v_gd * i_q
    return p, q


# --- public operations -------------------------------------------------------

def current_setpoints(v_g: Dq, params: ConverterParams) -> Dq:
    """Unsaturated current references for the measured PCC voltage.

    Quasi-static model of the setpoint reactance x_cv holding the modulated
    voltage at (e_m0, 0):

        i_d_ref = (0 - v_gq) / x_cv,   i_q_ref = (v_gd - e_m0) / x_cv
    """
    d, q = _current_setpoints(v_g.d, v_g.q, params.e_m0, params.x_cv)
    return Dq(d, q)


def csa_limit(i_ref_unsat: Dq, i_max: float) -> tuple[Dq, float]:
    """Clip a current reference to i_max preserving its phase.

    Equal d/q priority: over the limit the vector is scaled radially.
    Returns the limited reference and K_CL = |unsaturated| / |limited| >= 1
    (1 when no clipping happened, including for a zero-magnitude input).
    """
    d, q, k_cl = _csa_limit(i_ref_unsat.d, i_ref_unsat.q, i_max)
    return Dq(d, q), k_cl


def current_controller_derivatives(state: ElectricalState, i_ref: Dq,
                                   v_g: Dq, omega: float,
                                   params: ConverterParams,
                                   ) -> tuple[Dq, float, float]:
    """PI current controller with feed-forward and decoupling.

    Returns the modulated-voltage command (applied as-is: average model,
    ideal modulation) and the two integrator derivatives.
    """
    e_md, e_mq, dxi_d, dxi_q = _current_controller(
        state.i_d, state.i_q, state.xi_d, state.xi_q,
        i_ref.d, i_ref.q, v_g.d, v_g.q, omega,
        params.x_c, params.k_cc_p, params.k_cc_i)
    return Dq(e_md, e_mq), dxi_d, dxi_q


def network_voltages(state: ElectricalState, delta: float,
                     scenario: GridScenario, faulted: bool,
                     ) -> tuple[Dq, Dq]:
    """PCC voltage and the remote-end voltage seen by the series branch.

    Unfaulted the remote end is the infinite bus expressed in the converter
    frame; faulted it is the grounded fault node, and only the branch
    fraction between the PCC and the fault carries the converter current.
    """
    v_gd, v_gq, vr_d, vr_q = _network_voltages(
        state.i_d, state.i_q, delta, scenario.r_g, scenario.x_g,
        scenario.v_e, scenario.fault.location_fraction, faulted)
    return Dq(v_gd, v_gq), Dq(vr_d, vr_q)


def electrical_derivatives(state: ElectricalState, e_m: Dq, delta: float,
                           omega: float, scenario: GridScenario,
                           params: ConverterParams, faulted: bool,
                           ) -> tuple[float, float]:
    """Series-branch dq current derivatives (pu/s)."""
    if faulted:
        lam = scenario.fault.location_fraction
        r_tot = params.r_c + lam * scenario.r_g
        x_tot = params.x_c + lam * scenario.x_g
        vr_d = 0.0
        vr_q = 0.0
    else:
        r_tot = params.r_c + scenario.r_g
        x_tot = params.x_c + scenario.x_g
        vr_d = scenario.v_e * math.cos(delta)
        vr_q = -scenario.v_e * math.sin(delta)
    return _electrical_derivatives(state.i_d, state.i_q, e_m.d, e_m.q,
                                   vr_d, vr_q, omega, r_tot, x_tot,
                                   params.omega_b)


def active_reactive_power(v_g: Dq, i: Dq) -> tuple[float, float]:
    """Injected active and reactive power at the PCC (pu)."""
    return _pq(v_g.d, v_g.q, i.d, i.q)
