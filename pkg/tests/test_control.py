"""Strategy, PLL, PFR, VAPC and FLC unit behaviour.

Worked cases for each law plus the structural properties: washout rejects
constant offsets, the IP law accelerates independently of frequency while
a damped VSM does not, and the limiter's hysteresis/clamp/anti-windup
contract.
"""

from __future__ import annotations

import math

import pytest

from gfmstab.control import (FlcState, PllState, SyncState, flc_step,
                             pfr_output, pll_derivatives, sync_derivatives,
                             vapc_feedback)
from gfmstab.model import Dq
from gfmstab.params import (ConfigError, FlcConfig, PfrConfig,
                            SyncStrategyConfig)

OMEGA_B = 100.0 * math.pi
PFR = PfrConfig(k_pfr=20.0, t_pfr=1.0, dp_max=1.0)


def cfg_of(kind, **kw):
    kw.setdefault("h_gfm", 5.0)
    if kind in ("vsm_no_pll", "vsm_pll", "vsm_washout"):
        kw.setdefault("d_gfm", 202.6)
    if kind == "vsm_washout":
        kw.setdefault("t_wd", 2.0)
    if kind == "ip_control":
        kw.setdefault("k_p", 0.0096)
    if kind != "vsm_no_pll":
        kw.setdefault("pfr", PFR)
    return SyncStrategyConfig(kind=kind, **kw)


# --- swing laws --------------------------------------------------------------

def test_vsm_acceleration_at_reference_frequency():
    cfg = cfg_of("vsm_no_pll", d_gfm=20.0)
    state = SyncState(omega=1.0)
    out, _ = sync_derivatives(cfg, state, 0.7, 0.0, Dq(1.0, 0.0), OMEGA_B)
    assert out.domega == pytest.approx(0.7 / 10.0)


def test_ip_acceleration_is_frequency_independent():
    cfg = cfg_of("ip_control")
    for chi in (0.0, 0.01, 0.05):
        state = SyncState(ip_integrator=chi)
        out, _ = sync_derivatives(cfg, state, 0.7, 0.0, Dq(1.0, 0.0), OMEGA_B)
        assert out.domega == pytest.approx(0.07)


def test_vsm_acceleration_falls_as_frequency_rises():
    ip = cfg_of("ip_control")
    pll = cfg_of("vsm_pll")
    for omega in (1.0, 1.005, 1.02):
        s_ip = SyncState(ip_integrator=omega - 1.0)
        s_pll = SyncState(omega=omega)
        # collapsed PCC voltage: zero feedback power, PLL frozen at 1.0
        d_ip, _ = sync_derivatives(ip, s_ip, 0.7, 0.0, Dq(0.0, 0.0), OMEGA_B)
        d_pll, _ = sync_derivatives(pll, s_pll, 0.7, 0.0, Dq(0.0, 0.0),
                                    OMEGA_B)
        assert d_ip.domega >= d_pll.domega - 1e-15
        if omega > 1.0:
            assert d_pll.domega < d_ip.domega


@pytest.mark.parametrize("kind", ["vsm_no_pll", "vsm_pll", "vsm_washout",
                                  "ip_control"])
def test_equilibrium_all_derivatives_zero(kind):
    cfg = cfg_of(kind)
    state = SyncState(omega=1.0, ip_integrator=cfg.k_p * 0.7)
    out, omega_out = sync_derivatives(cfg, state, 0.7, 0.7, Dq(1.0, 0.0),
                                      OMEGA_B)
    assert out.domega == pytest.approx(0.0, abs=1e-15)
    assert out.dwashout_state == pytest.approx(0.0, abs=1e-15)
    assert out.dpfr_filter_state == pytest.approx(0.0, abs=1e-15)
    assert omega_out == pytest.approx(1.0)
    assert out.dtheta == pytest.approx(OMEGA_B)


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError):
        SyncStrategyConfig(kind="droop_q")


def test_washout_output_rejects_constant_offset():
    # constant frequency offset: the filter state converges to the offset
    # and the damping input decays below 1% within five time constants
    cfg = cfg_of("vsm_washout", t_wd=0.5)
    offset = 0.01
    x_w = 0.0
    dt = 1e-3
    for _ in range(int(5 * cfg.t_wd / dt)):
        dx = ((offset) - x_w) / cfg.t_wd
        x_w += dt * dx
    w = offset - x_w
    assert abs(w) < 0.01 * offset


# --- PLL ---------------------------------------------------------------------

def test_pll_locked():
    cfg = cfg_of("vsm_pll")
    dth, dxi, omega_pll = pll_derivatives(Dq(1.0, 0.0), 0.0, PllState(),
                                          cfg, OMEGA_B)
    assert omega_pll == pytest.approx(1.0)
    assert dxi == 0.0
    assert dth == pytest.approx(OMEGA_B)


def test_pll_proportional_path():
    cfg = cfg_of("vsm_pll")
    phi = 0.01
    v_g = Dq(0.95 * math.cos(phi), 0.95 * math.sin(phi))
    _, dxi, omega_pll = pll_derivatives(v_g, 0.0, PllState(), cfg, OMEGA_B)
    assert omega_pll - 1.0 == pytest.approx(cfg.k_p_pll * 0.95 * math.sin(phi),
                                            rel=1e-12)
    assert dxi == pytest.approx(0.95 * math.sin(phi), rel=1e-12)


def test_pll_saturation_freezes_integrator():
    cfg = cfg_of("vsm_pll")
    # large positive integrator: output pinned at +dw_pll_max, and a
    # positive error must not integrate further
    st = PllState(theta_pll=-0.05, xi_pll=1.0)
    _, dxi, omega_pll = pll_derivatives(Dq(1.0, 0.0), 0.0, st, cfg, OMEGA_B)
    assert omega_pll == pytest.approx(1.0 + cfg.dw_pll_max)
    assert dxi == 0.0
    # an error unwinding the saturation keeps integrating
    st = PllState(theta_pll=0.05, xi_pll=1.0)
    _, dxi, omega_pll = pll_derivatives(Dq(1.0, 0.0), 0.0, st, cfg, OMEGA_B)
    assert omega_pll == pytest.approx(1.0 + cfg.dw_pll_max)
    assert dxi < 0.0


def test_pll_collapsed_voltage_freezes():
    cfg = cfg_of("vsm_pll")
    st = PllState(theta_pll=0.4, xi_pll=1e-4)  # k_i * xi inside saturation
    _, dxi, omega_pll = pll_derivatives(Dq(0.0, 0.0), 0.0, st, cfg, OMEGA_B)
    assert dxi == 0.0
    assert omega_pll == pytest.approx(1.0 + cfg.k_i_pll * 1e-4)


# --- PFR ---------------------------------------------------------------------

def test_pfr_zero_at_reference():
    cfg = cfg_of("vsm_pll")
    dp, dx = pfr_output(cfg, 1.0, 0.0)
    assert dp == 0.0 and dx == 0.0


def test_pfr_settled_dc_gain():
    cfg = cfg_of("vsm_pll")
    # settled filter state for omega - omega_0 = -0.01 is +0.2 pu
    dp, dx = pfr_output(cfg, 0.99, 0.2)
    assert dp == pytest.approx(0.2)
    assert dx == pytest.approx(0.0, abs=1e-12)


def test_pfr_saturates():
    cfg = cfg_of("vsm_pll")
    dp, _ = pfr_output(cfg, 0.9, 2.0)  # settled state 20 * 0.1 = 2.0
    assert dp == 1.0


def test_pfr_algebraic_when_unfiltered():
    cfg = cfg_of("vsm_pll", pfr=PfrConfig(k_pfr=20.0, t_pfr=0.0, dp_max=1.0))
    dp, dx = pfr_output(cfg, 0.99, 0.0)
    assert dp == pytest.approx(0.2)
    assert dx == 0.0


def test_pfr_implicit_for_undamped_droop_variant():
    cfg = cfg_of("vsm_no_pll", d_gfm=20.0)
    assert pfr_output(cfg, 0.95, 0.5) == (0.0, 0.0)


# --- VAPC --------------------------------------------------------------------

def test_vapc_matches_injection_when_tracking():
    v_g = Dq(0.99, -0.1)
    i = Dq(0.7, -0.08)
    assert vapc_feedback(v_g, i) == pytest.approx(v_g.d * i.d + v_g.q * i.q)


def test_vapc_zero_on_collapsed_voltage():
    assert vapc_feedback(Dq(0.0, 0.0), Dq(0.0, -6.7)) == 0.0


# --- FLC ---------------------------------------------------------------------

def test_flc_hysteresis_sequence():
    flc = FlcConfig()  # v_a = 0.5, v_b = 0.9
    _, g, _ = flc_step(flc, 0.4, False, 1.0, 1.0)
    assert g is True
    _, g, _ = flc_step(flc, 0.8, g, 1.0, 1.0)
    assert g is True  # still armed below the release threshold
    _, g, _ = flc_step(flc, 0.95, g, 1.0, 1.0)
    assert g is False


def test_flc_clamps_and_flags_antiwindup():
    flc = FlcConfig(dw_max=0.005)
    omega, g, aw = flc_step(flc, 0.1, True, 1.02, 1.0)
    assert g is True and aw is True
    assert omega == pytest.approx(1.005)
    omega, _, aw = flc_step(flc, 0.1, True, 0.99, 1.0)
    assert omega == pytest.approx(0.995) and aw is True


def test_flc_inactive_passthrough():
    flc = FlcConfig()
    omega, g, aw = flc_step(flc, 1.0, False, 1.02, 1.0)
    assert (omega, g, aw) == (1.02, False, False)


def test_flc_holds_inertia_integrator_at_clamp():
    cfg = cfg_of("vsm_no_pll", d_gfm=20.0,
                 flc=FlcConfig(dw_max=0.005))
    state = SyncState(omega=1.005, flc=FlcState(gamma1=True, omega_ss=1.0))
    # collapsed voltage: the swing law pushes up, the clamp holds it
    out, omega_out = sync_derivatives(cfg, state, 0.7, 0.0, Dq(0.0, 0.0),
                                      OMEGA_B)
    assert omega_out == pytest.approx(1.005)
    assert out.domega == 0.0
    # a decelerating push is let through
    state2 = SyncState(omega=1.005, flc=FlcState(gamma1=True, omega_ss=1.0))
    out2, _ = sync_derivatives(cfg, state2, 0.7, 2.0, Dq(1.0, 0.0), OMEGA_B)
    assert out2.domega < 0.0
