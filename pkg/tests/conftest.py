"""Shared fixtures: stock system parameters and the five benchmark tunings."""

from __future__ import annotations

import math
from pathlib import Path

import pytest

from gfmstab.params import (ConverterParams, FaultEvent, GridScenario,
                            PfrConfig, SimConfig, SyncStrategyConfig)

REPO_ROOT = Path(__file__).resolve().parents[1]
SCENARIO_DIR = REPO_ROOT / "scenarios"

# H = 5 s, zeta = 0.7 design: d_gfm = 4 H zeta omega_n = 202.6 pu
D_DESIGNED = 4.0 * 5.0 * 0.7 * math.sqrt(100.0 * math.pi / (2.0 * 5.0 * 0.15))

_PFR = PfrConfig(k_pfr=20.0, t_pfr=1.0, dp_max=1.0)

# The five benchmark strategy tunings exercised throughout the suite.
BENCHMARK_TUNINGS = {
    "vsm_nopll_d20": SyncStrategyConfig(kind="vsm_no_pll", h_gfm=5.0,
                                        d_gfm=20.0),
    "vsm_nopll_d203": SyncStrategyConfig(kind="vsm_no_pll", h_gfm=5.0,
                                         d_gfm=202.6),
    "vsm_pll": SyncStrategyConfig(kind="vsm_pll", h_gfm=5.0, d_gfm=202.6,
                                  pfr=_PFR),
    "vsm_washout": SyncStrategyConfig(kind="vsm_washout", h_gfm=5.0,
                                      d_gfm=202.6, t_wd=2.0, pfr=_PFR),
    "ip_control": SyncStrategyConfig(kind="ip_control", h_gfm=5.0,
                                     k_p=0.0096, pfr=_PFR),
}


def fault_of(duration: float, t_apply: float = 1.0) -> FaultEvent:
    return FaultEvent(t_apply=t_apply, t_clear=t_apply + duration)


def no_fault_grid(**kw) -> GridScenario:
    """Stock grid with the fault pushed beyond any simulated horizon."""
    return GridScenario(fault=FaultEvent(t_apply=1e9, t_clear=1e9 + 1.0), **kw)


@pytest.fixture(scope="session")
def stock_params() -> ConverterParams:
    return ConverterParams()


@pytest.fixture(scope="session")
def stock_grid() -> GridScenario:
    return GridScenario()


@pytest.fixture(scope="session")
def stock_sim() -> SimConfig:
    return SimConfig()
