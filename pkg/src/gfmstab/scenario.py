"""Scenario files: TOML sections mapping onto the parameter dataclasses.

A file carries up to eight sections; every key is optional except
strategy.kind, and a missing key takes the documented default (an empty
[converter] section means the stock converter).  Unknown sections or keys
are rejected by name.  The [flc] section's presence is what enables the
frequency limiter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .params import (CctBounds, ConfigError, ConverterParams, FaultEvent,
                     FlcConfig, GridScenario, PfrConfig, SimConfig,
                     SyncStrategyConfig)


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate."""


# section -> key -> expected scalar type
_SCHEMA = {
    "converter": {
        "s_rated": float, "v_ac_rated": float, "f_nom": float,
        "r_c": float, "x_c": float, "x_v": float, "i_max": float,
        "k_cc_p": float, "k_cc_i": float, "e_m0": float,
    },
    "grid": {
        "r_g": float, "x_g": float, "v_e": float, "omega_e": float,
        "p_g0": float, "v_g0": float,
    },
    "fault": {
        "t_apply": float, "t_clear": float, "location_fraction": float,
    },
    "strategy": {
        "kind": str, "h_gfm": float, "d_gfm": float, "k_p": float,
        "t_wd": float, "omega_0": float, "use_vapc": bool,
        "k_p_pll": float, "k_i_pll": float, "dw_pll_max": float,
        "pfr_uses_pll_freq": bool,
    },
    "pfr": {"k_pfr": float, "t_pfr": float, "dp_max": float},
    "flc": {"dw_max": float, "v_a": float, "v_b": float,
            "reset_integrator": bool},
    "sim": {
        "dt": float, "t_end": float, "record_stride": int,
        "delta_limit": float, "settle_band": float, "settle_window": float,
    },
    "cct": {"t_lo": float, "t_hi": float, "resolution": float},
}


@dataclass
class LoadedScenario:
    """Fully validated configuration of one case."""

    converter: ConverterParams
    grid: GridScenario
    strategy: SyncStrategyConfig
    sim: SimConfig
    cct: CctBounds


def _coerce_section(name: str, data: dict) -> dict:
    schema = _SCHEMA[name]
    out = {}
    for key, value in data.items():
        if key not in schema:
            raise ScenarioError(
                f"unknown key '{key}' in [{name}]; "
                f"known keys: {', '.join(sorted(schema))}")
        want = schema[key]
        if want is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioError(f"[{name}] {key} must be a number, "
                                    f"got {value!r}")
            out[key] = float(value)
        elif want is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioError(f"[{name}] {key} must be an integer, "
                                    f"got {value!r}")
            out[key] = value
        elif want is bool:
            if not isinstance(value, bool):
                raise ScenarioError(f"[{name}] {key} must be a boolean, "
                                    f"got {value!r}")
            out[key] = value
        else:
            if not isinstance(value, str):
                raise ScenarioError(f"[{name}] {key} must be a string, "
                                    f"got {value!r}")
            out[key] = value
    return out


def _build(cls, name: str, kwargs: dict):
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ScenarioError(f"[{name}] {exc}") from exc


def parse_scenario(text: str) -> LoadedScenario:
    """Parse and validate a scenario document.

    Raises ScenarioError with the offending section/key named, both for
    syntax problems (with line/column from the parser) and for violated
    parameter constraints.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario parse error: {exc}") from exc
    return build_scenario(raw)


def build_scenario(raw: dict) -> LoadedScenario:
    """Validate an already-decoded scenario mapping."""
    for section in raw:
        if section not in _SCHEMA:
            raise ScenarioError(
                f"unknown section [{section}]; "
                f"known sections: {', '.join(_SCHEMA)}")
        if not isinstance(raw[section], dict):
            raise ScenarioError(f"[{section}] must be a section, not a value")

    sec = {name: _coerce_section(name, raw.get(name, {})) for name in _SCHEMA}

    converter = _build(ConverterParams, "converter", sec["converter"])
    fault = _build(FaultEvent, "fault", sec["fault"])
    grid = _build(GridScenario, "grid", dict(sec["grid"], fault=fault))

    strat_kw = sec["strategy"]
    if "kind" not in strat_kw:
        raise ScenarioError("[strategy] kind is required")
    if sec["pfr"]:
        strat_kw["pfr"] = _build(PfrConfig, "pfr", sec["pfr"])
    if "flc" in raw:
        strat_kw["flc"] = _build(FlcConfig, "flc", sec["flc"])
    strategy = _build(SyncStrategyConfig, "strategy", strat_kw)

    sim = _build(SimConfig, "sim", sec["sim"])
    cct = _build(CctBounds, "cct", sec["cct"])

    # cross-type constraints
    if abs(grid.p_g0) > converter.i_max * grid.v_g0:
        raise ScenarioError(
            f"[grid] p_g0={grid.p_g0} exceeds the deliverable limit "
            f"i_max*v_g0={converter.i_max * grid.v_g0:.3f} pu")
    if sim.t_end is not None and fault.t_apply < sim.t_end <= fault.t_clear:
        raise ScenarioError("[sim] t_end must be > fault.t_clear")

    return LoadedScenario(converter=converter, grid=grid, strategy=strategy,
                          sim=sim, cct=cct)


def load_scenario(path: str | Path,
                  overrides: list[str] = ()) -> LoadedScenario:
    """Read, optionally override, and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: scenario parse error: {exc}") from exc
    if overrides:
        raw = apply_overrides(raw, list(overrides))
    try:
        return build_scenario(raw)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply 'section.key=value' overrides to a decoded scenario mapping.

    Values use TOML literal syntax (numbers, true/false, quoted strings);
    a bare word is taken as a string.  The result is validated exactly as
    if the file had been edited.
    """
    out = {k: dict(v) for k, v in raw.items() if isinstance(v, dict)}
    for item in overrides:
        if "=" not in item:
            raise ScenarioError(f"override {item!r} is not of the form "
                                "section.key=value")
        path, _, literal = item.partition("=")
        if path.count(".") != 1:
            raise ScenarioError(f"override key {path!r} must be a dotted "
                                "section.key path")
        section, key = path.split(".")
        try:
            value = tomllib.loads(f"v = {literal}")["v"]
        except tomllib.TOMLDecodeError:
            value = literal.strip()
        out.setdefault(section, {})[key] = value
    return out


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value) or math.isnan(value):
            raise ScenarioError(f"cannot serialize {value}")
        return repr(value)
    if isinstance(value, int):
        return str(value)
    return '"' + str(value).replace('"', '\\"') + '"'


def dump_resolved(loaded: LoadedScenario) -> str:
    """Canonical text of the fully defaulted configuration.

    Byte-stable for identical configurations, so two resolved dumps can be
    compared to prove that an override equals an edited file.
    """
    conv, grid, strat = loaded.converter, loaded.grid, loaded.strategy
    values = {
        "converter": {k: getattr(conv, k) for k in _SCHEMA["converter"]},
        "grid": {k: getattr(grid, k) for k in _SCHEMA["grid"]},
        "fault": {k: getattr(grid.fault, k) for k in _SCHEMA["fault"]},
        "strategy": {k: getattr(strat, k) for k in _SCHEMA["strategy"]},
        "pfr": {k: getattr(strat.pfr, k) for k in _SCHEMA["pfr"]},
        "sim": {k: getattr(loaded.sim, k) for k in _SCHEMA["sim"]},
        "cct": {k: getattr(loaded.cct, k) for k in _SCHEMA["cct"]},
    }
    if strat.flc is not None:
        values["flc"] = {k: getattr(strat.flc, k) for k in _SCHEMA["flc"]}
    lines = []
    for section in _SCHEMA:
        if section not in values:
            continue
        lines.append(f"[{section}]")
        for key in _SCHEMA[section]:
            if key not in values[section]:
                continue
            value = values[section][key]
            if value is None:
                continue  # unset optional (sim.t_end)
            lines.append(f"{key} = {_fmt_value(value)}")
        lines.append("")
    return "\n".join(lines)
