"""Delimited output and report formatting.

The trajectory CSV layout is a contract: fixed header, '.' decimal point,
'\\n' newlines, no trailing delimiter, floats printed to nine significant
digits, gamma1 as 0/1.
"""

from __future__ import annotations

from pathlib import Path

from .analysis import CctResult, PdeltaCurve, SweepRow
from .simulator import Trajectory

TRAJECTORY_HEADER = ("t,delta_rad,omega_pu,p_g_pu,q_g_pu,v_g_pu,i_g_pu,"
                     "p_virt_pu,gamma1,k_cl")


def _f(x: float) -> str:
    return f"{x:.9g}"


def format_trajectory_csv(traj: Trajectory) -> str:
    if len(traj) == 0:
        raise ValueError("refusing to export an empty trajectory")
    lines = [TRAJECTORY_HEADER]
    for k in range(len(traj)):
        lines.append(",".join((
            _f(traj.t[k]), _f(traj.delta[k]), _f(traj.omega[k]),
            _f(traj.p_g[k]), _f(traj.q_g[k]), _f(traj.v_g_mag[k]),
            _f(traj.i_mag[k]), _f(traj.p_virt[k]),
            str(int(traj.gamma1[k])), _f(traj.k_cl[k]))))
    return "\n".join(lines) + "\n"


def export_trajectory(traj: Trajectory, path: str | Path) -> Path:
    """Write the trajectory CSV; surfaces I/O failures with the path."""
    path = Path(path)
    text = format_trajectory_csv(traj)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc}") from exc
    return path


def format_cct_report(result: CctResult, show_probes: bool = True) -> str:
    lines = [f"CCT = {result.cct:.3f} s (bracket [{result.bracket[0]:.3f}, "
             f"{result.bracket[1]:.3f}] s, probes {result.probes}, "
             f"resolution {result.resolution:.3f} s)"]
    if result.status != "ok":
        lines.append(f"warning: {result.status.replace('_', ' ')}")
    if result.undecided:
        lines.append(f"warning: {result.undecided} probe(s) undecided at the "
                     "horizon (counted unstable)")
    if show_probes:
        for duration, verdict in result.probe_log:
            lines.append(f"  probe {duration:7.3f} s -> {verdict}")
    return "\n".join(lines)


def export_probe_log(result: CctResult, path: str | Path) -> Path:
    path = Path(path)
    lines = ["duration_s,stable,reason"]
    for duration, verdict in result.probe_log:
        lines.append(f"{_f(duration)},{int(verdict.stable)},{verdict.reason}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def format_sweep_table(rows: list[SweepRow], axis: str) -> str:
    """Aligned text table of a clearing-time sweep."""
    header = f"{axis:>12s} {'CCT (ms)':>10s} {'bracket (ms)':>20s} {'note':>8s}"
    lines = [header, "-" * len(header)]
    for row in rows:
        label = f"{row.value}"
        if row.error is not None:
            lines.append(f"{label:>12s} {'-':>10s} {'-':>20s} failed: "
                         f"{row.error}")
            continue
        r = row.result
        note = "" if r.status == "ok" else r.status
        lines.append(f"{label:>12s} {r.cct * 1e3:10.0f} "
                     f"{r.bracket[0] * 1e3:9.0f}/{r.bracket[1] * 1e3:<10.0f} "
                     f"{note:>8s}")
    return "\n".join(lines)


def export_sweep_csv(rows: list[SweepRow], axis: str, path: str | Path,
                     ) -> Path:
    path = Path(path)
    lines = [f"{axis},cct_s,bracket_lo_s,bracket_hi_s,probes,undecided,status"]
    for row in rows:
        if row.error is not None:
            lines.append(f"{row.value},,,,,,failed: {row.error}")
            continue
        r = row.result
        lines.append(",".join((
            str(row.value), _f(r.cct), _f(r.bracket[0]), _f(r.bracket[1]),
            str(r.probes), str(r.undecided), r.status)))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def format_design_sheet(h_gfm: float, zeta: float, x_c: float,
                        omega_b: float, d_gfm: float, k_p: float,
                        omega_n: float) -> str:
    return "\n".join((
        "self-synchronisation design",
        f"  h_gfm   = {h_gfm:g} s",
        f"  zeta    = {zeta:.4f}",
        f"  x_c     = {x_c:g} pu",
        f"  omega_b = {omega_b:.4f} rad/s",
        f"  omega_n = {omega_n:.4g} rad/s",
        f"  d_gfm   = {d_gfm:.4g} pu   (VSM damping coefficient)",
        f"  k_p     = {k_p:.4g} pu   (IP proportional gain)",
    ))


def export_pdelta_csv(curves: list[PdeltaCurve], path: str | Path) -> Path:
    """One delta column plus one power column per curve."""
    if not curves:
        raise ValueError("no curves to export")
    path = Path(path)
    header = "delta_rad," + ",".join(f"p_{c.mode}_pu" for c in curves)
    lines = [header]
    n = len(curves[0].delta_grid)
    for c in curves[1:]:
        if len(c.delta_grid) != n:
            raise ValueError("curves must share one angle grid")
    for k in range(n):
        row = [_f(curves[0].delta_grid[k])]
        row += [_f(c.p[k]) for c in curves]
        lines.append(",".join(row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
