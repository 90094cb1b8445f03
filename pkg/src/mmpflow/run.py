"""Execute a RunConfig: integrate, monitor, and write CSV, snapshots and a manifest."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import RunConfig, to_sections
from .dynamics import MMPState, reduce_mode
from .errors import Instability, NoConvergence, WindowUnderflow
from .initial import random_seeded, single_mode, taylor_green
from .integrate import imex_integrate, picard_solve
from .littlewood_paley import DyadicProfile, build_profile
from .monitors import (
    Diagnostics,
    DiagnosticsRecord,
    DiagnosticsSeries,
    adaptive_cutoff_N,
    bkm_integral,
    blowup_indicator,
    energy_ledger,
    sampling_bias,
    zeta_sup,
    zhou_integral,
)
from .snapshot import write_snapshot
from .spectral import Grid

log = logging.getLogger(__name__)

OUTPUT_ENV = "MMP_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INSTABILITY = 2
EXIT_VERIFY_FAILED = 3


def initial_state(cfg: RunConfig, grid: Grid) -> MMPState:
    ini = cfg.initial
    amps = dict(amp_u=ini.amp_u, amp_omega=ini.amp_omega, amp_b=ini.amp_b)
    if ini.preset == "taylor_green":
        return taylor_green(grid, **amps)
    if ini.preset == "single_mode":
        return single_mode(grid, ini.mode, **amps)
    return random_seeded(grid, ini.seed, ini.kmax, **amps)


def resolve_output_dir(cfg: RunConfig, override: Optional[str] = None) -> Path:
    """Explicit override, then the environment variable, then the config value."""
    return Path(override or os.environ.get(OUTPUT_ENV) or cfg.output_dir)


# ----------------------------------------------------------------------------
# CSV


def _num(x: float) -> str:
    return format(float(x), ".17g")


def csv_header(cfg: RunConfig, profile: DyadicProfile) -> list[str]:
    mon = cfg.monitors
    cols = ["time", "energy_u", "energy_omega", "energy_b"]
    cols += ["grad_u_sq", "grad_omega_sq", "grad_b_sq", "div_omega_sq", "omega_sq", "production"]
    cols += [f"hs_{s!r}" for s in mon.hs]
    cols += ["curl_u_l2", "curl_omega_l2", "curl_b_l2", "curl_u_sup", "curl_b_sup"]
    cols += [f"block_sup_{j}" for j in profile.blocks]
    cols += [f"grad_u_L{p!r}" for p in mon.lp]
    cols += [f"delta_{e!r}" for e in mon.epsilons]
    return cols


def csv_rows(cfg: RunConfig, profile: DyadicProfile, series: DiagnosticsSeries) -> list[list[str]]:
    """One row per record; the delta columns hold the indicator over the records so far."""
    mon = cfg.monitors
    rows = []
    recs = series.records
    for i, r in enumerate(recs):
        row = [_num(r.time), *map(_num, r.l2_energy), *map(_num, r.dissipation), _num(r.production)]
        row += [_num(r.hs_norms[s]) for s in mon.hs]
        row += [*map(_num, r.curl_l2), *map(_num, r.curl_sup)]
        row += [_num(r.block_sups[j]) for j in profile.blocks]
        row += [_num(r.grad_lp[p]) for p in mon.lp]
        prefix = DiagnosticsSeries(recs[: i + 1], series.params, series.grid)
        for eps in mon.epsilons:
            try:
                row.append(_num(blowup_indicator(prefix, eps, profile).delta))
            except WindowUnderflow:
                row.append("")
        rows.append(row)
    return rows


def write_csv(path: Path, cfg: RunConfig, profile: DyadicProfile, series: DiagnosticsSeries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(csv_header(cfg, profile))
        writer.writerows(csv_rows(cfg, profile, series))


# ----------------------------------------------------------------------------
# analyses for the manifest


def summarize(cfg: RunConfig, profile: DyadicProfile, series: DiagnosticsSeries) -> dict:
    out: dict = {}
    if len(series) == 0:
        return out
    t = series.times
    last = series.records[-1]
    if len(series) >= 2:
        ledger = energy_ledger(series)
        out["energy_balance_max_residual"] = ledger.max_abs_residual
        out["energy_inequality_worst_violation"] = ledger.worst_violation
        out["energy_inequality_tolerance"] = ledger.tolerance
        bkm = bkm_integral(series, t[0], t[-1])
        out["bkm_integral"] = {"curl_u": bkm.velocity, "curl_b": bkm.magnetic}
        out["zhou_integral"] = {repr(p): zhou_integral(series, p, t[0], t[-1]) for p in cfg.monitors.lp}
    out["zeta_sup"] = zeta_sup(series, t[0], t[-1])
    out["adaptive_cutoff_N"] = adaptive_cutoff_N(*last.curl_l2, series.params, 1.0)
    deltas = {}
    for eps in cfg.monitors.epsilons:
        try:
            rep = blowup_indicator(series, eps, profile)
        except WindowUnderflow:
            deltas[repr(eps)] = None
            continue
        deltas[repr(eps)] = {"delta": rep.delta, "argmax_j": rep.argmax_j, "block_range": list(rep.block_range)}
        if rep.delta > cfg.monitors.warn_threshold:
            log.warning("delta(%g) = %.6g exceeds warn threshold %g", eps, rep.delta, cfg.monitors.warn_threshold)
            deltas[repr(eps)]["warning"] = True
    out["delta"] = deltas
    return out


@dataclass
class RunResult:
    exit_code: int
    output_dir: Path
    message: str = ""
    series: Optional[DiagnosticsSeries] = None
    files: list[Path] = field(default_factory=list)


def run(cfg: RunConfig, output_dir: Optional[str] = None) -> RunResult:
    out = resolve_output_dir(cfg, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = Grid(cfg.n)
    profile = build_profile(grid)
    params, reduction = reduce_mode(cfg.params, cfg.reduction)
    state = reduction.apply(initial_state(cfg, grid))
    diag = Diagnostics(profile, cfg.monitors.hs, cfg.monitors.lp)
    records: list[DiagnosticsRecord] = []
    files: list[Path] = []

    def monitor(s: MMPState) -> DiagnosticsRecord:
        rec = diag(s)
        records.append(rec)
        return rec

    def snapshot(name: str, s: MMPState):
        path = out / name
        write_snapshot(path, s, params)
        files.append(path)

    stride = cfg.monitors.snapshot_stride
    exit_code, message, final = EXIT_OK, "completed", None
    if stride:
        snapshot("snap_000000.mmp", state)
    try:
        if cfg.solver.method == "imex":

            def on_step(i: int, s: MMPState):
                if stride and i % stride == 0:
                    snapshot(f"snap_{i:06d}.mmp", s)

            traj, _ = imex_integrate(
                state, params, cfg.solver.T, cfg.dt, monitors=[monitor], cadence=cfg.monitors.cadence,
                stride=max(1, cfg.steps), on_step=on_step,
            )
        else:
            traj, report = picard_solve(state.u, state.omega, state.b, params, cfg.picard_config(), profile)
            for i, s in enumerate(traj.states):
                if i % cfg.monitors.cadence == 0 or i == len(traj) - 1:
                    monitor(s)
                if stride and i and i % stride == 0:
                    snapshot(f"snap_{i:06d}.mmp", s)
            message = f"picard {'converged' if report.converged else 'stopped'} after {report.iterations} iterations"
        final = traj.final
        snapshot("final.mmp", final)
    except Instability as exc:
        exit_code, message = EXIT_INSTABILITY, str(exc)
        if exc.last_state is not None:
            snapshot("last_good.mmp", exc.last_state)
        log.error("run aborted: %s", exc)
    except NoConvergence as exc:
        exit_code, message = EXIT_INSTABILITY, str(exc)
        snapshot("last_good.mmp", state)
        log.error("run aborted: %s", exc)

    series = DiagnosticsSeries(tuple(records), params, grid)
    csv_path = out / "diagnostics.csv"
    write_csv(csv_path, cfg, profile, series)
    files.append(csv_path)

    manifest = {
        "config": to_sections(cfg),
        "status": {"exit_code": exit_code, "message": message},
        "final_time": records[-1].time if records else None,
        "blocks": {"j_min": profile.j_min, "j_max": profile.j_max, "j_full": profile.j_full},
        "versions": {"mmpflow": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "analysis": summarize(cfg, profile, series),
    }
    if final is not None:
        bias = sampling_bias(final, profile)
        manifest["sup_sampling_bias"] = {str(j): {"grid": g, "oversampled": o} for j, (g, o) in bias.items()}
    man_path = out / "manifest.json"
    man_path.write_text(json.dumps(_clean(manifest), indent=2, sort_keys=True) + "\n")
    files.append(man_path)
    return RunResult(exit_code, out, message, series, files)


def _clean(obj):
    """JSON-safe copy: tuples become lists, non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj
