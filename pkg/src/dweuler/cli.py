"""Experiment driver.

Subcommands:
  run          -- integrate the resolution ladder, write snapshots + CSVs
  analyze      -- Cesaro/defect post-processing of a finished run directory
  consistency  -- run the ladder with weak-form residual accumulation
  convergence  -- vortex ladder against the exact reference, rate table

Configuration is flat key=value (see config.ExperimentConfig); precedence
is CLI flags > config file > defaults, with DWEULER_OUT as the output-dir
fallback.  Exit codes: 0 success, 2 usage/config errors, 3 numerical
failure (a state dump is written next to the run artifacts).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND_NAME
from .config import ExperimentConfig, config_hash, parse_config_items
from .diagnostics import ConsistencyAccumulator, refinement_errors
from .eos import GasParams, PointState, entropy_from_conservative, relative_energy
from .errors import FormatError, SolverFailure, UsageError
from .grid import Field, Grid, read_field, write_field
from .ic import (KHConfig, VortexConfig, constant_state, isentropic_vortex,
                 kelvin_helmholtz, vortex_reference)
from .kconv import EnsembleSnapshot, cesaro, cesaro_cauchy_table, defect_field, trace_compatibility
from .grid import l1_distance
from .solver import RunRecord, SchemeConfig, StepReport, run

__all__ = ["main"]

MANIFEST_NAME = "manifest.txt"


# ---------------------------------------------------------------------------
# config resolution

_CLI_KEYS = ("scheme", "gamma", "cfl", "tend", "n_lo", "n_hi", "seed",
             "workers", "snapshot_every", "alpha_u", "alpha_rho", "ic",
             "vortex_strength", "kh_eps", "out")


def _add_common_flags(p):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", help="output directory (fallback: $DWEULER_OUT)")
    p.add_argument("--scheme", choices=("lf", "vfv"))
    p.add_argument("--gamma", type=float)
    p.add_argument("--cfl", type=float)
    p.add_argument("--tend", type=float)
    p.add_argument("--n-lo", dest="n_lo", type=int)
    p.add_argument("--n-hi", dest="n_hi", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    p.add_argument("--alpha-u", dest="alpha_u", type=float)
    p.add_argument("--alpha-rho", dest="alpha_rho", type=float)
    p.add_argument("--ic", choices=("kh", "vortex", "uniform"))
    p.add_argument("--vortex-strength", dest="vortex_strength", type=float)
    p.add_argument("--kh-eps", dest="kh_eps", type=float)


def _resolve_config(args, tend_default=None) -> ExperimentConfig:
    items = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        items.update(parse_config_items(path.read_text()))
    for key in _CLI_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            items[key] = value
    if "out" not in items:
        env = os.environ.get("DWEULER_OUT")
        if env:
            items["out"] = env
    if tend_default is not None and "tend" not in items:
        items["tend"] = tend_default
    try:
        return ExperimentConfig(**{**_defaults_dict(), **items})
    except TypeError as exc:
        raise UsageError(str(exc)) from exc


def _defaults_dict():
    from dataclasses import asdict
    return asdict(ExperimentConfig())


def initial_field(cfg: ExperimentConfig, grid: Grid, gas: GasParams) -> Field:
    if cfg.ic == "kh":
        kh = KHConfig(j1=cfg.kh_j1, j2=cfg.kh_j2, eps=cfg.kh_eps,
                      modes=cfg.kh_modes, seed=cfg.seed,
                      inner_state=cfg.kh_inner, outer_state=cfg.kh_outer)
        return kelvin_helmholtz(kh, grid, gas)
    if cfg.ic == "vortex":
        return isentropic_vortex(grid, gas, cfg=vortex_config(cfg))
    return constant_state(grid, cfg.uniform_state, gas)


def vortex_config(cfg: ExperimentConfig) -> VortexConfig:
    return VortexConfig(strength=cfg.vortex_strength, sigma=cfg.vortex_sigma,
                        center=cfg.vortex_center, rho_bg=cfg.vortex_rho_bg,
                        u_bg=cfg.vortex_u_bg, p_bg=cfg.vortex_p_bg)


def scheme_config(cfg: ExperimentConfig) -> SchemeConfig:
    return SchemeConfig(scheme=cfg.scheme, cfl=cfg.cfl,
                        vfv_alpha_velocity=cfg.alpha_u,
                        vfv_alpha_density=cfg.alpha_rho,
                        t_end=cfg.tend,
                        lf_global_lambda=cfg.lf_global_lambda)


# ---------------------------------------------------------------------------
# artifact writers

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, bool):
        return "1" if value else "0"
    return str(value)


def write_csv(path, header, rows, cfg: ExperimentConfig):
    lines = [f"# dweuler {__version__} config={config_hash(cfg)}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_stability_csv(path, record: RunRecord, cfg: ExperimentConfig):
    rows = [[getattr(r, name) for name in StepReport.CSV_FIELDS]
            for r in record.reports]
    write_csv(path, StepReport.CSV_FIELDS, rows, cfg)


class SnapshotWriter:
    """Observer writing a field dump every `every` accepted steps."""

    def __init__(self, outdir, n, every, gamma):
        self.outdir = Path(outdir)
        self.n = n
        self.every = every
        self.gamma = gamma

    def __call__(self, event):
        if self.every > 0 and event.index % self.every == 0:
            path = self.outdir / f"state_n{self.n}_step{event.index:06d}.dwfld"
            write_field(path, event.new, event.t_new, self.gamma)


def _write_manifest(outdir: Path, cfg: ExperimentConfig, summaries):
    lines = [f"# dweuler {__version__} manifest config={config_hash(cfg)}",
             f"# backend={BACKEND_NAME}"]
    lines.append(cfg.canonical_text().rstrip("\n"))
    for s in summaries:
        lines.append(
            f"# run n={s['n']} nx={s['nx']} steps={s['steps']} "
            f"retries={s['retries']} wall={s['wall']:.3f}s snapshot={s['snapshot']}")
    (outdir / MANIFEST_NAME).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# run

def _run_single(cfg: ExperimentConfig, n: int, consistency: bool = False):
    """One resolution of the ladder; returns (summary, record, result)."""
    gas = GasParams(cfg.gamma)
    nx = 2 ** (5 + n)
    grid = Grid(nx)
    field = initial_field(cfg, grid, gas)
    outdir = Path(cfg.out)
    observers = []
    if cfg.snapshot_every > 0:
        observers.append(SnapshotWriter(outdir, n, cfg.snapshot_every, cfg.gamma))
    acc = None
    if consistency:
        acc = ConsistencyAccumulator(grid, gas, cfg.tend)
        acc.start(field)
        observers.append(acc)
    try:
        record = run(field, scheme_config(cfg), gas, observers)
    except SolverFailure as exc:
        dump = outdir / f"state_n{n}_failed.dwfld"
        if exc.state is not None:
            write_field(dump, exc.state, exc.t or 0.0, cfg.gamma)
        raise SolverFailure(f"{exc} [state dump: {dump}]") from exc
    snapshot = f"state_n{n}.dwfld"
    write_field(outdir / snapshot, record.final, cfg.tend, cfg.gamma)
    _write_stability_csv(outdir / f"stability_n{n}.csv", record, cfg)
    summary = {
        "n": n, "nx": nx, "steps": record.steps,
        "retries": int(record.series("retries").sum()),
        "wall": record.wall_seconds, "snapshot": snapshot,
    }
    return summary, record, (acc.finalize() if acc else None)


def _run_single_summary(cfg, n):
    return _run_single(cfg, n)[0]


def _prepare_outdir(cfg: ExperimentConfig) -> Path:
    outdir = Path(cfg.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"output directory not writable: {outdir} ({exc})")
    return outdir


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    outdir = _prepare_outdir(cfg)
    ns = [n for n, _ in cfg.resolutions()]
    if cfg.workers > 1 and len(ns) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            summaries = list(pool.map(_run_single_summary, [cfg] * len(ns), ns))
    else:
        summaries = [_run_single_summary(cfg, n) for n in ns]
    _write_manifest(outdir, cfg, summaries)
    for s in summaries:
        print(f"n={s['n']} nx={s['nx']} steps={s['steps']} "
              f"retries={s['retries']} wall={s['wall']:.2f}s -> {s['snapshot']}")
    print(f"manifest: {outdir / MANIFEST_NAME}")
    return 0


# ---------------------------------------------------------------------------
# analyze

def _load_run_dir(outdir: Path):
    manifest = outdir / MANIFEST_NAME
    if not manifest.is_file():
        raise UsageError(f"no {MANIFEST_NAME} in {outdir}")
    cfg = ExperimentConfig(**{**_defaults_dict(),
                              **parse_config_items(manifest.read_text())})
    missing = []
    snapshots = []
    for n, nx in cfg.resolutions():
        path = outdir / f"state_n{n}.dwfld"
        if not path.is_file():
            missing.append(str(path))
            continue
        field, t, gamma = read_field(path)
        snapshots.append((n, field))
    if missing:
        raise UsageError("missing snapshots: " + ", ".join(missing))
    return cfg, snapshots


def cmd_analyze(args) -> int:
    outdir = Path(args.rundir)
    cfg, snapshots = _load_run_dir(outdir)
    gas = GasParams(cfg.gamma)

    rows = [(a, b, r["rho"], r["m"], r["S"], r["E"])
            for r in refinement_errors(snapshots, gas)
            for a, b in [r["pair"]]]
    write_csv(outdir / "refinement_errors.csv",
              ("n_coarse", "n_fine", "rho", "m", "S", "E"), rows, cfg)

    labels = [n for n, _ in snapshots]
    ens = EnsembleSnapshot.from_states([f for _, f in snapshots], gas, labels)
    band = None
    trace_rows = []
    for N in range(1, ens.size + 1):
        rho_c, m_c, S_c = cesaro(ens, N)
        E_c = ens.E[:N].mean(axis=0)
        data = np.concatenate([rho_c.data, m_c.data, S_c.data,
                               E_c[:, :, None]], axis=-1)
        write_field(outdir / f"cesaro_N{N}.dwfld",
                    Field(ens.grid, data, check=False), cfg.tend, cfg.gamma)
        if N >= 2:
            d = defect_field(ens, N, gas)
            write_field(outdir / f"defects_N{N}.dwfld", d.as_field(),
                        cfg.tend, cfg.gamma)
            rep = trace_compatibility(d, gas)
            band = _band_fraction(d.Edef)
            trace_rows.append((N, rep.identity_max_abs, int(rep.bracket_ok),
                               rep.bracket_max_violation, rep.kinetic_min,
                               rep.internal_min, rep.edef_min,
                               rep.min_eigenvalue, band))
    write_csv(outdir / "trace_compat.csv",
              ("N", "identity_max_abs", "bracket_ok", "bracket_max_violation",
               "kinetic_min", "internal_min", "edef_min", "min_eigenvalue",
               "edef_band_fraction"), trace_rows, cfg)

    if ens.size >= 3:
        cauchy = cesaro_cauchy_table(ens, gas)
        write_csv(outdir / "cesaro_cauchy.csv",
                  ("N", "rho", "m", "S", "E", "R", "Edef", "W1"),
                  [(r["N"], r["rho"], r["m"], r["S"], r["E"], r["R"],
                    r["Edef"], r["W1"]) for r in cauchy], cfg)
    print(f"analysis artifacts written to {outdir}")
    return 0


def _band_fraction(edef: Field, lo=0.15, hi=0.85) -> float:
    """Fraction of the L1 mass of a scalar field inside x2 in [lo, hi]."""
    x2 = edef.grid.centers()
    mask = (x2 >= lo) & (x2 <= hi)
    mass = np.abs(edef.data[:, :, 0])
    total = mass.sum()
    return float(mass[mask, :].sum() / total) if total > 0 else 1.0


# ---------------------------------------------------------------------------
# consistency / convergence

def cmd_consistency(args) -> int:
    cfg = _resolve_config(args)
    outdir = _prepare_outdir(cfg)
    summaries = []
    rows = []
    for n, nx in cfg.resolutions():
        summary, record, result = _run_single(cfg, n, consistency=True)
        summaries.append(summary)
        for form, k1, k2, f1, f2, resid in result.rows():
            rows.append((n, nx, form, k1, k2, f1, f2, resid))
    _write_manifest(outdir, cfg, summaries)
    write_csv(outdir / "consistency.csv",
              ("n", "nx", "form", "k1", "k2", "flavor1", "flavor2", "residual"),
              rows, cfg)
    print(f"consistency residuals: {outdir / 'consistency.csv'}")
    return 0


def cmd_convergence(args) -> int:
    cfg = _resolve_config(args, tend_default=0.05)
    if cfg.ic != "vortex":
        cfg = replace(cfg, ic="vortex")
    outdir = _prepare_outdir(cfg)
    gas = GasParams(cfg.gamma)
    vc = vortex_config(cfg)
    rows = []
    prev_err = None
    for n, nx in cfg.resolutions():
        grid = Grid(nx)
        record = run(initial_field(cfg, grid, gas), scheme_config(cfg), gas)
        ref = vortex_reference(vc, grid, gas, cfg.tend)
        err = l1_distance(record.final.component(0), ref.component(0))
        U, R = record.final.data, ref.data
        S = entropy_from_conservative(U[:, :, 0], U[:, :, 1:3], U[:, :, 3], gas)
        Sr = entropy_from_conservative(R[:, :, 0], R[:, :, 1:3], R[:, :, 3], gas)
        rel = relative_energy(PointState(U[:, :, 0], U[:, :, 1:3], S),
                              PointState(R[:, :, 0], R[:, :, 1:3], Sr), gas)
        rel_err = float(rel.sum() * grid.h * grid.h)
        order = float(np.log2(prev_err / err)) if prev_err else float("nan")
        rows.append((n, nx, record.steps, err, order, rel_err))
        prev_err = err
    write_csv(outdir / "convergence.csv",
              ("n", "nx", "steps", "l1_rho_error", "order", "relative_energy"),
              rows, cfg)
    for r in rows:
        print(f"n={r[0]} nx={r[1]} steps={r[2]} L1(rho)={r[3]:.4e} "
              f"order={r[4]:.3f} relE={r[5]:.4e}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dweuler",
        description="Structure-preserving Euler solvers with averaged-"
                    "refinement diagnostics")
    parser.add_argument("--version", action="version",
                        version=f"dweuler {__version__} ({BACKEND_NAME} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the resolution ladder")
    _add_common_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_an = sub.add_parser("analyze", help="post-process a finished run directory")
    p_an.add_argument("rundir", help="directory holding manifest.txt + snapshots")
    p_an.set_defaults(func=cmd_analyze)

    p_co = sub.add_parser("consistency", help="run ladder with weak-form residuals")
    _add_common_flags(p_co)
    p_co.set_defaults(func=cmd_consistency)

    p_cv = sub.add_parser("convergence",
                          help="vortex ladder vs exact reference (default tend 0.05)")
    _add_common_flags(p_cv)
    p_cv.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
