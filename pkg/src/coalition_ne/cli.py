"""Command-line entry point: validate | run | sweep | analyze | bench."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (
    analysis_report,
    build_constants,
    estimate_chi,
    estimate_game_lipschitz,
    max_step_size,
    nash_oracle,
)
from .config import (
    RunConfig,
    build_game,
    coalition_sizes,
    from_dict,
    load_config,
    raw_graph_matrices,
    write_config,
)
from .errors import (
    ConservationViolation,
    DimensionMismatch,
    InvalidGraph,
    InvalidInput,
    NoAnalyticGradient,
    NonConvergence,
    NotSquare,
    NumericalOverflow,
    OracleFailure,
    ParseError,
    ValidationError,
)
from .game import BoxConstraint, GameSpec
from .graph import validate_graph
from .records import write_sweep_csv
from .seeker import run
from .smoothing import RNG_ALGORITHM

log = logging.getLogger("coalition_ne")

OUTPUT_ENV = "COALITION_NE_OUTPUT"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

VALIDATION_ERRORS = (ValidationError, ParseError, InvalidInput, InvalidGraph, DimensionMismatch, NotSquare)
NUMERICAL_ERRORS = (NumericalOverflow, ConservationViolation, NonConvergence, OracleFailure)


# -- helpers -----------------------------------------------------------------------


def apply_overrides(cfg: RunConfig, seed=None, alpha=None, iters=None) -> RunConfig:
    params = cfg.params
    if seed is not None:
        params = replace(params, seeds=[seed])
    if alpha is not None:
        params = replace(params, alpha=alpha, alphas=[alpha])
    if iters is not None:
        params = replace(params, max_iters=iters)
    return replace(cfg, params=params)


def resolve_output_dir(cfg: RunConfig, command: str, override: Optional[str] = None) -> Path:
    if override:
        return Path(override)
    if cfg.output.directory:
        return Path(cfg.output.directory)
    root = os.environ.get(OUTPUT_ENV, "runs")
    return Path(root) / command


def write_metadata(out: Path, cfg: RunConfig, command: str, extra: Optional[dict] = None) -> None:
    meta = {
        "command": command,
        "config": cfg.to_dict(),
        "seeds": list(cfg.params.seeds),
        "rng_algorithm": RNG_ALGORITHM,
        "version": __version__,
    }
    if extra:
        meta.update(extra)
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    write_config(cfg, out / "config.yaml")


def reference_equilibrium(game: GameSpec, cfg: RunConfig) -> Optional[np.ndarray]:
    try:
        return nash_oracle(game, tol=cfg.analysis.tol)
    except NoAnalyticGradient:
        log.warning("no analytic subgradients; Nash gap will not be reported")
        return None


def convergence_constants(game: GameSpec, cfg: RunConfig):
    a = cfg.analysis
    rng = np.random.default_rng(a.analysis_seed)
    if a.D is None:
        D = estimate_game_lipschitz(game, a.lipschitz_samples, rng)
    elif isinstance(a.D, list):
        D = np.asarray(a.D, dtype=float)
    else:
        D = np.full(game.n, float(a.D))
    chi = a.chi
    if chi is None:
        chi = estimate_chi(game, a.chi_samples, rng)
    return build_constants(game, chi, D, a.mu_ref)


def coordinates(game: GameSpec) -> list[tuple[int, int]]:
    return [(i, j) for i, j, _ in game.players()]


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(f"cannot serialise {type(v)}")


def _steady(gaps: np.ndarray, fraction: float = 0.1) -> float:
    tail = max(1, int(round(fraction * (gaps.shape[-1] - 1))))
    return float(np.nanmean(gaps[..., -tail:]))


# -- commands ----------------------------------------------------------------------


def cmd_validate(cfg: RunConfig) -> dict:
    """Graph checks for every coalition plus game assembly."""
    sizes = coalition_sizes(cfg)
    mats = raw_graph_matrices(cfg, sizes)
    lines, ok = [], True
    if len(mats) != len(sizes):
        ok = False
        lines.append(f"{len(mats)} graph matrices given for {len(sizes)} coalitions")
    for i, (A, n) in enumerate(zip(mats, sizes)):
        try:
            report = validate_graph(A)
        except NotSquare as exc:
            ok = False
            lines.append(f"coalition {i}: {exc}")
            continue
        if A.shape[0] != n:
            ok = False
            lines.append(f"coalition {i}: graph size {A.shape[0]} != {n} players")
        if not report.passed:
            ok = False
            lines.append(f"coalition {i}: {report.summary()}")
    if ok:
        try:
            game = build_game(cfg)
            lines.append(f"game assembled: N={game.N}, sizes={list(game.sizes)}, n={game.n}")
        except VALIDATION_ERRORS as exc:
            ok = False
            lines.append(f"game assembly failed: {exc}")
    return {"passed": ok, "message": "all checks passed" if ok else "; ".join(lines), "details": lines}


def cmd_run(cfg: RunConfig, out: Path, workers: int = 1) -> list[Path]:
    game = build_game(cfg)
    x_star = reference_equilibrium(game, cfg)
    out.mkdir(parents=True, exist_ok=True)
    files, summaries = [], {}
    for seed in cfg.params.seeds:
        params = cfg.algorithm_params(seed=seed)
        log.info("run seed=%d alpha=%g iters=%d", seed, params.alpha, params.max_iters)
        rec = run(game, params, x_star=x_star, workers=workers)
        path = out / f"trajectory_seed{seed}.csv"
        rec.write_trajectory_csv(path, coordinates(game))
        files.append(path)
        summaries[str(seed)] = rec.summary
    report = {"x_star": x_star, "runs": summaries}
    _write_json(out / "report.json", report)
    write_metadata(out, cfg, "run")
    return files + [out / "report.json", out / "metadata.json"]


def cmd_sweep(cfg: RunConfig, out: Path, workers: int = 1) -> list[Path]:
    game = build_game(cfg)
    x_star = reference_equilibrium(game, cfg)
    constants = convergence_constants(game, cfg)
    a_max = max_step_size(constants)
    out.mkdir(parents=True, exist_ok=True)
    rows, table, series = [], [], {}
    for alpha in cfg.params.alphas:
        gaps = []
        for seed in cfg.params.seeds:
            rec = run(game, cfg.algorithm_params(alpha=alpha, seed=seed), x_star=x_star, workers=workers)
            for r in rec.series:
                gap = np.nan if r.nash_gap is None else r.nash_gap
                rows.append((r.t, alpha, seed, gap, r.tracking_error))
            gaps.append(rec.gaps)
            times = rec.times
        gaps = np.array(gaps)
        series[alpha] = (times, gaps.mean(axis=0))
        admissible = bool(alpha < a_max)
        if not admissible:
            log.warning("alpha=%g exceeds the admissible bound %.3e", alpha, a_max)
        table.append({
            "alpha": alpha,
            "admissible": admissible,
            "steady_state_gap": _steady(gaps),
            "final_gap_mean": float(np.nanmean(gaps[:, -1])),
        })
    write_sweep_csv(out / "sweep.csv", rows)
    alphas = list(series)
    times = series[alphas[0]][0]
    with open(out / "gap_series.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"alpha={a!r}" for a in alphas])
        for k, t in enumerate(times):
            w.writerow([int(t)] + [repr(float(series[a][1][k])) for a in alphas])
    with open(out / "steady_state.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "admissible", "steady_state_gap", "final_gap_mean"])
        for row in table:
            w.writerow([repr(row["alpha"]), row["admissible"], repr(row["steady_state_gap"]),
                        repr(row["final_gap_mean"])])
    _write_json(out / "report.json", {"alpha_max": a_max, "x_star": x_star, "alphas": table})
    write_metadata(out, cfg, "sweep")
    return [out / n for n in ("sweep.csv", "gap_series.csv", "steady_state.csv", "report.json", "metadata.json")]


def cmd_analyze(cfg: RunConfig, out: Path) -> list[Path]:
    game = build_game(cfg)
    constants = convergence_constants(game, cfg)
    a_max = max_step_size(constants)
    grid = cfg.analysis.alphas
    if grid is None:
        grid = list(np.geomspace(a_max * 1e-3, a_max * 1.5, 60))
    grid = sorted(set(float(a) for a in list(grid) + list(cfg.params.alphas)))
    report = analysis_report(constants, grid, mu_note=f"mu schedule mode {cfg.params.mu_mode!r}")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "analysis.json", report)
    with open(out / "rho_curve.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "rho", "admissible", "x_bound", "phi_bound"])
        for row in report["alphas"]:
            w.writerow([repr(row["alpha"]), repr(row["rho"]), row["admissible"],
                        repr(row.get("x_bound", float("nan"))), repr(row.get("phi_bound", float("nan")))])
    write_metadata(out, cfg, "analyze")
    return [out / "analysis.json", out / "rho_curve.csv", out / "metadata.json"]


def cmd_bench(cfg: RunConfig, out: Path, workers: int = 1) -> list[Path]:
    from .cournot import run_benchmark
    from .records import RunRecord, StepRecord

    if cfg.game.benchmark != "cournot":
        raise ValidationError("bench requires game.benchmark: cournot")
    game = build_game(cfg)
    constants = convergence_constants(game, cfg)
    a_max = max_step_size(constants)
    gr = cfg.graph
    if gr.kind == "matrix":
        raise ValidationError("bench supports the ring and complete generators only")
    report = run_benchmark(
        cfg.params.alphas,
        cfg.params.max_iters,
        cfg.params.seeds,
        box=BoxConstraint(*cfg.game.box),
        graph_kind=gr.kind,
        self_weight=gr.self_weight,
        mu=cfg.algorithm_params().mu,
        tol=cfg.analysis.tol,
        record_every=cfg.params.record_every,
        workers=workers,
        alpha_max=a_max,
    )
    out.mkdir(parents=True, exist_ok=True)
    files = []
    coords = coordinates(game)
    for a in report.alphas:
        rec = RunRecord(metadata={})
        for t, x in zip(report.times, report.trajectories[a]):
            rec.series.append(StepRecord(int(t), x, 0.0, (), 0.0))
        path = out / f"actions_alpha{a!r}.csv"
        rec.write_trajectory_csv(path, coords)
        files.append(path)
    rows = []
    for a in report.alphas:
        for s_idx, seed in enumerate(report.seeds):
            for k, t in enumerate(report.times):
                rows.append((int(t), a, seed, report.gaps[a][s_idx, k], report.tracking[a][s_idx, k]))
    write_sweep_csv(out / "sweep.csv", rows)
    _write_json(out / "report.json", report.summary())
    write_metadata(out, cfg, "bench")
    return files + [out / "sweep.csv", out / "report.json", out / "metadata.json"]


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coalition-ne", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "run", "sweep", "analyze", "bench"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--output-dir", help=f"output directory (default: config, then ${OUTPUT_ENV}/<command>)")
        p.add_argument("--seed", type=int, help="override params.seeds with a single seed")
        p.add_argument("--alpha", type=float, help="override params.alpha and params.alphas")
        p.add_argument("--iters", type=int, help="override params.max_iters")
        p.add_argument("--workers", type=int, default=1, help="parallel workers (results unchanged)")
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, seed=args.seed, alpha=args.alpha, iters=args.iters)
        cfg = from_dict(cfg.to_dict())  # re-validate overridden values
        if args.command == "validate":
            result = cmd_validate(cfg)
            print(result["message"])
            return EXIT_OK if result["passed"] else EXIT_VALIDATION
        out = resolve_output_dir(cfg, args.command, args.output_dir)
        if args.command == "run":
            files = cmd_run(cfg, out, workers=args.workers)
        elif args.command == "sweep":
            files = cmd_sweep(cfg, out, workers=args.workers)
        elif args.command == "analyze":
            files = cmd_analyze(cfg, out)
        else:
            files = cmd_bench(cfg, out, workers=args.workers)
        if not args.quiet:
            for f in files:
                print(f)
        return EXIT_OK
    except VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
