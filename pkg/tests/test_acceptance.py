"""Acceptance suite: one test per criterion, each reporting a pass/fail line.

The lines are printed immediately (visible with ``-s``) and repeated in the
terminal summary under "acceptance criteria".
"""

import time

import numpy as np
import pytest

from coalition_ne.analysis import (
    best_response_sweep,
    estimate_game_lipschitz,
    max_step_size,
    nash_oracle,
    spectral_radius_M,
    steady_state_bounds,
    vi_residual,
)
from coalition_ne.cli import cmd_run
from coalition_ne.config import from_dict
from coalition_ne.cournot import run_benchmark
from coalition_ne.seeker import AlgorithmParams, run
from coalition_ne.smoothing import SmoothingSchedule, check_sandwich, make_stream, oracle_moments

from conftest import ACCEPTANCE_RESULTS, single_coalition_game


def report(number, ok, line):
    ACCEPTANCE_RESULTS[number] = (bool(ok), line)
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {line}")
    assert ok, line


def test_criterion_1_conservation(cournot):
    start = time.perf_counter()
    rec = run(cournot, AlgorithmParams(alpha=0.1, max_iters=2000, seed=1, record_every=1))
    elapsed = time.perf_counter() - start
    worst = float(rec.conservation_residuals.max())
    ok = len(rec.series) == 2001 and worst <= 1e-9 and elapsed <= 60
    report(1, ok, f"max tracker-average residual {worst:.2e} over 2001 records (<= 1e-9), {elapsed:.1f}s")


def test_criterion_2_unbiasedness():
    start = time.perf_counter()
    n = 6
    game = single_coalition_game(
        [lambda x: float(x @ x)] + [lambda x: 0.0] * (n - 1),
        batch=[lambda X: (X**2).sum(axis=1)] + [None] * (n - 1),
    )
    x = np.array([0.5, -1.0, 2.0, 0.3, -0.7, 1.2])
    mean, se, _ = oracle_moments(game, (0, 0), x, 0.1, 10**6, make_stream(2024, (2,)))
    elapsed = time.perf_counter() - start
    z = np.abs(mean - 2 * x) / se
    ok = bool(np.all(z <= 3)) and elapsed <= 60
    report(2, ok, f"max |mean - 2x| / stderr = {z.max():.2f} (<= 3) at 10^6 samples, {elapsed:.1f}s")


def test_criterion_3_sandwich(cournot):
    rng = np.random.default_rng(33)
    D = estimate_game_lipschitz(cournot, 2000, rng)
    points = rng.uniform(cournot.lower, cournot.upper, (100, cournot.n))
    failures, checks = 0, 0
    for x in points:
        for mu in (0.5, 0.1, 0.01):
            for k in range(cournot.n):
                i, j = cournot.player_at(k)
                checks += 1
                if not check_sandwich(cournot, (i, j), x, mu, D[k], 10**4, rng):
                    failures += 1
    report(3, failures == 0, f"{checks - failures}/{checks} sandwich checks passed (100 points x 3 mu x 24 players)")


def test_criterion_4_spectral(cournot_constants):
    c = cournot_constants
    a_max = max_step_size(c)
    grid = np.linspace(0, a_max, 102)[1:-1]
    inside = max(spectral_radius_M(a, c) for a in grid)
    outside_a = 1.5 * a_max
    rho_out = spectral_radius_M(outside_a, c)
    needs_outside = c.k4 * outside_a**2 >= c.k5
    ok = inside < 1 and (rho_out >= 1 or not needs_outside)
    report(
        4,
        ok,
        f"alpha_max={a_max:.3e}; max rho on 100 interior points = {inside:.12f} (< 1); "
        f"rho(1.5 alpha_max) = {rho_out:.4f} (>= 1 required: {needs_outside})",
    )


def _spread(values):
    values = np.asarray(values)
    return float((values.max() - values.min()) / values.min())


def test_criterion_5_bound_scaling(cournot_constants):
    c = cournot_constants
    a = max_step_size(c) / 10
    grid = (a, a / 2, a / 4)
    bounds = [steady_state_bounds(x, c) for x in grid]
    x_ratio = [b.x_bound / x for b, x in zip(bounds, grid)]
    phi_ratio = [b.phi_bound / x**2 for b, x in zip(bounds, grid)]
    x_spread, phi_spread = _spread(x_ratio), _spread(phi_ratio)
    ok = x_spread <= 0.10 and phi_spread <= 0.10
    report(
        5,
        ok,
        f"x_bound/alpha spread {x_spread:.1%}, phi_bound/alpha^2 spread {phi_spread:.1%} (both <= 10%); "
        f"x_bound/alpha = {', '.join(f'{r:.3e}' for r in x_ratio)}",
    )


def test_criterion_6_trend(cournot, cournot_star):
    start = time.perf_counter()
    assert vi_residual(cournot, cournot_star) <= 1e-7
    alphas = [0.02, 0.05, 0.1]
    rep = run_benchmark(alphas, 3000, list(range(10)), x_star=cournot_star, mu=SmoothingSchedule())
    elapsed = time.perf_counter() - start
    steady = {a: rep.steady_state_gap(a) for a in alphas}
    initial = {a: rep.initial_gap(a) for a in alphas}
    part_a = all(steady[a] < 0.2 * initial[a] for a in alphas)
    part_b = steady[0.02] < steady[0.05] < steady[0.1]
    t_fast, t_slow = rep.first_time_below(0.1, 0.5), rep.first_time_below(0.02, 0.5)
    part_c = t_fast is not None and t_slow is not None and t_fast < t_slow
    ok = part_a and part_b and part_c and elapsed <= 600
    gaps = ", ".join(f"{a}: {steady[a]:.3g}/{initial[a]:.3g}" for a in alphas)
    report(
        6,
        ok,
        f"(a) {'ok' if part_a else 'no'} (b) {'ok' if part_b else 'no'} (c) {'ok' if part_c else 'no'}; "
        f"steady/initial gap {gaps}; half-time 0.1={t_fast} 0.02={t_slow}; {elapsed:.0f}s",
    )


def test_criterion_7_nash_oracle(cournot):
    rng = np.random.default_rng(77)
    starts = rng.uniform(cournot.lower, cournot.upper, (5, cournot.n))
    sols = [nash_oracle(cournot, tol=1e-8, x0=s) for s in starts]
    spread = max(np.linalg.norm(a - b) for a in sols for b in sols)
    residual = max(vi_residual(cournot, s) for s in sols)
    _, move = best_response_sweep(cournot, sols[0])
    ok = spread <= 1e-6 and residual <= 1e-7 and move <= 1e-5
    report(7, ok, f"start spread {spread:.1e} (<= 1e-6), VI residual {residual:.1e} (<= 1e-7), best-response move {move:.1e} (<= 1e-5)")


def test_criterion_8_determinism(tmp_path):
    cfg = from_dict({
        "game": {"benchmark": "cournot"},
        "graph": {"kind": "ring", "self_weight": 0.5},
        "params": {"alpha": 0.1, "max_iters": 300, "seeds": [1, 2]},
    })
    cmd_run(cfg, tmp_path / "a")
    cmd_run(cfg, tmp_path / "b")
    cmd_run(cfg, tmp_path / "c", workers=4)
    names = ["trajectory_seed1.csv", "trajectory_seed2.csv"]
    same = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)
    parallel = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "c" / n).read_bytes() for n in names)
    report(8, same and parallel, f"repeat runs byte-identical: {same}; 1 vs 4 workers byte-identical: {parallel}")
