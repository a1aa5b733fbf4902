"""Gradient-free Nash equilibrium seeking with per-coalition gradient tracking.

Every round is synchronous: all players read the time-``t`` snapshot, take
a projected step along their own diagonal tracker entry, query the oracle
once at the new profile and mix trackers with their coalition neighbours.
"""

from __future__ import annotations

from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConservationViolation, InvalidInput, NumericalOverflow, X0OutOfBounds
from .game import GameSpec
from .records import RunRecord, StepRecord
from .smoothing import (
    INIT_STREAM_KEY,
    RNG_ALGORITHM,
    OracleSample,
    SmoothingSchedule,
    draw_direction,
    make_stream,
    oracle_pi,
    player_stream,
)


@dataclass(frozen=True)
class AlgorithmParams:
    alpha: float
    mu: SmoothingSchedule = field(default_factory=SmoothingSchedule)
    max_iters: int = 1000
    seed: int = 0
    record_every: int = 1
    stop_tol: Optional[float] = None
    # Runtime guard, scaled by the largest tracker/oracle magnitude seen.
    conservation_tol: float = 1e-9

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidInput(f"alpha must be > 0, got {self.alpha}")
        if self.max_iters < 0:
            raise InvalidInput(f"max_iters must be >= 0, got {self.max_iters}")
        if self.record_every < 1:
            raise InvalidInput(f"record_every must be >= 1, got {self.record_every}")
        if self.stop_tol is not None and not self.stop_tol > 0:
            raise InvalidInput(f"stop_tol must be > 0, got {self.stop_tol}")


@dataclass
class SeekerState:
    """Full algorithm state at iteration ``t``.

    ``phi[i][j, k]`` is player ``j``'s tracker for coalition member ``k``;
    ``cached[i][j]`` is the oracle sample taken at the current ``x`` and is
    reused, not redrawn, in the next tracker update.
    """

    t: int
    x: np.ndarray
    phi: list[np.ndarray]
    cached: list[list[OracleSample]]
    streams: list[list[np.random.Generator]]
    evaluations: int = 0
    scale: float = 1.0

    def pi(self, i: int) -> np.ndarray:
        return np.array([s.values for s in self.cached[i]])


def _players(game: GameSpec, order: Optional[Sequence[tuple[int, int]]]):
    if order is None:
        return [(i, j) for i, j, _ in game.players()]
    order = [tuple(p) for p in order]
    if sorted(order) != [(i, j) for i, j, _ in game.players()]:
        raise InvalidInput("order must be a permutation of all players")
    return order


def _sample_round(game, x, t, schedule, streams, order, executor):
    """Draw one oracle sample per player at profile ``x`` (read-only)."""

    def work(p):
        i, j = p
        xi = draw_direction(streams[i][j], game.coalitions[i].size)
        return p, oracle_pi(game, p, x, schedule.value_at(t, j), xi)

    players = _players(game, order)
    results = executor.map(work, players) if executor is not None else map(work, players)
    grid = [[None] * c.size for c in game.coalitions]
    for (i, j), sample in results:
        grid[i][j] = sample
    return grid


def conservation_residual(state: SeekerState) -> float:
    """Largest ``|mean_j phi[i][j, k] - mean_j pi[i][j, k]|`` over ``i, k``."""
    worst = 0.0
    for i, phi in enumerate(state.phi):
        gap = np.abs(phi.mean(axis=0) - state.pi(i).mean(axis=0))
        worst = max(worst, float(gap.max()))
    return worst


def consensus_errors(state: SeekerState) -> tuple[float, ...]:
    """Per coalition, ``sum_k ||phi[:, k] - mean(phi[:, k])||^2``."""
    return tuple(float(((phi - phi.mean(axis=0)) ** 2).sum()) for phi in state.phi)


def _magnitude(state: SeekerState) -> float:
    m = 1.0
    for i, phi in enumerate(state.phi):
        m = max(m, float(np.abs(phi).max()), float(np.abs(state.pi(i)).max()))
    return m


def _dump(state: SeekerState) -> dict:
    return {
        "t": state.t,
        "x": state.x.tolist(),
        "phi": [p.tolist() for p in state.phi],
        "pi": [state.pi(i).tolist() for i in range(len(state.phi))],
        "mu": [[s.mu_used for s in row] for row in state.cached],
    }


def _check_finite(state: SeekerState) -> None:
    ok = np.all(np.isfinite(state.x)) and all(np.all(np.isfinite(p)) for p in state.phi)
    ok = ok and all(np.all(np.isfinite(state.pi(i))) for i in range(len(state.phi)))
    if not ok:
        raise NumericalOverflow(f"non-finite state at t={state.t}", dump=_dump(state))


def _check_conservation(state: SeekerState, tol: float) -> float:
    r = conservation_residual(state)
    if r > tol * state.scale:
        raise ConservationViolation(
            f"tracker average drifted by {r:.3e} at t={state.t} (allowed {tol * state.scale:.3e})"
        )
    return r


def init(
    game: GameSpec,
    params: AlgorithmParams,
    x0=None,
    executor: Optional[Executor] = None,
) -> SeekerState:
    """Initial state: ``x0`` (or a seeded uniform draw) and trackers equal to
    the oracle at ``x0``."""
    if x0 is None:
        rng = make_stream(params.seed, INIT_STREAM_KEY)
        x = rng.uniform(game.lower, game.upper)
    else:
        x = np.array(game.check_profile(x0), dtype=float)
        if not game.contains(x):
            raise X0OutOfBounds("initial profile lies outside the action boxes")
    streams = [
        [player_stream(params.seed, i, j) for j in range(c.size)]
        for i, c in enumerate(game.coalitions)
    ]
    cached = _sample_round(game, x, 0, params.mu, streams, None, executor)
    phi = [np.array([s.values for s in row]) for row in cached]
    state = SeekerState(t=0, x=x, phi=phi, cached=cached, streams=streams, evaluations=2 * game.n)
    _check_finite(state)
    state.scale = _magnitude(state)
    return state


def step(
    state: SeekerState,
    game: GameSpec,
    params: AlgorithmParams,
    order: Optional[Sequence[tuple[int, int]]] = None,
    executor: Optional[Executor] = None,
) -> SeekerState:
    """Advance one synchronous round ``t -> t + 1``.

    ``order`` permutes the sequence in which players are visited; it cannot
    change the result because every player reads the same snapshot and owns
    its random stream.
    """
    # (a) projected step along each player's own tracker entry
    descent = np.concatenate([np.diag(phi) for phi in state.phi])
    x_next = game.project(state.x - params.alpha * descent)
    # (b) fresh oracle samples at x_{t+1}
    t_next = state.t + 1
    cached = _sample_round(game, x_next, t_next, params.mu, state.streams, order, executor)
    # (c) mix trackers and add the oracle innovation
    phi_next = []
    for i, c in enumerate(game.coalitions):
        pi_new = np.array([s.values for s in cached[i]])
        phi_next.append(c.graph.weights @ state.phi[i] + (pi_new - state.pi(i)))
    new = SeekerState(
        t=t_next,
        x=x_next,
        phi=phi_next,
        cached=cached,
        streams=state.streams,
        evaluations=state.evaluations + 2 * game.n,
        scale=state.scale,
    )
    _check_finite(new)
    new.scale = max(state.scale, _magnitude(new))
    _check_conservation(new, params.conservation_tol)
    return new


def _record(state: SeekerState, x_star) -> StepRecord:
    errs = consensus_errors(state)
    gap = None if x_star is None else float(np.linalg.norm(state.x - x_star))
    return StepRecord(
        t=state.t,
        x=state.x.copy(),
        tracking_error=float(sum(errs)),
        consensus_errors=errs,
        conservation_residual=conservation_residual(state),
        nash_gap=gap,
    )


def run_metadata(game: GameSpec, params: AlgorithmParams) -> dict:
    return {
        "game": game.name,
        "N": game.N,
        "sizes": list(game.sizes),
        "alpha": params.alpha,
        "mu": {"mu0": params.mu.mu0, "mode": params.mu.mode, "mu_min": params.mu.mu_min},
        "max_iters": params.max_iters,
        "seed": params.seed,
        "record_every": params.record_every,
        "stop_tol": params.stop_tol,
        "rng_algorithm": RNG_ALGORITHM,
        "version": __version__,
    }


def run(
    game: GameSpec,
    params: AlgorithmParams,
    x0=None,
    x_star=None,
    workers: int = 1,
) -> RunRecord:
    """Iterate :func:`step` for ``params.max_iters`` rounds (or until the
    optional stopping tolerance on ``||x_{t+1} - x_t|| / alpha`` is met).

    ``x_star`` enables the Nash gap column. ``workers > 1`` evaluates the
    players of each round on a thread pool; results do not depend on it.
    """
    if x_star is not None:
        x_star = game.check_profile(x_star)
    record = RunRecord(metadata=run_metadata(game, params))
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else nullcontext(None)
    stopped_early = False
    with pool as executor:
        state = init(game, params, x0, executor=executor)
        record.metadata["x0"] = state.x.tolist()
        record.append(_record(state, x_star))
        worst = conservation_residual(state)
        for _ in range(params.max_iters):
            prev = state.x
            state = step(state, game, params, executor=executor)
            worst = max(worst, conservation_residual(state))
            moved = float(np.linalg.norm(state.x - prev)) / params.alpha
            stopped_early = params.stop_tol is not None and moved <= params.stop_tol
            last = state.t == params.max_iters or stopped_early
            if state.t % params.record_every == 0 or last:
                record.append(_record(state, x_star))
            if stopped_early:
                break
    final = record.series[-1]
    record.summary = {
        "iterations": state.t,
        "evaluations": state.evaluations,
        "stopped_early": stopped_early,
        "final_x": state.x.tolist(),
        "final_nash_gap": final.nash_gap,
        "final_tracking_error": final.tracking_error,
        "max_conservation_residual": worst,
    }
    return record
