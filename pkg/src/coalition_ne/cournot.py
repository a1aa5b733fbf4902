"""Four-coalition Cournot competition benchmark.

Player ``j`` (0-based) of coalition ``i`` has cost

    f(x) = 5 q**2 + 5 q + 5 |q - 6 (j + 1)| - q * p_i(x),   q = x[i, j]

where the price seen by coalition ``i`` subtracts the same-index quantity of
the coalitions listed in ``PRICE_TERMS[i]`` from 60. Each oracle comes with
a vectorised twin and an analytic subgradient with respect to its own
coalition block (kink subgradient 0).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch
from .game import BoxConstraint, CostOracle, GameSpec, PlayerSpec, assemble_game
from .graph import make_graph

N_COALITIONS = 4
PLAYERS_PER_COALITION = 6
BASE_PRICE = 60.0
DEFAULT_BOX = BoxConstraint(0.0, 60.0)

PRICE_TERMS = {0: (0, 1, 2, 3), 1: (1,), 2: (0, 1), 3: (0, 1, 2)}


def _kink(j: int) -> float:
    return 6.0 * (j + 1)


def cournot_cost(i: int, j: int, x: np.ndarray) -> float:
    """Local cost of player ``(i, j)``; ``x`` is the flat 24-vector."""
    m = PLAYERS_PER_COALITION
    q = float(x[i * m + j])
    price = BASE_PRICE
    for c in PRICE_TERMS[i]:
        price -= float(x[c * m + j])
    return 5.0 * q * q + 5.0 * q + 5.0 * abs(q - _kink(j)) - q * price


def cournot_cost_batch(i: int, j: int, X: np.ndarray) -> np.ndarray:
    m = PLAYERS_PER_COALITION
    q = X[:, i * m + j]
    price = np.full(X.shape[0], BASE_PRICE)
    # same subtraction order as the scalar path, so results match bitwise
    for c in PRICE_TERMS[i]:
        price = price - X[:, c * m + j]
    return 5.0 * q * q + 5.0 * q + 5.0 * np.abs(q - _kink(j)) - q * price


def analytic_subgradient(player: tuple[int, int], x) -> np.ndarray:
    """Partial subgradient of ``f^i_j`` over coalition ``i``'s six coordinates.

    Only entry ``j`` is nonzero: the player's cost involves no other member
    of its own coalition.
    """
    i, j = player
    m = PLAYERS_PER_COALITION
    x = np.asarray(x, dtype=float)
    if x.shape != (N_COALITIONS * m,):
        raise DimensionMismatch(f"expected a {N_COALITIONS * m}-vector, got shape {x.shape}")
    q = x[i * m + j]
    price = BASE_PRICE - sum(x[c * m + j] for c in PRICE_TERMS[i])
    own_slope = 1.0 if i in PRICE_TERMS[i] else 0.0
    g = np.zeros(m)
    g[j] = 10.0 * q + 5.0 + 5.0 * np.sign(q - _kink(j)) - price + own_slope * q
    return g


def _oracle(i: int, j: int) -> CostOracle:
    return CostOracle(
        func=lambda x: cournot_cost(i, j, x),
        batch=lambda X: cournot_cost_batch(i, j, X),
        subgradient=lambda x: analytic_subgradient((i, j), x),
    )


def build_cournot(
    box: BoxConstraint = DEFAULT_BOX, graph_kind: str = "ring", graphs=None, **graph_params
) -> GameSpec:
    """The 24-player benchmark with one graph of ``graph_kind`` per coalition,
    or the explicit ``graphs`` when given."""
    players = [
        PlayerSpec(coalition_id=i, player_id=j, box=box, cost=_oracle(i, j))
        for i in range(N_COALITIONS)
        for j in range(PLAYERS_PER_COALITION)
    ]
    if graphs is None:
        graphs = [
            make_graph(graph_kind, PLAYERS_PER_COALITION, **graph_params) for _ in range(N_COALITIONS)
        ]
    return assemble_game(players, graphs, name="cournot")


def mapping_matrix() -> np.ndarray:
    """Linear part of the game mapping on one same-index slice.

    Rows/columns are coalitions 0..3 at a fixed player index; the kink terms
    add a monotone piecewise-constant part on top.
    """
    M = np.zeros((N_COALITIONS, N_COALITIONS))
    for i in range(N_COALITIONS):
        M[i, i] = 10.0 + (1.0 if i in PRICE_TERMS[i] else 0.0)
        for c in PRICE_TERMS[i]:
            M[i, c] += 1.0
    return M / PLAYERS_PER_COALITION


def exact_chi() -> float:
    """Strong-monotonicity modulus of the benchmark mapping."""
    M = mapping_matrix()
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())


# -- benchmark driver ------------------------------------------------------------


@dataclass
class BenchmarkReport:
    """Per-alpha Nash-gap series (seeds x recorded steps) and one action
    trajectory per alpha (first seed)."""

    x_star: np.ndarray
    box: tuple[float, float]
    graph: dict
    alphas: list[float]
    seeds: list[int]
    iters: int
    times: np.ndarray
    gaps: dict[float, np.ndarray]
    tracking: dict[float, np.ndarray]
    trajectories: dict[float, np.ndarray]
    max_conservation_residual: float
    alpha_max: Optional[float] = None

    def initial_gap(self, alpha: float) -> float:
        return float(self.gaps[alpha][:, 0].mean())

    def mean_gap(self, alpha: float) -> np.ndarray:
        return self.gaps[alpha].mean(axis=0)

    def steady_state_gap(self, alpha: float, fraction: float = 0.1) -> float:
        """Mean gap over seeds and over the last ``fraction`` of recorded steps."""
        g = self.gaps[alpha]
        tail = max(1, int(round(fraction * (g.shape[1] - 1))))
        return float(g[:, -tail:].mean())

    def first_time_below(self, alpha: float, ratio: float) -> Optional[int]:
        """First recorded ``t`` where the seed-mean gap drops below ``ratio`` of its start."""
        m = self.mean_gap(alpha)
        hit = np.flatnonzero(m < ratio * m[0])
        return int(self.times[hit[0]]) if hit.size else None

    def summary(self) -> dict:
        rows = []
        for a in self.alphas:
            rows.append({
                "alpha": a,
                "admissible": None if self.alpha_max is None else bool(a < self.alpha_max),
                "initial_gap": self.initial_gap(a),
                "final_gap_mean": float(self.gaps[a][:, -1].mean()),
                "steady_state_gap": self.steady_state_gap(a),
                "half_time": self.first_time_below(a, 0.5),
            })
        return {
            "x_star": self.x_star.tolist(),
            "box": list(self.box),
            "graph": self.graph,
            "seeds": self.seeds,
            "iters": self.iters,
            "alpha_max": self.alpha_max,
            "max_conservation_residual": self.max_conservation_residual,
            "alphas": rows,
        }


def _bench_job(job):
    alpha, seed, iters, box, graph, mu, x_star, record_every = job
    from .seeker import AlgorithmParams, run

    game = build_cournot(BoxConstraint(*box), **graph)
    params = AlgorithmParams(alpha=alpha, mu=mu, max_iters=iters, seed=seed, record_every=record_every)
    rec = run(game, params, x_star=x_star)
    return alpha, seed, rec.times, rec.gaps, rec.tracking_errors, rec.actions, rec.summary[
        "max_conservation_residual"
    ]


def run_benchmark(
    alpha_list: Sequence[float],
    iters: int,
    seeds: Sequence[int],
    box: BoxConstraint = DEFAULT_BOX,
    graph_kind: str = "ring",
    self_weight: float = 0.5,
    mu=None,
    x_star=None,
    tol: float = 1e-8,
    record_every: int = 1,
    workers: int = 1,
    alpha_max: Optional[float] = None,
) -> BenchmarkReport:
    """Run the seeker on the benchmark for every ``(alpha, seed)``.

    The reference equilibrium is computed once (unless supplied). Runs are
    independent; ``workers > 1`` spreads them over processes without
    changing any number.
    """
    from .analysis import nash_oracle
    from .smoothing import SmoothingSchedule

    mu = SmoothingSchedule() if mu is None else mu
    graph = {"graph_kind": graph_kind}
    if graph_kind == "ring":
        graph["self_weight"] = self_weight
    game = build_cournot(box, **graph)
    if x_star is None:
        x_star = nash_oracle(game, tol=tol)
    alphas = [float(a) for a in alpha_list]
    jobs = [
        (a, int(s), iters, (box.lower, box.upper), graph, mu, x_star, record_every)
        for a in alphas
        for s in seeds
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_job, jobs))
    else:
        results = [_bench_job(j) for j in jobs]
    gaps, tracking, traj = {}, {}, {}
    worst = 0.0
    times = results[0][2] if results else np.array([0])
    for a in alphas:
        rows = [r for r in results if r[0] == a]
        gaps[a] = np.array([r[3] for r in rows])
        tracking[a] = np.array([r[4] for r in rows])
        traj[a] = rows[0][5]
        worst = max([worst] + [r[6] for r in rows])
    return BenchmarkReport(
        x_star=x_star,
        box=(box.lower, box.upper),
        graph=graph,
        alphas=alphas,
        seeds=[int(s) for s in seeds],
        iters=iters,
        times=times,
        gaps=gaps,
        tracking=tracking,
        trajectories=traj,
        max_conservation_residual=worst,
        alpha_max=alpha_max,
    )
