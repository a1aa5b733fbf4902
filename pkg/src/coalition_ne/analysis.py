"""Convergence constants, step-size bounds, steady-state error bounds and a
reference equilibrium solver."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DimensionMismatch, InvalidInput, NoAnalyticGradient, NonConvergence
from .game import GameSpec, coalition_cost
from .graph import coalition_kappa, contraction_sigma

LIPSCHITZ_SAFETY = 1.2
CHI_MIN_SEPARATION = 1e-3


# -- game mapping ---------------------------------------------------------


def game_mapping(game: GameSpec, x) -> np.ndarray:
    """Stacked coalition-averaged partial subgradients (the mu -> 0 mapping).

    Raises:
        NoAnalyticGradient: some player has no analytic subgradient attached.
    """
    if not game.has_subgradients:
        raise NoAnalyticGradient("game was built without analytic subgradients")
    x = game.check_profile(x)
    out = np.empty(game.n)
    for i, c in enumerate(game.coalitions):
        acc = np.zeros(c.size)
        for p in c.players:
            acc += np.asarray(p.cost.subgradient(x), dtype=float)
        out[game.block(i)] = acc / c.size
    return out


def vi_residual(game: GameSpec, x) -> float:
    """``||x - P(x - F(x))||``; zero exactly at an equilibrium."""
    x = game.check_profile(x)
    return float(np.linalg.norm(x - game.project(x - game_mapping(game, x))))


# -- Lipschitz and monotonicity estimates ------------------------------------


def _box_arrays(boxes):
    if isinstance(boxes, GameSpec):
        return boxes.lower, boxes.upper
    lower, upper = boxes
    return np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)


def estimate_lipschitz(oracle, boxes, samples: int, rng: np.random.Generator,
                       safety: float = LIPSCHITZ_SAFETY) -> float:
    """Largest sampled difference quotient of ``oracle``, times ``safety``.

    Two kinds of pairs are scored: independent uniform pairs, and pairs
    ``(x, x + h u)`` where ``u`` is a forward-difference gradient direction
    at a uniform ``x`` (clipped to the box). The result is a lower bound on
    the true constant used as its working estimate.

    Args:
        oracle: a :class:`~coalition_ne.game.CostOracle`.
        boxes: a game, or a ``(lower, upper)`` pair of arrays.
        samples: number of pairs of each kind, at least 2.
    """
    if samples < 2:
        raise InvalidInput("samples must be >= 2")
    lower, upper = _box_arrays(boxes)
    n = lower.size
    width = upper - lower
    X = rng.uniform(lower, upper, size=(samples, n))
    Y = rng.uniform(lower, upper, size=(samples, n))
    dist = np.linalg.norm(X - Y, axis=1)
    fx = oracle.evaluate_batch(X)
    keep = dist > 0
    best = float(np.max(np.abs(fx - oracle.evaluate_batch(Y))[keep] / dist[keep], initial=0.0))

    h = 1e-4 * np.where(width > 0, width, 1.0)
    grads = np.empty((samples, n))
    for k in range(n):
        Z = X.copy()
        Z[:, k] = np.minimum(Z[:, k] + h[k], upper[k])
        step = Z[:, k] - X[:, k]
        Z[step == 0, k] = X[step == 0, k] - h[k]
        step = Z[:, k] - X[:, k]
        grads[:, k] = (oracle.evaluate_batch(Z) - fx) / step
    gnorm = np.linalg.norm(grads, axis=1)
    ok = gnorm > 0
    if np.any(ok):
        U = grads[ok] / gnorm[ok, None]
        Xo = X[ok]
        Z = np.clip(Xo + 1e-3 * np.linalg.norm(width) * U, lower, upper)
        d = np.linalg.norm(Z - Xo, axis=1)
        good = d > 0
        if np.any(good):
            q = np.abs(oracle.evaluate_batch(Z[good]) - fx[ok][good]) / d[good]
            best = max(best, float(q.max()))
    return safety * best


def estimate_game_lipschitz(game: GameSpec, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Per-player estimates in coordinate order."""
    return np.array([estimate_lipschitz(p.cost, game, samples, rng) for _, _, p in game.players()])


def estimate_chi(game: GameSpec, samples: int, rng: np.random.Generator) -> float:
    """Smallest sampled ``<F(x) - F(y), x - y> / ||x - y||^2``.

    Uniform pairs are complemented by pairs along the least-monotone
    direction of a finite-difference Jacobian at each sampled point.
    """
    if samples < 1:
        raise InvalidInput("samples must be >= 1")
    lower, upper = game.lower, game.upper
    n = game.n
    best = math.inf

    def score(x, y):
        d = x - y
        dd = float(d @ d)
        if math.sqrt(dd) < CHI_MIN_SEPARATION:
            return math.inf
        return float((game_mapping(game, x) - game_mapping(game, y)) @ d) / dd

    for _ in range(samples):
        x = rng.uniform(lower, upper)
        y = rng.uniform(lower, upper)
        best = min(best, score(x, y))
    h = 1e-5 * max(float(np.max(upper - lower)), 1.0)
    for _ in range(max(1, samples // 10)):
        x = rng.uniform(lower + 0.01 * (upper - lower), upper - 0.01 * (upper - lower))
        F = game_mapping(game, x)
        Jac = np.empty((n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            Jac[:, k] = (game_mapping(game, x + e) - F) / h
        w, V = np.linalg.eigh(0.5 * (Jac + Jac.T))
        v = V[:, 0]
        span = 0.005 * float(np.min(upper - lower))
        best = min(best, score(np.clip(x + span * v, lower, upper), np.clip(x - span * v, lower, upper)))
    return best


# -- constants and bounds ------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceConstants:
    """Constants of the two-dimensional comparison system.

    ``L`` is evaluated at ``mu_ref``; it grows like ``1 / mu_ref`` and so
    diverges in the vanishing-smoothing limit.
    """

    chi: float
    D: tuple[float, ...]
    L: float
    B: float
    sigmas: tuple[float, ...]
    sigma_bar: float
    varsigma: float
    k1: float
    k2: float
    k3: float
    k4: float
    k5: float
    k6: float
    k7: float
    mu_ref: float
    sizes: tuple[int, ...]

    @property
    def degenerate(self) -> bool:
        return self.k4 == 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def build_constants(game: GameSpec, chi: float, D: Sequence[float], mu_ref: float) -> ConvergenceConstants:
    """Assemble every constant from ``chi``, per-player ``D`` and ``mu_ref``.

    ``D`` is given in coordinate order (one value per player).
    """
    if not chi > 0:
        raise InvalidInput(f"chi must be > 0, got {chi}")
    if not mu_ref > 0:
        raise InvalidInput(f"mu_ref must be > 0, got {mu_ref}")
    D = np.asarray(D, dtype=float)
    if D.shape != (game.n,):
        raise DimensionMismatch(f"need {game.n} Lipschitz values, got shape {D.shape}")
    if np.any(D < 0):
        raise InvalidInput("Lipschitz values must be >= 0")
    sizes = np.array(game.sizes, dtype=float)
    per_player_n = np.concatenate([np.full(int(s), s) for s in sizes])
    L = float(np.max(np.sqrt(per_player_n) * D / mu_ref))
    B = float(np.max(np.sqrt(per_player_n + 4.0) * D))
    sigmas = [contraction_sigma(c.graph) for c in game.coalitions]
    varsigma = max(coalition_kappa(c.graph)[1] for c in game.coalitions)
    sigma_bar = max(sigmas)
    sum_n2 = float(np.sum(sizes**2))
    sum_n2n4 = float(np.sum(sizes**2 * (sizes + 4.0)))
    N = game.N
    return ConvergenceConstants(
        chi=float(chi),
        D=tuple(float(d) for d in D),
        L=L,
        B=B,
        sigmas=tuple(sigmas),
        sigma_bar=sigma_bar,
        varsigma=varsigma,
        k1=float(chi),
        k2=1.0 / chi,
        k3=6.0,
        k4=12.0 * L**2 * varsigma * sum_n2,
        k5=(1.0 - sigma_bar**2) / 2.0,
        k6=6.0 * B**2 * sum_n2n4 + 2.0 * N * B**2,
        k7=12.0 * L**2 * B**2 * varsigma * sum_n2 * sum_n2n4,
        mu_ref=float(mu_ref),
        sizes=tuple(int(s) for s in sizes),
    )


def max_step_size(c: ConvergenceConstants, strict: bool = False) -> float:
    """``min(1 / k1, sqrt(k5 / k4))``.

    With ``k4 == 0`` the second term is unbounded; the function then returns
    ``1 / k1`` with a warning, or raises if ``strict``.
    """
    if c.k4 == 0.0:
        if strict:
            raise InvalidInput("k4 is zero; the tracking-error bound does not limit the step size")
        warnings.warn("k4 is zero; step size limited by 1/k1 only", RuntimeWarning, stacklevel=2)
        return 1.0 / c.k1
    return min(1.0 / c.k1, math.sqrt(c.k5 / c.k4))


def comparison_matrix(alpha: float, c: ConvergenceConstants) -> np.ndarray:
    return np.array([
        [1.0 - c.k1 * alpha, c.k2 * alpha + c.k3 * alpha**2],
        [0.0, 1.0 - c.k5 + c.k4 * alpha**2],
    ])


def forcing_vector(alpha: float, c: ConvergenceConstants) -> np.ndarray:
    return np.array([c.k6 * alpha**2, c.k7 * alpha**2])


def spectral_radius_M(alpha: float, c: ConvergenceConstants) -> float:
    """Spectral radius of the upper-triangular comparison matrix."""
    if not alpha > 0:
        raise InvalidInput(f"alpha must be > 0, got {alpha}")
    return max(abs(1.0 - c.k1 * alpha), 1.0 - c.k5 + c.k4 * alpha**2)


@dataclass(frozen=True)
class BoundReport:
    alpha: float
    alpha_max: float
    rho: float
    x_bound: float
    phi_bound: float


def steady_state_bounds(alpha: float, c: ConvergenceConstants) -> BoundReport:
    """Limsup bounds on ``E||x - x*||^2`` and on the tracking error.

    Raises:
        InvalidInput: ``alpha`` outside ``(0, alpha_max)``.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a_max = max_step_size(c)
    if not 0.0 < alpha < a_max:
        raise InvalidInput(f"alpha={alpha} outside the admissible range (0, {a_max})")
    gap = c.k5 - c.k4 * alpha**2
    x_bound = (c.k6 * alpha**2 * gap + c.k7 * alpha**2 * (c.k2 * alpha + c.k3 * alpha**2)) / (
        c.k1 * alpha * gap
    )
    phi_bound = c.k7 * alpha**2 / gap
    return BoundReport(
        alpha=alpha,
        alpha_max=a_max,
        rho=spectral_radius_M(alpha, c),
        x_bound=x_bound,
        phi_bound=phi_bound,
    )


# -- reference equilibrium -----------------------------------------------------


def nash_oracle(
    game: GameSpec,
    tol: float = 1e-8,
    x0=None,
    gamma0: float = 0.1,
    max_iters: int = 1_000_000,
) -> np.ndarray:
    """Reference equilibrium by projected subgradient iteration on the
    analytic game mapping with steps ``gamma0 / sqrt(t + 1)``.

    Iterates until the step length and the VI residual are both at most
    ``tol``, then certifies the VI residual against ``10 * tol``.

    Raises:
        NoAnalyticGradient: the game carries no analytic subgradients.
        NonConvergence: the iteration budget ran out or the certificate failed.
    """
    if not game.has_subgradients:
        raise NoAnalyticGradient("nash_oracle needs analytic subgradients")
    if not tol > 0:
        raise InvalidInput("tol must be > 0")
    x = game.project(np.zeros(game.n) if x0 is None else np.asarray(x0, dtype=float))
    for t in range(max_iters):
        F = game_mapping(game, x)
        x_new = game.project(x - gamma0 / math.sqrt(t + 1) * F)
        moved = float(np.linalg.norm(x_new - x))
        x = x_new
        if moved <= tol and vi_residual(game, x) <= tol:
            break
    else:
        raise NonConvergence(f"no convergence in {max_iters} iterations (last step {moved:.3e})")
    res = vi_residual(game, x)
    if res > 10 * tol:
        raise NonConvergence(f"VI residual {res:.3e} exceeds {10 * tol:.3e}")
    return x


def best_response_sweep(game: GameSpec, x, sweeps: int = 1, xatol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Gauss-Seidel coordinate best responses on the coalition costs.

    Each coordinate is replaced by the minimiser over its box of its
    coalition's average cost, the rest held fixed. Uses cost values only.
    Returns the new profile and the largest single-coordinate move.
    """
    x = np.array(game.check_profile(x), dtype=float)
    biggest = 0.0
    for _ in range(sweeps):
        for k in range(game.n):
            i, _ = game.player_at(k)
            lo, hi = game.lower[k], game.upper[k]
            if lo == hi:
                continue

            def cost(v, k=k, i=i):
                y = x.copy()
                y[k] = v
                return coalition_cost(game, i, y)

            res = minimize_scalar(cost, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
            v = float(res.x)
            # the bounded method never evaluates the endpoints themselves
            for edge in (lo, hi):
                if cost(edge) < cost(v):
                    v = edge
            biggest = max(biggest, abs(v - x[k]))
            x[k] = v
    return x, biggest


def nash_gap(x, x_star) -> float:
    x = np.asarray(x, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    if x.shape != x_star.shape:
        raise DimensionMismatch(f"shapes {x.shape} and {x_star.shape} differ")
    return float(np.linalg.norm(x - x_star))


def analysis_report(c: ConvergenceConstants, alphas: Sequence[float],
                    mu_note: Optional[str] = None) -> dict:
    """Plain-data summary: constants, admissible range and per-alpha figures."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a_max = max_step_size(c)
    rows = []
    for a in alphas:
        row = {"alpha": float(a), "rho": spectral_radius_M(a, c), "admissible": bool(0 < a < a_max)}
        if row["admissible"]:
            b = steady_state_bounds(a, c)
            row.update(x_bound=b.x_bound, phi_bound=b.phi_bound)
        rows.append(row)
    report = {"constants": c.as_dict(), "alpha_max": a_max, "alphas": rows}
    report["notes"] = [
        f"L is evaluated at mu_ref={c.mu_ref}; it scales like 1/mu_ref and diverges as smoothing vanishes.",
    ]
    if mu_note:
        report["notes"].append(mu_note)
    return report
