"""Gaussian smoothing: seeded directions, the gradient-free oracle and
Monte-Carlo estimates of smoothed costs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidInput
from .game import GameSpec

RNG_ALGORITHM = (
    f"numpy {np.__version__} Generator(Philox) seeded by SeedSequence(seed, spawn_key); "
    "standard_normal via ziggurat"
)

SCHEDULE_MODES = ("constant", "harmonic", "player-harmonic")

INIT_STREAM_KEY = (0,)


def make_stream(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    """Counter-based stream identified by ``(seed, key)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def player_stream(seed: int, i: int, j: int) -> np.random.Generator:
    return make_stream(seed, (1, i, j))


@dataclass(frozen=True)
class SmoothingSchedule:
    """Smoothing parameter as a function of iteration and player.

    ``harmonic`` gives ``mu0 / (t + 1)`` floored at ``mu_min``;
    ``player-harmonic`` reads the index as the (1-based) player number
    instead, giving the constant ``mu0 / (j + 2)`` for 0-based ``j``.
    """

    mu0: float = 0.1
    mode: str = "harmonic"
    mu_min: float = 1e-8

    def __post_init__(self):
        if not self.mu0 > 0:
            raise InvalidInput(f"mu0 must be > 0, got {self.mu0}")
        if self.mode not in SCHEDULE_MODES:
            raise InvalidInput(f"mode must be one of {SCHEDULE_MODES}, got {self.mode!r}")
        if not self.mu_min > 0:
            raise InvalidInput(f"mu_min must be > 0, got {self.mu_min}")

    def value_at(self, t: int, player: int = 0) -> float:
        if self.mode == "constant":
            return self.mu0
        if self.mode == "harmonic":
            return max(self.mu0 / (t + 1), self.mu_min)
        return max(self.mu0 / (player + 2), self.mu_min)


@dataclass(frozen=True)
class OracleSample:
    """One realisation of the gradient-free oracle for player ``(i, j)``.

    ``values[k]`` estimates the partial derivative of the player's smoothed
    cost with respect to coalition member ``k``; a single direction serves
    every ``k``.
    """

    player: tuple[int, int]
    direction: np.ndarray
    values: np.ndarray
    mu_used: float
    base_cost: float
    perturbed_cost: float


def draw_direction(rng: np.random.Generator, n_i: int) -> np.ndarray:
    return rng.standard_normal(n_i)


def _perturbed(game: GameSpec, i: int, x: np.ndarray, shift: np.ndarray) -> np.ndarray:
    y = x.copy()
    y[game.block(i)] += shift
    return y


def oracle_pi(game: GameSpec, player: tuple[int, int], x, mu: float, xi) -> OracleSample:
    """Difference quotient along ``xi`` times ``xi``; two cost evaluations.

    The perturbed point is not projected back onto the action boxes.
    """
    i, j = player
    if not mu > 0:
        raise InvalidInput(f"mu must be > 0, got {mu}")
    x = game.check_profile(x)
    xi = np.asarray(xi, dtype=float)
    n_i = game.coalitions[i].size
    if xi.shape != (n_i,):
        raise DimensionMismatch(f"direction must have length {n_i}, got shape {xi.shape}")
    cost = game.player(i, j).cost
    base = cost.evaluate(x)
    pert = cost.evaluate(_perturbed(game, i, x, mu * xi))
    values = ((pert - base) / mu) * xi
    return OracleSample(
        player=(i, j),
        direction=xi,
        values=values,
        mu_used=float(mu),
        base_cost=base,
        perturbed_cost=pert,
    )


def oracle_moments(
    game: GameSpec,
    player: tuple[int, int],
    x,
    mu: float,
    samples: int,
    rng: np.random.Generator,
    chunk: int = 100_000,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Monte-Carlo mean and standard error of the oracle vector.

    Returns ``(mean, stderr, mean_norm)`` where ``mean_norm`` is the sample
    average of ``||values||``. Uses the batched cost path when available.
    """
    i, j = player
    x = game.check_profile(x)
    n_i = game.coalitions[i].size
    cost = game.player(i, j).cost
    base = cost.evaluate(x)
    blk = game.block(i)
    total = np.zeros(n_i)
    total_sq = np.zeros(n_i)
    total_norm = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        xi = rng.standard_normal((m, n_i))
        Y = np.repeat(x[None, :], m, axis=0)
        Y[:, blk] += mu * xi
        diff = (cost.evaluate_batch(Y) - base) / mu
        vals = diff[:, None] * xi
        total += vals.sum(axis=0)
        total_sq += (vals**2).sum(axis=0)
        total_norm += float(np.linalg.norm(vals, axis=1).sum())
        done += m
    mean = total / samples
    if samples > 1:
        var = (total_sq - samples * mean**2) / (samples - 1)
        stderr = np.sqrt(np.maximum(var, 0.0) / samples)
    else:
        stderr = np.full(n_i, np.nan)
    return mean, stderr, total_norm / samples


def smoothed_value(
    game: GameSpec,
    player: tuple[int, int],
    x,
    mu: float,
    samples: int,
    rng: np.random.Generator,
    antithetic: bool = True,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the Gaussian-smoothed cost and its standard error.

    With ``antithetic`` each direction is paired with its negation and the
    pair average is one Monte-Carlo draw; ``samples`` counts directions.
    The standard error is NaN for a single draw.
    """
    if samples < 1:
        raise InvalidInput("samples must be >= 1")
    i, j = player
    x = game.check_profile(x)
    n_i = game.coalitions[i].size
    cost = game.player(i, j).cost
    xi = rng.standard_normal((samples, n_i))
    Y = np.repeat(x[None, :], samples, axis=0)
    blk = game.block(i)
    Y[:, blk] += mu * xi
    draws = cost.evaluate_batch(Y)
    if antithetic:
        Y[:, blk] -= 2.0 * mu * xi
        draws = 0.5 * (draws + cost.evaluate_batch(Y))
    estimate = float(draws.mean())
    stderr = float(draws.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.nan
    return estimate, stderr


def check_sandwich(
    game: GameSpec,
    player: tuple[int, int],
    x,
    mu: float,
    D: float,
    samples: int,
    rng: np.random.Generator,
    antithetic: bool = True,
) -> bool:
    """True iff ``f(x) <= f_mu(x) <= f(x) + mu * D`` holds within 3 standard errors
    (plus a few ulps of ``f(x)``)."""
    i, j = player
    f = game.player(i, j).cost.evaluate(game.check_profile(x))
    est, se = smoothed_value(game, player, x, mu, samples, rng, antithetic=antithetic)
    # rounding allowance for draws that reproduce f(x) exactly
    slack = 3.0 * se + 16.0 * np.finfo(float).eps * max(1.0, abs(f))
    return bool(f - slack <= est <= f + mu * D + slack)


def oracle_second_moment_bound(n_i: int, D: float) -> float:
    """Upper bound ``sqrt(n_i + 4) * D`` on the mean oracle norm."""
    return math.sqrt(n_i + 4) * D

