"""N-coalition game structure: players, action boxes and black-box costs.

Indices are 0-based throughout: coalition ``i`` in ``0..N-1`` and player
``j`` in ``0..n_i-1``. Actions are scalar per player and the global profile
is blocked by coalition, so coalition ``i`` owns ``x[offsets[i]:offsets[i+1]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicatePlayer,
    EmptyCoalition,
    InvalidInput,
    OracleFailure,
)
from .graph import CoalitionGraph


@dataclass(frozen=True)
class BoxConstraint:
    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise InvalidInput(f"box bounds must be finite, got [{lo}, {hi}]")
        if lo > hi:
            raise InvalidInput(f"empty box: lower {lo} > upper {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, v: float) -> bool:
        return self.lower <= v <= self.upper


def project_box(v: float, box: BoxConstraint) -> float:
    """Euclidean projection of a scalar onto ``box``."""
    return min(max(v, box.lower), box.upper)


@dataclass(frozen=True, eq=False)
class CostOracle:
    """Black-box local cost ``f(x)`` evaluated on the full action profile.

    Only scalar values leave :meth:`evaluate`. ``batch`` is an optional
    vectorised twin taking an ``(m, n)`` array and returning ``m`` values;
    it must agree with ``func`` row by row. ``subgradient`` is analytic
    side information used only by the reference equilibrium solver; it maps
    ``x`` to the partial subgradient with respect to the owner's coalition
    block and is never consulted by the seeker.
    """

    func: Callable[[np.ndarray], float]
    declared_lipschitz: Optional[float] = None
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    subgradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.declared_lipschitz is not None and self.declared_lipschitz < 0:
            raise InvalidInput("declared_lipschitz must be >= 0")

    def evaluate(self, x: np.ndarray) -> float:
        try:
            value = float(self.func(x))
        except Exception as exc:  # oracle is user code
            raise OracleFailure(f"cost oracle raised {exc!r}") from exc
        if not math.isfinite(value):
            raise OracleFailure(f"cost oracle returned non-finite value {value}")
        return value

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.batch is None:
            return np.array([self.evaluate(row) for row in X])
        try:
            values = np.asarray(self.batch(X), dtype=float).reshape(X.shape[0])
        except Exception as exc:
            raise OracleFailure(f"batched cost oracle raised {exc!r}") from exc
        if not np.all(np.isfinite(values)):
            raise OracleFailure("batched cost oracle returned non-finite values")
        return values


@dataclass(frozen=True)
class PlayerSpec:
    coalition_id: int
    player_id: int
    box: BoxConstraint
    cost: CostOracle


@dataclass(frozen=True)
class Coalition:
    players: tuple[PlayerSpec, ...]
    graph: CoalitionGraph

    @property
    def size(self) -> int:
        return len(self.players)


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Validated N-coalition game. Build it with :func:`assemble_game`."""

    coalitions: tuple[Coalition, ...]
    name: str = "custom"
    offsets: np.ndarray = field(init=False, repr=False)
    lower: np.ndarray = field(init=False, repr=False)
    upper: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        sizes = [c.size for c in self.coalitions]
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        lower = np.array([p.box.lower for c in self.coalitions for p in c.players])
        upper = np.array([p.box.upper for c in self.coalitions for p in c.players])
        for arr in (offsets, lower, upper):
            arr.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def N(self) -> int:
        return len(self.coalitions)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.coalitions)

    @property
    def n(self) -> int:
        return int(self.offsets[-1])

    def index(self, i: int, j: int) -> int:
        """Global coordinate of player ``j`` in coalition ``i``."""
        if not 0 <= i < self.N or not 0 <= j < self.coalitions[i].size:
            raise IndexError(f"no player ({i}, {j})")
        return int(self.offsets[i]) + j

    def player_at(self, k: int) -> tuple[int, int]:
        """Inverse of :meth:`index`."""
        if not 0 <= k < self.n:
            raise IndexError(f"coordinate {k} out of range")
        i = int(np.searchsorted(self.offsets, k, side="right")) - 1
        return i, k - int(self.offsets[i])

    def block(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def player(self, i: int, j: int) -> PlayerSpec:
        return self.coalitions[i].players[j]

    def players(self):
        """Iterate ``(i, j, PlayerSpec)`` in coordinate order."""
        for i, c in enumerate(self.coalitions):
            for j, p in enumerate(c.players):
                yield i, j, p

    @property
    def has_subgradients(self) -> bool:
        return all(p.cost.subgradient is not None for _, _, p in self.players())

    def check_profile(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"action profile must have shape ({self.n},), got {x.shape}")
        return x

    def contains(self, x) -> bool:
        x = self.check_profile(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def project(self, x) -> np.ndarray:
        """Coordinate-wise box projection of a full profile."""
        return np.clip(self.check_profile(x), self.lower, self.upper)


def assemble_game(
    players: Sequence[PlayerSpec], graphs: Sequence[CoalitionGraph], name: str = "custom"
) -> GameSpec:
    """Group players by coalition, check indices and attach one graph each.

    Raises:
        DuplicatePlayer: two specs share ``(coalition_id, player_id)``.
        EmptyCoalition: a coalition index in ``0..N-1`` has no players, or a
            coalition's player ids are not contiguous from 0.
        DimensionMismatch: graph count or a graph size disagrees with the players.
    """
    if not players:
        raise EmptyCoalition("a game needs at least one player")
    seen = {}
    for p in players:
        key = (int(p.coalition_id), int(p.player_id))
        if key[0] < 0 or key[1] < 0:
            raise InvalidInput(f"negative index in player {key}")
        if key in seen:
            raise DuplicatePlayer(f"player {key} specified twice")
        seen[key] = p
    n_coalitions = max(max(i for i, _ in seen) + 1, len(graphs))
    if len(graphs) != n_coalitions:
        raise DimensionMismatch(f"{len(graphs)} graphs given for {n_coalitions} coalitions")
    coalitions = []
    for i in range(n_coalitions):
        members = sorted((j, p) for (ci, j), p in seen.items() if ci == i)
        if not members:
            raise EmptyCoalition(f"coalition {i} has no players")
        ids = [j for j, _ in members]
        if ids != list(range(len(ids))):
            raise EmptyCoalition(f"coalition {i} player ids {ids} are not 0..{len(ids) - 1}")
        graph = graphs[i]
        if graph.size != len(members):
            raise DimensionMismatch(
                f"coalition {i}: graph has size {graph.size} but {len(members)} players"
            )
        coalitions.append(Coalition(players=tuple(p for _, p in members), graph=graph))
    return GameSpec(coalitions=tuple(coalitions), name=name)


def coalition_cost(game: GameSpec, i: int, x) -> float:
    """Average of the local costs of coalition ``i`` at profile ``x``."""
    x = game.check_profile(x)
    players = game.coalitions[i].players
    return sum(p.cost.evaluate(x) for p in players) / len(players)
