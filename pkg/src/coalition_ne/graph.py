"""Per-coalition communication digraphs with doubly-stochastic weights."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGraph, InvalidWeight, NotSquare

STOCHASTIC_TOL = 1e-12
POWER_TOL = 1e-12
POWER_MAX_ITERS = 10_000

CHECKS = (
    "nonnegative",
    "row_stochastic",
    "column_stochastic",
    "self_loops",
    "strongly_connected",
)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of every structural check on a weight matrix."""

    checks: dict[str, bool]
    details: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, ok in self.checks.items() if not ok]

    def summary(self) -> str:
        if self.passed:
            return "all checks passed"
        parts = []
        for name in self.failures():
            detail = self.details.get(name)
            parts.append(f"{name} failed" + (f" ({detail})" if detail else ""))
        return "; ".join(parts)


def _reachable(adj: np.ndarray, start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def is_strongly_connected(pattern: np.ndarray) -> bool:
    """Reachability closure from node 0 along edges and reversed edges."""
    n = pattern.shape[0]
    if n <= 1:
        return True
    return len(_reachable(pattern, 0)) == n and len(_reachable(pattern.T, 0)) == n


def validate_graph(A) -> ValidationReport:
    """Check a weight matrix against the coalition graph requirements.

    Raises:
        NotSquare: if ``A`` is not a square 2-D matrix.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise NotSquare(f"weight matrix must be square and non-empty, got shape {A.shape}")
    rows = A.sum(axis=1)
    cols = A.sum(axis=0)
    checks = {
        "nonnegative": bool(np.all(A >= 0)),
        "row_stochastic": bool(np.all(np.abs(rows - 1.0) <= STOCHASTIC_TOL)),
        "column_stochastic": bool(np.all(np.abs(cols - 1.0) <= STOCHASTIC_TOL)),
        "self_loops": bool(np.all(np.diag(A) > 0)),
        # Entry [j, l] > 0 means j receives from l; direction is irrelevant
        # for the closure since both directions are explored.
        "strongly_connected": is_strongly_connected(A > 0),
    }
    details = {}
    if not checks["row_stochastic"]:
        details["row_stochastic"] = "row sums " + np.array2string(rows, precision=6)
    if not checks["column_stochastic"]:
        details["column_stochastic"] = "column sums " + np.array2string(cols, precision=6)
    if not checks["nonnegative"]:
        details["nonnegative"] = f"min entry {A.min():.6g}"
    if not checks["self_loops"]:
        details["self_loops"] = "zero diagonal at " + str(np.flatnonzero(np.diag(A) <= 0).tolist())
    return ValidationReport(checks=checks, details=details)


@dataclass(frozen=True, eq=False)
class CoalitionGraph:
    """Validated doubly-stochastic weight matrix of one coalition.

    ``weights[j, l] > 0`` means player ``j`` receives from player ``l``.
    """

    weights: np.ndarray

    def __post_init__(self):
        A = np.array(self.weights, dtype=float)
        report = validate_graph(A)
        if not report.passed:
            raise InvalidGraph(report.summary())
        A.setflags(write=False)
        object.__setattr__(self, "weights", A)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other):
        return isinstance(other, CoalitionGraph) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())


def build_ring(n: int, self_weight: float = 0.5) -> CoalitionGraph:
    """Directed cycle ``j <- j-1 (mod n)`` with self-loops."""
    if n < 1:
        raise InvalidGraph(f"ring size must be >= 1, got {n}")
    if not 0.0 < self_weight < 1.0:
        raise InvalidWeight(f"self_weight must lie in (0, 1), got {self_weight}")
    if n == 1:
        return CoalitionGraph(np.ones((1, 1)))
    A = self_weight * np.eye(n) + (1.0 - self_weight) * np.roll(np.eye(n), 1, axis=0)
    return CoalitionGraph(A)


def build_complete(n: int) -> CoalitionGraph:
    if n < 1:
        raise InvalidGraph(f"graph size must be >= 1, got {n}")
    return CoalitionGraph(np.full((n, n), 1.0 / n))


def make_graph(kind: str, n: int, **params) -> CoalitionGraph:
    """Build a graph from a generator name, or from an explicit ``matrix``."""
    if kind == "ring":
        return build_ring(n, params.get("self_weight", 0.5))
    if kind == "complete":
        return build_complete(n)
    if kind == "matrix":
        A = np.asarray(params["matrix"], dtype=float)
        if A.shape != (n, n):
            raise InvalidGraph(f"matrix shape {A.shape} does not match coalition size {n}")
        return CoalitionGraph(A)
    raise InvalidGraph(f"unknown graph kind {kind!r}")


def _weights(A) -> np.ndarray:
    if isinstance(A, CoalitionGraph):
        return A.weights
    W = np.asarray(A, dtype=float)
    report = validate_graph(W)
    if not report.passed:
        raise InvalidGraph(report.summary())
    return W


def contraction_sigma(A) -> float:
    """Spectral norm of ``A - 11^T/n`` by power iteration on its Gram matrix."""
    W = _weights(A)
    n = W.shape[0]
    D = W - np.full((n, n), 1.0 / n)
    G = D.T @ D
    if not np.any(np.abs(G) > 0):
        return 0.0
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(POWER_MAX_ITERS):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam_new = float(v @ G @ v)
        if abs(lam_new - lam) <= POWER_TOL * max(lam_new, 1.0):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def coalition_kappa(A) -> tuple[float, float]:
    """Return ``(sigma**2, (1 + sigma**2) / (1 - sigma**2))``."""
    sigma = contraction_sigma(A)
    s2 = sigma * sigma
    if s2 >= 1.0:
        raise InvalidGraph(f"contraction factor {sigma} is not below 1")
    return s2, (1.0 + s2) / (1.0 - s2)
