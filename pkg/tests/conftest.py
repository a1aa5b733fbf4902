import numpy as np
import pytest

from coalition_ne.analysis import build_constants, estimate_game_lipschitz, max_step_size, nash_oracle
from coalition_ne.cournot import build_cournot, exact_chi
from coalition_ne.game import BoxConstraint, CostOracle, PlayerSpec, assemble_game
from coalition_ne.graph import CoalitionGraph, build_ring

ACCEPTANCE_RESULTS = {}


class CountingOracle:
    """Wraps a cost function and counts calls."""

    def __init__(self, func):
        self.func = func
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.func(x)


def single_coalition_game(funcs, box=(-10.0, 10.0), graph=None, subgradients=None, batch=None):
    """One coalition whose players have the given cost functions."""
    n = len(funcs)
    graph = graph if graph is not None else (CoalitionGraph(np.ones((1, 1))) if n == 1 else build_ring(n))
    players = []
    for j, f in enumerate(funcs):
        players.append(
            PlayerSpec(
                coalition_id=0,
                player_id=j,
                box=BoxConstraint(*box),
                cost=CostOracle(
                    func=f,
                    subgradient=None if subgradients is None else subgradients[j],
                    batch=None if batch is None else batch[j],
                ),
            )
        )
    return assemble_game(players, [graph])


@pytest.fixture(scope="session")
def cournot():
    return build_cournot()


@pytest.fixture(scope="session")
def cournot_star(cournot):
    return nash_oracle(cournot, tol=1e-8)


@pytest.fixture(scope="session")
def cournot_constants(cournot):
    D = estimate_game_lipschitz(cournot, 2000, np.random.default_rng(0))
    return build_constants(cournot, exact_chi(), D, mu_ref=0.05)


@pytest.fixture(scope="session")
def cournot_alpha_max(cournot_constants):
    return max_step_size(cournot_constants)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, line = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {line}")
