import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coalition_ne.cournot import build_cournot
from coalition_ne.errors import (
    DimensionMismatch,
    DuplicatePlayer,
    EmptyCoalition,
    InvalidInput,
    OracleFailure,
)
from coalition_ne.game import (
    BoxConstraint,
    CostOracle,
    PlayerSpec,
    assemble_game,
    coalition_cost,
    project_box,
)
from coalition_ne.graph import CoalitionGraph, build_ring

from conftest import single_coalition_game

finite = st.floats(-1e6, 1e6, allow_nan=False)


def _player(i, j, value=0.0, box=(0.0, 1.0)):
    return PlayerSpec(i, j, BoxConstraint(*box), CostOracle(lambda x, v=value: v))


def test_assemble_cournot_sizes():
    game = build_cournot()
    assert game.N == 4
    assert game.sizes == (6, 6, 6, 6)
    assert game.n == 24


def test_assemble_minimal_game():
    game = assemble_game([_player(0, 0)], [CoalitionGraph(np.ones((1, 1)))])
    assert game.n == 1 and game.N == 1


def test_graph_size_mismatch():
    players = [_player(0, 0), _player(0, 1), _player(1, 0), _player(1, 1)]
    with pytest.raises(DimensionMismatch):
        assemble_game(players, [build_ring(3), build_ring(2)])


def test_graph_count_mismatch():
    with pytest.raises(DimensionMismatch):
        assemble_game([_player(0, 0), _player(1, 0)], [CoalitionGraph(np.ones((1, 1)))])


def test_duplicate_player():
    with pytest.raises(DuplicatePlayer):
        assemble_game([_player(0, 0), _player(0, 0)], [CoalitionGraph(np.ones((1, 1)))])


def test_empty_coalition():
    one = CoalitionGraph(np.ones((1, 1)))
    with pytest.raises(EmptyCoalition):
        assemble_game([_player(0, 0)], [one, one])
    with pytest.raises(EmptyCoalition):
        assemble_game([_player(0, 1)], [one])


def test_coordinate_map_is_bijective():
    game = build_cournot()
    seen = {game.index(i, j) for i, j, _ in game.players()}
    assert seen == set(range(game.n))
    for k in range(game.n):
        assert game.index(*game.player_at(k)) == k


def test_box_rejects_bad_bounds():
    with pytest.raises(InvalidInput):
        BoxConstraint(1.0, 0.0)
    with pytest.raises(InvalidInput):
        BoxConstraint(0.0, float("inf"))


@pytest.mark.parametrize("v, expected", [(5.0, 3.0), (1.5, 1.5), (-2.0, 0.0)])
def test_project_box_examples(v, expected):
    assert project_box(v, BoxConstraint(0.0, 3.0)) == expected


@given(finite, finite, finite, finite)
def test_project_box_idempotent_nonexpansive(a, b, lo, width):
    box = BoxConstraint(lo, lo + abs(width))
    pa, pb = project_box(a, box), project_box(b, box)
    assert project_box(pa, box) == pa
    assert abs(pa - pb) <= abs(a - b)
    assert box.contains(pa)


def test_coalition_cost_mean():
    game = single_coalition_game([lambda x: 4.0, lambda x: 6.0])
    assert coalition_cost(game, 0, np.zeros(2)) == 5.0


def test_coalition_cost_single_player():
    game = single_coalition_game([lambda x: 3.0 * x[0] + 1.0])
    assert coalition_cost(game, 0, np.array([2.0])) == 7.0


def test_coalition_cost_cournot_at_zero(cournot):
    # every player's cost at 0 is 5 * 6j, j = 1..6, so the mean is 30 * 3.5
    for i in range(4):
        assert coalition_cost(cournot, i, np.zeros(24)) == pytest.approx(105.0, abs=1e-12)


@given(st.permutations(range(4)))
def test_coalition_cost_permutation_invariant(perm):
    funcs = [lambda x, a=a: a * x[0] ** 2 + x[1] for a in (1.0, 2.0, 3.0, 4.0)]
    x = np.array([0.3, -0.7, 1.1, 0.2])
    base = coalition_cost(single_coalition_game(funcs), 0, x)
    permuted = coalition_cost(single_coalition_game([funcs[p] for p in perm]), 0, x)
    assert permuted == pytest.approx(base, rel=1e-14)


def test_oracle_failure_wrapping():
    oracle = CostOracle(lambda x: 1 / 0)
    with pytest.raises(OracleFailure):
        oracle.evaluate(np.zeros(1))
    with pytest.raises(OracleFailure):
        CostOracle(lambda x: float("nan")).evaluate(np.zeros(1))


def test_oracle_is_deterministic_and_scalar(cournot):
    x = np.random.default_rng(3).uniform(0, 60, 24)
    cost = cournot.player(2, 4).cost
    v = cost.evaluate(x)
    assert isinstance(v, float)
    assert cost.evaluate(x.copy()) == v


def test_batch_matches_scalar(cournot):
    X = np.random.default_rng(5).uniform(0, 60, (50, 24))
    for i, j, p in cournot.players():
        np.testing.assert_array_equal(p.cost.evaluate_batch(X), [p.cost.evaluate(x) for x in X])


def test_profile_dimension_checked(cournot):
    with pytest.raises(DimensionMismatch):
        coalition_cost(cournot, 0, np.zeros(5))


def test_empirical_lipschitz_holds(cournot):
    from coalition_ne.analysis import estimate_lipschitz

    rng = np.random.default_rng(11)
    cost = cournot.player(0, 0).cost
    D = estimate_lipschitz(cost, cournot, 2000, rng)
    X = rng.uniform(0, 60, (500, 24))
    Y = rng.uniform(0, 60, (500, 24))
    ratios = np.abs(cost.evaluate_batch(X) - cost.evaluate_batch(Y)) / np.linalg.norm(X - Y, axis=1)
    assert np.all(ratios <= D)
