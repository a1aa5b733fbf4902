import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coalition_ne.cournot import (
    PRICE_TERMS,
    analytic_subgradient,
    build_cournot,
    cournot_cost,
    exact_chi,
    run_benchmark,
)
from coalition_ne.errors import DimensionMismatch
from coalition_ne.game import BoxConstraint


def _formula(i, j, x):
    """Direct transcription of the benchmark cost, 1-based player index."""
    q = x[6 * i + j]
    price = 60.0
    for c in PRICE_TERMS[i]:
        price -= x[6 * c + j]
    c = 5.0 * q * q + 5.0 * q + 5.0 * abs(q - 6 * (j + 1))
    return c - q * price


def test_hand_value_first_player():
    x = np.zeros(24)
    x[0] = 1.0
    assert cournot_cost(0, 0, x) == -24.0


def test_last_coalition_at_zero():
    for j in range(6):
        assert cournot_cost(3, j, np.zeros(24)) == 30.0 * (j + 1)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 60), min_size=24, max_size=24))
def test_oracle_matches_formula(xs):
    x = np.array(xs)
    game = build_cournot()
    for i, j, p in game.players():
        assert p.cost.evaluate(x) == _formula(i, j, x)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 60), min_size=24, max_size=24), st.integers(0, 23), st.floats(0, 60))
def test_second_coalition_isolated(xs, k, v):
    x = np.array(xs)
    for j in range(6):
        if k == 6 + j:
            continue
        y = x.copy()
        y[k] = v
        assert cournot_cost(1, j, y) == cournot_cost(1, j, x)


def test_subgradient_example():
    x = np.zeros(24)
    x[6] = 10.0
    g = analytic_subgradient((1, 0), x)
    assert g[0] == pytest.approx(70.0)
    assert np.count_nonzero(g[1:]) == 0


def test_subgradient_kink_tie_break():
    x = np.full(24, 3.0)
    x[6 * 2 + 1] = 12.0
    g = analytic_subgradient((2, 1), x)
    price = 60.0 - x[0 * 6 + 1] - x[1 * 6 + 1]
    assert g[1] == pytest.approx(10 * 12.0 + 5 - price)


def test_subgradient_shape_checked():
    with pytest.raises(DimensionMismatch):
        analytic_subgradient((0, 0), np.zeros(5))


def test_subgradient_matches_finite_differences():
    rng = np.random.default_rng(12)
    game = build_cournot()
    h = 1e-5
    checked = 0
    while checked < 100:
        x = rng.uniform(0, 60, 24)
        i, j = int(rng.integers(4)), int(rng.integers(6))
        k = 6 * i + j
        if abs(x[k] - 6 * (j + 1)) < 10 * h:
            continue
        e = np.zeros(24)
        e[k] = h
        cost = game.player(i, j).cost
        fd = (cost.evaluate(x + e) - cost.evaluate(x - e)) / (2 * h)
        g = analytic_subgradient((i, j), x)[j]
        assert fd == pytest.approx(g, rel=1e-5, abs=1e-6)
        checked += 1


def test_exact_chi_positive():
    assert exact_chi() == pytest.approx(1.5833333, abs=1e-6)


def test_custom_box_applied():
    game = build_cournot(BoxConstraint(0.0, 10.0))
    assert np.all(game.upper == 10.0)


def test_benchmark_zero_iterations(cournot_star):
    rep = run_benchmark([0.1], 0, [1], x_star=cournot_star)
    assert rep.gaps[0.1].shape == (1, 1)
    assert list(rep.times) == [0]
    assert rep.summary()["alphas"][0]["initial_gap"] > 0


def test_benchmark_deterministic_and_parallel(cournot_star):
    a = run_benchmark([0.02, 0.1], 40, [1, 2], x_star=cournot_star, record_every=10)
    b = run_benchmark([0.02, 0.1], 40, [1, 2], x_star=cournot_star, record_every=10, workers=2)
    assert a.summary() == b.summary()
    for alpha in (0.02, 0.1):
        np.testing.assert_array_equal(a.gaps[alpha], b.gaps[alpha])
        np.testing.assert_array_equal(a.trajectories[alpha], b.trajectories[alpha])


def test_benchmark_steady_state_ordering(cournot_star):
    rep = run_benchmark([0.02, 0.1], 2000, list(range(10)), x_star=cournot_star, record_every=10)
    assert rep.steady_state_gap(0.02) < rep.steady_state_gap(0.1)


def test_gap_trend_smoothed_admissible(cournot_star, cournot_alpha_max):
    alpha = cournot_alpha_max / 2
    rep = run_benchmark([alpha], 3000, list(range(10)), x_star=cournot_star)
    windows = rep.mean_gap(alpha)[1:].reshape(-1, 100).mean(axis=1)
    assert np.all(np.diff(windows) <= 0)


def test_gap_floor_convergent_step(cournot_star):
    rep = run_benchmark([0.02], 3000, list(range(10)), x_star=cournot_star)
    windows = rep.mean_gap(0.02)[1:].reshape(-1, 100).mean(axis=1)
    assert windows[-1] < 1e-3 * windows[0]
