import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metapop.discrete import (
    simulate_coupled,
    simulate_coupled_batch,
    simulate_deterministic,
    simulate_ifm,
    step_coupled,
    step_deterministic,
)
from metapop.landscape import Exponential, UniformBox, from_arrays, generate_landscape
from metapop.rates import Constant, Hill, Linear, RateModel, RescueExtinction, TimestepError


def _random_model(n, seed):
    L = generate_landscape(UniformBox(n, 2, seed), Exponential(1.0))
    L = from_arrays(L.z, np.random.default_rng(seed).uniform(0.5, 2.0, n), Exponential(1.0))
    M = RateModel(Hill(0.3), RescueExtinction(0.8, 0.4), n)
    return L, M


def test_step_deterministic_examples(ring2):
    L, M = ring2
    assert np.allclose(step_deterministic([1.0, 0.0], L, M, 1.0), [0.5, 0.5])
    single = from_arrays(np.zeros(1), np.ones(1), Exponential(1.0))
    assert step_deterministic([0.0], single, RateModel(Constant(0.3), Constant(0.2), 1), 1.0)[0] == pytest.approx(0.3)
    # fixed point: C(1 - p) = E p with C = 0.3, E = 0.2 at p = 0.6
    assert step_deterministic([0.6], single, RateModel(Constant(0.3), Constant(0.2), 1), 2.0)[0] == pytest.approx(0.6)


def test_step_coupled_by_hand(ring2):
    L, M = ring2
    X = np.array([1, 0], dtype=np.uint8)
    W = np.array([0, 1], dtype=np.uint8)
    p = np.array([0.5, 0.25])
    U = np.array([0.3, 0.9])
    X1, W1, p1 = step_coupled(X, W, p, U, L, M, 1.0)
    # X: S = (0, 0.5); patch 1 survives iff U <= 1 - 0.5; patch 2 colonised iff U <= 0.5
    # W: S(p) = (0.125, 0.25); patch 1 colonised iff U <= 0.125; patch 2 survives iff U <= 0.5
    assert X1.tolist() == [1, 0] and W1.tolist() == [0, 0]
    assert np.allclose(p1, [0.5 + 0.125 * 0.5 - 0.25, 0.25 + 0.25 * 0.75 - 0.125])


def test_step_coupled_identical_thresholds_and_u_one(ring2):
    L, M = ring2
    X = np.array([0, 0], dtype=np.uint8)
    for U in np.random.default_rng(0).random((50, 2)):
        X1, W1, _ = step_coupled(X, X, X.astype(float), U, L, M, 1.0)
        assert np.array_equal(X1, W1)
    X1, _, _ = step_coupled(X, X, X.astype(float), np.ones(2), L, M, 1.0)
    assert X1.tolist() == [0, 0]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1), st.sampled_from([1, 2, 4]))
def test_coupled_invariants(n, seed, m):
    L, M = _random_model(n, seed)
    rng = np.random.default_rng(seed)
    X0 = (rng.random(n) < 0.5).astype(np.uint8)
    tr = simulate_coupled(X0, L, M, m, 3, seed=seed)
    assert np.all(tr.J[0] == 0)
    assert np.all(np.diff(tr.J.astype(int), axis=0) >= 0)
    assert np.all((tr.X == tr.W)[tr.J == 0])
    assert tr.p.min() >= 0 and tr.p.max() <= 1
    assert np.array_equal(tr.X, simulate_ifm(X0, L, M, m, 3, seed=seed))
    assert np.array_equal(tr.times, np.arange(3 * m + 1) / m)


def test_constant_rates_never_disagree():
    L, _ = _random_model(15, 1)
    M = RateModel(Constant(0.4), Constant(0.3), 15)
    tr = simulate_coupled(np.ones(15, dtype=np.uint8), L, M, 1, 20, seed=3)
    assert not tr.J.any() and np.array_equal(tr.X, tr.W)


def test_absorbing_empty_state():
    L, _ = _random_model(10, 2)
    M = RateModel(Linear(1.0), Constant(0.5), 10)
    assert not simulate_ifm(np.zeros(10, dtype=np.uint8), L, M, 2, 10, seed=0).any()


def test_errors():
    L, M = _random_model(5, 0)
    with pytest.raises(ValueError):
        simulate_coupled(np.ones(5), L, M, 3, 0.5, seed=0)
    with pytest.raises(TimestepError):
        simulate_coupled(np.ones(5), L, RateModel(Constant(2.0), Constant(0.5), 5), 1, 1, seed=0)


@pytest.mark.parametrize("c", [2.0, 0.5])
def test_scaling_invariance_bitwise(c):
    L, M = _random_model(20, 4)
    X0 = np.ones(20, dtype=np.uint8)
    a = simulate_coupled(X0, L, M, 2, 5, seed=11)
    b = simulate_coupled(X0, L.scaled(c), M, 2, 5, seed=11)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.W, b.W) and np.array_equal(a.p, b.p)


def test_scaling_invariance_c10():
    L, M = _random_model(20, 4)
    X0 = np.ones(20, dtype=np.uint8)
    a = simulate_coupled(X0, L, M, 2, 5, seed=11)
    b = simulate_coupled(X0, L.scaled(10.0), M, 2, 5, seed=11)
    assert np.allclose(a.p, b.p, rtol=1e-12, atol=1e-14)


def test_batch_mean_identity():
    L, M = _random_model(6, 5)
    X0 = np.array([1, 0, 1, 1, 0, 1], dtype=np.uint8)
    reps = 20000
    b = simulate_coupled_batch(X0, L, M, 2, 3, reps, seed=8)
    mean = b.W.mean(axis=1)
    se = np.sqrt(b.p * (1 - b.p) / reps)
    assert np.all(np.abs(mean - b.p) <= 4 * se + 1e-12)
    assert np.array_equal(b.p, simulate_deterministic(X0.astype(float), L, M, 2, 3))
    assert np.all((b.X == b.W)[b.J == 0])


def test_weighted_disagreement():
    L, M = _random_model(8, 6)
    tr = simulate_coupled(np.ones(8, dtype=np.uint8), L, M, 1, 10, seed=2)
    z = tr.weighted_disagreement(L.a)
    assert np.allclose(z, (tr.J * L.a).sum(axis=1)) and np.all(np.diff(z) >= 0)
