import math

import numpy as np
import pytest
from scipy.stats import kstest

from metapop.continuous import default_step, integrate_ode, simulate_coupled_ct, simulate_ctmc
from metapop.landscape import Exponential, Ring, RingLayout, UniformBox, from_arrays, generate_landscape
from metapop.oracle import exact_coupled_ct_moment, exact_ctmc_marginal, state_index
from metapop.rates import Constant, Hill, Linear, RateModel, RescueExtinction

from conftest import chi2_pvalue


def _logistic(t, p0, lam, e):
    # symmetric two-patch ring: dp/dt = (lam/2) p (1 - p) - e p
    r = lam / 2 - e
    K = 1 - 2 * e / lam
    return K / (1 + (K / p0 - 1) * math.exp(-r * t))


def _ring2(lam, e):
    L = from_arrays(np.array([0.0, 1.0]), np.ones(2), Ring())
    return L, RateModel(Linear(lam), Constant(e), 2)


def test_ode_matches_closed_form():
    L, M = _ring2(3.0, 0.5)
    ode = integrate_ode([0.1, 0.1], L, M, 5.0, h=0.01)
    assert np.abs(ode.p[-1] - _logistic(5.0, 0.1, 3.0, 0.5)).max() < 1e-8
    assert ode.at(2.5)[0] == pytest.approx(_logistic(2.5, 0.1, 3.0, 0.5), abs=1e-8)


def test_rk4_order():
    L, M = _ring2(3.0, 0.5)
    exact = _logistic(2.0, 0.1, 3.0, 0.5)
    errs = [abs(integrate_ode([0.1, 0.1], L, M, 2.0, h=h).p[-1, 0] - exact) for h in (0.2, 0.1, 0.05)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 3.5


def test_contact_ode_stationary_and_zero():
    n = 20
    L = generate_landscape(RingLayout(n), Ring())
    M = RateModel(Linear(1.0 * n), Constant(1.0), n)
    ode = integrate_ode(np.full(n, 0.9), L, M, 30.0)
    assert np.allclose(ode.p[-1], 0.5, atol=1e-8)
    assert not integrate_ode(np.zeros(n), L, M, 5.0).p.any()


def test_ode_grid_and_interpolation():
    L, M = _ring2(3.0, 0.5)
    ode = integrate_ode([0.2, 0.4], L, M, 1.0, h=0.3)
    assert ode.times[-1] == pytest.approx(1.0) and len(ode.times) == 5
    assert np.allclose(ode.conn, ode.p @ L.influence)
    t = 0.37
    assert np.allclose(ode.connectivity_at(t), ode.at(t) @ L.influence)
    with pytest.raises(ValueError):
        ode.at(1.5)
    assert default_step(L, M) == pytest.approx(min(0.01, 1 / (10 * 3.0 * 0.5)))


def test_pure_death_exponential_lifetimes():
    L = from_arrays(np.zeros(1), np.ones(1), Exponential(1.0))
    M = RateModel(Constant(0.0), Constant(1.0), 1)
    lifetimes = []
    for s in range(2000):
        path = simulate_ctmc([1], L, M, 50.0, seed=s)
        assert path.absorbed and path.n_events == 1
        lifetimes.append(path.extinction_time)
    assert kstest(lifetimes, "expon").pvalue > 1e-3


def test_absorbed_and_final_state():
    L = generate_landscape(RingLayout(5), Ring())
    M = RateModel(Linear(2.0), Constant(1.0), 5)
    path = simulate_ctmc(np.zeros(5), L, M, 3.0, seed=0)
    assert path.absorbed and path.n_events == 0 and not path.final_state().any()
    path = simulate_ctmc(np.ones(5), L, M, 3.0, seed=0)
    grid = np.linspace(0, 3, 7)
    assert np.array_equal(path.states_at(grid)[-1], path.final_state())


def _small_model(n, seed):
    L = generate_landscape(UniformBox(n, 2, seed), Exponential(1.0))
    L = from_arrays(L.z, np.random.default_rng(seed).uniform(0.5, 2.0, n), Exponential(1.0))
    return L, RateModel(Hill(0.3), RescueExtinction(0.8, 0.4), n)


def test_ctmc_law_matches_oracle():
    L, M = _small_model(3, 1)
    x0 = [1, 0, 1]
    exact = exact_ctmc_marginal(x0, L, M, 1.5)
    counts = np.zeros(8)
    for s in range(4000):
        counts[state_index(simulate_ctmc(x0, L, M, 1.5, seed=s).final_state())] += 1
    assert chi2_pvalue(counts, exact.probs) > 1e-3


def test_coupled_ct_marginals_and_mean():
    L, M = _small_model(2, 3)
    x0 = [1, 0]
    T = 1.0
    ode = integrate_ode(np.array(x0, float), L, M, T, h=0.001)
    exact = exact_ctmc_marginal(x0, L, M, T)
    mom = exact_coupled_ct_moment(x0, L, M, T)
    reps = 4000
    counts = np.zeros(4)
    Z = np.empty(reps)
    Wsum = np.zeros(2)
    for s in range(reps):
        tr = simulate_coupled_ct(x0, L, M, T, seed=s, ode=ode)
        W, X = tr.states_at([T])
        counts[state_index(X[0])] += 1
        Wsum += W[0]
        Z[s] = tr.Z_at(T)
        assert np.all((W[0] == X[0]) | (tr.J == 1))
    assert chi2_pvalue(counts, exact.probs) > 1e-3
    assert abs(Z.mean() - mom.mean) < 4 * math.sqrt(mom.var / reps) + 1e-3
    p = ode.p[-1]
    assert np.all(np.abs(Wsum / reps - p) < 4 * np.sqrt(p * (1 - p) / reps) + 1e-3)


def test_coupled_ct_x_path_is_consistent():
    L, M = _small_model(6, 2)
    tr = simulate_coupled_ct(np.ones(6), L, M, 2.0, seed=5)
    xp = tr.x_path()
    grid = np.linspace(0, 2, 41)
    assert np.array_equal(xp.states_at(grid), tr.states_at(grid)[1])
    assert np.all(np.diff(tr.Z) >= 0)


def test_coupled_ct_constant_rates_never_disagree():
    L, _ = _small_model(8, 4)
    M = RateModel(Constant(0.7), Constant(0.4), 8)
    tr = simulate_coupled_ct(np.ones(8), L, M, 3.0, seed=1)
    assert tr.Z_at(3.0) == 0 and not tr.J.any()


def test_coupled_ct_short_ode_rejected():
    L, M = _small_model(3, 0)
    ode = integrate_ode(np.ones(3), L, M, 1.0)
    with pytest.raises(ValueError):
        simulate_coupled_ct(np.ones(3), L, M, 2.0, seed=0, ode=ode)
