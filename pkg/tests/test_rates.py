import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metapop.landscape import ExplicitMatrix, Ring, RingLayout, from_arrays, generate_landscape
from metapop.rates import (
    Constant,
    Hill,
    Linear,
    RateModel,
    RescueExtinction,
    TimestepError,
    eval_rates,
    format_rates,
    lipschitz_constants,
    max_rate,
    parse_family,
    parse_rates,
    validate_timestep,
)


def test_eval_examples():
    M = RateModel(Linear(2.0), Constant(1.0), 1)
    C, E = eval_rates(M, [0.3])
    assert C[0] == pytest.approx(0.6) and E[0] == 1.0
    assert Hill(1.0)(1.0) == 0.5
    with pytest.raises(ValueError):
        eval_rates(M, [-0.1])


def test_lipschitz_examples():
    M = RateModel(Linear(1.0), Constant(3.0), 2)
    lc, le, lip = lipschitz_constants(M, [1.0, 1.0])
    assert np.array_equal(lc, [1.0, 1.0]) and np.array_equal(le, [0.0, 0.0])
    assert np.array_equal(lip, lc + le)
    assert Hill(1.0).lipschitz(5.0) == pytest.approx(3 * math.sqrt(3) / 8)


def test_hill_slope_matches_finite_differences():
    # independent check: maximise finite differences on a fine grid
    for y, smax in [(1.0, 5.0), (0.5, 0.2), (2.0, 10.0)]:
        f = Hill(y)
        s = np.linspace(0, smax, 400001)
        fd = np.max(np.diff(f(s)) / np.diff(s))
        assert f.lipschitz(smax) == pytest.approx(fd, rel=1e-4)
        r = RescueExtinction(2.0, y)
        assert r.lipschitz(smax) == pytest.approx(np.max(-np.diff(r(s)) / np.diff(s)), rel=1e-4)


FAMILIES = st.one_of(
    st.builds(Linear, st.floats(0, 5)),
    st.builds(Constant, st.floats(0, 5)),
    st.builds(Hill, st.floats(0.05, 5)),
    st.builds(RescueExtinction, st.floats(0, 5), st.floats(0.05, 5)),
)


@settings(max_examples=60, deadline=None)
@given(FAMILIES, st.floats(0.01, 20), st.integers(0, 2**31 - 1))
def test_lipschitz_certificate_and_supremum(f, smax, seed):
    rng = np.random.default_rng(seed)
    s, t = rng.uniform(0, smax, (2, 10_000))
    lip = f.lipschitz(smax)
    assert np.all(np.abs(f(s) - f(t)) <= lip * np.abs(s - t) * (1 + 1e-9) + 1e-14)
    vals = f(s)
    assert np.all(vals >= 0) and np.all(vals <= f.supremum(smax) * (1 + 1e-12) + 1e-15)


def test_hill_shape():
    f = Hill(0.7)
    s = np.linspace(0, 50, 1000)
    assert f(0.0) == 0.0 and np.all(np.diff(f(s)) >= 0) and f(1e6) == pytest.approx(1.0)


def test_validate_timestep():
    L = from_arrays(np.zeros(2), np.array([2.0, 2.0]), ExplicitMatrix(np.array([[0, 1.0], [1.0, 0]])))
    assert L.max_connectivity().tolist() == [1.0, 1.0]
    validate_timestep(RateModel(Constant(0.0), Constant(1.0), 2), L, 1.0)
    with pytest.raises(TimestepError) as exc:
        validate_timestep(RateModel(Linear(3.0), Constant(0.1), 2), L, 1.0)
    assert exc.value.patch == 0 and exc.value.supremum == pytest.approx(3.0)
    validate_timestep(RateModel(Linear(3.0), Constant(0.1), 2), L, 4.0)


def test_contact_max_rate():
    for lam in (0.3, 1.0, 2.5):
        n = 6
        L = generate_landscape(RingLayout(n), Ring())
        M = RateModel(Linear(lam * n), Constant(1.0), n)
        # brute force over every state
        best = 0.0
        for k in range(2**n):
            x = np.array([(k >> i) & 1 for i in range(n)], dtype=float)
            C, E = eval_rates(M, x @ L.influence)
            best = max(best, C.max(), E.max())
        assert max_rate(L, M) == pytest.approx(best) == pytest.approx(max(2 * lam, 1.0))


def test_heterogeneous_rates_and_batches():
    fams = [Linear(1.0), Hill(0.5), Linear(1.0)]
    M = RateModel(fams, RescueExtinction(1.0, 0.3), 3)
    S = np.random.default_rng(0).random((4, 3))
    C = M.colonisation_rates(S)
    for i, f in enumerate(fams):
        assert np.allclose(C[:, i], f(S[:, i]))


def test_config_roundtrip():
    text = "colonisation = hill(0.5)\nextinction = rescue(1.0, 0.5)  # comment\ncolonization[2] = linear(2)\n"
    M = parse_rates(text, 3)
    assert M.colonisation == (Hill(0.5), Linear(2.0), Hill(0.5))
    assert M.extinction[0] == RescueExtinction(1.0, 0.5)
    M2 = parse_rates(format_rates(M), 3)
    assert M2.colonisation == M.colonisation and M2.extinction == M.extinction
    for bad in ("colonisation = linear(1)", "colonisation = foo(1)\nextinction = const(1)", "colonisation[9] = linear(1)\nextinction=const(1)"):
        with pytest.raises(ValueError):
            parse_rates(bad, 3)
    assert parse_family("const(2)") == Constant(2.0)
