import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import brute_ospa

from dmotlab.metrics import MetricParams, ospa, ospa2, timing_probe, track_distance

coords = st.floats(-300, 300, allow_nan=False)
point_sets = st.lists(st.tuples(coords, coords), max_size=5)


def test_ospa_examples():
    X = [(0, 0), (10, 5), (-40, 7)]
    assert ospa(X, X).total == 0
    assert ospa([], [(1, 1), (2, 2), (3, 3)]).total == 100
    assert ospa([], []).total == 0
    assert ospa([(0, 0)], [(50, 0)]).total == pytest.approx(50)


def test_ospa_decomposition():
    o = ospa([(0, 0), (100, 0)], [(10, 0)], MetricParams(c=100, p=1))
    assert o.loc == pytest.approx(5.0)
    assert o.card == pytest.approx(50.0)
    assert o.total == pytest.approx(55.0)
    assert tuple(o) == (o.total, o.loc, o.card)


def test_params_validation():
    for bad in [dict(c=0), dict(p=0.5), dict(window=0)]:
        with pytest.raises(ValueError):
            MetricParams(**bad)


@given(point_sets, point_sets, st.sampled_from([1, 2]))
def test_ospa_matches_brute_force(X, Y, p):
    mp = MetricParams(c=100, p=p)
    assert abs(ospa(X, Y, mp).total - brute_ospa(X, Y, 100, p)) < 1e-9


@given(point_sets, point_sets, point_sets)
def test_ospa_metric_axioms(X, Y, Z):
    d = lambda a, b: ospa(a, b).total  # noqa: E731
    assert d(X, Y) == pytest.approx(d(Y, X), abs=1e-9)
    assert d(X, X) == pytest.approx(0, abs=1e-9)
    assert d(X, Z) <= d(X, Y) + d(Y, Z) + 1e-9


@given(point_sets, point_sets)
def test_ospa_bounds(X, Y):
    o = ospa(X, Y)
    assert o.total <= 100 + 1e-9
    assert o.loc <= o.total + 1e-9 and o.card <= o.total + 1e-9


def tracks(*hists):
    return {i: {k: np.asarray(p, float) for k, p in h.items()} for i, h in enumerate(hists)}


def test_ospa2_identical_is_zero():
    T = tracks({0: (0, 0), 1: (1, 0), 2: (2, 0)}, {1: (50, 50), 2: (51, 50)})
    assert ospa2(T, T, 2) == 0


@given(st.lists(point_sets, min_size=1, max_size=4), st.lists(point_sets, min_size=1, max_size=4))
def test_ospa2_window_one_equals_ospa(truth_steps, est_steps):
    n = min(len(truth_steps), len(est_steps))
    truth = {(k, i): {k: np.array(p)} for k in range(n) for i, p in enumerate(truth_steps[k])}
    est = {(k, i): {k: np.array(p)} for k in range(n) for i, p in enumerate(est_steps[k])}
    mp = MetricParams(window=1)
    for k in range(n):
        assert abs(ospa2(truth, est, k, mp) - ospa(truth_steps[k], est_steps[k], mp).total) < 1e-12


def test_ospa2_label_swap():
    # one truth track; the estimate switches identity half-way through a 4-step window
    truth = tracks({k: (10.0 * k, 0) for k in range(4)})
    est = tracks({k: (10.0 * k, 0) for k in range(2)}, {k: (10.0 * k, 0) for k in range(2, 4)})
    mp = MetricParams(c=100, p=1, window=4)
    for k in range(4):
        X = [truth[0][k]]
        Y = [h[k] for h in est.values() if k in h]
        assert ospa(X, Y, mp).total == 0
    # best pairing: 2 matched steps of 0 and 2 unmatched of c -> 50; the other track costs c
    assert ospa2(truth, est, 3, mp) == pytest.approx((50 + 100) / 2)


def test_track_distance_conventions():
    nan = np.full(2, np.nan)
    a = np.array([[0, 0], [0, 0], nan, nan])
    b = np.array([[3, 4], nan, [1, 1], nan])
    # steps: both (5), only a (c), only b (c), neither (skipped)
    assert track_distance(a, b, 100, 1) == pytest.approx((5 + 100 + 100) / 3)
    assert track_distance(np.array([nan]), np.array([nan]), 100, 1) == 0


def test_ospa2_window_clipped_at_start():
    truth = tracks({0: (0, 0)})
    est = tracks({0: (20, 0)})
    assert ospa2(truth, est, 0, MetricParams(window=10)) == pytest.approx(20)


def test_timing_probe():
    with timing_probe() as p:
        pass
    assert p.ms >= 0
    with timing_probe() as p:
        time.sleep(0.01)
    assert p.ms >= 9


def test_timing_probe_stable():
    pool = np.random.default_rng(0).normal(size=(60, 2)) * 100
    ospa(pool, pool)  # warm-up
    reps = []
    for _ in range(20):
        with timing_probe() as p:
            ospa(pool, pool[::-1] + 1.0)
        reps.append(p.ms)
    reps = np.array(reps)
    assert reps.std() / reps.mean() < 0.5
