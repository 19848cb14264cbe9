import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import est, fig3_pool
from dmotlab.clustering import (
    build_distance, canonical, cdp_delta, cdp_rho, clusterer, dbscan, mean_shift, modified_cdp, select_cutoff,
    split_centers,
)


def D_of(*groups, n):
    """Cluster vector from lists of pool indices."""
    D = np.zeros(n, int)
    for k, g in enumerate(groups, 1):
        D[list(g)] = k
    return D


# -- distance and cutoff ---------------------------------------------------------


def test_distance_examples():
    d = build_distance([est(0, 0, 1), est(0, 0, 1, alpha=1)])
    assert d[0, 1] == np.inf
    assert build_distance([est(0, 0, 1), est(3, 4, 2)])[0, 1] == pytest.approx(5.0)


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100), st.integers(1, 4)), min_size=1, max_size=12))
def test_distance_symmetric_zero_diagonal(pts):
    pool = [est(x, y, n, alpha=i) for i, (x, y, n) in enumerate(pts)]
    d = build_distance(pool)
    np.testing.assert_array_equal(d, d.T)
    np.testing.assert_array_equal(np.diag(d), 0)


def test_cutoff_examples(rng):
    d = np.full((2, 2), 7.0)
    np.fill_diagonal(d, 0)
    assert select_cutoff(d) == pytest.approx(7.0)
    pts = rng.uniform(0, 100, 200)
    d = np.abs(pts[:, None] - pts[None, :])
    assert select_cutoff(d) == pytest.approx(np.percentile(d[np.triu_indices(200, 1)], 2))
    eq = np.full((15, 15), 10.0)
    np.fill_diagonal(eq, 0)
    assert select_cutoff(eq) == 10.0


def test_cutoff_on_uniform_distances(rng):
    v = rng.uniform(0, 100, 20000)
    n = 200
    d = np.zeros((n, n))
    d[np.triu_indices(n, 1)] = v[: n * (n - 1) // 2]
    d = d + d.T
    assert select_cutoff(d) == pytest.approx(2.0, abs=0.3)


# -- rho and delta ---------------------------------------------------------------


def test_rho_examples():
    d = build_distance([est(0, 0, 1), est(1, 0, 2), est(0, 1, 3), est(1, 1, 4), est(100, 100, 5)])
    rho = cdp_rho(d, 2.0)
    assert rho[0] == 3 and rho[4] == 0
    same = build_distance([est(0, 0, 1), est(0, 0, 1, alpha=1)])
    np.testing.assert_array_equal(cdp_rho(same, 1.0), [0, 0])


def test_delta_examples():
    d = build_distance([est(0, 0, 1), est(8, 0, 2)])
    rho = cdp_rho(d, select_cutoff(d))
    np.testing.assert_allclose(cdp_delta(d, rho), [8, 8])  # lower-ranked point: 8 to its denser peer
    d = build_distance([est(0, 0, 1), est(1, 0, 2), est(0.5, 0.5, 3), est(40, 0, 4), est(41, 0, 5)])
    rho = cdp_rho(d, 2.0)
    delta = cdp_delta(d, rho)
    assert delta[1] == pytest.approx(1.0)
    # the densest point takes the largest finite pairwise distance
    top = int(np.argmax(rho))
    assert delta[top] == pytest.approx(d[np.isfinite(d)].max())


# -- center selection ----------------------------------------------------------------


def best_two_partition(pts):
    """Exhaustive 2-means: the split minimising within-group squared error."""
    n = len(pts)
    best, arg = np.inf, None
    for mask in itertools.product([False, True], repeat=n - 1):
        m = np.array((False,) + mask)
        if not m.any():
            continue
        sse = sum(((pts[g] - pts[g].mean(0)) ** 2).sum() for g in (m, ~m))
        if sse < best:
            best, arg = sse, m
    upper = arg if pts[arg].sum(1).mean() > pts[~arg].sum(1).mean() else ~arg
    return upper


def test_split_centers_examples(rng):
    assert split_centers([0], [0.0]).tolist() == [True]
    assert split_centers([2, 2, 2], [5.0, 5.0, 5.0]).all()
    rho = np.r_[rng.integers(35, 45, 5), rng.integers(0, 5, 45)]
    delta = np.r_[rng.uniform(80, 100, 5), rng.uniform(0, 10, 45)]
    np.testing.assert_array_equal(np.flatnonzero(split_centers(rho, delta)), np.arange(5))


@pytest.mark.parametrize("seed", range(6))
def test_split_centers_matches_exhaustive_two_means(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 5))
    n = 12
    rho = np.r_[rng.integers(6, 10, k), rng.integers(0, 4, n - k)].astype(float)
    delta = np.r_[rng.uniform(60, 100, k), rng.uniform(0, 20, n - k)]
    pts = np.column_stack([rho / (n - 1), delta / delta.max()])
    np.testing.assert_array_equal(split_centers(rho, delta), best_two_partition(pts))


# -- modified CDP ----------------------------------------------------------------------


def test_worked_example_partition():
    pool = fig3_pool()
    D = modified_cdp(pool)
    assert D.max() == 6
    idx = {(e.label.node, e.label.alpha): i for i, e in enumerate(pool)}
    groups = [{(1, 1), (2, 3)}, {(1, 2), (2, 2), (3, 2)}, {(2, 1), (3, 3)}]
    for g in groups:
        assert len({D[idx[k]] for k in g}) == 1
    singles = set(idx) - set().union(*groups)
    assert len({D[idx[k]] for k in singles}) == 3
    assert canonical(D) == canonical([5, 2, 1, 3, 2, 5, 4, 6, 2, 3])


def test_cdp_trivial_pools():
    assert modified_cdp([est(0, 0, 1)]).tolist() == [1]
    # one node only: nothing to associate
    assert modified_cdp([est(0, 0, 1), est(5, 0, 1, alpha=1)]).tolist() == [1, 2]


def test_cdp_separated_pairs():
    pool = []
    for k, c in enumerate([(0, 0), (1000, 0), (0, 1000)]):
        pool += [est(c[0], c[1], 1, alpha=k), est(c[0] + 1, c[1] + 1, 2, alpha=k)]
    assert canonical(modified_cdp(pool)) == (1, 1, 2, 2, 3, 3)


@st.composite
def separated_pools(draw):
    """Clusters of diameter <= spread on distinct cells of a jittered grid.

    Gaps between nearest clusters are at least 5x the spread and comparable
    to each other. When one gap is more than ten times smaller than the
    rest, a 2-means split of delta can no longer place it reliably.
    """
    k = draw(st.integers(2, 5))
    spread = 10.0
    pitch = draw(st.floats(8 * spread, 300.0))
    origin = np.array([draw(st.floats(-1000, 1000)), draw(st.floats(-1000, 1000))])
    cells = draw(st.permutations([(i, j) for i in range(3) for j in range(3)]))[:k]
    centres = [origin + pitch * np.array(cell) + np.array([draw(st.floats(-spread / 2, spread / 2)) for _ in range(2)])
               for cell in cells]
    # offsets come from a seeded uniform draw: shrinking them to exact
    # duplicates gives pools no tracker would ever produce
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    pool, truth = [], []
    alpha = 0
    for ci, c in enumerate(centres):
        size = draw(st.integers(2, 5))
        for node in draw(st.permutations(range(1, 6)))[:size]:
            off = rng.uniform(-spread / 2, spread / 2, 2) / np.sqrt(2)
            pool.append(est(*(c + off), node, alpha=alpha))
            truth.append(ci)
            alpha += 1
    return pool, truth


@settings(suppress_health_check=[HealthCheck.large_base_example, HealthCheck.too_slow])
@given(separated_pools())
def test_cdp_recovers_well_separated_clusters(case):
    pool, truth = case
    assert canonical(modified_cdp(pool)) == canonical(truth)


pools = st.lists(st.tuples(st.floats(-300, 300), st.floats(-300, 300), st.integers(1, 5)), min_size=1, max_size=25)


def make_pool(pts):
    return [est(x, y, n, alpha=i) for i, (x, y, n) in enumerate(pts)]


def valid_and_cannot_link(pool, D):
    D = np.asarray(D)
    assert set(D.tolist()) == set(range(1, D.max() + 1))
    for m in set(D.tolist()):
        nodes = [pool[i].label.node for i in np.flatnonzero(D == m)]
        assert len(nodes) == len(set(nodes))


@given(pools)
def test_cdp_never_co_clusters_a_node(pts):
    pool = make_pool(pts)
    valid_and_cannot_link(pool, modified_cdp(pool))


@given(pools, st.floats(1, 200))
def test_dbscan_never_co_clusters_a_node(pts, eps):
    pool = make_pool(pts)
    valid_and_cannot_link(pool, dbscan(pool, eps))


@given(pools, st.floats(5, 200))
def test_mean_shift_never_co_clusters_a_node(pts, bw):
    pool = make_pool(pts)
    valid_and_cannot_link(pool, mean_shift(pool, bw))


@given(pools, st.randoms(use_true_random=False))
def test_cdp_permutation_equivariant(pts, rnd):
    pool = make_pool(pts)
    perm = list(range(len(pool)))
    rnd.shuffle(perm)
    D = modified_cdp(pool)
    Dp = modified_cdp([pool[i] for i in perm])
    assert canonical(Dp) == canonical(D[perm])


# -- DBSCAN and mean shift ---------------------------------------------------------------


def test_dbscan_examples():
    assert dbscan([est(0, 0, 1), est(5, 0, 2)], 10).tolist() == [1, 1]
    assert dbscan([est(0, 0, 1), est(15, 0, 2)], 10).tolist() == [1, 2]
    chain = [est(0, 0, 1), est(5, 0, 2), est(9, 0, 3)]
    assert dbscan(chain, 10).tolist() == [1, 1, 1]
    # a-b and b-c within reach, a-c farther than epsilon but still density-reachable
    chain = [est(0, 0, 1), est(5, 1.3, 2), est(9, 0, 3)]
    d = build_distance(chain)
    assert d[0, 1] <= 5.5 and d[1, 2] <= 5.5 and d[0, 2] == pytest.approx(9)
    assert dbscan(chain, 5.5).tolist() == [1, 1, 1]


def test_dbscan_noise_becomes_singletons():
    D = dbscan([est(0, 0, 1), est(1, 0, 2), est(500, 0, 3)], 10, min_pts=2)
    assert D.tolist() == [1, 1, 2]
    with pytest.raises(ValueError):
        dbscan([est(0, 0, 1)], 0)


def test_mean_shift_examples():
    assert mean_shift([est(3, 4, 1)], 10).tolist() == [1]
    assert mean_shift([est(0, 0, 1), est(100, 0, 2)], 10).tolist() == [1, 2]
    assert mean_shift([est(-2.5, 0, 1), est(2.5, 0, 2)], 10).tolist() == [1, 1]


def test_mean_shift_symmetric_pair_mode_at_midpoint():
    from dmotlab.clustering import _shift_to_modes
    pos = np.array([[-2.5, 7.0], [2.5, 7.0]])
    modes = _shift_to_modes(pos, 10.0, tol=1e-6)
    np.testing.assert_allclose(modes, [[0, 7], [0, 7]], atol=1e-3)


def test_clusterer_factory():
    assert clusterer("cdp") is modified_cdp
    pool = [est(0, 0, 1), est(5, 0, 2)]
    assert clusterer("dbscan", epsilon=10)(pool).tolist() == [1, 1]
    assert clusterer("meanshift", bandwidth=10)(pool).tolist() == [1, 1]
    for bad in (dict(method="dbscan"), dict(method="meanshift"), dict(method="kmeans")):
        with pytest.raises(ValueError):
            clusterer(**bad)
