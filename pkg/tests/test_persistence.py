import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonartopo.core import DomainError, PointCloud
from sonartopo.persistence import (
    DistanceMatrix,
    Feature,
    OracleRefusal,
    PersistenceDiagram,
    betti_at,
    diagram_equal,
    distance_matrix,
    naive_rips_oracle,
    ranked_features,
    rips_persistence,
    top_k_features,
)
from sonartopo.synthetic import cuboctahedron, geodesic_circle, octahedron

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_two_point_distance():
    d = distance_matrix(PointCloud([[0.0, 0.0], [3.0, 4.0]]))
    assert d.entries[0, 1] == 5.0
    assert d.diameter == 5.0


def test_square_distances():
    d = distance_matrix(PointCloud(SQUARE)).entries
    assert set(np.round(d[np.triu_indices(4, 1)], 12)) == {1.0, round(math.sqrt(2), 12)}


def test_geodesic_four_points():
    c = geodesic_circle(4)
    d = distance_matrix(c, "polyline-geodesic").entries
    vals = d[np.triu_indices(4, 1)]
    np.testing.assert_allclose(sorted(vals), [0.25] * 4 + [0.5] * 2, rtol=1e-12)


def test_geodesic_needs_labels():
    with pytest.raises(DomainError):
        distance_matrix(PointCloud(SQUARE), "polyline-geodesic")


def test_distance_matrix_validation():
    with pytest.raises(DomainError):
        DistanceMatrix([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(DomainError):
        DistanceMatrix([[1.0]])
    with pytest.raises(DomainError):
        DistanceMatrix([[0.0, -1.0], [-1.0, 0.0]])


def test_square_has_one_loop():
    diag = rips_persistence(distance_matrix(PointCloud(SQUARE)))
    h1 = diag.in_dim(1)
    assert len(h1) == 1
    assert h1[0].birth == 1.0
    assert h1[0].death == pytest.approx(math.sqrt(2), rel=1e-15)
    assert sorted(f.death for f in diag.in_dim(0)) == [1.0, 1.0, 1.0, math.inf]


def test_two_points_h0():
    diag = rips_persistence(distance_matrix(PointCloud([[0.0], [2.0]])))
    assert diag.features == (Feature(0, 0.0, 2.0), Feature(0, 0.0, math.inf))


def test_single_point():
    diag = rips_persistence(distance_matrix(PointCloud([[1.0, 1.0]])), max_dim=2)
    assert diag.features == (Feature(0, 0.0, math.inf),)


def test_collinear_has_no_loops():
    pts = np.column_stack([np.arange(8.0), np.zeros(8)])
    assert rips_persistence(distance_matrix(PointCloud(pts))).in_dim(1) == []


def test_truncated_flag():
    diag = rips_persistence(distance_matrix(PointCloud(SQUARE)), max_eps=1.2)
    (loop,) = diag.in_dim(1)
    assert loop.truncated and not loop.finite
    full = rips_persistence(distance_matrix(PointCloud(SQUARE)))
    assert not any(f.truncated for f in full.features)


def test_betti_numbers_of_square():
    diag = rips_persistence(distance_matrix(PointCloud(SQUARE)))
    assert betti_at(diag, 0.0) == (4, 0, 0)
    assert betti_at(diag, 1.2) == (1, 1, 0)
    assert betti_at(diag, 1.5) == (1, 0, 0)


def test_oracle_refuses_large_input():
    with pytest.raises(OracleRefusal):
        naive_rips_oracle(np.zeros((13, 13)))


def test_octahedron_void():
    d = distance_matrix(PointCloud(octahedron()))
    diag = rips_persistence(d, max_dim=2)
    (void,) = diag.in_dim(2)
    assert void.birth == pytest.approx(math.sqrt(2), rel=1e-15)
    assert void.death == pytest.approx(2.0, rel=1e-15)
    assert diagram_equal(diag, naive_rips_oracle(d, max_dim=2))


def test_cuboctahedron_void():
    d = distance_matrix(PointCloud(cuboctahedron()))
    (void,) = naive_rips_oracle(d, max_dim=2).in_dim(2)
    assert void.birth == pytest.approx(math.sqrt(2), rel=1e-12)
    assert void.death == pytest.approx(math.sqrt(3), rel=1e-12)
    assert diagram_equal(rips_persistence(d, max_dim=2), naive_rips_oracle(d, max_dim=2))


def test_geodesic_circle_single_loop():
    diag = rips_persistence(distance_matrix(geodesic_circle(60), "polyline-geodesic"))
    (loop,) = diag.in_dim(1)
    assert loop.birth == pytest.approx(1 / 60, rel=1e-12)
    assert loop.death == pytest.approx(1 / 3, rel=1e-12)


def test_top_k_edge_cases():
    diag = rips_persistence(distance_matrix(PointCloud(SQUARE)))
    assert top_k_features(diag, 1, 0) == []
    assert top_k_features(diag, 2, 3) == []
    assert len(top_k_features(diag, 1, 5)) == 1
    assert all(f.finite for f in top_k_features(diag, 0, 10))


def test_ranked_puts_truncated_first():
    diag = PersistenceDiagram(
        (Feature(1, 0.1, 0.9), Feature(1, 0.5, math.inf, True), Feature(1, 0.2, math.inf, True))
    )
    births = [f.birth for f in ranked_features(diag, 1)]
    assert births == [0.2, 0.5, 0.1]


def test_diagram_rejects_inverted_feature():
    with pytest.raises(DomainError):
        PersistenceDiagram((Feature(1, 0.5, 0.2),))


def test_csv_roundtrip():
    d = distance_matrix(PointCloud(SQUARE))
    diag = rips_persistence(d, max_eps=1.2)
    back = PersistenceDiagram.from_csv(diag.to_csv(), diag.max_eps)
    assert diagram_equal(back, diag)
    assert diag.to_csv().splitlines()[0] == "dim,birth,death,truncated"


def random_cloud(seed, n, dim=3):
    return np.random.default_rng(seed).standard_normal((n, dim))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 9), st.sampled_from([1, 2]))
def test_engine_matches_oracle(seed, n, max_dim):
    d = distance_matrix(PointCloud(random_cloud(seed, n)))
    assert diagram_equal(rips_persistence(d, max_dim), naive_rips_oracle(d, max_dim))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.3, 3.0))
def test_engine_matches_oracle_truncated(seed, eps):
    d = distance_matrix(PointCloud(random_cloud(seed, 9)))
    assert diagram_equal(rips_persistence(d, 2, eps), naive_rips_oracle(d, 2, eps))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_h1_independent_of_clearing_route(seed):
    # max_dim=1 clears apparent pairs; max_dim=2 clears with the full tetrahedron reduction
    d = distance_matrix(PointCloud(random_cloud(seed, 40, 2)))
    assert rips_persistence(d, 1).in_dim(1) == rips_persistence(d, 2).in_dim(1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([0.25, 0.5, 2.0, 8.0]))
def test_scale_equivariance(seed, lam):
    d = distance_matrix(PointCloud(random_cloud(seed, 10)))
    a = rips_persistence(d, 2)
    b = rips_persistence(d.scaled(lam), 2)
    assert b.features == tuple(Feature(f.dim, f.birth * lam, f.death * lam, f.truncated) for f in a.features)


def _bottleneck_upper(a, b):
    # cheap stability check: matching each finite feature to the diagonal or its partner in order
    a = sorted(a, key=lambda f: -f.lifetime)
    b = sorted(b, key=lambda f: -f.lifetime)
    worst = 0.0
    for i in range(max(len(a), len(b))):
        fa = a[i] if i < len(a) else None
        fb = b[i] if i < len(b) else None
        if fa and fb:
            pair = max(abs(fa.birth - fb.birth), abs(fa.death - fb.death))
            diag_cost = max(fa.lifetime, fb.lifetime) / 2
            worst = max(worst, min(pair, diag_cost))
        else:
            worst = max(worst, (fa or fb).lifetime / 2)
    return worst


def test_stability_under_small_perturbation():
    th = np.linspace(0, 2 * np.pi, 60, endpoint=False)
    pts = np.column_stack([np.cos(th), np.sin(th)])
    eps = 1e-3
    noisy = pts + np.random.default_rng(0).uniform(-eps, eps, pts.shape) / math.sqrt(2)
    a = rips_persistence(distance_matrix(PointCloud(pts))).in_dim(1)
    b = rips_persistence(distance_matrix(PointCloud(noisy))).in_dim(1)
    big_a = [f for f in a if f.lifetime > 0.1]
    big_b = [f for f in b if f.lifetime > 0.1]
    assert len(big_a) == len(big_b) == 1
    assert _bottleneck_upper(big_a, big_b) <= 2 * eps


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 30))
def test_diagram_well_formed(seed, n):
    d = distance_matrix(PointCloud(random_cloud(seed, n, 2)))
    diag = rips_persistence(d, 1)
    assert all(0 <= f.birth < f.death for f in diag.features)
    assert all(f.death <= d.diameter for f in diag.features if f.finite)
    assert len(diag.in_dim(0)) == n
    assert betti_at(diag, d.diameter)[0] == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(5, 60))
def test_clearing_does_not_change_diagram(seed, n):
    d = distance_matrix(PointCloud(random_cloud(seed, n, 2)))
    assert diagram_equal(rips_persistence(d, 1), rips_persistence(d, 1, clearing=False))
