import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_cloud
from oracles import affine_extremal_2d
from phiconv import (PointCloud, ScalarField, build_family, evaluate, genericity_estimate,
                     has_strong_max, perturb_to_unique_max, perturb_to_unique_min,
                     rho_inf_distance)
from phiconv.errors import BadEpsilon, InvalidInput, NoExposedPoint, NotPhiConvex
from phiconv.families import custom_family, family_norm
from phiconv.perturb import sample_perturbation, top_gap


def replay(result, f, fam, eps, dom=None):
    g = np.asarray(f, float) + evaluate(fam, result.coefficients)
    dom = tuple(range(fam.cloud.size)) if dom is None else tuple(dom)
    winner, gap = top_gap(g, dom)
    assert winner == result.unique_point
    assert gap >= 1e-9 and gap == pytest.approx(result.gap)
    rho = rho_inf_distance(g, f)
    assert rho < eps and rho == pytest.approx(result.rho_distance, abs=1e-15)
    return g


def test_hand_witness_for_zero_field():
    phi = 0.05 * np.array([0, 1, 1, 2, 1.0])  # 0.05 (p1 + p2) on the square
    assert np.max(np.abs(phi)) == pytest.approx(0.1)
    assert rho_inf_distance(phi, np.zeros(5)) == pytest.approx(0.1 / 1.1)


def test_zero_field(square_affine):
    r = perturb_to_unique_max(np.zeros(5), None, square_affine, 0.1)
    replay(r, np.zeros(5), square_affine, 0.1)
    assert r.unique_point in (0, 1, 2, 3)


def test_already_unique(square_affine):
    f = np.array([0, 0, 0, 3, 1.0])
    r = perturb_to_unique_max(f, None, square_affine, 0.1)
    assert r.rho_distance == 0.0 and r.unique_point == 3
    assert np.all(r.coefficients == 0)


def test_two_leaders_stay_leaders(square_affine):
    f = np.array([1, 1, 0, 0, 0.0])
    for eps in (0.01, 0.1, 0.5, 0.9):
        r = perturb_to_unique_max(f, None, square_affine, eps)
        replay(r, f, square_affine, eps)
        assert r.unique_point in (0, 1)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.2, 1.5])
def test_bad_epsilon(square_affine, eps):
    with pytest.raises(BadEpsilon):
        perturb_to_unique_max(np.zeros(5), None, square_affine, eps)
    with pytest.raises(BadEpsilon):
        genericity_estimate(np.zeros(5), None, square_affine, eps, 10, 0)


def test_non_separating():
    const = custom_family(PointCloud([[0, 0], [1, 0], [0, 1]]), [[1, 1, 1]])
    with pytest.raises(NoExposedPoint):
        perturb_to_unique_max(np.zeros(3), None, const, 0.1)


def test_minimisation_form_with_indicator(square_affine):
    # delta_C for C = {1, 2, 4}: the minimiser of delta_C - phi is a point of C exposed by phi
    f = ScalarField([np.inf, 0, 0, np.inf, 0], allows_infinity=True)
    r = perturb_to_unique_min(f, square_affine, 0.2)
    assert r.unique_point in (1, 2)
    g = np.where(np.isfinite(f.values), f.values, 0.0) - evaluate(square_affine, r.coefficients)
    inside = [1, 2, 4]
    assert g[r.unique_point] < min(g[q] for q in inside if q != r.unique_point)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.01, 0.1, 0.5]))
def test_random_fields_replay(seed, eps):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(4, 20)), lattice=4)
    fam = build_family("affine", cloud)
    P = cloud.points
    d = rng.integers(-2, 3, size=2)
    f = np.maximum(P @ d, float(rng.uniform(-1, 1)))  # convex, with ties on the lattice
    r = perturb_to_unique_max(f, None, fam, eps)
    g = replay(r, f, fam, eps)
    assert r.unique_point in affine_extremal_2d(P)
    # a unique maximum is a strong maximum at every fine enough radius
    others = np.delete(cloud.distances[r.unique_point], r.unique_point)
    n0 = int(np.floor(1 / others.min())) + 1
    for n in (n0, n0 + 1, 10 * n0):
        assert has_strong_max(g, None, n, cloud) == r.unique_point


# -- strong maxima -----------------------------------------------------------

def test_strong_max_examples():
    cloud = PointCloud([[0.0], [0.5], [3.0]])
    f = np.array([0, 2.0, 1])
    assert has_strong_max(f, None, 3, cloud) == 1
    wide = PointCloud([[0.0], [5.0], [9.0]])
    assert has_strong_max(np.ones(3), None, 1, wide) is None
    # two maximisers 0.5 apart: with n = 1 each has only point 2 in its far set
    tied = np.array([2.0, 2.0, 0.0])
    assert has_strong_max(tied, None, 1, cloud) == 0
    # if the third point is also near, nothing is far and the first maximiser qualifies
    near = PointCloud([[0.0], [0.5], [0.2]])
    assert has_strong_max(tied, None, 1, near) == 0
    # a far competitor at equal height defeats both
    far_tie = PointCloud([[0.0], [0.5], [2.0]])
    assert has_strong_max(np.array([2.0, 2.0, 2.0]), None, 1, far_tie) is None


def test_strong_max_bad_n(square):
    with pytest.raises(InvalidInput):
        has_strong_max(np.zeros(5), None, 0, square)


@given(st.integers(0, 2**32 - 1))
def test_strong_max_monotone(seed):
    # a smaller n means a larger radius and a smaller far set, so a strong
    # maximum at n survives at every coarser level
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(3, 15)))
    f = rng.integers(0, 4, size=cloud.size).astype(float)
    n = int(rng.integers(1, 30))
    x = has_strong_max(f, None, n, cloud)
    if x is not None:
        for m in range(1, n + 1):
            y = has_strong_max(f, None, m, cloud)
            assert y is not None
            far = cloud.distances[y] >= 1 / m
            assert not far.any() or f[y] > f[far].max()


def test_strong_max_not_monotone_in_growing_n():
    # two tied points 0.5 apart: vacuous at radius 1, defeated at radius 1/3
    cloud = PointCloud([[0.0], [0.5]])
    f = np.array([1.0, 1.0])
    assert has_strong_max(f, None, 1, cloud) == 0
    assert has_strong_max(f, None, 3, cloud) is None


# -- sampler and genericity --------------------------------------------------

def test_sampler_soundness_and_determinism(square_affine):
    rng = np.random.default_rng(0)
    cloud = random_cloud(rng, 9)
    fams = [square_affine, build_family("lipschitz", cloud), build_family("polynomial", cloud, degree=2)]
    for fam in fams:
        for eps in (0.05, 0.5, 0.95):
            for k in range(200):
                c = sample_perturbation(fam, eps, 42, k)
                assert rho_inf_distance(evaluate(fam, c), np.zeros(fam.cloud.size)) <= eps + 1e-12
                assert fam.alpha * family_norm(fam, c) <= eps / (1 - eps) * (1 + 1e-12)
        np.testing.assert_array_equal(sample_perturbation(fam, 0.1, 7, 3), sample_perturbation(fam, 0.1, 7, 3))


def test_genericity_zero_field(square_affine):
    rep = genericity_estimate(np.zeros(5), None, square_affine, 0.1, 1000, 42)
    assert rep.unique_fraction >= 0.99
    assert rep.extremal_fraction == 1.0
    assert len(rep.rows) == 1000
    again = genericity_estimate(np.zeros(5), None, square_affine, 0.1, 1000, 42)
    assert again.rows == rep.rows and again.unique_fraction == rep.unique_fraction


def test_genericity_order_independent(square_affine):
    rep = genericity_estimate(np.zeros(5), None, square_affine, 0.3, 50, 5)
    # each row is a pure function of (seed, k), so recomputing any single sample agrees
    for k in (49, 0, 17):
        c = sample_perturbation(square_affine, 0.3, 5, k)
        g = evaluate(square_affine, c)
        assert rep.rows[k][2] == top_gap(g, tuple(range(5)))[0]


def test_genericity_degenerate_sampler(square_affine, monkeypatch):
    import phiconv.perturb as pt
    monkeypatch.setattr(pt, "sample_perturbation", lambda fam, eps, seed, k: np.zeros(fam.dim))
    rep = pt.genericity_estimate(np.ones(5), None, square_affine, 0.1, 1, 0)
    assert rep.unique_fraction == 0.0


def test_genericity_large_gap(square_affine):
    f = np.array([0, 0, 0, 10.0, 0])
    eps = 0.1
    assert 10 > 2 * eps / (1 - eps)
    rep = genericity_estimate(f, None, square_affine, eps, 300, 1)
    assert rep.unique_fraction == 1.0
    assert all(row[2] == 3 for row in rep.rows)


def test_genericity_requires_convexity(square_affine):
    bump = np.array([0, 0, 0, 0, 1.0])
    with pytest.raises(NotPhiConvex):
        genericity_estimate(bump, None, square_affine, 0.1, 10, 0)
    with pytest.warns(UserWarning, match="not Phi-convex"):
        rep = genericity_estimate(bump, None, square_affine, 0.1, 10, 0, require_convex=False)
    assert rep.extremal_fraction == 0.0
    with pytest.raises(InvalidInput):
        genericity_estimate(np.zeros(5), None, square_affine, 0.1, 0, 0)
