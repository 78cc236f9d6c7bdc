import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from conftest import SQUARE, random_cloud
from oracles import (affine_extremal_2d, closed_form_between, exposed_by_highs,
                     monotone_chain_hull)
from phiconv import (GridSpec, PointCloud, Tolerances, build_family, evaluate, is_between,
                     is_phi_convex, is_phi_extremal, is_strictly_quasiconvex, phi_convex_hull,
                     phi_exposed_points, phi_extremal_points, segment_member, separates_points)
from phiconv.convexity import between_pairs, replay_betweenness, replay_exposure
from phiconv.errors import InvalidInput, NonSeparatingFamily, RankDeficient
from phiconv.families import custom_family

seeds = st.integers(0, 2**32 - 1)


def mixed_family(rng, cloud):
    kind = rng.choice(["affine", "polynomial", "lipschitz", "lipfull"])
    if kind == "polynomial":
        try:
            return build_family("polynomial", cloud, degree=2)
        except RankDeficient:  # points on a conic
            return build_family("affine", cloud)
    if kind == "lipfull":
        return build_family("lipschitz", cloud, full=True)
    return build_family(str(kind), cloud)


# -- is_between --------------------------------------------------------------

def test_between_midpoint(square_affine):
    cert = is_between(4, 0, 3, square_affine)
    assert cert.result == "between" and cert.witness is None
    P = square_affine.cloud.points
    assert segment_member(P[4], P[0], P[3])


def test_not_between_off_segment(square_affine):
    cert = is_between(4, 0, 1, square_affine)
    assert cert.result == "notBetween"
    phi = evaluate(square_affine, cert.witness)
    assert phi[0] <= phi[4] + 1e-9 and phi[1] <= phi[4] + 1e-9
    assert (phi[4] - phi[0]) + (phi[4] - phi[1]) >= 1 - 1e-9
    assert replay_betweenness(cert, 4, 0, 1, square_affine)


def test_polynomial_quadratic_witness():
    cloud = PointCloud([[-1.0], [0.0], [1.0]])
    fam = build_family("polynomial", cloud, degree=2)
    # q(t) = -t^2 lies in the span (scaled coordinates are the identity here)
    q = evaluate(fam, [0.0, 0.0, -1.0])
    np.testing.assert_allclose(q, [-1.0, 0.0, -1.0])
    assert q[0] < q[1] and q[2] < q[1]
    cert = is_between(1, 0, 2, fam)
    assert cert.result == "notBetween"
    assert replay_betweenness(cert, 1, 0, 2, fam)


def test_endpoint_is_not_between_for_separating_family(square_affine):
    # a = x != y: some affine map is lower at y than at a, so the defining
    # implication fails; the segment test counts the endpoint as a member
    P = square_affine.cloud.points
    assert segment_member(P[0], P[0], P[3])
    assert is_between(0, 0, 3, square_affine).result == "notBetween"
    # the degenerate triple a = x = y is between, trivially
    assert is_between(2, 2, 2, square_affine).between


def test_between_bad_index(square_affine):
    with pytest.raises(InvalidInput):
        is_between(0, 1, 9, square_affine)


@given(seeds)
def test_between_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(6, 14)), lattice=4)
    fam = mixed_family(rng, cloud)
    F = fam.features
    for _ in range(30):
        a, x, y = rng.integers(cloud.size, size=3)
        cert = is_between(a, x, y, fam)
        assert cert.between == closed_form_between(F[a], F[x], F[y])
        assert replay_betweenness(cert, a, x, y, fam)


@given(seeds)
def test_affine_between_is_open_segment(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(5, 20)), lattice=4)
    fam = build_family("affine", cloud)
    P = cloud.points
    for _ in range(40):
        a, x, y = (int(v) for v in rng.integers(cloud.size, size=3))
        if a in (x, y) and x != y:
            assert not is_between(a, x, y, fam).between
            continue
        assert is_between(a, x, y, fam).between == segment_member(P[a], P[x], P[y])


# -- is_phi_convex -----------------------------------------------------------

def test_convexity_examples(square_affine):
    P = square_affine.cloud.points
    assert is_phi_convex((P ** 2).sum(axis=1), None, square_affine) == (True, None)
    assert is_phi_convex(P[:, 0], None, square_affine) == (True, None)

    # the planar copy of this line makes the y row of the affine basis zero,
    # so the check runs on the line's own coordinate
    with pytest.raises(RankDeficient):
        build_family("affine", PointCloud([[0, 0], [1, 0], [0.5, 0]]))
    fam = build_family("affine", PointCloud([[0.0], [1.0], [0.5]]))
    ok, triple = is_phi_convex([0, 0, 1], None, fam)
    assert not ok
    assert triple[0] == 2 and set(triple[1:]) == {0, 1}


def test_convexity_rejects_infinite(square_affine):
    with pytest.raises(InvalidInput):
        is_phi_convex([0, 0, 0, 0, np.inf], None, square_affine)


@given(seeds)
def test_convex_quadratics_are_affine_convex(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(5, 25)), lattice=6)
    fam = build_family("affine", cloud)
    A = rng.normal(size=(2, 2))
    Q = A @ A.T
    P = cloud.points
    f = np.einsum("ij,jk,ik->i", P, Q, P) + P @ rng.normal(size=2)
    assert is_phi_convex(f, None, fam)[0]
    # adding an affine map keeps it convex
    phi = evaluate(fam, rng.normal(size=3))
    assert is_phi_convex(f + phi, None, fam)[0]


@given(seeds)
def test_strictly_quasiconvex_implies_affine_convex(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(4, 16)), lattice=3)
    fam = build_family("affine", cloud)
    f = rng.integers(0, 4, size=cloud.size).astype(float)
    if is_strictly_quasiconvex(f, cloud)[0]:
        assert is_phi_convex(f, None, fam)[0]


def test_brute_force_convexity_agrees():
    rng = np.random.default_rng(11)
    tol = Tolerances()
    for _ in range(15):
        cloud = random_cloud(rng, int(rng.integers(4, 10)), lattice=2)
        fam = mixed_family(rng, cloud)
        f = rng.integers(0, 3, size=cloud.size).astype(float)
        F = fam.features
        bad = None
        for a in range(cloud.size):
            for x in range(cloud.size):
                for y in range(cloud.size):
                    if not closed_form_between(F[a], F[x], F[y]):
                        continue
                    if f[x] <= f[a] + tol.argmax_tie and f[y] <= f[a] + tol.argmax_tie and \
                            max(abs(f[x] - f[a]), abs(f[y] - f[a])) > tol.argmax_tie:
                        bad = bad or (a, x, y)
        ok, triple = is_phi_convex(f, None, fam)
        assert ok == (bad is None)
        if not ok:
            assert triple == bad


# -- extremal points ---------------------------------------------------------

def test_extremal_square(square_affine):
    assert phi_extremal_points(None, square_affine) == (0, 1, 2, 3)
    assert not is_phi_extremal(4, None, square_affine)
    assert between_pairs(4, None, square_affine) == [(0, 3), (1, 2), (2, 1), (3, 0)]


def test_extremal_rich_families():
    rng = np.random.default_rng(5)
    cloud = random_cloud(rng, 12, lattice=3)
    fam = build_family("lipschitz", cloud, basepoint=2, full=True)
    assert phi_extremal_points(None, fam) == cloud.all_indices()
    # the exposing map d(x0, a) - d(x, a) vanishes at x0 and peaks at a
    D = cloud.distances
    for a in range(cloud.size):
        phi = D[2, a] - D[:, a]
        assert phi[2] == 0.0
        assert np.all(phi[a] > np.delete(phi, a))
    poly = build_family("polynomial", PointCloud([[-1.0], [0.0], [1.0]]), degree=2)
    assert phi_extremal_points(None, poly) == (0, 1, 2)


def test_extremal_requires_domain_member(square_affine):
    with pytest.raises(InvalidInput):
        is_phi_extremal(4, [0, 1, 2], square_affine)


@given(seeds)
def test_affine_extremal_matches_open_segment_oracle(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(4, 30)), lattice=int(rng.integers(2, 7)))
    fam = build_family("affine", cloud)
    dom = sorted(rng.choice(cloud.size, size=int(rng.integers(3, cloud.size + 1)), replace=False))
    assert list(phi_extremal_points(dom, fam)) == affine_extremal_2d(cloud.points, dom)


@given(seeds)
def test_extremal_general_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(6, 14)), lattice=3)
    fam = mixed_family(rng, cloud)
    F = fam.features
    n = cloud.size
    expect = tuple(a for a in range(n) if not any(
        closed_form_between(F[a], F[x], F[y]) for x in range(n) for y in range(n) if (x, y) != (a, a)))
    assert phi_extremal_points(None, fam) == expect


# -- exposed points ----------------------------------------------------------

def test_exposed_square(square_affine):
    certs = phi_exposed_points(None, square_affine)
    assert [c.point for c in certs] == [0, 1, 2, 3]
    for c in certs:
        assert c.margin >= 1 - 1e-9
        assert replay_exposure(c, square_affine)
    # p1 + p2 exposes the corner (1, 1)
    phi = evaluate(square_affine, [0, 1, 1])
    assert np.argmax(phi) == 3 and np.sum(phi == phi.max()) == 1


def test_exposed_two_points():
    fam = build_family("affine", PointCloud([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]]))
    assert [c.point for c in phi_exposed_points([0, 2], fam)] == [0, 2]


def test_exposed_constant_family_warns():
    cloud = PointCloud([[0, 0], [1, 0], [0, 1], [1, 1]])
    const = custom_family(cloud, [[1, 1, 1, 1]])
    with pytest.warns(NonSeparatingFamily):
        assert phi_exposed_points(None, const) == []


@given(seeds)
def test_exposed_matches_highs_and_is_extremal(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(4, 16)), lattice=int(rng.integers(3, 8)))
    fam = mixed_family(rng, cloud)
    dom = tuple(sorted(rng.choice(cloud.size, size=int(rng.integers(2, cloud.size + 1)), replace=False)))
    certs = phi_exposed_points(dom, fam)
    pts = [c.point for c in certs]
    assert pts == exposed_by_highs(fam.features, dom)
    assert pts and set(pts) <= set(phi_extremal_points(dom, fam))
    assert all(replay_exposure(c, fam) and c.margin >= 1 - 1e-9 for c in certs)


@given(seeds)
def test_affine_exposed_are_hull_vertices(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(3, 30)), lattice=int(rng.integers(3, 9)))
    fam = build_family("affine", cloud)
    assert [c.point for c in phi_exposed_points(None, fam)] == monotone_chain_hull(cloud.points)


def test_harmonic_exposed_on_boundary():
    g = GridSpec(6, 5)
    fam = build_family("harmonic", g.cloud(), grid=g)
    assert separates_points(fam)[0]
    pts = [c.point for c in phi_exposed_points(None, fam)]
    assert pts and set(pts) <= set(g.boundary_indices)


# -- hulls -------------------------------------------------------------------

def test_hull_examples(square_affine):
    assert phi_convex_hull(range(5), None, square_affine) == (0, 1, 2, 3, 4)
    assert phi_convex_hull([0, 1, 2, 3], None, square_affine) == (0, 1, 2, 3, 4)
    assert phi_convex_hull([0, 3], None, square_affine) == (0, 3, 4)
    with pytest.raises(InvalidInput):
        phi_convex_hull([0, 4], [0, 1, 2], square_affine)
    with pytest.raises(InvalidInput):
        phi_convex_hull([], None, square_affine)


def in_convex_hull(p, pts):
    k = len(pts)
    A_eq = np.vstack([np.asarray(pts).T, np.ones(k)])
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=np.append(p, 1.0), bounds=[(0, None)] * k,
                  method="highs")
    return res.status == 0


@given(seeds)
def test_affine_hull_matches_classical(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(4, 20)), lattice=4)
    fam = build_family("affine", cloud)
    A = sorted(rng.choice(cloud.size, size=int(rng.integers(1, cloud.size)), replace=False))
    hull = phi_convex_hull(A, None, fam)
    P = cloud.points
    assert list(hull) == [i for i in range(cloud.size) if in_convex_hull(P[i], P[A])]


@given(seeds)
def test_hull_properties(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(5, 14)), lattice=4)
    fam = mixed_family(rng, cloud)
    A = set(rng.choice(cloud.size, size=int(rng.integers(1, cloud.size)), replace=False).tolist())
    B = A | set(rng.choice(cloud.size, size=2).tolist())
    hA = phi_convex_hull(A, None, fam)
    assert A <= set(hA)
    assert phi_convex_hull(hA, None, fam) == hA
    assert set(hA) <= set(phi_convex_hull(B, None, fam))


def test_lipschitz_full_hull_is_identity():
    rng = np.random.default_rng(9)
    cloud = random_cloud(rng, 10)
    fam = build_family("lipschitz", cloud, full=True)
    for _ in range(10):
        A = tuple(sorted(rng.choice(10, size=int(rng.integers(1, 10)), replace=False).tolist()))
        assert phi_convex_hull(A, None, fam) == A


# -- strict quasi-convexity --------------------------------------------------

def test_strictly_quasiconvex_examples():
    line = PointCloud([[-1.0], [0.0], [1.0]])
    assert is_strictly_quasiconvex([1, 0, 1], line) == (True, None)
    ok, triple = is_strictly_quasiconvex([2, 2, 2], line)
    assert not ok and triple == (1, 0, 2)
    generic = PointCloud([[0, 0], [1, 0.1], [0.3, 1], [0.8, 0.9]])
    assert is_strictly_quasiconvex([5, 1, 3, 2], generic) == (True, None)


def test_exposed_suppresses_nothing_silently():
    # a separating family never returns an empty exposed set without a warning
    rng = np.random.default_rng(1)
    cloud = random_cloud(rng, 8)
    fam = build_family("affine", cloud)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert phi_exposed_points(None, fam)
