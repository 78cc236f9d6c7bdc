"""Finite-dimensional function spaces on a point cloud.

Four kinds are supported: affine functions, polynomials of bounded total
degree, Lipschitz functions vanishing at a base point, and discrete
harmonic functions on a rectangular grid. A family is stored as its basis
evaluation matrix; an element is a coefficient vector in that basis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import IndexSet, PointCloud, as_index_set
from .errors import InvalidInput, RankDeficient, SolverDidNotConverge

RANK_TOL = 1e-9
SEPARATION_TOL = 1e-9
HARMONIC_RESIDUAL = 1e-10
DIRECT_GRID_LIMIT = 64 * 64

KINDS = ("affine", "polynomial", "lipschitz", "harmonic")


@dataclass(frozen=True)
class GridSpec:
    """A ``width x height`` lattice with the given node spacing.

    Nodes are numbered row by row: node ``j * width + i`` sits at
    ``(i * spacing, j * spacing)``.
    """

    width: int
    height: int
    spacing: float = 1.0

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise InvalidInput("grid width and height must be integers")
        if self.width < 3 or self.height < 3:
            raise InvalidInput("grid width and height must be at least 3")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise InvalidInput("grid spacing must be a positive real")

    @property
    def n_nodes(self) -> int:
        return self.width * self.height

    def nodes(self) -> np.ndarray:
        jj, ii = np.meshgrid(np.arange(self.height), np.arange(self.width), indexing="ij")
        return np.column_stack([ii.ravel(), jj.ravel()]).astype(float) * self.spacing

    def boundary_mask(self) -> np.ndarray:
        jj, ii = np.meshgrid(np.arange(self.height), np.arange(self.width), indexing="ij")
        ring = (ii == 0) | (ii == self.width - 1) | (jj == 0) | (jj == self.height - 1)
        return ring.ravel()

    @property
    def boundary_indices(self) -> IndexSet:
        return tuple(int(i) for i in np.flatnonzero(self.boundary_mask()))

    @property
    def interior_indices(self) -> IndexSet:
        return tuple(int(i) for i in np.flatnonzero(~self.boundary_mask()))

    def cloud(self) -> PointCloud:
        return PointCloud(self.nodes())


@dataclass(frozen=True, eq=False)
class FunctionFamily:
    """A linear space of functions on ``cloud`` spanned by the rows of ``basis``.

    ``norm_kind`` is ``"sup"`` or ``"lip"``; ``alpha`` certifies
    ``sup|phi| <= alpha * norm(phi)`` on the cloud.
    """

    kind: str
    cloud: PointCloud
    basis: np.ndarray
    norm_kind: str = "sup"
    alpha: float = 1.0
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def features(self) -> np.ndarray:
        """Point ``i`` mapped to its basis values, shape ``(N, m)``."""
        return self.basis.T


def _check_rank(basis: np.ndarray, what: str):
    s = np.linalg.svd(basis, compute_uv=False)
    if s.size == 0 or s[-1] <= RANK_TOL * max(1.0, s[0]):
        rank = int(np.sum(s > RANK_TOL * max(1.0, s[0] if s.size else 0.0)))
        raise RankDeficient(f"{what} basis has rank {rank} < {basis.shape[0]}; "
                            "the cloud is too degenerate for this family")


def _scaled_coordinates(points: np.ndarray) -> np.ndarray:
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    half = (hi - lo) / 2.0
    half[half == 0] = 1.0
    return (points - (lo + hi) / 2.0) / half


def monomial_exponents(n: int, degree: int):
    """Exponent tuples of all monomials in ``n`` variables up to ``degree``,
    graded by degree then lexicographic: ``1, x, y, x^2, xy, y^2, ...``."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            e = [0] * n
            for k in combo:
                e[k] += 1
            out.append(tuple(e))
    return out


def affine_family(cloud: PointCloud) -> FunctionFamily:
    basis = np.vstack([np.ones(cloud.size), cloud.points.T])
    _check_rank(basis, "affine")
    return FunctionFamily("affine", cloud, _frozen(basis))


def polynomial_family(cloud: PointCloud, degree: int) -> FunctionFamily:
    if int(degree) != degree or degree < 1:
        raise InvalidInput("polynomial degree must be an integer >= 1")
    z = _scaled_coordinates(cloud.points)
    exps = monomial_exponents(cloud.dim, int(degree))
    basis = np.array([np.prod(z ** np.array(e), axis=1) for e in exps])
    _check_rank(basis, f"degree-{degree} polynomial")
    return FunctionFamily("polynomial", cloud, _frozen(basis), params={"degree": int(degree)})


def lipschitz_family(cloud: PointCloud, basepoint: int = 0, full: bool = False) -> FunctionFamily:
    """Lipschitz functions vanishing at ``basepoint``, with the Lipschitz norm.

    The default basis is ``x -> d(x, p_i) - d(x, x0) - d(x0, p_i)`` for
    ``i != basepoint``; ``full=True`` uses point indicators instead. Both
    vanish at the base point.
    """
    if int(basepoint) != basepoint or not 0 <= basepoint < cloud.size:
        raise InvalidInput(f"basepoint {basepoint!r} is not a cloud index")
    basepoint = int(basepoint)
    others = [i for i in range(cloud.size) if i != basepoint]
    if full:
        basis = np.eye(cloud.size)[others]
    else:
        D = cloud.distances
        basis = D[others] - D[basepoint][None, :] - D[basepoint, others][:, None]
    basis[:, basepoint] = 0.0
    _check_rank(basis, "Lipschitz")
    return FunctionFamily("lipschitz", cloud, _frozen(basis), norm_kind="lip",
                          alpha=cloud.diameter,
                          params={"basepoint": basepoint, "full": bool(full)})


def _laplacian(grid: GridSpec):
    """5-point operator on interior nodes and its coupling to boundary nodes."""
    W, H = grid.width, grid.height
    interior = np.array(grid.interior_indices)
    boundary = np.array(grid.boundary_indices)
    pos_i = -np.ones(grid.n_nodes, dtype=int)
    pos_i[interior] = np.arange(interior.size)
    pos_b = -np.ones(grid.n_nodes, dtype=int)
    pos_b[boundary] = np.arange(boundary.size)
    rows, cols, vals = [], [], []
    brows, bcols = [], []
    for k, node in enumerate(interior):
        rows.append(k)
        cols.append(k)
        vals.append(4.0)
        for nb in (node - 1, node + 1, node - W, node + W):
            if pos_i[nb] >= 0:
                rows.append(k)
                cols.append(pos_i[nb])
                vals.append(-1.0)
            else:
                brows.append(k)
                bcols.append(pos_b[nb])
    L = sp.csc_matrix((vals, (rows, cols)), shape=(interior.size, interior.size))
    C = sp.csc_matrix((np.ones(len(brows)), (brows, bcols)), shape=(interior.size, boundary.size))
    return L, C, interior, boundary


def _gauss_seidel(L, rhs, tol=HARMONIC_RESIDUAL, max_sweeps=100000):
    """Lexicographic Gauss-Seidel sweeps, all right-hand sides at once."""
    Ld = sp.tril(L, format="csr")
    U = sp.triu(L, k=1, format="csr")
    u = np.zeros_like(rhs)
    for _ in range(max_sweeps):
        u = spla.spsolve_triangular(Ld, rhs - U @ u, lower=True)
        if np.max(np.abs(L @ u - rhs)) <= tol:
            return u
    raise SolverDidNotConverge("Gauss-Seidel did not reach the residual target")


def harmonic_measures(grid: GridSpec) -> np.ndarray:
    """Discrete harmonic measure of every boundary node, shape ``(n_boundary, N)``.

    Row ``k`` is 1 at boundary node ``k``, 0 on the rest of the boundary and
    satisfies the 5-point mean-value equation at every interior node.
    """
    L, C, interior, boundary = _laplacian(grid)
    rhs = C.toarray()
    if grid.n_nodes <= DIRECT_GRID_LIMIT:
        U = spla.splu(L).solve(rhs)
    else:
        U = _gauss_seidel(L.tocsr(), rhs)
    resid = float(np.max(np.abs(L @ U - rhs))) if rhs.size else 0.0
    if resid > HARMONIC_RESIDUAL:
        raise SolverDidNotConverge(f"harmonic solve residual {resid:.3e} exceeds target")
    basis = np.zeros((boundary.size, grid.n_nodes))
    basis[np.arange(boundary.size), boundary] = 1.0
    basis[:, interior] = U.T
    return basis


def harmonic_family(grid: GridSpec, cloud: Optional[PointCloud] = None) -> FunctionFamily:
    if cloud is None:
        cloud = grid.cloud()
    elif cloud.size != grid.n_nodes or not np.allclose(cloud.points, grid.nodes(), rtol=0, atol=1e-12):
        raise InvalidInput("cloud/grid mismatch: the cloud must be exactly the grid nodes")
    basis = harmonic_measures(grid)
    _check_rank(basis, "harmonic")
    return FunctionFamily("harmonic", cloud, _frozen(basis), params={"grid": grid})


def build_family(kind: str, cloud: Optional[PointCloud] = None, **params) -> FunctionFamily:
    """Construct a family by name.

    >>> fam = build_family("polynomial", PointCloud([[0, 0], [1, 0], [0, 1], [1, 1], [2, 1], [1, 3]]), degree=2)
    >>> fam.dim
    6
    """
    if kind == "affine":
        return affine_family(_need(cloud))
    if kind == "polynomial":
        return polynomial_family(_need(cloud), params.get("degree", 1))
    if kind == "lipschitz":
        return lipschitz_family(_need(cloud), params.get("basepoint", 0), params.get("full", False))
    if kind == "harmonic":
        grid = params.get("grid")
        if not isinstance(grid, GridSpec):
            raise InvalidInput("harmonic families need grid=GridSpec(...)")
        return harmonic_family(grid, cloud)
    raise InvalidInput(f"unknown family kind {kind!r}")


def _need(cloud):
    if cloud is None:
        raise InvalidInput("this family kind needs a point cloud")
    return cloud


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def custom_family(cloud: PointCloud, basis, norm_kind: str = "sup", alpha: float = 1.0,
                  check_rank: bool = True) -> FunctionFamily:
    """Wrap an arbitrary basis matrix (rows = basis functions) as a family."""
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.shape[1] != cloud.size:
        raise InvalidInput("basis rows must have one value per cloud point")
    if norm_kind not in ("sup", "lip"):
        raise InvalidInput(f"unknown norm kind {norm_kind!r}")
    if check_rank:
        _check_rank(basis, "custom")
    return FunctionFamily("custom", cloud, _frozen(basis), norm_kind=norm_kind, alpha=float(alpha))


def _coeffs(family: FunctionFamily, c) -> np.ndarray:
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape[0] != family.dim:
        raise InvalidInput(f"expected {family.dim} coefficients, got {c.shape[0]}")
    return c


def evaluate(family: FunctionFamily, c) -> np.ndarray:
    """Values of ``sum_j c_j g_j`` at every cloud point."""
    return family.basis.T @ _coeffs(family, c)


def lip_norm(values: np.ndarray, cloud: PointCloud) -> float:
    D = cloud.distances
    iu = np.triu_indices(cloud.size, 1)
    return float(np.max(np.abs(values[iu[0]] - values[iu[1]]) / D[iu]))


def family_norm(family: FunctionFamily, c) -> float:
    phi = evaluate(family, c)
    if family.norm_kind == "lip":
        return lip_norm(phi, family.cloud)
    return float(np.max(np.abs(phi)))


def separates_points(family: FunctionFamily, domain: Optional[Iterable[int]] = None
                     ) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """Whether the basis feature map is injective on ``domain``.

    Returns ``(True, None)`` or ``(False, (i, j))`` for the first pair
    (lexicographic) that no basis function tells apart.
    """
    dom = as_index_set(domain, family.cloud.size)
    F = family.features[list(dom)]
    gap = np.abs(F[:, None, :] - F[None, :, :]).max(axis=2) if F.shape[1] else np.zeros((len(dom),) * 2)
    iu = np.triu_indices(len(dom), 1)
    bad = gap[iu] <= SEPARATION_TOL
    if np.any(bad):
        k = int(np.argmax(bad))
        return False, (dom[iu[0][k]], dom[iu[1][k]])
    return True, None
