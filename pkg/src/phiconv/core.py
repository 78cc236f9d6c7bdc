"""Finite metric spaces, scalar fields, the bounded sup metric and argmax sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidInput

DEDUP_TOL = 1e-12
TRIANGLE_TOL = 1e-9

IndexSet = Tuple[int, ...]


@dataclass(frozen=True)
class Tolerances:
    """Absolute tolerances shared by every decision procedure."""

    lp_feas: float = 1e-9
    argmax_tie: float = 1e-9
    unique_gap: float = 1e-9
    geom_tol: float = 1e-9

    def __post_init__(self):
        for name in ("lp_feas", "argmax_tie", "unique_gap", "geom_tol"):
            value = getattr(self, name)
            if not (0.0 < value < 1e-3):
                raise InvalidInput(f"tolerance {name}={value!r} must lie in (0, 1e-3)")


DEFAULT_TOL = Tolerances()


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """A finite metric space: distinct points of R^n plus a distance.

    Parameters
    ----------
    points : array_like, shape (N, n)
        At least two pairwise distinct points.
    metric : "euclidean" or array_like, shape (N, N)
        Either the Euclidean distance of the coordinates or an explicit
        symmetric, zero-diagonal matrix obeying the triangle inequality.
    """

    points: np.ndarray
    metric: Union[str, np.ndarray] = "euclidean"
    distances: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidInput("points must be an (N, n) array")
        if pts.shape[0] < 2:
            raise InvalidInput("a point cloud needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("point coordinates must be finite")
        diff = pts[:, None, :] - pts[None, :, :]
        eucl = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        iu = np.triu_indices(len(pts), 1)
        close = eucl[iu] <= DEDUP_TOL
        if np.any(close):
            k = int(np.argmax(close))
            raise InvalidInput(f"duplicate points {iu[0][k]} and {iu[1][k]}")
        object.__setattr__(self, "points", _readonly(pts))

        if isinstance(self.metric, str):
            if self.metric != "euclidean":
                raise InvalidInput(f"unknown metric {self.metric!r}")
            dist = eucl
        else:
            dist = np.array(self.metric, dtype=float)
            n = len(pts)
            if dist.shape != (n, n) or not np.all(np.isfinite(dist)):
                raise InvalidInput("distance matrix must be a finite (N, N) array")
            if np.any(dist < 0) or np.any(np.diag(dist) != 0):
                raise InvalidInput("distance matrix must be nonnegative with zero diagonal")
            if not np.array_equal(dist, dist.T):
                raise InvalidInput("distance matrix must be symmetric")
            if np.any(dist[iu] <= 0):
                raise InvalidInput("distinct points need positive distance")
            # d(i,k) <= d(i,j) + d(j,k) for all i, j, k
            detour = (dist[:, :, None] + dist[None, :, :]).min(axis=1)
            if np.any(dist > detour + TRIANGLE_TOL):
                raise InvalidInput("distance matrix violates the triangle inequality")
            dist = dist.copy()
            object.__setattr__(self, "metric", _readonly(dist.copy()))
        object.__setattr__(self, "distances", _readonly(dist))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def diameter(self) -> float:
        return float(self.distances.max())

    def __len__(self):
        return self.size

    def all_indices(self) -> IndexSet:
        return tuple(range(self.size))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One extended-real value per cloud index.

    ``+inf`` is only accepted with ``allows_infinity=True`` (indicator
    functions in minimisation form); ``-inf`` and NaN never are.
    """

    values: np.ndarray
    allows_infinity: bool = False

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if np.any(np.isnan(vals)) or np.any(vals == -np.inf):
            raise InvalidInput("field values must not be NaN or -inf")
        if not self.allows_infinity and np.any(np.isinf(vals)):
            raise InvalidInput("+inf values need allows_infinity=True")
        if not np.any(np.isfinite(vals)):
            raise InvalidInput("a field needs at least one finite value")
        object.__setattr__(self, "values", _readonly(vals))

    def __len__(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


FieldLike = Union[ScalarField, Sequence[float], np.ndarray]


def as_values(f: FieldLike, size: Optional[int] = None, finite: bool = True) -> np.ndarray:
    """Coerce a field to a float vector, checking length and finiteness."""
    vals = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float).reshape(-1)
    if size is not None and vals.shape[0] != size:
        raise InvalidInput(f"field has {vals.shape[0]} values, expected {size}")
    if finite and not np.all(np.isfinite(vals)):
        raise InvalidInput("field values must be finite")
    return vals


def as_index_set(indices: Optional[Iterable[int]], size: int, allow_empty: bool = False) -> IndexSet:
    """Normalise an iterable of indices into a sorted tuple; ``None`` is everything."""
    if indices is None:
        return tuple(range(size))
    out = sorted({int(i) for i in indices})
    if not out and not allow_empty:
        raise InvalidInput("index set must be nonempty")
    if out and (out[0] < 0 or out[-1] >= size):
        raise InvalidInput(f"index out of range for a cloud of {size} points")
    return tuple(out)


def rho_inf_distance(f: FieldLike, g: FieldLike) -> float:
    """Bounded uniform distance ``sup |f - g| / (1 + |f - g|)``, in [0, 1)."""
    fv = as_values(f)
    gv = as_values(g, size=fv.shape[0])
    # t -> t/(1+t) is increasing, so the sup is attained at the largest gap
    t = float(np.max(np.abs(fv - gv)))
    return t / (1.0 + t)


def argmax_set(f: FieldLike, domain: Optional[Iterable[int]] = None,
               tol: Tolerances = DEFAULT_TOL) -> IndexSet:
    """Indices of ``domain`` whose value is within ``argmax_tie`` of the maximum."""
    vals = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float).reshape(-1)
    dom = as_index_set(domain, vals.shape[0])
    sub = vals[list(dom)]
    if not np.all(np.isfinite(sub)):
        raise InvalidInput("field must be finite on the domain")
    top = sub.max()
    return tuple(i for i, v in zip(dom, sub) if v >= top - tol.argmax_tie)


def segment_member(a, x, y, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True when ``a`` lies within ``geom_tol`` of the closed segment ``[x, y]``."""
    a, x, y = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (a, x, y))
    if not (a.shape == x.shape == y.shape) or a.ndim != 1:
        raise InvalidInput("segment_member needs three vectors of equal dimension")
    d = y - x
    dd = float(d @ d)
    lam = 0.0 if dd == 0.0 else min(1.0, max(0.0, float((a - x) @ d) / dd))
    return bool(np.linalg.norm(a - (x + lam * d)) <= tol.geom_tol)


def segment_distances(points: np.ndarray, a: int, candidates: Sequence[int]) -> np.ndarray:
    """Distance from ``points[a]`` to every segment ``[points[x], points[y]]``.

    Returns a ``(k, k)`` matrix over ``candidates``; the vectorised form of
    :func:`segment_member` used by the quadratic and cubic scans.
    """
    p = points[list(candidates)]
    pa = points[a]
    d = p[None, :, :] - p[:, None, :]                # y - x
    dd = np.einsum("ijk,ijk->ij", d, d)
    w = pa - p                                       # a - x, per x
    num = np.einsum("ijk,ik->ij", d, w)
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.where(dd > 0, num / np.where(dd > 0, dd, 1.0), 0.0)
    lam = np.clip(lam, 0.0, 1.0)
    foot = p[:, None, :] + lam[:, :, None] * d
    return np.linalg.norm(pa - foot, axis=2)
