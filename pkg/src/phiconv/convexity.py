"""Betweenness, extremality, exposedness and hulls relative to a function family.

Every decision reduces to LP feasibility. Because a family is a linear
space, a strict inequality ``phi(a) > phi(q)`` can always be rescaled to a
margin of one, so each question becomes a closed system ``G @ c >= h``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .core import (DEFAULT_TOL, IndexSet, PointCloud, Tolerances, as_index_set,
                   as_values, segment_distances)
from .errors import InvalidInput, NonSeparatingFamily
from .families import FunctionFamily, evaluate, separates_points
from .linprog import feasible_ge

# 1 + cos(angle) below this sends a pair to the LP; above it the feature
# vectors are clearly not antiparallel and the LP would only confirm that.
SCREEN_TOL = 1e-6
ZERO_FEATURE = 1e-12

Triple = Tuple[int, int, int]


@dataclass(frozen=True)
class BetweennessCertificate:
    between: bool
    witness: Optional[np.ndarray] = None

    @property
    def result(self) -> str:
        return "between" if self.between else "notBetween"


@dataclass(frozen=True)
class ExposureCertificate:
    """``coefficients`` expose ``point``: its value beats every other domain
    point by at least ``margin``."""

    point: int
    coefficients: np.ndarray
    margin: float
    domain: IndexSet


def _check_index(i, family):
    if int(i) != i or not 0 <= i < family.cloud.size:
        raise InvalidInput(f"{i!r} is not an index of the family's cloud")
    return int(i)


def _between_system(F, a, x, y):
    u = F[a] - F[x]
    v = F[a] - F[y]
    return np.array([u, v, u + v]), np.array([0.0, 0.0, 1.0])


def is_between(a: int, x: int, y: int, family: FunctionFamily,
               tol: Tolerances = DEFAULT_TOL) -> BetweennessCertificate:
    """Decide whether ``a`` is between ``x`` and ``y`` relative to ``family``.

    ``a`` fails to be between exactly when some element ``phi`` has
    ``phi(x) <= phi(a)``, ``phi(y) <= phi(a)`` with one inequality strict;
    such a ``phi`` is returned as the witness, scaled so the two gaps sum
    to at least one.
    """
    a, x, y = (_check_index(i, family) for i in (a, x, y))
    G, h = _between_system(family.features, a, x, y)
    ok, c = feasible_ge(G, h, tol)
    if not ok:
        return BetweennessCertificate(True)
    s = float(G[2] @ c)
    if 0 < s < 1:
        c = c / s
    return BetweennessCertificate(False, c)


def replay_betweenness(cert: BetweennessCertificate, a: int, x: int, y: int,
                       family: FunctionFamily, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Re-check a ``notBetween`` witness by direct evaluation."""
    if cert.between:
        return cert.witness is None
    phi = evaluate(family, cert.witness)
    return bool(phi[x] <= phi[a] + tol.lp_feas and phi[y] <= phi[a] + tol.lp_feas
                and (phi[a] - phi[x]) + (phi[a] - phi[y]) >= 1 - tol.lp_feas)


class _BetweenCache:
    """Memoised LP answers keyed by ``(a, {x, y})``."""

    def __init__(self, family: FunctionFamily, tol: Tolerances):
        self.family = family
        self.tol = tol
        self.F = family.features
        self.memo: Dict[Tuple[int, int, int], bool] = {}

    def __call__(self, a, x, y) -> bool:
        key = (a, x, y) if x <= y else (a, y, x)
        hit = self.memo.get(key)
        if hit is None:
            G, h = _between_system(self.F, a, x, y)
            hit = not feasible_ge(G, h, self.tol)[0]
            self.memo[key] = hit
        return hit


def _candidate_pairs(family: FunctionFamily, a: int, dom: IndexSet,
                     tol: Tolerances) -> np.ndarray:
    """Boolean ``(k, k)`` mask over ``dom`` of pairs that may have ``a`` between them.

    For the affine family this is already exact (open segment membership).
    Otherwise it keeps pairs whose feature differences are antiparallel or
    both null, the only configurations the LP can declare infeasible.
    """
    idx = np.asarray(dom)
    k = idx.size
    self_mask = idx == a
    if family.kind == "affine":
        dist = segment_distances(family.cloud.points, a, dom)
        mask = dist <= tol.geom_tol
        mask[self_mask, :] = False
        mask[:, self_mask] = False
        return mask
    F = family.features
    D = F[a] - F[idx]
    norms = np.linalg.norm(D, axis=1)
    scale = max(1.0, float(np.abs(F).max()))
    null = norms <= ZERO_FEATURE * scale
    safe = np.where(null, 1.0, norms)
    Dn = D / safe[:, None]
    cos = Dn @ Dn.T
    mask = (cos <= -1.0 + SCREEN_TOL) & ~null[:, None] & ~null[None, :]
    mask |= null[:, None] & null[None, :]
    diag = np.outer(self_mask, self_mask)
    mask &= ~diag
    return mask


def between_pairs(a: int, domain: Optional[Iterable[int]], family: FunctionFamily,
                  tol: Tolerances = DEFAULT_TOL, cache: Optional[_BetweenCache] = None
                  ) -> List[Tuple[int, int]]:
    """All ordered pairs ``(x, y)`` of the domain, other than ``(a, a)``, with
    ``a`` between them."""
    a = _check_index(a, family)
    dom = as_index_set(domain, family.cloud.size)
    mask = _candidate_pairs(family, a, dom, tol)
    ii, jj = np.nonzero(mask)
    if family.kind == "affine":
        return [(dom[i], dom[j]) for i, j in zip(ii, jj)]
    cache = cache or _BetweenCache(family, tol)
    return [(dom[i], dom[j]) for i, j in zip(ii, jj) if cache(a, dom[i], dom[j])]


def is_phi_extremal(a: int, domain: Optional[Iterable[int]], family: FunctionFamily,
                    tol: Tolerances = DEFAULT_TOL, cache: Optional[_BetweenCache] = None) -> bool:
    a = _check_index(a, family)
    dom = as_index_set(domain, family.cloud.size)
    if a not in dom:
        raise InvalidInput(f"point {a} is not in the domain")
    mask = _candidate_pairs(family, a, dom, tol)
    if family.kind == "affine":
        return not mask.any()
    cache = cache or _BetweenCache(family, tol)
    ii, jj = np.nonzero(np.triu(mask) | np.triu(mask.T))
    return not any(cache(a, dom[i], dom[j]) for i, j in zip(ii, jj))


def phi_extremal_points(domain: Optional[Iterable[int]], family: FunctionFamily,
                        tol: Tolerances = DEFAULT_TOL) -> IndexSet:
    """Points of the domain that lie between no pair of domain points other than themselves."""
    dom = as_index_set(domain, family.cloud.size)
    cache = _BetweenCache(family, tol)
    return tuple(a for a in dom if is_phi_extremal(a, dom, family, tol, cache))


def is_phi_convex(f, domain: Optional[Iterable[int]], family: FunctionFamily,
                  tol: Tolerances = DEFAULT_TOL) -> Tuple[bool, Optional[Triple]]:
    """Check the Phi-convexity inequality on every triple of the domain.

    A triple ``(a, x, y)`` with ``a`` between ``x`` and ``y`` violates it when
    ``f(x)`` and ``f(y)`` are both at most ``f(a)`` (up to ``argmax_tie``)
    without all three values agreeing. Returns ``(False, triple)`` for the
    lexicographically first violation.
    """
    vals = as_values(f, family.cloud.size, finite=False)
    dom = as_index_set(domain, family.cloud.size)
    sub = vals[list(dom)]
    if not np.all(np.isfinite(sub)):
        raise InvalidInput("field must be finite on the domain")
    tie = tol.argmax_tie
    cache = _BetweenCache(family, tol)
    for ka, a in enumerate(dom):
        below = sub <= sub[ka] + tie
        off = np.abs(sub - sub[ka]) > tie
        fmask = (below[:, None] & below[None, :]) & (off[:, None] | off[None, :])
        if not fmask.any():
            continue
        mask = _candidate_pairs(family, a, dom, tol) & fmask
        for i, j in zip(*np.nonzero(mask)):
            if family.kind == "affine" or cache(a, dom[i], dom[j]):
                return False, (a, dom[i], dom[j])
    return True, None


def _exposing_system(F, a, others):
    idx = list(others)
    return F[a] - F[idx], np.ones(len(idx))


def exposing_functional(a: int, domain: Optional[Iterable[int]], family: FunctionFamily,
                        tol: Tolerances = DEFAULT_TOL) -> Optional[ExposureCertificate]:
    """Certificate that ``a`` is the strict maximiser of some family element, or None."""
    a = _check_index(a, family)
    dom = as_index_set(domain, family.cloud.size)
    others = [q for q in dom if q != a]
    if not others:
        return ExposureCertificate(a, np.zeros(family.dim), math.inf, dom)
    G, h = _exposing_system(family.features, a, others)
    ok, c = feasible_ge(G, h, tol)
    if not ok:
        return None
    margin = float((G @ c).min())
    if 0 < margin < 1:
        c = c / margin
        margin = float((G @ c).min())
    return ExposureCertificate(a, c, margin, dom)


def replay_exposure(cert: ExposureCertificate, family: FunctionFamily,
                    tol: Tolerances = DEFAULT_TOL) -> bool:
    phi = evaluate(family, cert.coefficients)
    others = [q for q in cert.domain if q != cert.point]
    if not others:
        return True
    gap = phi[cert.point] - phi[others]
    return bool(gap.min() >= 1 - tol.lp_feas)


def phi_exposed_points(domain: Optional[Iterable[int]], family: FunctionFamily,
                       tol: Tolerances = DEFAULT_TOL) -> List[ExposureCertificate]:
    """Exposure certificates for every exposed point of the domain, by index.

    Emits :class:`NonSeparatingFamily` when the family cannot tell two domain
    points apart; in that case an empty answer is legitimate. Otherwise the
    answer is never empty.
    """
    dom = as_index_set(domain, family.cloud.size)
    separating, pair = separates_points(family, dom)
    if not separating:
        warnings.warn(NonSeparatingFamily(f"family does not separate points {pair}"), stacklevel=2)
    certs = []
    for a in dom:
        cert = exposing_functional(a, dom, family, tol)
        if cert is not None:
            certs.append(cert)
    if separating and not certs:
        raise RuntimeError("separating family produced no exposed point; LP tolerance failure")
    return certs


def phi_convex_hull(A: Iterable[int], ambient: Optional[Iterable[int]], family: FunctionFamily,
                    tol: Tolerances = DEFAULT_TOL) -> IndexSet:
    """Ambient points that no family element lifts strictly above its maximum on ``A``."""
    n = family.cloud.size
    A = as_index_set(A, n)
    amb = as_index_set(ambient, n)
    if not set(A) <= set(amb):
        raise InvalidInput("A must be a subset of the ambient set")
    F = family.features
    inside = set(A)
    for x in amb:
        if x in inside:
            continue
        outside, _ = feasible_ge(F[x] - F[list(A)], np.ones(len(A)), tol)
        if not outside:
            inside.add(x)
    return tuple(sorted(inside))


def is_strictly_quasiconvex(f, cloud: PointCloud, tol: Tolerances = DEFAULT_TOL
                            ) -> Tuple[bool, Optional[Triple]]:
    """Check ``f(a) < max(f(y), f(z))`` whenever ``a`` lies inside the segment ``[y, z]``.

    Returns the first offending ``(a, y, z)`` when the check fails.
    """
    vals = as_values(f, cloud.size)
    dom = cloud.all_indices()
    for a in dom:
        dist = segment_distances(cloud.points, a, dom)
        on = dist <= tol.geom_tol
        on[a, :] = False
        on[:, a] = False
        bad = on & (vals[a] >= np.maximum(vals[:, None], vals[None, :]) - tol.argmax_tie)
        if bad.any():
            y, z = np.argwhere(bad)[0]
            return False, (a, int(y), int(z))
    return True, None
