"""Extremal maximisers of Phi-convex fields.

The search follows the inclusion chain exposed(M) in extremal(M) in
extremal(K) for the argmax set M: an exposed point of the (common) argmax
set is found by LP and then certified extremal in the whole domain.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

from .core import DEFAULT_TOL, Tolerances, argmax_set, as_index_set, as_values
from .convexity import (ExposureCertificate, _BetweenCache, is_phi_convex,
                        is_phi_extremal, phi_exposed_points)
from .errors import (EmptyIntersection, NoExposedPoint, NoExtremalMaximizer,
                     NotPhiConvex, PointNotMaximizer)
from .families import FunctionFamily


@dataclass(frozen=True)
class BauerWitness:
    point: int
    max_values: Tuple[float, ...]
    exposure: Optional[ExposureCertificate]
    functions_checked: int

    @property
    def max_value(self) -> float:
        return self.max_values[0]


def _extremal_maximizer(fields, M, dom, family, tol) -> BauerWitness:
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        certs = phi_exposed_points(M, family, tol)
    if not certs:
        raise NoExposedPoint(f"no exposed point in the argmax set {M}; "
                             "the family does not separate it")
    cache = _BetweenCache(family, tol)
    maxima = tuple(float(v[list(dom)].max()) for v in fields)
    for cert in certs:  # ascending index: lowest valid point wins
        if is_phi_extremal(cert.point, dom, family, tol, cache):
            return BauerWitness(cert.point, maxima, cert, len(fields))
    # only reachable for fields that skipped the convexity check
    for e in M:
        if is_phi_extremal(e, dom, family, tol, cache):
            return BauerWitness(e, maxima, None, len(fields))
    raise NoExtremalMaximizer(f"argmax set {M} contains no extremal point of the domain")


def _require_convex(fields, dom, family, tol, indexed):
    for i, v in enumerate(fields):
        ok, triple = is_phi_convex(v, dom, family, tol)
        if not ok:
            raise NotPhiConvex(triple, i if indexed else None)


def bauer_witness(f, domain: Optional[Iterable[int]], family: FunctionFamily,
                  tol: Tolerances = DEFAULT_TOL, check_convexity: bool = True) -> BauerWitness:
    """Extremal point of the domain at which ``f`` attains its maximum.

    Raises :class:`NotPhiConvex` when ``f`` fails the convexity check (unless
    ``check_convexity=False``) and :class:`NoExposedPoint` when the family
    does not separate the argmax set.
    """
    return common_extremal_maximizer([f], domain, family, tol, check_convexity, _indexed=False)


def common_extremal_maximizer(fs: Sequence, domain: Optional[Iterable[int]],
                              family: FunctionFamily, tol: Tolerances = DEFAULT_TOL,
                              check_convexity: bool = True, _indexed: bool = True) -> BauerWitness:
    """Extremal point at which every field in ``fs`` attains its maximum.

    Raises :class:`EmptyIntersection` when the argmax sets share no point.
    """
    if len(fs) == 0:
        raise ValueError("need at least one field")
    n = family.cloud.size
    dom = as_index_set(domain, n)
    fields = [as_values(f, n, finite=False) for f in fs]
    if check_convexity:
        _require_convex(fields, dom, family, tol, _indexed)
    M = set(dom)
    for v in fields:
        M &= set(argmax_set(v, dom, tol))
    if not M:
        raise EmptyIntersection("the argmax sets have no common point")
    return _extremal_maximizer(fields, tuple(sorted(M)), dom, family, tol)


def omega_cone_witness(x: int, fs: Sequence, domain: Optional[Iterable[int]],
                       family: FunctionFamily, tol: Tolerances = DEFAULT_TOL,
                       check_convexity: bool = True) -> BauerWitness:
    """Extremal ``e`` such that every field maximised at ``x`` is also maximised at ``e``."""
    n = family.cloud.size
    dom = as_index_set(domain, n)
    for i, f in enumerate(fs):
        if x not in argmax_set(as_values(f, n, finite=False), dom, tol):
            raise PointNotMaximizer(i, x)
    return common_extremal_maximizer(fs, dom, family, tol, check_convexity)


def replay_witness(w: BauerWitness, fs: Sequence, domain, family: FunctionFamily,
                   tol: Tolerances = DEFAULT_TOL) -> bool:
    """Independent re-check: ``w.point`` maximises every field and is extremal."""
    n = family.cloud.size
    dom = as_index_set(domain, n)
    for f in fs:
        v = as_values(f, n, finite=False)[list(dom)]
        if v[dom.index(w.point)] < v.max() - tol.argmax_tie:
            return False
    return is_phi_extremal(w.point, dom, family, tol)
