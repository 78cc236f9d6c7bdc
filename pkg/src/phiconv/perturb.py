"""Small perturbations producing a unique maximiser, and a Monte Carlo
estimate of how common unique maximisers are near a given field.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

import numpy as np

from .core import (DEFAULT_TOL, PointCloud, ScalarField, Tolerances, argmax_set,
                   as_index_set, as_values, rho_inf_distance)
from .convexity import exposing_functional, is_phi_convex, phi_extremal_points
from .errors import BadEpsilon, DegenerateGap, InvalidInput, NoExposedPoint, NotPhiConvex
from .families import FunctionFamily, evaluate, family_norm


@dataclass(frozen=True)
class PerturbationResult:
    coefficients: np.ndarray
    rho_distance: float
    unique_point: int
    gap: float


@dataclass
class GenericityReport:
    samples: int
    unique_fraction: float
    extremal_fraction: float
    seed: int
    epsilon: float
    rows: List[tuple] = field(default_factory=list, repr=False)


def _check_epsilon(epsilon):
    if not (isinstance(epsilon, (int, float)) and 0.0 < epsilon < 1.0):
        raise BadEpsilon(f"epsilon must lie in (0, 1), got {epsilon!r}")


def top_gap(vals: np.ndarray, dom) -> tuple:
    """``(argmax index, best - second best)`` over ``dom``; lowest index on ties."""
    sub = vals[list(dom)]
    order = np.argsort(-sub, kind="stable")
    best = dom[order[0]]
    gap = math.inf if len(dom) == 1 else float(sub[order[0]] - sub[order[1]])
    return best, gap


def perturb_to_unique_max(f, domain: Optional[Iterable[int]], family: FunctionFamily,
                          epsilon: float, tol: Tolerances = DEFAULT_TOL) -> PerturbationResult:
    """Find ``phi`` in the family with ``rho(f + phi, f) < epsilon`` and a unique
    maximiser of ``f + phi`` on the domain.

    The maximiser is an exposed point ``e`` of the (near-)argmax set ``M``.
    With ``phi0`` exposing ``e`` at margin one on ``M``, the step
    ``t = min(budget / (2 |phi0|_inf), G / (2 (osc + 1)))`` keeps ``e`` ahead of
    the rest of ``M`` while staying below the drop ``G`` to the next level.
    """
    _check_epsilon(epsilon)
    n = family.cloud.size
    dom = as_index_set(domain, n)
    vals = as_values(f, n, finite=False)
    if not np.all(np.isfinite(vals[list(dom)])):
        raise InvalidInput("field must be finite on the domain")

    best, gap = top_gap(vals, dom)
    if gap >= tol.unique_gap:
        return PerturbationResult(np.zeros(family.dim), 0.0, best, gap)

    # points within unique_gap of the top must all be beaten by the perturbation
    band = Tolerances(tol.lp_feas, max(tol.argmax_tie, tol.unique_gap), tol.unique_gap, tol.geom_tol)
    M = argmax_set(vals, dom, band)
    cert = None
    for e in M:
        cert = exposing_functional(e, M, family, tol)
        if cert is not None:
            break
    if cert is None:
        raise NoExposedPoint(f"no point of the argmax set {M} is exposed by the family")
    e = cert.point
    phi0 = evaluate(family, cert.coefficients)

    top = vals[list(M)].max()
    rest = [x for x in dom if x not in set(M)]
    G = float(min(top - vals[x] for x in rest)) if rest else math.inf
    osc = float(np.max(np.abs(phi0[list(dom)] - phi0[e])))
    sup = float(np.max(np.abs(phi0)))
    budget = epsilon / (1.0 - epsilon)
    t = min(budget / (2.0 * sup), G / (2.0 * (osc + 1.0)))

    coeffs = t * cert.coefficients
    phi = evaluate(family, coeffs)
    g = vals + phi
    winner, new_gap = top_gap(g, dom)
    rho = rho_inf_distance(phi, np.zeros(n))
    if winner != e or new_gap < tol.unique_gap:
        raise DegenerateGap(f"perturbed gap {new_gap:.3e} at {winner} is below unique_gap")
    if not rho < epsilon:
        raise DegenerateGap(f"perturbation distance {rho} is not below epsilon")
    return PerturbationResult(coeffs, rho, e, new_gap)


def perturb_to_unique_min(f: ScalarField, family: FunctionFamily, epsilon: float,
                          tol: Tolerances = DEFAULT_TOL) -> PerturbationResult:
    """Minimisation form: ``phi`` with ``f - phi`` uniquely minimised.

    ``f`` may take the value ``+inf`` (lower semicontinuous indicator form);
    only points where it is finite compete. Minimising ``f - phi`` is
    maximising ``phi - f``, so this is :func:`perturb_to_unique_max` on the
    finite part of ``-f``.
    """
    vals = np.asarray(f.values if isinstance(f, ScalarField) else f, dtype=float)
    finite = np.flatnonzero(np.isfinite(vals))
    neg = np.where(np.isfinite(vals), -vals, 0.0)
    return perturb_to_unique_max(neg, finite, family, epsilon, tol)


def has_strong_max(f, domain: Optional[Iterable[int]], n: int, cloud: PointCloud,
                   tol: Tolerances = DEFAULT_TOL) -> Optional[int]:
    """A point beating every domain point at distance ``>= 1/n`` by more than ``argmax_tie``.

    Candidates are tried in decreasing order of ``f`` (lowest index on ties);
    a candidate with no far points qualifies vacuously. Returns None when no
    point qualifies.
    """
    if int(n) != n or n < 1:
        raise InvalidInput("n must be a positive integer")
    vals = as_values(f, cloud.size)
    dom = as_index_set(domain, cloud.size)
    idx = np.asarray(dom)
    sub = vals[idx]
    radius = 1.0 / n
    for k in np.argsort(-sub, kind="stable"):
        x = idx[k]
        far = cloud.distances[x, idx] >= radius
        if not far.any() or sub[k] > sub[far].max() + tol.argmax_tie:
            return int(x)
    return None


def sample_perturbation(family: FunctionFamily, epsilon: float, seed: int, k: int) -> np.ndarray:
    """Coefficients of the ``k``-th random perturbation for ``seed``.

    Direction uniform on the coefficient sphere, then rescaled so that
    ``alpha * norm(phi)`` equals a uniform fraction of ``epsilon / (1 - epsilon)``.
    The stream depends only on ``(seed, k)``.
    """
    rng = np.random.default_rng([int(seed), int(k)])
    c = rng.standard_normal(family.dim)
    c /= np.linalg.norm(c)
    radius = rng.uniform() * epsilon / (1.0 - epsilon)
    norm = family_norm(family, c) * family.alpha
    if norm == 0.0:
        return np.zeros(family.dim)
    return c * (radius / norm)


def genericity_estimate(f, domain: Optional[Iterable[int]], family: FunctionFamily,
                        epsilon: float, samples: int, seed: int,
                        tol: Tolerances = DEFAULT_TOL, require_convex: bool = True
                        ) -> GenericityReport:
    """Fraction of random small perturbations ``f + phi`` with a unique maximiser.

    ``extremal_fraction`` is taken over the unique-maximiser samples only
    (1.0 by convention when there are none). ``rows`` records
    ``(sample, unique, argmax, extremal)`` per sample, where ``argmax`` is the
    lowest-index maximiser even when it is not unique.
    """
    _check_epsilon(epsilon)
    if int(samples) != samples or samples < 1:
        raise InvalidInput("samples must be a positive integer")
    n = family.cloud.size
    dom = as_index_set(domain, n)
    vals = as_values(f, n)
    ok, triple = is_phi_convex(vals, dom, family, tol)
    if not ok:
        if require_convex:
            raise NotPhiConvex(triple)
        warnings.warn(f"field is not Phi-convex (triple {triple}); extremal fraction "
                      "carries no guarantee", stacklevel=2)
    extremal = set(phi_extremal_points(dom, family, tol))

    rows = []
    n_unique = n_ext = 0
    for k in range(int(samples)):
        c = sample_perturbation(family, epsilon, seed, k)
        winner, gap = top_gap(vals + evaluate(family, c), dom)
        unique = gap >= tol.unique_gap
        is_ext = unique and winner in extremal
        n_unique += unique
        n_ext += is_ext
        rows.append((k, int(unique), int(winner), int(is_ext)))
    return GenericityReport(
        samples=int(samples),
        unique_fraction=n_unique / samples,
        extremal_fraction=(n_ext / n_unique) if n_unique else 1.0,
        seed=int(seed),
        epsilon=float(epsilon),
        rows=rows,
    )
