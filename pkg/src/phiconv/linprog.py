"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Problems are tiny (a few dozen variables at most), so the whole tableau is
kept in one numpy array and every pivot is a rank-one update.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .core import DEFAULT_TOL, Tolerances
from .errors import IterationLimit, MalformedProblem

PIVOT_TOL = 1e-11
STALL_LIMIT = 20  # degenerate pivots before switching to Bland's rule
ITERATION_FACTOR = 50  # pivot cap per variable-plus-constraint

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_CODES = {"<=": -1, ">=": 1, "=": 0}


@dataclass(frozen=True)
class Constraint:
    row: Tuple[float, ...]
    relation: str
    rhs: float


def constraint(row, relation, rhs) -> Constraint:
    return Constraint(tuple(float(v) for v in row), relation, float(rhs))


@dataclass
class LPProblem:
    """``optimise objective @ x`` subject to linear constraints and bounds.

    ``bounds`` holds one ``(lower, upper)`` pair per variable, ``None``
    marking an infinite side; omitting it leaves every variable free.
    """

    objective: Sequence[float]
    constraints: Sequence[Constraint] = ()
    sense: str = "min"
    bounds: Optional[Sequence[Tuple[Optional[float], Optional[float]]]] = None

    @property
    def n_vars(self) -> int:
        return len(self.objective)


@dataclass
class LPSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    max_primal_residual: float = 0.0
    iterations: int = 0


def _to_arrays(p: LPProblem):
    m = p.n_vars
    if m < 1:
        raise MalformedProblem("an LP needs at least one variable")
    if p.sense not in ("min", "max"):
        raise MalformedProblem(f"unknown sense {p.sense!r}")
    c = np.asarray(p.objective, dtype=float)
    if not np.all(np.isfinite(c)):
        raise MalformedProblem("objective entries must be finite")
    A = np.zeros((len(p.constraints), m))
    rel = np.zeros(len(p.constraints), dtype=int)
    b = np.zeros(len(p.constraints))
    for k, con in enumerate(p.constraints):
        if len(con.row) != m:
            raise MalformedProblem(f"constraint {k} has {len(con.row)} entries, expected {m}")
        if con.relation not in _CODES:
            raise MalformedProblem(f"constraint {k} has unknown relation {con.relation!r}")
        A[k] = con.row
        rel[k] = _CODES[con.relation]
        b[k] = con.rhs
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise MalformedProblem("constraint entries must be finite")
    if p.bounds is not None:
        if len(p.bounds) != m:
            raise MalformedProblem("bounds must have one entry per variable")
        for j, pair in enumerate(p.bounds):
            for v in pair:
                if v is not None and not np.isfinite(v):
                    raise MalformedProblem(f"bound of variable {j} is not finite (use None)")
    return c, A, rel, b


def _substitution(m, bounds):
    """Write ``x = shift + T @ y`` with ``y >= 0``; extra rows carry upper bounds."""
    if bounds is None:
        return np.zeros(m), np.hstack([np.eye(m), -np.eye(m)]), []
    shift = np.zeros(m)
    cols = []
    extra = []
    for j, (lo, hi) in enumerate(bounds):
        if lo is not None:
            shift[j] = lo
            cols.append((j, 1.0))
            if hi is not None:
                extra.append((len(cols) - 1, hi - lo))
        elif hi is not None:
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    T = np.zeros((m, len(cols)))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s
    return shift, T, extra


@njit(cache=True)
def _pivot(t, basis, r, e):
    nrow, ncol = t.shape
    piv = t[r, e]
    for j in range(ncol):
        t[r, j] /= piv
    for i in range(nrow):
        if i != r:
            f = t[i, e]
            if f != 0.0:
                for j in range(ncol):
                    t[i, j] -= f * t[r, j]
    basis[r] = e


@njit(cache=True)
def _simplex(t, basis, n_allowed, count, cap, floor):
    """Simplex pivots on tableau ``t`` whose last row holds reduced costs.

    Dantzig's rule picks the entering column; after ``STALL_LIMIT``
    consecutive degenerate pivots Bland's rule takes over until the
    objective moves again, which rules out cycling. Only the first
    ``n_allowed`` columns may enter. Pivoting also stops once the
    objective is at or below ``floor``, a known lower bound. Returns 0 when
    optimal, 1 when unbounded, 2 when the pivot cap is hit; ``count`` is
    cumulative.
    """
    nrows = t.shape[0] - 1
    last = t.shape[1] - 1
    stall = 0
    while True:
        if -t[nrows, last] <= floor:
            return 0, count
        bland = stall >= STALL_LIMIT
        e = -1
        most = -PIVOT_TOL
        for j in range(n_allowed):
            if t[nrows, j] < most:
                e = j
                if bland:
                    break
                most = t[nrows, j]
        if e < 0:
            return 0, count
        r = -1
        best = 0.0
        for i in range(nrows):
            a = t[i, e]
            if a > PIVOT_TOL:
                ratio = t[i, last] / a
                if r < 0 or ratio < best - PIVOT_TOL * max(1.0, abs(best)):
                    r = i
                    best = ratio
                elif ratio <= best + PIVOT_TOL * max(1.0, abs(best)) and basis[i] < basis[r]:
                    r = i
                    best = min(best, ratio)
        if r < 0:
            return 1, count
        count += 1
        if count > cap:
            return 2, count
        stall = stall + 1 if best <= PIVOT_TOL else 0
        _pivot(t, basis, r, e)


def _residual(A, rel, b, bounds, x):
    worst = 0.0
    if A.shape[0]:
        gap = A @ x - b
        viol = np.where(rel < 0, gap, np.where(rel > 0, -gap, np.abs(gap)))
        worst = max(0.0, float(viol.max()))
    if bounds is not None:
        for xj, (lo, hi) in zip(x, bounds):
            if lo is not None:
                worst = max(worst, lo - xj)
            if hi is not None:
                worst = max(worst, xj - hi)
    return worst


@njit(cache=True)
def _two_phase(S, rhs, codes, cost, lp_feas, cap):
    """Both simplex phases on ``S y (rel) rhs, y >= 0`` minimising ``cost @ y``.

    ``codes`` holds -1 for <=, 1 for >=, 0 for =. Returns
    ``(status, y, basis, keep, std, count)`` with status 0 optimal,
    1 unbounded, 2 pivot cap, 3 infeasible; ``std`` is the normalised
    system restricted to the kept rows, used for refinement.
    """
    nr0, ny = S.shape
    # unit max-norm rows, nonnegative right-hand sides, trivially true zero rows dropped
    nr = 0
    S2 = np.empty((nr0, ny))
    b2 = np.empty(nr0)
    c2 = np.empty(nr0, dtype=np.int64)
    for i in range(nr0):
        scale = 0.0
        for j in range(ny):
            scale = max(scale, abs(S[i, j]))
        v = rhs[i]
        code = codes[i]
        if scale == 0.0:
            if (code < 0 and v < -lp_feas) or (code > 0 and v > lp_feas) or (code == 0 and abs(v) > lp_feas):
                return 3, np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.bool_), np.zeros((0, 0)), 0
            continue
        sgn = 1.0
        if v < 0:
            sgn = -1.0
            code = -code
        for j in range(ny):
            S2[nr, j] = sgn * S[i, j] / scale
        b2[nr] = sgn * v / scale
        c2[nr] = code
        nr += 1

    n_slack = 0
    n_art = 0
    for i in range(nr):
        if c2[i] != 0:
            n_slack += 1
        if c2[i] != -1:
            n_art += 1
    ncols = ny + n_slack + n_art
    art0 = ny + n_slack
    t = np.zeros((nr + 1, ncols + 1))
    basis = np.zeros(nr, dtype=np.int64)
    s = ny
    a = art0
    for i in range(nr):
        for j in range(ny):
            t[i, j] = S2[i, j]
        t[i, ncols] = b2[i]
        if c2[i] < 0:
            t[i, s] = 1.0
            basis[i] = s
            s += 1
        else:
            if c2[i] > 0:
                t[i, s] = -1.0
                s += 1
            t[i, a] = 1.0
            basis[i] = a
            a += 1
    std = t[:nr].copy()

    count = 0
    keep = np.ones(nr, dtype=np.bool_)
    if n_art > 0:
        for i in range(nr):
            if basis[i] >= art0:
                for j in range(ncols + 1):
                    t[nr, j] -= t[i, j]
        for j in range(art0, ncols):
            t[nr, j] = 0.0
        status, count = _simplex(t, basis, ncols, count, cap, lp_feas)
        if status == 2:
            return 2, np.zeros(0), basis, keep, std, count
        if -t[nr, ncols] > lp_feas:
            return 3, np.zeros(0), basis, keep, std, count
        for i in range(nr):
            if basis[i] >= art0:
                e = -1
                for j in range(art0):
                    if abs(t[i, j]) > PIVOT_TOL:
                        e = j
                        break
                if e < 0:
                    keep[i] = False  # redundant row
                else:
                    _pivot(t, basis, i, e)
        nk = 0
        for i in range(nr):
            if keep[i]:
                nk += 1
        if nk < nr:
            t2 = np.empty((nk + 1, ncols + 1))
            b3 = np.empty(nk, dtype=np.int64)
            std2 = np.empty((nk, ncols + 1))
            k = 0
            for i in range(nr):
                if keep[i]:
                    t2[k] = t[i]
                    std2[k] = std[i]
                    b3[k] = basis[i]
                    k += 1
            t2[nk] = t[nr]
            t, basis, std, nr = t2, b3, std2, nk

    for j in range(ncols + 1):
        t[nr, j] = 0.0
    for j in range(ny):
        t[nr, j] = cost[j]
    for i in range(nr):
        cb = cost[basis[i]] if basis[i] < ny else 0.0
        if cb != 0.0:
            for j in range(ncols + 1):
                t[nr, j] -= cb * t[i, j]
    status, count = _simplex(t, basis, art0, count, cap, -np.inf)
    y = np.zeros(ncols)
    for i in range(nr):
        y[basis[i]] = t[i, ncols]
    return status, y, basis, keep, std, count


def _solve_arrays(c, A, rel, b, sense, bounds, tol):
    m = c.shape[0]
    cap = ITERATION_FACTOR * (m + A.shape[0])
    shift, T, extra = _substitution(m, bounds)
    ny = T.shape[1]

    S = A @ T
    rhs = b - A @ shift
    codes = rel.astype(np.int64)
    if extra:
        E = np.zeros((len(extra), ny))
        for i, (k, ub) in enumerate(extra):
            E[i, k] = 1.0
        S = np.vstack([S, E])
        rhs = np.concatenate([rhs, [ub for _, ub in extra]])
        codes = np.concatenate([codes, -np.ones(len(extra), dtype=np.int64)])
    cost = (c @ T) * (-1.0 if sense == "max" else 1.0)

    status, y, basis, _, std, count = _two_phase(
        np.ascontiguousarray(S), rhs, codes, cost, tol.lp_feas, cap)
    if status == 2:
        raise IterationLimit(f"simplex exceeded {cap} iterations")
    if status == 3:
        return LPSolution(INFEASIBLE, iterations=count)
    if status == 1:
        return LPSolution(UNBOUNDED, iterations=count)

    x = shift + T @ y[:ny]
    res = _residual(A, rel, b, bounds, x)
    if res > 1e-3 * tol.lp_feas and basis.size:
        # re-solve the basic system from the untouched rows to shed pivot round-off
        try:
            yb = np.linalg.solve(std[:, basis], std[:, -1])
        except np.linalg.LinAlgError:
            yb = None
        if yb is not None and np.all(yb >= -PIVOT_TOL):
            y2 = np.zeros_like(y)
            y2[basis] = np.maximum(yb, 0.0)
            x2 = shift + T @ y2[:ny]
            res2 = _residual(A, rel, b, bounds, x2)
            if res2 < res:
                x, res = x2, res2
    return LPSolution(OPTIMAL, x=x, objective_value=float(c @ x),
                      max_primal_residual=res, iterations=count)


def solve(p: LPProblem, tol: Tolerances = DEFAULT_TOL) -> LPSolution:
    """Solve ``p`` by the two-phase simplex method.

    Raises :class:`MalformedProblem` on ragged or non-finite input and
    :class:`IterationLimit` after ``50 * (n_vars + n_constraints)`` pivots.
    """
    c, A, rel, b = _to_arrays(p)
    return _solve_arrays(c, A, rel, b, p.sense, p.bounds, tol)


def feasible(constraints: Sequence[Constraint], n_vars: Optional[int] = None,
             bounds=None, tol: Tolerances = DEFAULT_TOL):
    """Phase-one feasibility test returning ``(True, witness)`` or ``(False, None)``.

    Variables are free unless ``bounds`` is given.
    """
    constraints = list(constraints)
    if n_vars is None:
        if not constraints:
            raise MalformedProblem("cannot infer the number of variables")
        n_vars = len(constraints[0].row)
    sol = solve(LPProblem([0.0] * n_vars, constraints, "min", bounds), tol)
    if sol.status == OPTIMAL:
        return True, sol.x
    return False, None


def feasible_ge(G: np.ndarray, h: np.ndarray, tol: Tolerances = DEFAULT_TOL):
    """Array form of :func:`feasible` for the system ``G @ c >= h`` with ``c`` free.

    This is the shape every margin-1 separation problem takes.
    """
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    if G.ndim != 2 or G.shape[0] != h.shape[0] or G.shape[1] < 1:
        raise MalformedProblem("G must be (k, m) with k matching h")
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(h))):
        raise MalformedProblem("constraint entries must be finite")
    m = G.shape[1]
    sol = _solve_arrays(np.zeros(m), G, np.ones(G.shape[0], dtype=int), h, "min", None, tol)
    if sol.status == OPTIMAL:
        return True, sol.x
    return False, None
