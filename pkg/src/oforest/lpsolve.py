"""Dense two-phase simplex and the L1 decode formulation.

The decode step needs the minimum-L1-norm point of a small polyhedron
``A x >= b`` (a few hundred rows, tens to hundreds of variables), optionally
intersected with a per-variable box.  A dense tableau simplex is a good fit
at that scale and returns vertex solutions, which keeps the reconstruction
sparse.

Conventions, fixed and documented here:

* feasibility tolerance 1e-7 (phase-1 residual above it means infeasible),
* pivot tolerance 1e-9,
* iteration cap 50 * (rows + cols) of the working tableau, per phase,
* Dantzig pricing, switching permanently to Bland's anti-cycling rule after
  a run of 30 degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleCode, IterationLimit

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9
_DEGENERATE_RUN = 30


@dataclass
class LpProblem:
    """min objective . z  subject to  rows . z >= rhs,  lower <= z <= upper.

    Bounds are optional; entries may be +-inf.
    """
    objective: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None


@dataclass
class LpSolution:
    status: str
    z: np.ndarray | None = None
    objective_value: float | None = None
    max_violation: float | None = None


def _pivot(t: np.ndarray, row: int, col: int):
    t[row] /= t[row, col]
    colvals = t[:, col].copy()
    colvals[row] = 0.0
    t -= np.outer(colvals, t[row])
    t[:, col] = 0.0
    t[row, col] = 1.0


def _run_simplex(t: np.ndarray, basis: np.ndarray, n_enter: int, cap: int) -> str:
    """Iterate the tableau to optimality.

    ``t`` has the constraint rows first and the reduced-cost row last (its
    rhs entry is minus the objective).  Only the first ``n_enter`` columns
    may enter the basis.
    """
    m = basis.shape[0]
    bland = False
    degen_run = 0
    for _ in range(cap):
        red = t[-1, :n_enter]
        if bland:
            cands = np.nonzero(red < -PIVOT_TOL)[0]
            if cands.size == 0:
                return OPTIMAL
            j = int(cands[0])
        else:
            j = int(np.argmin(red))
            if red[j] >= -PIVOT_TOL:
                return OPTIMAL
        col = t[:m, j]
        pos = col > PIVOT_TOL
        if not np.any(pos):
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[pos] = t[:m, -1][pos] / col[pos]
        rmin = float(ratios.min())
        ties = np.nonzero(ratios <= rmin + 1e-12 * (1.0 + abs(rmin)))[0]
        if bland:
            row = int(ties[np.argmin(basis[ties])])
        else:
            row = int(ties[np.argmax(col[ties])])  # largest pivot for stability
        if rmin <= 1e-12:
            degen_run += 1
            if degen_run >= _DEGENERATE_RUN:
                bland = True
        else:
            degen_run = 0
        _pivot(t, row, j)
        basis[row] = j
    return ITERATION_LIMIT


def _solve_standard_ge(c: np.ndarray, a: np.ndarray, b: np.ndarray,
                       max_iter: int | None):
    """min c.x  s.t.  a x >= b, x >= 0; returns (status, x)."""
    m, nv = a.shape
    pos_rhs = b > 0
    n_art = int(pos_rhs.sum())
    ncols = nv + m + n_art
    cap = max_iter if max_iter is not None else 50 * (m + ncols)

    t = np.zeros((m + 1, ncols + 1))
    basis = np.zeros(m, dtype=int)
    art_at = ncols - n_art
    k = 0
    for i in range(m):
        if pos_rhs[i]:
            t[i, :nv] = a[i]
            t[i, nv + i] = -1.0          # surplus
            t[i, art_at + k] = 1.0
            t[i, -1] = b[i]
            basis[i] = art_at + k
            k += 1
        else:
            t[i, :nv] = -a[i]
            t[i, nv + i] = 1.0           # negated row: surplus is basic
            t[i, -1] = -b[i]
            basis[i] = nv + i

    if n_art > 0:
        t[-1, art_at:ncols] = 1.0
        for i in range(m):
            if basis[i] >= art_at:
                t[-1] -= t[i]
        status = _run_simplex(t, basis, nv + m, cap)
        if status == ITERATION_LIMIT:
            return ITERATION_LIMIT, None
        if status == UNBOUNDED:   # impossible for a sum of artificials
            return ITERATION_LIMIT, None
        if -t[-1, -1] > FEAS_TOL:
            return INFEASIBLE, None
        # drive leftover artificials out of the basis; rows that cannot
        # pivot are linearly dependent and get dropped
        drop = []
        for i in range(m):
            if basis[i] < art_at:
                continue
            row = t[i, :art_at]
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > PIVOT_TOL:
                _pivot(t, i, j)
                basis[i] = j
            else:
                drop.append(i)
        if drop:
            keep = np.setdiff1d(np.arange(m), drop)
            t = np.vstack([t[keep], t[-1:]])
            basis = basis[keep]
            m = keep.shape[0]
        t = np.hstack([t[:, :art_at], t[:, -1:]])
        ncols = art_at

    rhs = t[:m, -1]
    rhs[(rhs < 0) & (rhs > -FEAS_TOL)] = 0.0

    t[-1] = 0.0
    t[-1, :nv] = c
    for i in range(m):
        cb = c[basis[i]] if basis[i] < nv else 0.0
        if cb != 0.0:
            t[-1] -= cb * t[i]
    status = _run_simplex(t, basis, ncols, cap)
    if status != OPTIMAL:
        return status, None
    x = np.zeros(ncols)
    x[basis] = t[:m, -1]
    return OPTIMAL, x[:nv]


def solve_lp(problem: LpProblem, max_iter: int | None = None) -> LpSolution:
    """Two-phase simplex over the general form; statuses are carried in the
    solution, never raised."""
    c = np.asarray(problem.objective, dtype=float)
    n = c.shape[0]
    g = np.asarray(problem.rows, dtype=float)
    if g.size == 0:
        g = g.reshape(0, n)
    h = np.asarray(problem.rhs, dtype=float).reshape(g.shape[0])
    if g.shape[1] != n:
        raise ValueError(f"rows have {g.shape[1]} columns, objective has {n}")
    lo = (np.full(n, -np.inf) if problem.lower is None
          else np.broadcast_to(np.asarray(problem.lower, dtype=float), (n,)).copy())
    hi = (np.full(n, np.inf) if problem.upper is None
          else np.broadcast_to(np.asarray(problem.upper, dtype=float), (n,)).copy())
    if np.any(lo > hi):
        raise ValueError("lower bound exceeds upper bound")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        raise ValueError("objective, rows and rhs must be finite")

    # substitute z = S x + o with x >= 0
    src: list[tuple[int, float]] = []
    offsets = np.zeros(n)
    ubs: list[float] = []
    for j in range(n):
        if lo[j] > -np.inf:
            offsets[j] = lo[j]
            src.append((j, 1.0))
            ubs.append(hi[j] - lo[j])
        elif hi[j] < np.inf:
            offsets[j] = hi[j]
            src.append((j, -1.0))
            ubs.append(np.inf)
        else:
            src.append((j, 1.0))
            src.append((j, -1.0))
            ubs.extend((np.inf, np.inf))
    nx = len(src)
    s_map = np.zeros((n, nx))
    for k, (j, sgn) in enumerate(src):
        s_map[j, k] = sgn

    a = g @ s_map
    b = h - g @ offsets
    bound_rows = [k for k, u in enumerate(ubs) if np.isfinite(u)]
    if bound_rows:
        extra = np.zeros((len(bound_rows), nx))
        for r, k in enumerate(bound_rows):
            extra[r, k] = -1.0
        a = np.vstack([a, extra])
        b = np.concatenate([b, [-ubs[k] for k in bound_rows]])

    status, x = _solve_standard_ge(s_map.T @ c, a, b, max_iter)
    if status != OPTIMAL:
        return LpSolution(status=status)
    z = s_map @ x + offsets
    viol = 0.0 if g.shape[0] == 0 else float(max(0.0, np.max(h - g @ z)))
    return LpSolution(status=OPTIMAL, z=z, objective_value=float(c @ z),
                      max_violation=viol)


def dedup_rows(a: np.ndarray, b: np.ndarray):
    """Drop exact duplicates of (row, rhs) pairs, keeping first occurrences.
    Cannot change the feasible set."""
    seen = set()
    keep = []
    for i in range(a.shape[0]):
        key = a[i].tobytes() + b[i].tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    if len(keep) == a.shape[0]:
        return a, b
    return a[keep], b[keep]


def _box_arrays(box, p: int):
    lo, hi = box
    lo = np.full(p, -np.inf) if lo is None else np.broadcast_to(np.asarray(lo, dtype=float), (p,)).copy()
    hi = np.full(p, np.inf) if hi is None else np.broadcast_to(np.asarray(hi, dtype=float), (p,)).copy()
    return lo, hi


def _l1_direct_problem(a, b, lo, hi) -> LpProblem:
    """Image mode: all lower bounds nonnegative, so ||x||_1 = sum(x)."""
    p = a.shape[1]
    return LpProblem(objective=np.ones(p), rows=a, rhs=b, lower=lo, upper=hi)


def _l1_split_problem(a, b, box) -> LpProblem:
    """General mode: x = xp - xm with xp, xm >= 0; box bounds become rows."""
    p = a.shape[1]
    rows = np.hstack([a, -a])
    rhs = b
    if box is not None:
        lo, hi = _box_arrays(box, p)
        eye = np.eye(p)
        lo_rows = np.isfinite(lo)
        hi_rows = np.isfinite(hi)
        blocks = [rows]
        rparts = [rhs]
        if np.any(lo_rows):
            blocks.append(np.hstack([eye[lo_rows], -eye[lo_rows]]))
            rparts.append(lo[lo_rows])
        if np.any(hi_rows):
            blocks.append(np.hstack([-eye[hi_rows], eye[hi_rows]]))
            rparts.append(-hi[hi_rows])
        rows = np.vstack(blocks)
        rhs = np.concatenate(rparts)
    return LpProblem(objective=np.ones(2 * p), rows=rows, rhs=rhs,
                     lower=np.zeros(2 * p), upper=None)


def solve_l1(a: np.ndarray, b: np.ndarray, box=None, dedup: bool = True) -> np.ndarray:
    """min ||x||_1  s.t.  a x >= b  (and lo <= x <= hi when a box is given).

    ``box`` is a (lo, hi) pair, each a scalar, per-variable array, or None.
    Raises InfeasibleCode when no point satisfies the system and
    IterationLimit when the simplex cap is hit.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"constraint matrix must be 2-D, got shape {a.shape}")
    p = a.shape[1]
    b = np.asarray(b, dtype=float).reshape(a.shape[0])
    if dedup:
        a, b = dedup_rows(a, b)

    direct = False
    if box is not None:
        lo, hi = _box_arrays(box, p)
        direct = bool(np.all(lo >= 0.0))
    if direct:
        sol = solve_lp(_l1_direct_problem(a, b, lo, hi))
        x = sol.z
    else:
        sol = solve_lp(_l1_split_problem(a, b, box))
        x = None if sol.z is None else sol.z[:p] - sol.z[p:]

    if sol.status == OPTIMAL:
        return x
    if sol.status == INFEASIBLE:
        raise InfeasibleCode("constraint system has no solution")
    if sol.status == ITERATION_LIMIT:
        raise IterationLimit("simplex iteration cap reached")
    # the L1 objective is bounded below by 0; unbounded means breakdown
    raise InfeasibleCode("numerical breakdown: L1 program reported unbounded")
