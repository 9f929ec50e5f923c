"""Linear programming relaxations of :class:`BipModel`.

The built-in backend is a dense bounded-variable primal simplex. Every row
``a.v (sense) b`` gets a slack ``s`` with ``a.v + s = b`` and bounds
``[0, inf)`` for ``<=``, ``(-inf, 0]`` for ``>=`` and ``[0, 0]`` for ``=``;
phase I drives artificial variables to zero. Large relaxations go to
HiGHS: a persistent ``highspy`` model (warm-started across branch-and-bound
nodes, only bounds change) when that package is installed, otherwise
:func:`scipy.optimize.linprog`.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..errors import DomainError

try:
    import highspy
except ImportError:  # pragma: no cover - optional accelerator
    highspy = None

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"
UNBOUNDED = "unbounded"

MAX_PIVOTS = 1_000_000
BLAND_AFTER = 1000  # degenerate pivots before switching to Bland's rule
REFACTOR_EVERY = 50
PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-11
PHASE1_TOL = 1e-7
# without highspy, dense tableau size above which "auto" uses linprog
AUTO_DENSE_LIMIT = 60_000


@dataclass
class LpSolution:
    values: np.ndarray
    objective: float
    status: str
    pivots: int = 0
    backend: str = "simplex"


class _Tableau:
    """State of the bounded-variable simplex on ``M w = b``, ``lo <= w <= hi``."""

    def __init__(self, M, b, lo, hi, basis, w):
        self.M, self.b, self.lo, self.hi = M, b, lo, hi
        self.basis = basis
        self.w = w
        self.pivots = 0
        self.degenerate = 0
        self.refactor()

    def refactor(self):
        B = self.M[:, self.basis]
        self.T = np.linalg.solve(B, self.M)
        nonbasic = np.ones(self.M.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.b - self.M[:, nonbasic] @ self.w[nonbasic]
        self.w[self.basis] = np.linalg.solve(B, rhs)

    def run(self, cost, max_pivots):
        m = self.M.shape[0]
        is_basic = np.zeros(self.M.shape[1], dtype=bool)
        is_basic[self.basis] = True
        movable = self.hi > self.lo
        d = cost - cost[self.basis] @ self.T
        since_refactor = 0
        while True:
            at_upper = np.isclose(self.w, self.hi) & np.isfinite(self.hi)
            at_lower = np.isclose(self.w, self.lo) & np.isfinite(self.lo)
            can_up = ~is_basic & movable & ~at_upper & (d < -DUAL_TOL)
            can_down = ~is_basic & movable & ~at_lower & (d > DUAL_TOL)
            eligible = can_up | can_down
            if not eligible.any():
                return OPTIMAL
            if self.pivots >= max_pivots:
                return ITERATION_LIMIT
            bland = self.degenerate >= BLAND_AFTER
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            delta = 1.0 if can_up[q] else -1.0
            alpha = delta * self.T[:, q]
            wb = self.w[self.basis]
            lo_b, hi_b = self.lo[self.basis], self.hi[self.basis]
            ratios = np.full(m, np.inf)
            dec = alpha > PIVOT_TOL
            inc = alpha < -PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                ratios[dec] = (wb[dec] - lo_b[dec]) / alpha[dec]
                ratios[inc] = (hi_b[inc] - wb[inc]) / -alpha[inc]
            ratios = np.maximum(np.nan_to_num(ratios, nan=np.inf), 0.0)
            theta_row = ratios.min() if m else np.inf
            theta_flip = self.hi[q] - self.lo[q]
            if not np.isfinite(theta_row) and not np.isfinite(theta_flip):
                return UNBOUNDED
            self.pivots += 1
            if theta_flip <= theta_row:
                theta = theta_flip
                self.w[q] = self.hi[q] if delta > 0 else self.lo[q]
                self.w[self.basis] = wb - theta * alpha
                if theta <= 1e-12:
                    self.degenerate += 1
                continue
            theta = theta_row
            ties = np.flatnonzero(ratios <= theta + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            if theta <= 1e-12:
                self.degenerate += 1
            leaving = self.basis[r]
            self.w[self.basis] = wb - theta * alpha
            self.w[q] += delta * theta
            self.w[leaving] = self.lo[leaving] if alpha[r] > 0 else self.hi[leaving]
            piv = self.T[r] / self.T[r, q]
            col = self.T[:, q].copy()
            self.T -= np.outer(col, piv)
            self.T[r] = piv
            d = d - d[q] * piv
            self.basis[r] = q
            is_basic[leaving] = False
            is_basic[q] = True
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self.refactor()
                d = cost - cost[self.basis] @ self.T
                since_refactor = 0


def simplex(c, A, senses, b, lb, ub, max_pivots: int = MAX_PIVOTS) -> LpSolution:
    """Minimise ``c.v`` subject to ``A v (senses) b`` and ``lb <= v <= ub``.

    ``lb`` must be finite. Dense arrays only.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, c.size)
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    m, n = A.shape
    if not np.all(np.isfinite(lb)):
        raise DomainError("simplex needs finite lower bounds")
    if np.any(lb > ub):
        return LpSolution(np.full(n, np.nan), math.inf, INFEASIBLE)
    senses = np.asarray(senses)
    s_lo = np.where(senses == "<=", 0.0, -np.inf)
    s_hi = np.where(senses == ">=", 0.0, np.inf)
    s_lo[senses == "="] = 0.0
    s_hi[senses == "="] = 0.0
    resid = b - A @ lb
    below, above = resid < s_lo, resid > s_hi
    need_art = below | above
    s_start = np.clip(resid, s_lo, s_hi)
    art_rows = np.flatnonzero(need_art)
    sign = np.where(resid[art_rows] > s_start[art_rows], 1.0, -1.0)
    n_art = art_rows.size
    M = np.zeros((m, n + m + n_art))
    M[:, :n] = A
    M[:, n : n + m] = np.eye(m)
    M[art_rows, n + m + np.arange(n_art)] = sign
    lo = np.concatenate([lb, s_lo, np.zeros(n_art)])
    hi = np.concatenate([ub, s_hi, np.full(n_art, np.inf)])
    w = np.concatenate([lb, s_start, np.abs(resid[art_rows] - s_start[art_rows])])
    basis = np.arange(n, n + m)
    basis[art_rows] = n + m + np.arange(n_art)
    tab = _Tableau(M, b, lo, hi, basis, w)
    if n_art:
        cost1 = np.zeros(M.shape[1])
        cost1[n + m :] = 1.0
        status = tab.run(cost1, max_pivots)
        if status == ITERATION_LIMIT:
            return LpSolution(tab.w[:n].copy(), math.nan, status, tab.pivots)
        if tab.w[n + m :].sum() > PHASE1_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return LpSolution(tab.w[:n].copy(), math.inf, INFEASIBLE, tab.pivots)
        # artificials stay in the problem, pinned at zero
        tab.hi[n + m :] = 0.0
        tab.w[n + m :] = 0.0
        tab.refactor()
    cost2 = np.zeros(M.shape[1])
    cost2[:n] = c
    status = tab.run(cost2, max_pivots)
    v = np.clip(tab.w[:n], lb, ub)
    obj = math.fsum(c * v)
    return LpSolution(v, obj, status, tab.pivots)


def highs(c, A, senses, b, lb, ub) -> LpSolution:
    """The same problem solved by HiGHS via scipy."""
    c = np.asarray(c, dtype=float)
    A = sp.csr_matrix(A)
    senses = np.asarray(senses)
    le, ge, eq = senses == "<=", senses == ">=", senses == "="
    A_ub = sp.vstack([A[le], -A[ge]]) if (le.any() or ge.any()) else None
    b_ub = np.concatenate([b[le], -b[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = b[eq] if eq.any() else None
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=np.column_stack([lb, ub]), method="highs")
    if res.status == 2:
        return LpSolution(np.full(c.size, np.nan), math.inf, INFEASIBLE, backend="highs")
    if res.status == 1:
        return LpSolution(np.full(c.size, np.nan), math.nan, ITERATION_LIMIT, backend="highs")
    if res.status != 0:
        return LpSolution(np.full(c.size, np.nan), math.nan, UNBOUNDED, backend="highs")
    v = np.clip(res.x, lb, ub)
    return LpSolution(v, math.fsum(c * v), OPTIMAL, int(res.nit), backend="highs")


class _HighsSession:
    """One HiGHS instance holding the relaxation; each solve only changes bounds."""

    def __init__(self, c, A, senses, b):
        A = sp.csc_matrix(A)
        self.n = c.size
        lp = highspy.HighsLp()
        lp.num_col_ = self.n
        lp.num_row_ = A.shape[0]
        lp.col_cost_ = np.asarray(c, dtype=float)
        lp.col_lower_ = np.zeros(self.n)
        lp.col_upper_ = np.ones(self.n)
        lp.row_lower_ = np.where(senses == "<=", -highspy.kHighsInf, b)
        lp.row_upper_ = np.where(senses == ">=", highspy.kHighsInf, b)
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr
        lp.a_matrix_.index_ = A.indices
        lp.a_matrix_.value_ = A.data
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.passModel(lp)
        self.idx = np.arange(self.n, dtype=np.int32)

    def solve(self, lb, ub) -> LpSolution:
        self.h.changeColsBounds(self.n, self.idx, np.asarray(lb, float), np.asarray(ub, float))
        self.h.run()
        status = self.h.getModelStatus()
        if status == highspy.HighsModelStatus.kOptimal:
            v = np.clip(np.array(self.h.getSolution().col_value), lb, ub)
            return LpSolution(v, math.nan, OPTIMAL, backend="highs")
        if status in (highspy.HighsModelStatus.kInfeasible, highspy.HighsModelStatus.kUnboundedOrInfeasible):
            return LpSolution(np.full(self.n, np.nan), math.inf, INFEASIBLE, backend="highs")
        return LpSolution(np.full(self.n, np.nan), math.nan, ITERATION_LIMIT, backend="highs")


class LpRelaxation:
    """Reusable LP relaxation of a model; fixings are applied per call."""

    def __init__(self, model, backend: str = "auto"):
        if backend not in ("auto", "simplex", "highs"):
            raise DomainError(f"unknown LP backend {backend!r}")
        self.c, A, self.senses, self.b = model.to_arrays()
        self.A = A.tocsc()
        self.n_vars = self.c.size
        self.backend = backend
        self._session = None

    def _pick(self, rows, cols):
        if self.backend != "auto":
            return self.backend
        if highspy is not None:
            return "highs"
        return "simplex" if rows * (cols + rows) <= AUTO_DENSE_LIMIT else "highs"

    def solve(self, lb=None, ub=None) -> LpSolution:
        lb = np.zeros(self.n_vars) if lb is None else np.asarray(lb, dtype=float)
        ub = np.ones(self.n_vars) if ub is None else np.asarray(ub, dtype=float)
        if highspy is not None and self._pick(self.A.shape[0], self.n_vars) == "highs":
            if self._session is None:
                self._session = _HighsSession(self.c, self.A, self.senses, self.b)
            sol = self._session.solve(lb, ub)
            if sol.status == OPTIMAL:
                sol.objective = math.fsum(self.c * sol.values)
            return sol
        free = lb < ub
        fixed_vals = np.where(free, 0.0, lb)
        b = self.b - self.A @ fixed_vals
        A = self.A[:, free]
        # rows left without free variables are checked directly
        active = np.diff(A.tocsr().indptr) > 0
        idle = ~active
        if idle.any():
            r, s = b[idle], self.senses[idle]
            bad = ((s == "<=") & (r < -PRIMAL_TOL)) | ((s == ">=") & (r > PRIMAL_TOL)) | (
                (s == "=") & (np.abs(r) > PRIMAL_TOL))
            if bad.any():
                return LpSolution(np.full(self.n_vars, np.nan), math.inf, INFEASIBLE)
        A = A.tocsr()[active]
        b, senses = b[active], self.senses[active]
        c = self.c[free]
        backend = self._pick(A.shape[0], A.shape[1])
        if A.shape[1] == 0:
            sol = LpSolution(np.zeros(0), 0.0, OPTIMAL)
        elif backend == "simplex":
            sol = simplex(c, A.toarray(), senses, b, lb[free], ub[free])
        else:
            sol = highs(c, A, senses, b, lb[free], ub[free])
        values = fixed_vals.copy()
        if sol.values.size:
            values[free] = sol.values
        obj = math.fsum(self.c * values) if sol.status == OPTIMAL else sol.objective
        return LpSolution(values, obj, sol.status, sol.pivots, backend)


def solve_lp(model, lb=None, ub=None, backend: str = "simplex") -> LpSolution:
    """LP relaxation of ``model`` with every variable in ``[lb, ub]`` (default ``[0, 1]``)."""
    return LpRelaxation(model, backend).solve(lb, ub)
