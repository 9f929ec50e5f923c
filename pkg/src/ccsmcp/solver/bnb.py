"""Depth-first branch-and-bound for :class:`BipModel`.

Branching is on the most fractional binary. Product variables ``y_T`` and
scenario indicators ``z`` are functions of ``x``: their bounds follow the
``x`` fixings (``y_T = 0`` once a column of ``T`` is fixed to 0, ``y_T = 1``
once all are fixed to 1), and once every binary is integral the node's
point is completed from ``x``. A completion that violates a row sends the
search into another unfixed ``x`` (or prunes the node when none is left).
For models whose feasible ``x`` set is up-closed, a node is discarded
without an LP when switching on every unfixed column still leaves a row
violated. Product variables ``y_T`` and scenario
indicators ``z`` are functions of ``x`` and are completed from ``x`` once it
is integral; a node whose completion violates a row is split on another
unfixed ``x`` (or pruned when none is left).
"""

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DomainError
from .lp import INFEASIBLE as LP_INFEASIBLE
from .lp import OPTIMAL as LP_OPTIMAL
from .lp import LpRelaxation

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
TIME_LIMIT = "time_limit"

INT_TOL = 1e-6
PRUNE_TOL = 1e-9
# models with more variables than this go to scipy.milp under engine="auto"
AUTO_BNB_MAX_VARS = 400
MILP_TOL = 1e-6


@dataclass
class BnbReport:
    status: str
    incumbent: Optional[np.ndarray]
    objective: float
    best_bound: float
    nodes: int = 0
    wall_time: float = 0.0
    engine: str = "bnb"
    lp_backend: str = "auto"
    node_bounds: list = field(default_factory=list, repr=False)

    @property
    def x(self) -> Optional[np.ndarray]:
        return None if self.incumbent is None else self.incumbent


def _integral_costs(c) -> bool:
    return bool(np.all(np.abs(c - np.round(c)) <= 1e-12))


def _seed_incumbent(model, start):
    """Complete ``start`` (or the greedy cover) and keep it if the model accepts it."""
    candidates = []
    if start is not None:
        candidates.append(np.asarray(start, dtype=float)[: model.n])
    if model.instance is not None:
        from .heuristics import greedy_heuristic

        g = greedy_heuristic(model.instance)
        if g is not None:
            candidates.append(np.asarray(g, dtype=float))
    best = None
    for x in candidates:
        v = model.complete(x)
        if model.is_feasible(v):
            obj = model.objective_value(v)
            if best is None or obj < best[1] - PRUNE_TOL:
                best = (v, obj)
    return best


def branch_and_bound(model, time_limit: Optional[float] = None, node_limit: Optional[int] = None,
                     start=None, lp_backend: str = "auto", record_bounds: bool = False) -> BnbReport:
    t0 = time.perf_counter()
    relax = LpRelaxation(model, lp_backend)
    c = relax.c
    nv = relax.n_vars
    if np.any(c[model.n :] != 0):
        raise DomainError("objective must touch only the selection variables")
    branchable = np.array([j in model.binaries for j in range(nv)])
    selection = np.arange(nv) < model.n
    prod_ids = np.array(sorted(model.products), dtype=int)
    members = np.zeros((prod_ids.size, model.n))
    for r, y in enumerate(prod_ids):
        members[r, list(model.products[y])] = 1.0
    sizes = members.sum(axis=1)

    def propagate(lb, ub):
        if prod_ids.size:
            any_zero = members @ (ub[: model.n] == 0.0) > 0
            all_one = members @ (lb[: model.n] == 1.0) >= sizes
            ub[prod_ids[any_zero]] = 0.0
            lb[prod_ids[all_one]] = 1.0
    integral = _integral_costs(c)
    up_closed = getattr(model, "up_closed", False)

    def node_bound(obj):
        return math.ceil(obj - INT_TOL) if integral else obj

    seeded = _seed_incumbent(model, start)
    inc, inc_obj = (seeded if seeded else (None, math.inf))
    lb0, ub0 = np.zeros(nv), np.ones(nv)
    stack = [(lb0, ub0, -math.inf)]
    nodes = 0
    bounds_log = []
    status = None
    while stack:
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            status = TIME_LIMIT
            break
        if node_limit is not None and nodes >= node_limit:
            status = TIME_LIMIT
            break
        lb, ub, parent_bound = stack.pop()
        if parent_bound >= inc_obj - PRUNE_TOL:
            continue
        if up_closed and not model.covering_feasible(model.complete(ub[: model.n])):
            # even every free column switched on fails a row
            continue
        propagate(lb, ub)
        nodes += 1
        sol = relax.solve(lb, ub)
        if sol.status == LP_INFEASIBLE:
            continue
        if sol.status != LP_OPTIMAL:
            raise DomainError(f"LP relaxation ended with status {sol.status}")
        bound = node_bound(sol.objective)
        if record_bounds:
            bounds_log.append((lb.copy(), ub.copy(), sol.objective))
        if bound >= inc_obj - PRUNE_TOL:
            continue
        v = sol.values
        frac = np.abs(v - np.round(v))
        cand = branchable & (frac > INT_TOL)
        # scenario indicators follow from x, so x is branched on first
        if model.indicators and (cand & selection).any():
            cand = cand & selection
        if cand.any():
            j = int(np.argmax(np.where(cand, frac, -1.0)))
        else:
            completed = model.complete(v)
            # fixed variables stay fixed in the completion
            if model.is_feasible(completed):
                obj = model.objective_value(completed)
                if obj < inc_obj - PRUNE_TOL:
                    inc, inc_obj = completed, obj
                continue
            unfixed = np.flatnonzero(selection & branchable & (lb < ub))
            if unfixed.size == 0:
                continue
            j = int(unfixed[0])
        lo_child = (lb.copy(), ub.copy(), bound)
        lo_child[1][j] = 0.0
        hi_child = (lb.copy(), ub.copy(), bound)
        hi_child[0][j] = 1.0
        stack.append(lo_child)
        stack.append(hi_child)  # explored first
    if status is None:
        status = OPTIMAL if inc is not None else INFEASIBLE
        best_bound = inc_obj
    else:
        open_bounds = [b for _, _, b in stack]
        best_bound = min([inc_obj] + open_bounds)
    return BnbReport(
        status=status,
        incumbent=None if inc is None else np.round(inc[: model.n]).astype(int),
        objective=inc_obj,
        best_bound=best_bound,
        nodes=nodes,
        wall_time=time.perf_counter() - t0,
        engine="bnb",
        lp_backend=lp_backend,
        node_bounds=bounds_log,
    )


def milp_engine(model, time_limit: Optional[float] = None, start=None) -> BnbReport:
    """Solve with scipy's HiGHS MILP interface (for models too large for the dense engine)."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    t0 = time.perf_counter()
    c, A, senses, b = model.to_arrays()
    lo = np.where(senses == "<=", -np.inf, b)
    hi = np.where(senses == ">=", np.inf, b)
    integrality = np.zeros(c.size)
    integrality[list(model.binaries)] = 1
    options = {"disp": False}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    cons = [LinearConstraint(A, lo, hi)] if A.shape[0] else []
    res = milp(c, constraints=cons, integrality=integrality, bounds=Bounds(0, 1), options=options)
    elapsed = time.perf_counter() - t0
    if res.x is not None:
        x = np.round(res.x[: model.n])
        v = model.complete(x)
        # HiGHS works to a 1e-6 primal tolerance
        if model.max_violation(v) <= MILP_TOL:
            obj = model.objective_value(v)
            bound = getattr(res, "mip_dual_bound", obj)
            status = OPTIMAL if res.status == 0 else TIME_LIMIT
            return BnbReport(status, x.astype(int), obj, bound if bound is not None else obj,
                             int(getattr(res, "mip_node_count", 0) or 0), elapsed, "milp")
    if res.status == 1:
        return BnbReport(TIME_LIMIT, None, math.inf, -math.inf, 0, elapsed, "milp")
    if res.status == 0:
        raise DomainError("MILP solution failed exact re-verification against the model")
    return BnbReport(INFEASIBLE, None, math.inf, math.inf, 0, elapsed, "milp")


def solve_bip(model, time_limit: Optional[float] = None, node_limit: Optional[int] = None,
              start=None, engine: str = "auto", lp_backend: str = "auto") -> BnbReport:
    """Exact 0-1 solve of ``model``.

    ``engine`` is ``"bnb"`` (built-in branch-and-bound), ``"milp"`` (scipy /
    HiGHS) or ``"auto"``, which uses the built-in engine up to
    ``AUTO_BNB_MAX_VARS`` variables.
    """
    if engine == "auto":
        engine = "bnb" if model.num_vars <= AUTO_BNB_MAX_VARS else "milp"
    if engine == "bnb":
        return branch_and_bound(model, time_limit, node_limit, start, lp_backend)
    if engine == "milp":
        return milp_engine(model, time_limit, start)
    raise DomainError(f"unknown engine {engine!r}")
