"""Outer approximation with per-row truncation growth.

Each iteration solves a relaxation in which every general row ``i`` is
replaced by ``g_{t_i}(x) <= eps_i`` (a lower bound on the failure
probability for odd ``t_i``). The optimal ``x`` is checked against the exact
cover probabilities; rows that fail get ``t_i += 2`` and the loop repeats.
At ``t_i = |J_i|`` the inequality is exact, so the loop is finite.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Optional

from .errors import InfeasibleError, NumericError, SolveTimeout
from .model import Instance, Solution, verify
from .presolve import GENERAL, PresolveResult, general_only, presolve
from .reformulate import DEFAULT_SUBSET_BUDGET, TruncationState, build_oa_relaxation
from .solver.bnb import INFEASIBLE, OPTIMAL, solve_bip


@dataclass
class OaIteration:
    index: int
    t: dict
    nu: float
    violated: tuple
    solve_time: float
    nodes: int = 0
    n_vars: int = 0
    n_rows: int = 0


@dataclass
class OaTrace:
    iterations: list = field(default_factory=list)
    final: Optional[Solution] = None
    status: str = "running"
    kept_rows: int = 0
    dropped_rows: int = 0

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)

    @property
    def nu(self) -> list:
        return [it.nu for it in self.iterations]

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "kept_rows": self.kept_rows,
            "dropped_rows": self.dropped_rows,
            "iterations": [
                {
                    "index": it.index,
                    "t": {str(i): t for i, t in sorted(it.t.items())},
                    "nu": it.nu,
                    "violated": list(it.violated),
                    "solve_time": it.solve_time,
                    "nodes": it.nodes,
                    "n_vars": it.n_vars,
                    "n_rows": it.n_rows,
                }
                for it in self.iterations
            ],
            "final": None if self.final is None else self.final.to_json(),
        }


def _row_owner(pre: PresolveResult, i: int) -> int:
    """Kept row responsible for row ``i`` (itself, or the row that dominates it)."""
    return pre.dropped.get(i, i)


def solve_oa(instance: Instance, variant: str = "II", reduce: bool = True, use_special: bool = True,
             time_limit: Optional[float] = None, engine: str = "auto", lp_backend: str = "auto",
             subset_budget: int = DEFAULT_SUBSET_BUDGET, pre: Optional[PresolveResult] = None):
    """Solve CC-SMCP exactly by outer approximation; returns ``(Solution, OaTrace)``.

    Raises :class:`InfeasibleError` when presolve or a relaxation proves the
    problem infeasible and :class:`SolveTimeout` when ``time_limit`` runs out.
    """
    t0 = time.perf_counter()
    if pre is None:
        pre = presolve(instance, reduce=reduce)
        if not use_special:
            pre = general_only(instance, pre)
    trace = OaTrace(kept_rows=len(pre.kept), dropped_rows=len(pre.dropped))
    if pre.infeasible_rows:
        cert = pre.certificate()
        trace.iterations.append(OaIteration(1, {}, math.inf, tuple(pre.infeasible_rows), 0.0))
        trace.status = "infeasible"
        raise InfeasibleError(
            f"row {cert['row']} cannot reach its cover target (max probability {cert['max_prob']:.6g})",
            certificate=cert, trace=trace)
    general = pre.rows_of_kind(GENERAL)
    caps = {i: len(instance.rows[i]) for i in general}
    state = TruncationState(t={i: min(1, caps[i]) for i in general})
    start = None
    while True:
        remaining = None if time_limit is None else max(0.0, time_limit - (time.perf_counter() - t0))
        model = build_oa_relaxation(instance, state, variant, pre, subset_budget)
        ts = time.perf_counter()
        report = solve_bip(model, time_limit=remaining, start=start, engine=engine, lp_backend=lp_backend)
        elapsed = time.perf_counter() - ts
        it = OaIteration(len(trace.iterations) + 1, dict(state.t), report.objective, (), elapsed,
                         report.nodes, model.num_vars, len(model.constraints))
        if report.status == INFEASIBLE:
            it.nu = math.inf
            trace.iterations.append(it)
            trace.status = "infeasible"
            raise InfeasibleError("the relaxation has no feasible point, so neither has the problem",
                                  certificate={"reason": "relaxation infeasible", "iteration": it.index},
                                  trace=trace)
        if report.status != OPTIMAL:
            trace.iterations.append(it)
            trace.status = "time_limit"
            raise SolveTimeout("time limit reached inside the outer approximation", trace=trace,
                               incumbent=report.incumbent)
        x = report.incumbent
        sol = verify(instance, x)
        owners = sorted({_row_owner(pre, i) for i in sol.violated})
        it.violated = tuple(owners)
        trace.iterations.append(it)
        if sol.feasible:
            trace.final = sol
            trace.status = "optimal"
            return sol, trace
        grow = [i for i in owners if i in caps]
        stuck = [i for i in owners if i not in caps or state.t[i] >= caps[i]]
        if stuck or not grow:
            raise NumericError(f"rows {stuck} are modelled exactly but their check still fails")
        state = state.advanced(grow, caps)
        start = x
