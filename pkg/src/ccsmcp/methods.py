"""One entry point for every solution method, returning a verified report."""

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .errors import DomainError, InfeasibleError, SolveTimeout
from .model import Instance, Solution, verify
from .oa import solve_oa
from .presolve import EQUAL_PROB, GENERAL, presolve
from .reformulate import DEFAULT_SUBSET_BUDGET, build_full, build_is, build_saa
from .sampling import is_tilts, sample_scenarios
from .solver import exhaustive_search, solve_bip
from .solver.bnb import INFEASIBLE, OPTIMAL

METHODS = ("oa1", "oa2", "full1", "full2", "saa", "is", "sc", "exact")
EXACT_METHODS = ("oa1", "oa2", "full1", "full2", "sc", "exact")
LABELS = {"oa1": "OA-I", "oa2": "OA-II", "full1": "Full-I", "full2": "Full-II",
          "saa": "SAA", "is": "IS", "sc": "SC", "exact": "Exact"}


@dataclass
class SolveOptions:
    n_scenarios: Optional[int] = None
    alpha: Optional[float] = None
    seed: int = 0
    time_limit: Optional[float] = None
    subset_budget: int = DEFAULT_SUBSET_BUDGET
    u_estimate: Optional[list] = None
    reduce: bool = True
    engine: str = "auto"
    lp_backend: str = "auto"


@dataclass
class SolveReport:
    """Outcome of one method on one instance.

    ``status`` is ``optimal`` (certified), ``solved`` (a sampled model was
    solved; see ``verified_feasible``), ``infeasible`` or ``time_limit``.
    ``model_objective`` is the objective of the model actually solved, which
    for SAA/IS can be below the true optimum.
    """

    method: str
    status: str
    solution: Optional[Solution] = None
    model_objective: float = math.nan
    time: float = 0.0
    iterations: int = 0
    nodes: int = 0
    certified: bool = False
    certificate: dict = field(default_factory=dict)
    trace: Optional[dict] = None
    notes: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.solution.objective if self.solution is not None else math.nan

    @property
    def verified_feasible(self) -> bool:
        return self.solution is not None and self.solution.feasible

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "status": self.status,
            "objective": None if self.solution is None else self.solution.objective,
            "model_objective": None if math.isnan(self.model_objective) else self.model_objective,
            "verified_feasible": self.verified_feasible,
            "certified": self.certified,
            "time": self.time,
            "iterations": self.iterations,
            "nodes": self.nodes,
            "violated_rows": [] if self.solution is None else list(self.solution.violated),
            "certificate": self.certificate,
            "solution": None if self.solution is None else self.solution.to_json(),
            "trace": self.trace,
            "notes": list(self.notes),
        }


def _all_special(pre) -> bool:
    return not pre.rows_of_kind(GENERAL) and bool(pre.rows_of_kind(EQUAL_PROB))


def _solve_model(method, instance, model, opts, t0, iterations=1, certified=True):
    report = solve_bip(model, time_limit=opts.time_limit, engine=opts.engine, lp_backend=opts.lp_backend)
    elapsed = time.perf_counter() - t0
    if report.status == INFEASIBLE:
        return SolveReport(method, "infeasible", None, math.inf, elapsed, iterations, report.nodes,
                           certified=certified,
                           certificate={"reason": "model infeasible"} if certified else {})
    if report.status != OPTIMAL:
        sol = None if report.incumbent is None else verify(instance, report.incumbent)
        return SolveReport(method, "time_limit", sol, report.objective, elapsed, iterations, report.nodes)
    sol = verify(instance, report.incumbent)
    status = "optimal" if certified else "solved"
    return SolveReport(method, status, sol, report.objective, elapsed, iterations, report.nodes,
                       certified=certified and sol.feasible)


def solve(instance: Instance, method: str, options: Optional[SolveOptions] = None) -> SolveReport:
    """Run ``method`` on ``instance``; the returned solution is always re-verified exactly."""
    opts = options or SolveOptions()
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    t0 = time.perf_counter()
    notes = []
    if method == "sc":
        pre = presolve(instance, reduce=opts.reduce)
        if not _all_special(pre) or pre.infeasible_rows:
            msg = "instance has rows outside the special cases; using oa2 instead of sc"
            if not pre.infeasible_rows:
                warnings.warn(msg)
                notes.append(msg)
            method_run = "oa2"
        else:
            method_run = "sc"
    else:
        method_run = method
    try:
        if method_run in ("oa1", "oa2"):
            variant = "I" if method_run == "oa1" else "II"
            sol, trace = solve_oa(instance, variant, reduce=opts.reduce, time_limit=opts.time_limit,
                                  engine=opts.engine, lp_backend=opts.lp_backend,
                                  subset_budget=opts.subset_budget)
            rep = SolveReport(method, "optimal", sol, trace.nu[-1], time.perf_counter() - t0,
                              trace.n_iterations, sum(it.nodes for it in trace.iterations),
                              certified=True, trace=trace.to_json())
        elif method_run in ("full1", "full2", "sc"):
            variant = "I" if method_run == "full1" else "II"
            pre = presolve(instance, reduce=opts.reduce)
            model = build_full(instance, variant, pre, opts.subset_budget)
            rep = _solve_model(method, instance, model, opts, t0)
        elif method_run == "exact":
            sol = exhaustive_search(instance)
            rep = SolveReport(method, "optimal", sol, sol.objective, time.perf_counter() - t0, 1, 0, True)
        else:
            if not opts.n_scenarios:
                raise DomainError(f"method {method} needs the number of scenarios N")
            if method_run == "saa":
                scen = sample_scenarios(instance, opts.n_scenarios, opts.seed)
                alpha = instance.risks if opts.alpha is None else opts.alpha
                model = build_saa(instance, scen, alpha)
            else:
                scen = sample_scenarios(instance, opts.n_scenarios, opts.seed, is_tilts(instance, opts.u_estimate))
                model = build_is(instance, scen)
            rep = _solve_model(method, instance, model, opts, t0, certified=False)
            if rep.status == "infeasible":
                rep.notes.append("the sampled model is infeasible; this does not certify the problem infeasible")
    except InfeasibleError as exc:
        trace = getattr(exc.trace, "to_json", lambda: None)()
        iters = exc.trace.n_iterations if exc.trace is not None else 1
        rep = SolveReport(method, "infeasible", None, math.inf, time.perf_counter() - t0, iters,
                          certified=True, certificate=dict(exc.certificate), trace=trace)
    except SolveTimeout as exc:
        sol = None if exc.incumbent is None else verify(instance, exc.incumbent)
        trace = exc.trace.to_json() if exc.trace is not None else None
        iters = exc.trace.n_iterations if exc.trace is not None else 0
        rep = SolveReport(method, "time_limit", sol, math.nan, time.perf_counter() - t0, iters, trace=trace)
    rep.notes = notes + rep.notes
    return rep
