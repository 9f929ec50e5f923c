"""Experiment harness: method comparisons, ratio sweeps, bound convergence,
epsilon sensitivity, infeasibility detection and special-case timing.

Every cell derives its own seed from the study seed and the cell
coordinates, so cells can be run in any order with identical results.
"""

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import stats

from .errors import DomainError
from .methods import EXACT_METHODS, LABELS, SolveOptions, solve
from .model import generate_sparse
from .presolve import presolve
from .probability import bound_series

STUDIES = ("comparison", "convergence", "ratio_sweep", "epsilon_sweep", "infeasibility", "special_case")
FULL_N_GRID = (30, 50, 100, 150, 200, 250, 300, 350, 400, 450, 500, 550, 600)
HETEROGENEOUS_PROFILE = (0.1,) * 7 + (0.2,) * 6 + (0.3,) * 4 + (0.5,) * 3


@dataclass
class ExperimentSpec:
    study: str
    sizes: list = field(default_factory=lambda: [(30, 10)])  # (n, m) pairs
    eps: list = field(default_factory=lambda: [0.05])
    n_scenarios: list = field(default_factory=lambda: [200])
    seeds: list = field(default_factory=lambda: [0])
    replications: int = 1
    methods: list = field(default_factory=lambda: ["oa1", "oa2", "saa", "is"])
    time_limit: Optional[float] = 120.0
    profile: str = "feasible"
    alpha: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.study not in STUDIES:
            raise DomainError(f"unknown study {self.study!r}; choose from {', '.join(STUDIES)}")
        for name in ("sizes", "eps", "n_scenarios", "seeds", "methods"):
            if not getattr(self, name):
                raise DomainError(f"grid {name} must be nonempty")
        if self.replications < 1:
            raise DomainError("replications must be at least 1")


def default_spec(study: str) -> ExperimentSpec:
    """Desk-scale grids (n, m <= 60) for each study."""
    if study == "comparison":
        return ExperimentSpec(study, sizes=[(30, 10), (40, 20), (60, 20)], seeds=[0, 1],
                              methods=["oa1", "oa2", "saa", "is"])
    if study == "ratio_sweep":
        return ExperimentSpec(study, sizes=[(30, 10)], n_scenarios=[30, 50, 100, 200, 300, 400, 600],
                              replications=20, methods=["saa", "is"])
    if study == "epsilon_sweep":
        return ExperimentSpec(study, sizes=[(30, 10)], eps=[0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9],
                              replications=5, methods=["oa2"])
    if study == "infeasibility":
        return ExperimentSpec(study, sizes=[(30, 10), (40, 20)], seeds=[0, 1], profile="infeasibility",
                              methods=["oa1", "oa2", "saa", "is"])
    if study == "special_case":
        return ExperimentSpec(study, sizes=[(30, 10), (60, 30)], seeds=[0, 1], profile="special",
                              methods=["sc", "oa2", "saa", "is"])
    return ExperimentSpec(study)


def cell_seed(base: int, *coords) -> int:
    """Seed for one grid cell, a deterministic function of the coordinates."""
    key = [int(base)] + [int(round(c * 1_000_000)) if isinstance(c, float) else int(c) for c in coords]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


# ---------------------------------------------------------------------------
# result rows


@dataclass
class ComparisonRow:
    n: int
    m: int
    eps: float
    seed: int
    method: str
    status: str
    time: float
    iterations: int
    value: float  # true objective of the returned x; inf when nothing was returned
    model_value: float
    gap: float  # (value - opt) / opt; nan without a certified optimum
    verified: bool


@dataclass
class RatioResult:
    method: str
    N: int
    feasibility_ratio: float
    optimality_ratio: float
    mean_time: float
    ci_halfwidth: float
    replications: int


@dataclass
class ConvergenceRow:
    t: int
    bound: float
    exact: float


@dataclass
class EpsilonRow:
    eps: float
    replication: int
    method: str
    status: str
    value: float
    time: float
    iterations: int


@dataclass
class InfeasibilityRow:
    n: int
    m: int
    seed: int
    method: str
    status: str
    detected: bool
    time: float
    iterations: int


# ---------------------------------------------------------------------------
# studies


def _options(spec: ExperimentSpec, N=None, seed=0) -> SolveOptions:
    return SolveOptions(n_scenarios=N, alpha=spec.alpha, seed=seed, time_limit=spec.time_limit)


def _value(rep) -> float:
    return rep.solution.objective if rep.solution is not None else math.inf


def _gap(value: float, opt: Optional[float]) -> float:
    if opt is None or not math.isfinite(opt) or not math.isfinite(value) or opt == 0:
        return math.nan
    return (value - opt) / opt


def _certified_optimum(reports: dict, instance, spec) -> Optional[float]:
    for method in EXACT_METHODS:
        rep = reports.get(method)
        if rep is not None and rep.status == "optimal" and rep.certified:
            return rep.objective
    rep = solve(instance, "oa2", _options(spec))
    return rep.objective if rep.status == "optimal" else None


def run_comparison(spec: ExperimentSpec) -> List[ComparisonRow]:
    """One row per (size, eps, seed, method); gaps against a certified optimum."""
    rows = []
    N = spec.n_scenarios[0]
    for n, m in spec.sizes:
        for eps in spec.eps:
            for seed in spec.seeds:
                inst = generate_sparse(n, m, eps, seed=cell_seed(spec.seed, n, m, eps, seed), profile=spec.profile)
                reports = {}
                for method in spec.methods:
                    reports[method] = solve(inst, method, _options(spec, N, cell_seed(spec.seed, n, m, eps, seed, 1)))
                opt = _certified_optimum(reports, inst, spec)
                for method, rep in reports.items():
                    value = _value(rep)
                    rows.append(ComparisonRow(n, m, eps, seed, LABELS[method], rep.status, rep.time,
                                              rep.iterations, value, rep.model_objective,
                                              _gap(value, opt), rep.verified_feasible))
    return rows


def run_ratio_sweep(spec: ExperimentSpec) -> List[RatioResult]:
    """Feasibility and optimality ratios of the sampling methods over the N grid."""
    n, m = spec.sizes[0]
    eps, seed = spec.eps[0], spec.seeds[0]
    inst = generate_sparse(n, m, eps, seed=cell_seed(spec.seed, n, m, eps, seed), profile=spec.profile)
    base = solve(inst, "oa2", _options(spec))
    opt = base.objective if base.status == "optimal" else None
    out = []
    for method in spec.methods:
        for N in spec.n_scenarios:
            feas, optimal, times = [], [], []
            for r in range(spec.replications):
                rep = solve(inst, method, _options(spec, N, cell_seed(spec.seed, N, r)))
                ok = rep.verified_feasible
                feas.append(ok)
                optimal.append(ok and opt is not None and abs(rep.objective - opt) <= 1e-9)
                times.append(rep.time)
            R = spec.replications
            half = float(stats.t.ppf(0.975, R - 1) * np.std(times, ddof=1) / math.sqrt(R)) if R > 1 else math.nan
            out.append(RatioResult(LABELS[method], N, sum(feas) / R, sum(optimal) / R,
                                   float(np.mean(times)), half, R))
    return out


def run_convergence(n: int = 20, k: int = 3, probs=None, profile: str = "homogeneous", p: float = 0.15):
    """``(rows, first_t)``: every truncated bound and the first ``t`` within 1e-4 of exact."""
    if probs is None:
        if profile == "homogeneous":
            probs = [p] * n
        elif profile == "heterogeneous":
            probs = list(HETEROGENEOUS_PROFILE)
        else:
            raise DomainError(f"unknown profile {profile!r}")
    series = bound_series(probs, k)
    rows = [ConvergenceRow(t, g, series.exact) for t, g in enumerate(series.values)]
    return rows, series.first_within(1e-4)


def run_epsilon_sweep(spec: ExperimentSpec) -> List[EpsilonRow]:
    """Solve time and value over the risk grid, ``replications`` instances per level."""
    n, m = spec.sizes[0]
    rows = []
    for eps in spec.eps:
        for r in range(spec.replications):
            inst = generate_sparse(n, m, eps, seed=cell_seed(spec.seed, n, m, r), profile=spec.profile)
            for method in spec.methods:
                rep = solve(inst, method, _options(spec, spec.n_scenarios[0], cell_seed(spec.seed, eps, r)))
                rows.append(EpsilonRow(eps, r, LABELS[method], rep.status, _value(rep), rep.time, rep.iterations))
    return rows


def find_infeasible(n: int, m: int, eps: float, seed: int, profile: str = "infeasibility", tries: int = 200):
    """Redraw instances until one is certified infeasible; returns ``(instance, seed)``."""
    for attempt in range(tries):
        s = cell_seed(seed, attempt)
        inst = generate_sparse(n, m, eps, seed=s, profile=profile)
        if presolve(inst).infeasible_rows:
            return inst, s
        rep = solve(inst, "oa2", SolveOptions())
        if rep.status == "infeasible":
            return inst, s
    raise DomainError("no infeasible instance found; widen the profile or raise tries")


def run_infeasibility(spec: ExperimentSpec) -> List[InfeasibilityRow]:
    rows = []
    N = spec.n_scenarios[0]
    for n, m in spec.sizes:
        for seed in spec.seeds:
            inst, s = find_infeasible(n, m, spec.eps[0], cell_seed(spec.seed, n, m, seed), spec.profile)
            for method in spec.methods:
                rep = solve(inst, method, _options(spec, N, cell_seed(spec.seed, n, m, seed, 1)))
                rows.append(InfeasibilityRow(n, m, s, LABELS[method], rep.status, rep.status == "infeasible",
                                             rep.time, rep.iterations))
    return rows


def run_special_case(spec: ExperimentSpec) -> List[ComparisonRow]:
    """Comparison on equal-probability instances (defaults to the ``special`` profile)."""
    if spec.profile != "special":
        spec = dataclasses.replace(spec, profile="special")
    return run_comparison(spec)


RUNNERS = {
    "comparison": run_comparison,
    "ratio_sweep": run_ratio_sweep,
    "epsilon_sweep": run_epsilon_sweep,
    "infeasibility": run_infeasibility,
    "special_case": run_special_case,
}


def run(spec: ExperimentSpec) -> list:
    if spec.study == "convergence":
        rows = []
        for prof in ("homogeneous", "heterogeneous"):
            rows.extend(run_convergence(profile=prof)[0])
        return rows
    return RUNNERS[spec.study](spec)


# ---------------------------------------------------------------------------
# CSV


def write_csv(rows, path) -> None:
    """Write dataclass rows; floats are written with ``repr`` so they read back exactly."""
    if not rows:
        raise DomainError("nothing to write")
    names = [f.name for f in dataclasses.fields(rows[0])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in dataclasses.astuple(row)])


def _convert(text: str, typ):
    if typ in (float, "float"):
        return float(text)
    if typ in (int, "int"):
        return int(text)
    if typ in (bool, "bool"):
        return text == "True"
    return text


def read_csv(path, cls) -> list:
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [cls(**{k: _convert(v, types[k]) for k, v in rec.items()}) for rec in reader]


def format_table(rows) -> str:
    """Fixed-width text table of dataclass rows."""
    if not rows:
        return "(no rows)\n"
    names = [f.name for f in dataclasses.fields(rows[0])]

    def fmt(v):
        if isinstance(v, float):
            return "INF" if v == math.inf else ("-" if math.isnan(v) else f"{v:.4g}")
        return str(v)

    cells = [[fmt(v) for v in dataclasses.astuple(r)] for r in rows]
    widths = [max(len(n), *(len(c[i]) for c in cells)) for i, n in enumerate(names)]
    lines = ["  ".join(n.rjust(w) for n, w in zip(names, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"
