"""Deterministic 0-1 linear models for CC-SMCP.

Every builder returns a :class:`BipModel` whose first ``n`` variables are the
selection variables ``x_j``. Product terms ``prod_{j in T} x_j`` are replaced
by auxiliary variables ``y_T`` (one per distinct subset, shared across
rows) and tied to ``x`` by one of two linearizations:

* variant ``"I"``: ``sum_T x - y <= |T| - 1`` and ``-sum_T x + |T| y <= 0``
  with ``y`` binary;
* variant ``"II"``: ``sum_T x - y <= |T| - 1`` and ``y <= x_j`` for each
  ``j in T``, with ``y`` continuous in ``[0, 1]``.

Scenario models add indicator variables ``z_i(w)`` that may be 1 only when
row ``i`` is covered ``k_i`` times in scenario ``w``.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, InfeasibleError, SubsetBudgetError
from .model import Instance
from .presolve import (EQUAL_PROB, GENERAL, LOG_TRANSFORM, TRIVIAL,
                       PresolveResult, classify_rows)
from .probability import FEAS_TOL

DEFAULT_SUBSET_BUDGET = 200_000
VARIANTS = ("I", "II")
SIDE_ROW = "budget"


@dataclass
class Constraint:
    coeffs: Dict[int, float]
    sense: str  # "<=", ">=" or "="
    rhs: float
    name: str = ""

    def activity(self, values) -> float:
        return math.fsum(a * values[j] for j, a in self.coeffs.items())

    def violation(self, values) -> float:
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class BipModel:
    """A 0-1 linear program ``min c.v`` over variables bounded in ``[0, 1]``.

    ``products`` maps an auxiliary variable to the column subset it stands
    for; ``indicators`` maps a scenario variable ``z`` to the
    ``(columns, demand)`` of the coverage it certifies. Both kinds of
    variable are determined by ``x`` (see :meth:`complete`).
    """

    n: int
    var_names: List[str] = field(default_factory=list)
    objective: List[float] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    binaries: set = field(default_factory=set)
    products: Dict[int, frozenset] = field(default_factory=dict)
    indicators: Dict[int, tuple] = field(default_factory=dict)
    instance: Optional[Instance] = None
    kind: str = ""
    # True when the set of feasible x is closed under adding columns
    up_closed: bool = False
    _subset_index: Dict[frozenset, int] = field(default_factory=dict, repr=False)

    @classmethod
    def for_instance(cls, instance: Instance, kind: str) -> "BipModel":
        model = cls(n=instance.n, instance=instance, kind=kind)
        for j, c in enumerate(instance.costs):
            model.add_var(f"x{j}", cost=c, binary=True)
        if instance.side.kind == "budget":
            model.add_constraint({j: 1.0 for j in range(instance.n)}, "<=", instance.side.budget, SIDE_ROW)
        return model

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    def add_var(self, name: str, cost: float = 0.0, binary: bool = True) -> int:
        idx = len(self.var_names)
        self.var_names.append(name)
        self.objective.append(float(cost))
        if binary:
            self.binaries.add(idx)
        return idx

    def add_constraint(self, coeffs, sense: str, rhs: float, name: str = "") -> Constraint:
        if sense not in ("<=", ">=", "="):
            raise DomainError(f"unknown constraint sense {sense!r}")
        con = Constraint({int(j): float(a) for j, a in coeffs.items() if a != 0.0}, sense, float(rhs), name)
        self.constraints.append(con)
        return con

    @property
    def determined(self) -> set:
        """Variables whose value is fixed by ``x`` once ``x`` is integral."""
        return set(self.products) | set(self.indicators)

    def complete(self, x) -> np.ndarray:
        """Extend a binary ``x`` to all variables (products, indicators)."""
        v = np.zeros(self.num_vars)
        x = np.asarray(x, dtype=float)[: self.n]
        v[: self.n] = np.round(x)
        for j in range(self.n, self.num_vars):
            if j in self.products:
                v[j] = float(all(v[c] == 1.0 for c in self.products[j]))
            elif j in self.indicators:
                cols, k = self.indicators[j]
                v[j] = float(sum(v[c] for c in cols) >= k)
        return v

    def max_violation(self, values) -> float:
        return max((c.violation(values) for c in self.constraints), default=0.0)

    def is_feasible(self, values, tol: float = FEAS_TOL) -> bool:
        values = np.asarray(values, dtype=float)
        if np.any(values < -tol) or np.any(values > 1.0 + tol):
            return False
        return all(c.violation(values) <= tol for c in self.constraints)

    def covering_feasible(self, values, tol: float = FEAS_TOL) -> bool:
        """Feasibility ignoring the budget side row."""
        return all(c.violation(values) <= tol for c in self.constraints if c.name != SIDE_ROW)

    def objective_value(self, values) -> float:
        return math.fsum(c * v for c, v in zip(self.objective, values) if c)

    def to_arrays(self):
        """``(c, A, senses, rhs)`` with ``A`` a CSR matrix."""
        rows, cols, vals = [], [], []
        for r, con in enumerate(self.constraints):
            for j, a in con.coeffs.items():
                rows.append(r)
                cols.append(j)
                vals.append(a)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), self.num_vars))
        senses = np.array([c.sense for c in self.constraints], dtype=object)
        rhs = np.array([c.rhs for c in self.constraints], dtype=float)
        return np.asarray(self.objective, dtype=float), A, senses, rhs

    def canonical_rows(self) -> list:
        """Constraints as sorted ``(sense, rhs, terms)`` tuples keyed by name."""
        out = []
        for con in self.constraints:
            terms = tuple(sorted((self.var_names[j], a) for j, a in con.coeffs.items()))
            out.append((con.sense, con.rhs, terms))
        return sorted(out)


@dataclass
class TruncationState:
    """Truncation order per general row.

    Orders are odd, except that an order equal to the row's support size
    (where the bound is exact) may be even. ``history`` keeps the orders
    used in earlier iterations so their inequalities can be retained.
    """

    t: Dict[int, int]
    history: Dict[int, tuple] = field(default_factory=dict)

    @classmethod
    def initial(cls, rows: Sequence[int]) -> "TruncationState":
        return cls(t={i: 1 for i in rows})

    def advanced(self, rows: Sequence[int], caps: Dict[int, int]) -> "TruncationState":
        t = dict(self.t)
        history = {i: tuple(v) for i, v in self.history.items()}
        for i in rows:
            history[i] = history.get(i, ()) + (t[i],)
            t[i] = min(t[i] + 2, caps[i])
        return TruncationState(t=t, history=history)


def linearize_product(model: BipModel, T, variant: str = "II") -> Optional[int]:
    """Variable standing for ``prod_{j in T} x_j``; ``None`` for the empty product."""
    T = frozenset(int(j) for j in T)
    if not T:
        return None
    if len(T) == 1:
        return next(iter(T))
    if T in model._subset_index:
        return model._subset_index[T]
    if variant not in VARIANTS:
        raise DomainError(f"variant must be one of {VARIANTS}")
    cols = sorted(T)
    name = "y_" + "_".join(str(j) for j in cols)
    y = model.add_var(name, binary=(variant == "I"))
    model.products[y] = T
    model._subset_index[T] = y
    s = len(cols)
    coeffs = {j: 1.0 for j in cols}
    coeffs[y] = -1.0
    model.add_constraint(coeffs, "<=", s - 1, f"lin_{name}_a")
    if variant == "I":
        coeffs = {j: -1.0 for j in cols}
        coeffs[y] = float(s)
        model.add_constraint(coeffs, "<=", 0.0, f"lin_{name}_b")
    else:
        for j in cols:
            model.add_constraint({y: 1.0, j: -1.0}, "<=", 0.0, f"lin_{name}_{j}")
    return y


def _subset_product(probs: Dict[int, float], T) -> float:
    return math.exp(math.fsum(math.log(probs[j]) for j in T))


def _count_subsets(size: int, lo: int, hi: int) -> int:
    return sum(math.comb(size, ell) for ell in range(max(lo, 2), min(hi, size) + 1))


def _resolve_kinds(instance: Instance, presolve: Optional[PresolveResult]) -> PresolveResult:
    pre = presolve if presolve is not None else classify_rows(instance)
    missing = [i for i in pre.kept if i not in pre.kinds]
    if missing:
        pre = classify_rows(instance, pre)
    bad = pre.infeasible_rows
    if bad:
        cert = pre.certificate()
        raise InfeasibleError(
            f"row {cert['row']} cannot reach its cover target (max probability {cert['max_prob']:.6g})",
            certificate=cert,
        )
    return pre


def _emit_special(model: BipModel, instance: Instance, i: int, kind) -> bool:
    """Add the compact form of a special row; False if the row is general."""
    if kind.kind == TRIVIAL:
        return True
    if kind.kind == LOG_TRANSFORM:
        log_eps = math.log(instance.risks[i])
        coeffs = {}
        for j, p in instance.rows[i]:
            # a sure column satisfies the row on its own
            coeffs[j] = log_eps if p >= 1.0 else math.log1p(-p)
        model.add_constraint(coeffs, "<=", log_eps, f"logcover_{i}")
        return True
    if kind.kind == EQUAL_PROB:
        model.add_constraint({j: 1.0 for j, _ in instance.rows[i]}, ">=", kind.dbar, f"count_{i}")
        return True
    return False


def build_full(instance: Instance, variant: str = "II", presolve: Optional[PresolveResult] = None,
               subset_budget: int = DEFAULT_SUBSET_BUDGET) -> BipModel:
    """Exact linearized model: one inclusion-exclusion row per general item.

    ``sum_{l=k}^{|J|} (-1)^(l-k) C(l-1, l-k) sum_{|T|=l} (prod_T p) y_T >= 1 - eps``
    over subsets ``T`` of the row support ``J``. Special rows use their
    compact forms. Without ``presolve`` all rows are classified (no
    dominance reduction).
    """
    pre = _resolve_kinds(instance, presolve)
    general = pre.rows_of_kind(GENERAL)
    needed = sum(_count_subsets(len(instance.rows[i]), instance.demands[i], len(instance.rows[i])) for i in general)
    if needed > subset_budget:
        raise SubsetBudgetError(needed, subset_budget)
    model = BipModel.for_instance(instance, f"full-{variant}")
    model.up_closed = True
    for i in pre.kept:
        if _emit_special(model, instance, i, pre.kinds[i]):
            continue
        k, eps = instance.demands[i], instance.risks[i]
        probs = dict(instance.rows[i])
        support = sorted(probs)
        coeffs: Dict[int, float] = {}
        for ell in range(k, len(support) + 1):
            weight = (-1) ** (ell - k) * math.comb(ell - 1, ell - k)
            for T in itertools.combinations(support, ell):
                v = linearize_product(model, T, variant)
                coeffs[v] = coeffs.get(v, 0.0) + weight * _subset_product(probs, T)
        model.add_constraint(coeffs, ">=", 1.0 - eps, f"cover_{i}")
    return model


def _truncated_row(model, instance, i, t, variant, name):
    k, eps = instance.demands[i], instance.risks[i]
    probs = dict(instance.rows[i])
    support = sorted(probs)
    top = min(t + k - 1, len(support))
    coeffs: Dict[int, float] = {}
    const = 0.0
    for ell in range(0, top + 1):
        weight = sum((-1) ** (ell - d) * math.comb(ell, d) for d in range(max(0, ell - t), min(k - 1, ell) + 1))
        if weight == 0:
            continue
        if ell == 0:
            const += weight
            continue
        for T in itertools.combinations(support, ell):
            v = linearize_product(model, T, variant)
            coeffs[v] = coeffs.get(v, 0.0) + weight * _subset_product(probs, T)
    model.add_constraint(coeffs, "<=", eps - const, name)


def build_oa_relaxation(instance: Instance, state: TruncationState, variant: str = "II",
                        presolve: Optional[PresolveResult] = None,
                        subset_budget: int = DEFAULT_SUBSET_BUDGET) -> BipModel:
    """Relaxation with ``g_{t_i}(x) <= eps_i`` for each general row.

    ``g_t`` for odd ``t`` underestimates ``P[count <= k-1]``, so the model's
    feasible set contains the true one. Inequalities for the orders in
    ``state.history`` are kept as well; each is itself valid, which makes
    successive relaxations nested.
    """
    pre = _resolve_kinds(instance, presolve)
    general = pre.rows_of_kind(GENERAL)
    needed = sum(
        _count_subsets(len(instance.rows[i]), 1, state.t[i] + instance.demands[i] - 1) for i in general
    )
    if needed > subset_budget:
        raise SubsetBudgetError(needed, subset_budget)
    model = BipModel.for_instance(instance, f"oa-{variant}")
    for i in pre.kept:
        if _emit_special(model, instance, i, pre.kinds[i]):
            continue
        for t in state.history.get(i, ()):
            _truncated_row(model, instance, i, t, variant, f"trunc_{i}_t{t}")
        _truncated_row(model, instance, i, state.t[i], variant, f"trunc_{i}_t{state.t[i]}")
    return model


def _coverage_rows(model: BipModel, instance: Instance, scenarios) -> Dict[int, list]:
    """``A_i(w) x >= k_i z_i(w)`` for every row and scenario; returns z ids per row."""
    z_ids = {}
    for i in range(instance.m):
        k = instance.demands[i]
        if k == 0:
            continue
        support = instance.support(i)
        draws = scenarios.row_draws(i)
        ids = []
        for w in range(scenarios.N):
            cols = tuple(int(c) for c in support[draws[w]])
            z = model.add_var(f"z_{i}_{w}", binary=True)
            model.indicators[z] = (cols, k)
            coeffs = {c: 1.0 for c in cols}
            coeffs[z] = -float(k)
            model.add_constraint(coeffs, ">=", 0.0, f"scen_{i}_{w}")
            ids.append(z)
        z_ids[i] = ids
    return z_ids


def build_saa(instance: Instance, scenarios, alpha=None) -> BipModel:
    """Big-M-free SAA model: ``sum_w z_i(w) >= (1 - alpha_i) N`` per row."""
    if scenarios.N < 1:
        raise DomainError("at least one scenario is required")
    if scenarios.m != instance.m or scenarios.n != instance.n:
        raise DomainError("scenario dimensions do not match the instance")
    alpha = instance.risks if alpha is None else alpha
    if np.isscalar(alpha):
        alpha = [alpha] * instance.m
    model = BipModel.for_instance(instance, "saa")
    model.up_closed = True
    z_ids = _coverage_rows(model, instance, scenarios)
    N = scenarios.N
    for i, ids in z_ids.items():
        model.add_constraint({z: 1.0 for z in ids}, ">=", N - N * float(alpha[i]), f"card_{i}")
    return model


def build_is(instance: Instance, scenarios, eps=None) -> BipModel:
    """Importance-sampling model: ``sum_w L_i(w) (1 - z_i(w)) <= N eps_i`` per row."""
    if scenarios.likelihoods is None:
        raise DomainError("importance-sampling model needs per-scenario likelihood weights")
    if scenarios.m != instance.m or scenarios.n != instance.n:
        raise DomainError("scenario dimensions do not match the instance")
    eps = instance.risks if eps is None else eps
    if np.isscalar(eps):
        eps = [eps] * instance.m
    model = BipModel.for_instance(instance, "is")
    model.up_closed = True
    z_ids = _coverage_rows(model, instance, scenarios)
    N = scenarios.N
    L = scenarios.likelihoods
    for i, ids in z_ids.items():
        weights = [float(L[w, i]) for w in range(N)]
        coeffs = {z: wt for z, wt in zip(ids, weights)}
        model.add_constraint(coeffs, ">=", math.fsum(weights) - N * float(eps[i]), f"card_{i}")
    return model
