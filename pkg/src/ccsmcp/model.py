"""Problem data, solution verification, file I/O and random instance generators."""

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from .errors import DomainError, InstanceParseError
from .probability import FEAS_TOL, tail_probability_dft

PROFILES = {
    # name: (probability range, demand choices)
    "feasible": ((0.9, 1.0), (1, 2, 3)),
    "infeasibility": ((0.2, 0.6), (1, 2, 3)),
    "special": ((0.9, 1.0), (2, 3)),
}
MAX_SUPPORT = 12


@dataclass(frozen=True)
class SideConstraints:
    """Deterministic side constraints ``x in B``: none, or ``sum(x) <= budget``."""

    kind: str = "free"
    budget: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("free", "budget"):
            raise DomainError(f"unknown side-constraint kind {self.kind!r}")
        if self.kind == "budget" and (self.budget is None or self.budget < 0):
            raise DomainError("budget side constraint needs a nonnegative U")

    def admits(self, x) -> bool:
        return self.kind == "free" or int(np.sum(x)) <= self.budget

    def to_json(self) -> dict:
        if self.kind == "budget":
            return {"kind": "budget", "U": self.budget}
        return {"kind": "free"}


@dataclass(frozen=True)
class Instance:
    """A CC-SMCP instance with a row-sparse probability matrix.

    ``rows[i]`` is a tuple of ``(column, probability)`` pairs with strictly
    positive probabilities and increasing columns.
    """

    costs: tuple
    rows: tuple
    demands: tuple
    risks: tuple
    side: SideConstraints = field(default_factory=SideConstraints)

    def __post_init__(self):
        n = len(self.costs)
        if len(self.demands) != len(self.rows) or len(self.risks) != len(self.rows):
            raise DomainError("rows, demands and risks must have the same length")
        for i, row in enumerate(self.rows):
            cols = [c for c, _ in row]
            if any(c < 0 or c >= n for c in cols):
                raise DomainError(f"row {i}: column index out of range")
            if len(set(cols)) != len(cols):
                raise DomainError(f"row {i}: duplicate column")
            if any(not (0.0 <= p <= 1.0) for _, p in row):
                raise DomainError(f"row {i}: probabilities must lie in [0, 1]")
        for i, k in enumerate(self.demands):
            if k < 0:
                raise DomainError(f"row {i}: demand must be nonnegative")
        for i, e in enumerate(self.risks):
            if not 0.0 < e < 1.0:
                raise DomainError(f"row {i}: risk must lie in (0, 1), got {e}")
        if self.side.kind == "budget" and self.side.budget > n:
            raise DomainError("budget U cannot exceed n")

    @classmethod
    def build(cls, costs, rows, demands, risks, side=None) -> "Instance":
        """Normalise loose inputs: drop zero probabilities, sort columns."""
        norm_rows = []
        for row in rows:
            pairs = sorted((int(c), float(p)) for c, p in row if float(p) > 0.0)
            norm_rows.append(tuple(pairs))
        if np.isscalar(risks):
            risks = [risks] * len(norm_rows)
        return cls(
            costs=tuple(float(c) for c in costs),
            rows=tuple(norm_rows),
            demands=tuple(int(k) for k in demands),
            risks=tuple(float(e) for e in risks),
            side=side or SideConstraints(),
        )

    @classmethod
    def from_dense(cls, costs, probs, demands, risks, side=None) -> "Instance":
        P = np.atleast_2d(np.asarray(probs, dtype=float))
        rows = [[(j, P[i, j]) for j in range(P.shape[1])] for i in range(P.shape[0])]
        return cls.build(costs, rows, demands, risks, side)

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def m(self) -> int:
        return len(self.rows)

    def support(self, i: int) -> np.ndarray:
        return np.array([c for c, _ in self.rows[i]], dtype=int)

    def row_probs(self, i: int) -> np.ndarray:
        return np.array([p for _, p in self.rows[i]], dtype=float)

    @cached_property
    def dense(self) -> np.ndarray:
        P = np.zeros((self.m, self.n))
        for i, row in enumerate(self.rows):
            for c, p in row:
                P[i, c] = p
        return P

    def with_risks(self, risks) -> "Instance":
        if np.isscalar(risks):
            risks = [risks] * self.m
        return Instance(self.costs, self.rows, self.demands, tuple(float(e) for e in risks), self.side)

    def subset_rows(self, rows: Sequence[int]) -> "Instance":
        rows = list(rows)
        return Instance(
            self.costs,
            tuple(self.rows[i] for i in rows),
            tuple(self.demands[i] for i in rows),
            tuple(self.risks[i] for i in rows),
            self.side,
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "costs": list(self.costs),
            "rows": [[[c, p] for c, p in row] for row in self.rows],
            "demands": list(self.demands),
            "risks": list(self.risks),
            "side": self.side.to_json(),
        }


@dataclass(frozen=True)
class Solution:
    x: tuple
    objective: float
    per_item_prob: tuple
    feasible: bool
    violated: tuple = ()

    def to_json(self) -> dict:
        return {
            "x": list(self.x),
            "objective": self.objective,
            "per_item_prob": list(self.per_item_prob),
            "feasible": self.feasible,
        }


def row_cover_probability(instance: Instance, i: int, x) -> float:
    """Cover probability of row ``i`` under selection ``x`` (DFT kernel)."""
    x = np.asarray(x)
    sel = [p for c, p in instance.rows[i] if x[c]]
    return tail_probability_dft(sel, instance.demands[i])


def verify(instance: Instance, x) -> Solution:
    """Evaluate every chance constraint at a binary ``x``.

    A row passes when its cover probability is at least ``1 - eps_i`` up to
    ``FEAS_TOL``.
    """
    x = np.asarray(x).reshape(-1)
    if x.size != instance.n:
        raise DomainError(f"x has length {x.size}, instance has n={instance.n}")
    if np.any((x != 0) & (x != 1)):
        raise DomainError("x must be binary")
    xb = tuple(int(v) for v in x)
    probs = tuple(row_cover_probability(instance, i, x) for i in range(instance.m))
    violated = tuple(
        i for i, (q, e) in enumerate(zip(probs, instance.risks)) if q < 1.0 - e - FEAS_TOL
    )
    objective = math.fsum(c for c, v in zip(instance.costs, xb) if v)
    feasible = not violated and instance.side.admits(x)
    return Solution(x=xb, objective=objective, per_item_prob=probs, feasible=feasible, violated=violated)


# ---------------------------------------------------------------------------
# generators


def _row_rng(seed: int, row: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(row,)))


def generate_sparse(n: int, m: int, eps=0.05, seed: int = 0, profile: str = "feasible",
                    side: Optional[SideConstraints] = None, redraw: Optional[bool] = None) -> Instance:
    """Random sparse instance following the experimental protocol.

    Each row draws its demand, a support of ``n'`` columns with
    ``n'`` uniform on ``{k, ..., 12}``, and success probabilities uniform on
    the profile's range (one common probability per row for ``special``).
    Unit costs. Every row has its own seeded substream.

    With ``redraw`` (the default for the ``feasible`` and ``special``
    profiles) a row whose whole support cannot meet its chance constraint is
    drawn again from the same substream, up to 1000 times.
    """
    if profile not in PROFILES:
        raise DomainError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    if n < MAX_SUPPORT:
        raise DomainError(f"sparse profiles need n >= {MAX_SUPPORT}")
    if redraw is None:
        redraw = profile != "infeasibility"
    (lo, hi), ks = PROFILES[profile]
    risks = [float(eps)] * m if np.isscalar(eps) else [float(e) for e in eps]
    rows, demands = [], []
    for i in range(m):
        rng = _row_rng(seed, i)
        for _attempt in range(1000):
            k = int(rng.choice(ks))
            size = int(rng.integers(k, MAX_SUPPORT + 1))
            cols = np.sort(rng.choice(n, size=size, replace=False))
            if profile == "special":
                probs = np.full(size, rng.uniform(lo, hi))
            else:
                probs = rng.uniform(lo, hi, size=size)
            if not redraw or tail_probability_dft(probs, k) >= 1.0 - risks[i]:
                break
        rows.append(list(zip(cols.tolist(), probs.tolist())))
        demands.append(k)
    return Instance.build([1.0] * n, rows, demands, risks, side)


def generate_random(n: int, m: int, seed: int = 0, max_support: int = 6, p_range=(0.4, 1.0),
                    k_range=(1, 3), eps_range=(0.02, 0.3), budget: Optional[int] = None,
                    equal_prob_share: float = 0.25, integer_costs: bool = True,
                    satisfiable_rows: bool = True) -> Instance:
    """Small mixed instances for exactness checks (any n, random costs and risks).

    With ``satisfiable_rows`` a row is redrawn (up to 50 times) until selecting
    its whole support meets its chance constraint, so most instances are
    feasible when there is no budget.
    """
    rng = np.random.default_rng(seed)
    costs = rng.integers(1, 6, size=n).astype(float) if integer_costs else rng.uniform(0.5, 3.0, n)
    rows, demands, risks = [], [], []
    for _ in range(m):
        for _attempt in range(50):
            k = int(rng.integers(k_range[0], k_range[1] + 1))
            size = int(rng.integers(max(k, 1), max(k, min(max_support, n)) + 1))
            cols = rng.choice(n, size=size, replace=False)
            if rng.random() < equal_prob_share:
                probs = np.full(size, round(float(rng.uniform(*p_range)), 3))
            else:
                probs = rng.uniform(*p_range, size=size)
            eps = float(rng.uniform(*eps_range))
            if not satisfiable_rows or tail_probability_dft(probs, k) >= 1.0 - eps:
                break
        rows.append(list(zip(cols.tolist(), probs.tolist())))
        demands.append(k)
        risks.append(eps)
    side = SideConstraints("budget", budget) if budget is not None else None
    return Instance.build(costs, rows, demands, risks, side)


# ---------------------------------------------------------------------------
# file I/O


def _schema(name: str) -> dict:
    text = resources.files("ccsmcp").joinpath("schemas", name).read_text()
    return json.loads(text)


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _validate(doc, schema_name, path):
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InstanceParseError(f"{path}: field {where}: {exc.message}") from exc


def instance_from_json(doc: dict, path="<memory>") -> Instance:
    _validate(doc, "instance.schema.json", path)
    n, m = doc["n"], doc["m"]
    for name in ("costs",):
        if len(doc[name]) != n:
            raise InstanceParseError(f"{path}: field {name}: expected {n} entries, got {len(doc[name])}")
    for name in ("rows", "demands", "risks"):
        if len(doc[name]) != m:
            raise InstanceParseError(f"{path}: field {name}: expected {m} entries, got {len(doc[name])}")
    side_doc = doc.get("side", {"kind": "free"})
    try:
        side = SideConstraints(side_doc["kind"], side_doc.get("U"))
        return Instance(
            costs=tuple(float(c) for c in doc["costs"]),
            rows=tuple(
                tuple((int(c), float(p)) for c, p in sorted(row) if float(p) > 0.0) for row in doc["rows"]
            ),
            demands=tuple(int(k) for k in doc["demands"]),
            risks=tuple(float(e) for e in doc["risks"]),
            side=side,
        )
    except DomainError as exc:
        raise InstanceParseError(f"{path}: {exc}") from exc


def read_instance(path) -> Instance:
    return instance_from_json(_load_json(path), path)


def write_instance(instance: Instance, path) -> None:
    # repr of a float is the shortest string that reads back to the same bits
    Path(path).write_text(json.dumps(instance.to_json(), indent=1) + "\n")


def write_solution(solution: Solution, path) -> None:
    Path(path).write_text(json.dumps(solution.to_json(), indent=1) + "\n")


def read_solution(path) -> dict:
    doc = _load_json(path)
    _validate(doc, "solution.schema.json", path)
    return doc
