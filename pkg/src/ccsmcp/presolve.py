"""Chance-constraint reduction by vector dominance, and special-row detection.

Row ``i`` is encoded as ``v_i = (p_i1, ..., p_in, -k_i, eps_i)``. If
``v_a <= v_b`` componentwise then every ``x`` that satisfies row ``a`` also
satisfies row ``b``, so only the minimal elements of ``{v_i}`` need to be
kept.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import Instance
from .probability import FEAS_TOL, min_cover_count, tail_probability_dft

EQUAL_PROB_TOL = 1e-12

GENERAL = "general"
LOG_TRANSFORM = "log_transform"
EQUAL_PROB = "equal_prob"
INFEASIBLE = "infeasible"
TRIVIAL = "trivial"


@dataclass(frozen=True)
class RowKind:
    kind: str
    p: Optional[float] = None
    dbar: Optional[int] = None
    max_prob: Optional[float] = None


@dataclass
class PresolveResult:
    kept: tuple
    dropped: dict = field(default_factory=dict)  # dropped row -> kept witness
    kinds: dict = field(default_factory=dict)  # kept row -> RowKind

    def kind(self, i: int) -> str:
        return self.kinds[i].kind

    def rows_of_kind(self, kind: str) -> list:
        return [i for i in self.kept if i in self.kinds and self.kinds[i].kind == kind]

    @property
    def infeasible_rows(self) -> list:
        return self.rows_of_kind(INFEASIBLE)

    def certificate(self) -> Optional[dict]:
        bad = self.infeasible_rows
        if not bad:
            return None
        i = bad[0]
        return {"row": i, "max_prob": self.kinds[i].max_prob}

    def table(self) -> list:
        """One ``(row, status, kind, detail)`` tuple per row, in row order."""
        out = []
        for i in sorted(set(self.kept) | set(self.dropped)):
            if i in self.dropped:
                out.append((i, "dropped", "-", f"dominated by row {self.dropped[i]}"))
                continue
            rk = self.kinds.get(i)
            if rk is None:
                out.append((i, "kept", "-", ""))
            elif rk.kind == EQUAL_PROB:
                out.append((i, "kept", rk.kind, f"p={rk.p:.6g} dbar={rk.dbar}"))
            elif rk.kind == INFEASIBLE:
                out.append((i, "kept", rk.kind, f"max_prob={rk.max_prob:.6g}"))
            else:
                out.append((i, "kept", rk.kind, ""))
        return out


def row_vectors(instance: Instance) -> np.ndarray:
    V = np.empty((instance.m, instance.n + 2))
    V[:, : instance.n] = instance.dense
    V[:, instance.n] = -np.asarray(instance.demands, dtype=float)
    V[:, instance.n + 1] = np.asarray(instance.risks, dtype=float)
    return V


def dominance_reduce(instance: Instance) -> PresolveResult:
    """Keep the minimal rows of the dominance order (lowest index among equals)."""
    V = row_vectors(instance)
    m = instance.m
    idx = np.arange(m)
    dominated = np.zeros(m, dtype=bool)
    for i in range(m):
        le = np.all(V <= V[i], axis=1)
        strict = np.any(V < V[i], axis=1)
        cand = le & (strict | (idx < i))
        cand[i] = False
        dominated[i] = cand.any()
    kept = tuple(int(i) for i in idx[~dominated])
    dropped = {}
    K = V[list(kept)]
    for i in idx[dominated]:
        witness = np.nonzero(np.all(K <= V[i], axis=1))[0]
        dropped[int(i)] = kept[int(witness[0])]
    return PresolveResult(kept=kept, dropped=dropped)


def classify_row(instance: Instance, i: int) -> RowKind:
    k, eps = instance.demands[i], instance.risks[i]
    if k == 0:
        return RowKind(TRIVIAL)
    probs = instance.row_probs(i)
    max_prob = tail_probability_dft(probs, k)
    if max_prob < 1.0 - eps - FEAS_TOL:
        return RowKind(INFEASIBLE, max_prob=max_prob)
    if k == 1:
        return RowKind(LOG_TRANSFORM, max_prob=max_prob)
    if probs.max() - probs.min() <= EQUAL_PROB_TOL:
        p = float(probs[0])
        dbar = min_cover_count(k, p, eps, probs.size)
        if dbar is None:
            return RowKind(INFEASIBLE, max_prob=max_prob)
        return RowKind(EQUAL_PROB, p=p, dbar=dbar, max_prob=max_prob)
    return RowKind(GENERAL, max_prob=max_prob)


def classify_rows(instance: Instance, kept: Optional[PresolveResult] = None) -> PresolveResult:
    """Attach a kind to every kept row (all rows when ``kept`` is None)."""
    if kept is None:
        kept = PresolveResult(kept=tuple(range(instance.m)))
    kinds = {i: classify_row(instance, i) for i in kept.kept}
    return PresolveResult(kept=kept.kept, dropped=dict(kept.dropped), kinds=kinds)


def presolve(instance: Instance, reduce: bool = True) -> PresolveResult:
    """Dominance reduction (optional) followed by row classification."""
    base = dominance_reduce(instance) if reduce else None
    return classify_rows(instance, base)


def general_only(instance: Instance, base: Optional[PresolveResult] = None) -> PresolveResult:
    """Treat every kept row as general (no compact special forms).

    Trivial and infeasible classifications from ``base`` are kept; without
    ``base`` every row is kept and classified afresh.
    """
    base = classify_rows(instance) if base is None else base
    kinds = {}
    for i in base.kept:
        rk = base.kinds.get(i) or classify_row(instance, i)
        kinds[i] = rk if rk.kind in (TRIVIAL, INFEASIBLE) else RowKind(GENERAL, max_prob=rk.max_prob)
    return PresolveResult(kept=base.kept, dropped=dict(base.dropped), kinds=kinds)
