"""Instance-level oracles: exhaustive enumeration and a greedy primal cover."""

import math
from typing import Optional

import numpy as np

from ..errors import GuardError, InfeasibleError
from ..model import Instance, Solution, verify
from ..presolve import classify_rows
from ..probability import FEAS_TOL, tail_probability_dft, tail_probability_dft_batch

EXHAUSTIVE_MAX_N = 20


def _pattern_table(probs: np.ndarray, k: int) -> np.ndarray:
    """Cover probability for every subset of a row's support, indexed by bitmask."""
    s = probs.size
    codes = np.arange(1 << s)
    masks = (codes[:, None] >> np.arange(s)[None, :]) & 1
    return tail_probability_dft_batch(masks * probs[None, :], k)


def exhaustive_search(instance: Instance) -> Solution:
    """Cheapest feasible ``x`` by full enumeration (lexicographically smallest on ties)."""
    n = instance.n
    if n > EXHAUSTIVE_MAX_N:
        raise GuardError(f"exhaustive search is limited to n <= {EXHAUSTIVE_MAX_N}, got {n}")
    # code bit (n-1-j) holds x_j, so smaller codes are lexicographically smaller
    codes = np.arange(1 << n, dtype=np.int64)
    X = ((codes[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1).astype(np.int8)
    ok = np.ones(codes.size, dtype=bool)
    if instance.side.kind == "budget":
        ok &= X.sum(axis=1) <= instance.side.budget
    for i in range(instance.m):
        k = instance.demands[i]
        if k == 0:
            continue
        support = instance.support(i)
        table = _pattern_table(instance.row_probs(i), k)
        pattern = np.zeros(codes.size, dtype=np.int64)
        for b, col in enumerate(support):
            pattern |= X[:, col].astype(np.int64) << b
        ok &= table[pattern] >= 1.0 - instance.risks[i] - FEAS_TOL
    if not ok.any():
        cert = classify_rows(instance).certificate() or {"reason": "no selection satisfies every row"}
        raise InfeasibleError("no feasible selection exists", certificate=cert)
    cost = X[ok] @ np.asarray(instance.costs)
    best = cost.min()
    tied = np.flatnonzero(cost <= best + 1e-9 * max(1.0, abs(best)))
    x = X[ok][tied[0]]
    return verify(instance, x)


def _deficits(instance: Instance, x: np.ndarray, rows) -> dict:
    out = {}
    for i in rows:
        sel = [p for c, p in instance.rows[i] if x[c]]
        tail = tail_probability_dft(sel, instance.demands[i])
        out[i] = max(0.0, (1.0 - instance.risks[i] - FEAS_TOL) - tail)
    return out


def greedy_heuristic(instance: Instance) -> Optional[np.ndarray]:
    """Greedy cover by cost per unit of deficit reduction, then reverse deletion.

    A row with demand ``k >= 2`` gains nothing from its first column, so when
    no column reduces the deficit the step instead takes the column with the
    lowest cost per unit of success probability on deficient rows. Returns
    ``None`` when no column touches a deficient row or the budget side
    constraint would be exceeded.
    """
    n = instance.n
    x = np.zeros(n, dtype=int)
    col_rows = [[] for _ in range(n)]
    for i in range(instance.m):
        for c, _ in instance.rows[i]:
            col_rows[c].append(i)
    deficit = _deficits(instance, x, range(instance.m))
    costs = np.asarray(instance.costs, dtype=float)
    while any(d > 0 for d in deficit.values()):
        if instance.side.kind == "budget" and x.sum() >= instance.side.budget:
            return None
        best, best_score, best_def = None, math.inf, None
        fallback, fallback_score = None, math.inf
        for j in range(n):
            if x[j] or not col_rows[j]:
                continue
            touched = [i for i in col_rows[j] if deficit[i] > 0]
            if not touched:
                continue
            x[j] = 1
            new = _deficits(instance, x, touched)
            x[j] = 0
            gain = math.fsum(deficit[i] - new[i] for i in touched)
            mass = math.fsum(instance.dense[i, j] for i in touched)
            if costs[j] / mass < fallback_score:
                fallback, fallback_score = j, costs[j] / mass
            if gain <= 1e-15:
                continue
            score = costs[j] / gain
            if score < best_score:
                best, best_score, best_def = j, score, new
        if best is None:
            if fallback is None:
                return None
            best = fallback
            x[best] = 1
            deficit.update(_deficits(instance, x, col_rows[best]))
            continue
        x[best] = 1
        deficit.update(best_def)
    # drop redundant columns, most expensive first
    for j in sorted(np.flatnonzero(x), key=lambda j: (-costs[j], -j)):
        x[j] = 0
        if any(d > 0 for d in _deficits(instance, x, col_rows[j]).values()):
            x[j] = 1
    return x
