"""Scenario generation, SAA and importance-sampling estimators, sample sizes.

Scenarios are stored per row over the row's support: ``row_draws(i)`` is an
``N x |J_i|`` boolean array. Each row draws from its own seeded substream, so
adding rows or changing ``N`` for one row never shifts another row's draws.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import DomainError
from .model import Instance
from .probability import regularized_incomplete_beta

TILT_TOL = 1e-13
TILT_MAX_ITER = 400


# ---------------------------------------------------------------------------
# tilting


@dataclass(frozen=True)
class IsParameters:
    """Tilted success probabilities ``p_hat = e^-l p / (e^-l p + 1 - p)`` for one row."""

    lambda_star: float
    p_hat: np.ndarray
    target: float
    u: int
    identity: bool = False


def default_u(n_support: int, k: int) -> int:
    return math.ceil((n_support + k - 1) / 2)


def tilt(probs, lam: float) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    s = math.exp(-lam)
    return s * p / (s * p + 1.0 - p)


def eta(probs, lam: float) -> float:
    """Expected count under the tilted law."""
    return math.fsum(tilt(probs, lam))


def is_parameters(probs, k: int, u: Optional[int] = None) -> IsParameters:
    """Solve ``eta(lambda) = n' - u + k - 1`` by bisection.

    ``eta`` is continuous and decreasing from ``sum(p)`` towards the number of
    sure columns, so a root exists exactly when the target lies strictly
    between those; otherwise the identity tilt is returned.
    """
    p = np.asarray(probs, dtype=float)
    n = p.size
    u = default_u(n, k) if u is None else int(u)
    target = float(n - u + k - 1)
    floor = float(np.sum(p >= 1.0))
    if not (floor < target < math.fsum(p)):
        return IsParameters(0.0, p.copy(), target, u, identity=True)
    lo, hi = 0.0, 1.0
    while eta(p, hi) > target:
        lo, hi = hi, 2.0 * hi
    for _ in range(TILT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        val = eta(p, mid)
        if abs(val - target) <= TILT_TOL or mid in (lo, hi):
            break
        if val > target:
            lo = mid
        else:
            hi = mid
    return IsParameters(mid, tilt(p, mid), target, u)


# ---------------------------------------------------------------------------
# likelihood ratios


def _check_tilt(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape != q.shape:
        raise DomainError("nominal and tilted probabilities differ in length")
    bad = ((q <= 0.0) | (q >= 1.0)) & (p != q)
    if bad.any():
        raise DomainError("degenerate tilt: a tilted probability is 0 or 1 where the nominal one is not")


def log_likelihood_ratio(probs, p_hat, draws) -> np.ndarray:
    """``log L`` for each row of ``draws`` (entries with ``p == p_hat`` contribute 0)."""
    p = np.asarray(probs, dtype=float)
    q = np.asarray(p_hat, dtype=float)
    _check_tilt(p, q)
    a = np.atleast_2d(np.asarray(draws, dtype=bool))
    moved = p != q
    if not moved.any():
        return np.zeros(a.shape[0])
    pm, qm = p[moved], q[moved]
    log_hit = np.log(pm) - np.log(qm)
    log_miss = np.log1p(-pm) - np.log1p(-qm)
    am = a[:, moved]
    terms = np.where(am, log_hit[None, :], log_miss[None, :])
    return np.array([math.fsum(r) for r in terms])


def likelihood_ratio(probs, p_hat, draws) -> np.ndarray:
    return np.exp(log_likelihood_ratio(probs, p_hat, draws))


# ---------------------------------------------------------------------------
# scenarios


def _row_rng(seed: int, row: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(row,)))


@dataclass
class ScenarioSet:
    """``N`` joint draws of the random coverage matrix, stored per row."""

    N: int
    n: int
    supports: list  # per row, column indices
    draws: list  # per row, N x |J_i| boolean
    likelihoods: Optional[np.ndarray] = None  # N x m
    seed: int = 0

    @property
    def m(self) -> int:
        return len(self.supports)

    def row_draws(self, i: int) -> np.ndarray:
        return self.draws[i]

    def matrix(self, w: int) -> np.ndarray:
        """Dense ``m x n`` 0-1 matrix of scenario ``w``."""
        A = np.zeros((self.m, self.n), dtype=np.int8)
        for i, cols in enumerate(self.supports):
            A[i, cols] = self.draws[i][w]
        return A

    def to_text(self) -> str:
        """Audit format: one header, then per row its support and one bit string per scenario."""
        lines = [f"scenarios N={self.N} n={self.n} m={self.m} seed={self.seed} "
                 f"weighted={int(self.likelihoods is not None)}"]
        for i, cols in enumerate(self.supports):
            lines.append(f"row {i} " + " ".join(str(int(c)) for c in cols))
            for w in range(self.N):
                bits = "".join("1" if b else "0" for b in self.draws[i][w])
                if self.likelihoods is not None:
                    lines.append(f"{bits or '-'} {float(self.likelihoods[w, i])!r}")
                else:
                    lines.append(bits or "-")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ScenarioSet":
        lines = text.splitlines()
        head = dict(tok.split("=") for tok in lines[0].split()[1:])
        N, n, m, seed = int(head["N"]), int(head["n"]), int(head["m"]), int(head["seed"])
        weighted = head["weighted"] == "1"
        supports, draws = [], []
        L = np.zeros((N, m)) if weighted else None
        pos = 1
        for i in range(m):
            supports.append(np.array([int(c) for c in lines[pos].split()[2:]], dtype=int))
            pos += 1
            rows = []
            for w in range(N):
                parts = lines[pos].split()
                pos += 1
                bits = "" if parts[0] == "-" else parts[0]
                rows.append([b == "1" for b in bits])
                if weighted:
                    L[w, i] = float(parts[1])
            draws.append(np.array(rows, dtype=bool).reshape(N, supports[-1].size))
        return cls(N, n, supports, draws, L, seed)


def sample_scenarios(instance: Instance, N: int, seed: int = 0,
                     tilts: Optional[Dict[int, np.ndarray]] = None) -> ScenarioSet:
    """Independent Bernoulli draws on every row support.

    With ``tilts`` (row -> tilted probabilities on the support) rows are drawn
    from the tilted law and the set carries likelihood ratios; rows absent
    from ``tilts`` use the nominal law and weight 1.
    """
    if N < 1:
        raise DomainError("N must be at least 1")
    supports, draws = [], []
    L = np.ones((N, instance.m)) if tilts is not None else None
    for i in range(instance.m):
        p = instance.row_probs(i)
        q = p if tilts is None or i not in tilts else np.asarray(tilts[i], dtype=float)
        if tilts is not None:
            _check_tilt(p, q)
        a = _row_rng(seed, i).random((N, p.size)) < q[None, :]
        supports.append(instance.support(i))
        draws.append(a)
        if tilts is not None and i in tilts:
            L[:, i] = likelihood_ratio(p, q, a)
    return ScenarioSet(N, instance.n, supports, draws, L, seed)


def is_tilts(instance: Instance, u: Optional[Sequence] = None) -> Dict[int, np.ndarray]:
    """Tilted support probabilities for every row with positive demand.

    ``u`` is an optional per-row override of the assumed selection count.
    """
    out = {}
    for i in range(instance.m):
        k = instance.demands[i]
        if k == 0:
            continue
        ui = None if u is None else u[i]
        out[i] = is_parameters(instance.row_probs(i), k, ui).p_hat
    return out


# ---------------------------------------------------------------------------
# estimators


def estimate_q(draws, k: int, x, weights=None) -> float:
    """Estimate of the failure probability ``P[a.x < k]`` from row draws.

    ``draws`` is ``N x s`` over a row support and ``x`` the selection on that
    support; ``weights`` are likelihood ratios (None for plain SAA).
    """
    a = np.atleast_2d(np.asarray(draws, dtype=bool))
    x = np.asarray(x, dtype=bool)
    fail = (a[:, x].sum(axis=1) < k).astype(float)
    if weights is not None:
        fail = fail * np.asarray(weights, dtype=float)
    return math.fsum(fail) / a.shape[0]


def sample_row(probs, N: int, rng: np.random.Generator, p_hat=None):
    """``(draws, weights)`` for one row; weights are None without a tilt."""
    p = np.asarray(probs, dtype=float)
    q = p if p_hat is None else np.asarray(p_hat, dtype=float)
    a = rng.random((N, p.size)) < q[None, :]
    return a, (None if p_hat is None else likelihood_ratio(p, q, a))


# ---------------------------------------------------------------------------
# sample sizes and confidence


def _as_vector(v, m: int) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    return np.full(m, arr[0]) if arr.size == 1 else arr


def saa_sample_size(eps, alpha, m: int, delta: float, mode: str = "lower_bound", n: Optional[int] = None) -> int:
    """Smallest ``N`` for which the SAA guarantee of the chosen ``mode`` holds.

    ``lower_bound``: the SAA optimum with ``alpha > eps`` is a lower bound with
    probability at least ``1 - delta`` once ``N >= ln(m / delta) / k1``,
    ``k1 = min (alpha - eps)^2 / (alpha + eps)``.
    ``feasibility``: an SAA solution with ``alpha < eps`` is feasible with
    probability at least ``1 - delta`` once
    ``N >= (ln(m / delta) + n ln 2) / k2``, ``k2 = 2 min (eps - alpha)^2``.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    e, a = _as_vector(eps, m), _as_vector(alpha, m)
    if mode == "lower_bound":
        if np.any(a <= e):
            raise DomainError("lower-bound mode needs alpha > eps in every row")
        kappa = float(np.min((a - e) ** 2 / (a + e)))
        value = math.log(m / delta) / kappa
    elif mode == "feasibility":
        if n is None:
            raise DomainError("feasibility mode needs the number of columns n")
        if np.any(a >= e):
            raise DomainError("feasibility mode needs alpha < eps in every row")
        kappa = 2.0 * float(np.min((e - a) ** 2))
        value = (math.log(m / delta) + n * math.log(2.0)) / kappa
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return max(1, math.ceil(value - 1e-9))


def saa_lower_bound_confidence(eps, alpha, m: int, N: int) -> float:
    """Probability that the SAA optimum (risk ``alpha``) lower-bounds the true optimum.

    ``1 - sum_i I_{eps_i}(floor(alpha_i N) + 1, N - floor(alpha_i N))``,
    clamped to ``[0, 1]``; a row with ``floor(alpha_i N) >= N`` contributes 0.
    """
    if N < 1:
        raise DomainError("N must be at least 1")
    e, a = _as_vector(eps, m), _as_vector(alpha, m)
    total = []
    for ei, ai in zip(e, a):
        r = math.floor(ai * N + 1e-9)
        if r >= N:
            continue
        total.append(regularized_incomplete_beta(r + 1, N - r, ei))
    return min(1.0, max(0.0, 1.0 - math.fsum(total)))
