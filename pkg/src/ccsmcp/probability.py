"""Cover probabilities of Poisson-binomial counts.

A *row* is a vector of independent Bernoulli success probabilities; the
quantity of interest is ``P[count >= k]`` (the cover probability) or its
complement ``P[count <= k - 1]``. Several independent routes are provided:

* elementary symmetric sums + inclusion-exclusion (``cover_probability_ie``),
* characteristic-function inversion (``pmf_dft`` / ``tail_probability_dft``),
  which is the kernel used for feasibility decisions everywhere else,
* brute-force enumeration (``brute_force_cover_probability``), a test oracle,
* truncated inclusion-exclusion bounds (``truncated_bound``),
* binomial tails through the regularized incomplete beta function for rows
  with a single common probability.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DomainError, GuardError, NumericError

#: Slack used when deciding ``prob >= 1 - eps``; shared by every feasibility test.
FEAS_TOL = 1e-9

BRUTE_FORCE_MAX = 24
BETA_MAX_ITER = 300
BETA_TOL = 1e-14
_TINY = 1e-300


def as_row(probs) -> np.ndarray:
    """Validate and convert a probability vector."""
    p = np.asarray(probs, dtype=float).reshape(-1)
    if p.size and (np.any(~np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0):
        raise DomainError("probabilities must lie in [0, 1]")
    return p


def _clamp(v: float) -> float:
    return min(1.0, max(0.0, v))


# ---------------------------------------------------------------------------
# elementary symmetric sums and inclusion-exclusion


def symmetric_sums(probs, max_order: Optional[int] = None) -> np.ndarray:
    """Elementary symmetric sums ``h_0, ..., h_max_order`` of ``probs``.

    Uses the recursion ``e_l <- e_l + p * e_{l-1}`` with a Neumaier
    compensation term carried per order.
    """
    p = as_row(probs)
    n = p.size
    if max_order is None:
        max_order = n
    if max_order < 0 or max_order > n:
        raise DomainError(f"max_order must be in [0, {n}], got {max_order}")
    e = [1.0] + [0.0] * max_order
    comp = [0.0] * (max_order + 1)
    for i, q in enumerate(p):
        q = float(q)
        for ell in range(min(max_order, i + 1), 0, -1):
            x = q * (e[ell - 1] + comp[ell - 1])
            s = e[ell]
            t = s + x
            if abs(s) >= abs(x):
                comp[ell] += (s - t) + x
            else:
                comp[ell] += (x - t) + s
            e[ell] = t
    return np.array([a + b for a, b in zip(e, comp)])


def cover_probability_ie(probs, k: int) -> float:
    """``P[count >= k]`` by the alternating inclusion-exclusion sum over ``h_l``."""
    p = as_row(probs)
    n = p.size
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    h = symmetric_sums(p, n)
    terms = [(-1) ** (ell - k) * math.comb(ell - 1, ell - k) * h[ell] for ell in range(k, n + 1)]
    return _clamp(math.fsum(terms))


def brute_force_cover_probability(probs, k: int) -> float:
    """``P[count >= k]`` by summing over all ``2**n`` outcomes (test oracle)."""
    p = as_row(probs)
    n = p.size
    if n > BRUTE_FORCE_MAX:
        raise GuardError(f"enumeration limited to {BRUTE_FORCE_MAX} entries, got {n}")
    if k <= 0:
        return 1.0
    total = []
    for outcome in itertools.product((0, 1), repeat=n):
        if sum(outcome) < k:
            continue
        w = 1.0
        for a, q in zip(outcome, p):
            w *= q if a else 1.0 - q
        total.append(w)
    return _clamp(math.fsum(total))


# ---------------------------------------------------------------------------
# DFT of the characteristic function


def pmf_dft(probs) -> np.ndarray:
    """Probability mass function of the count, by inverting its characteristic function.

    ``probs`` may be a single row or a 2-D array of rows of equal length, in
    which case one PMF per row is returned. The transform is an explicit
    ``O(n^2)`` sum.
    """
    p = np.asarray(probs, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise DomainError("probabilities must lie in [0, 1]")
    n = p.shape[1]
    size = n + 1
    m = np.arange(size)
    omega = np.exp(2j * np.pi * m / size)
    xi = np.ones((p.shape[0], size), dtype=complex)
    for j in range(n):
        q = p[:, j : j + 1]
        xi *= (1.0 - q) + q * omega[None, :]
    # reduce m*d modulo size before forming the angle to keep it accurate
    inv = np.exp(-2j * np.pi * (np.outer(m, m) % size) / size)
    pmf = (xi @ inv).real / size
    pmf = np.clip(pmf, 0.0, 1.0)
    return pmf[0] if single else pmf


def tail_probability_dft(probs, k: int) -> float:
    """``P[count >= k]`` from ``pmf_dft``; the feasibility kernel."""
    p = as_row(probs)
    if k <= 0:
        return 1.0
    if k > p.size:
        return 0.0
    pmf = pmf_dft(p)
    return _clamp(math.fsum(pmf[k:]))


def tail_probability_dft_batch(rows: np.ndarray, k: int) -> np.ndarray:
    """Vectorised ``tail_probability_dft`` over the rows of a 2-D array."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if k <= 0:
        return np.ones(rows.shape[0])
    if k > rows.shape[1]:
        return np.zeros(rows.shape[0])
    pmf = pmf_dft(rows)
    return np.array([_clamp(math.fsum(r)) for r in pmf[:, k:]])


# ---------------------------------------------------------------------------
# truncated inclusion-exclusion bounds


def _bound_terms(h: np.ndarray, n: int, k: int, t: int) -> list:
    """Per-``d`` partial sums ``g_{t,d}``, ``d = 0..k-1``."""
    out = []
    for d in range(k):
        terms = [
            (-1) ** (ell - d) * math.comb(ell, d) * h[ell]
            for ell in range(d, min(t + d, n) + 1)
        ]
        out.append(math.fsum(terms))
    return out


def truncated_bound(probs, k: int, t: int) -> float:
    """Truncated bound ``g_t`` on ``P[count <= k - 1]``.

    Upper bound for even ``t``, lower bound for odd ``t``; exact once
    ``t >= len(probs)``.
    """
    p = as_row(probs)
    if t < 0:
        raise DomainError("truncation order must be nonnegative")
    if k <= 0:
        return 0.0
    n = p.size
    h = symmetric_sums(p, n)
    return math.fsum(_bound_terms(h, n, k, t))


def truncated_bound_parts(probs, k: int, t: int) -> list:
    """The per-``d`` components of ``truncated_bound``."""
    p = as_row(probs)
    if k <= 0:
        return []
    h = symmetric_sums(p, p.size)
    return _bound_terms(h, p.size, k, t)


@dataclass(frozen=True)
class BoundSeries:
    k: int
    values: tuple
    exact: float
    t_min_odd: Optional[int]
    t_min_even: Optional[int]

    def first_within(self, tol: float) -> Optional[int]:
        """Smallest ``t`` with ``|g_t - exact| <= tol``."""
        for t, v in enumerate(self.values):
            if abs(v - self.exact) <= tol:
                return t
        return None


def bound_series(probs, k: int) -> BoundSeries:
    """All ``g_t`` for ``t = 0..n`` together with the exact probability.

    ``t_min_odd`` / ``t_min_even`` are the first odd / even ``t <= n - 2``
    from which every component ``g_{t,d}`` moves monotonically towards the
    exact value (``None`` when no such ``t`` exists).
    """
    p = as_row(probs)
    n = p.size
    if k < 1:
        raise DomainError("k must be positive")
    h = symmetric_sums(p, n)
    parts = [_bound_terms(h, n, k, t) for t in range(n + 1)]
    values = tuple(math.fsum(ps) for ps in parts)
    exact = 1.0 - tail_probability_dft(p, k)

    def first(start, cmp):
        for t in range(start, n - 1, 2):
            if all(cmp(parts[t][d], parts[t + 2][d]) for d in range(k)):
                return t
        return None

    t_odd = first(1, lambda a, b: a <= b)
    t_even = first(0, lambda a, b: a >= b)
    return BoundSeries(k=k, values=values, exact=exact, t_min_odd=t_odd, t_min_even=t_even)


# ---------------------------------------------------------------------------
# binomial tails


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETA_TOL:
            return h
    raise NumericError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _beta_front(a: float, b: float, x: float) -> float:
    """``x^a (1-x)^b / B(a, b)``."""
    if a + b < 150.0:
        return x**a * (1.0 - x) ** b * (math.gamma(a + b) / (math.gamma(a) * math.gamma(b)))
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return math.exp(a * math.log(x) + b * math.log1p(-x) - lbeta)


def regularized_incomplete_beta(a: float, b: float, q: float) -> float:
    """``I_q(a, b)``.

    The continued fraction is evaluated directly when
    ``q <= (a + 1) / (a + b + 2)`` and through ``1 - I_{1-q}(b, a)`` otherwise.
    """
    if a <= 0 or b <= 0:
        raise DomainError("beta parameters must be positive")
    if not 0.0 <= q <= 1.0:
        raise DomainError("q must lie in [0, 1]")
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    if q > (a + 1.0) / (a + b + 2.0):
        return _clamp(1.0 - _beta_front(b, a, 1.0 - q) * _beta_cf(b, a, 1.0 - q) / b)
    return _clamp(_beta_front(a, b, q) * _beta_cf(a, b, q) / a)


def binomial_tail(d: int, k: int, p: float) -> float:
    """``P[Binomial(d, p) >= k]`` as ``I_p(k, d - k + 1)``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    if k <= 0:
        return 1.0
    if d < k:
        return 0.0
    return regularized_incomplete_beta(k, d - k + 1, p)


def binomial_tail_direct(d: int, k: int, p: float) -> float:
    """``sum_{l=k}^{d} C(d,l) p^l (1-p)^(d-l)`` (all terms nonnegative)."""
    if k <= 0:
        return 1.0
    terms = [math.comb(d, ell) * p**ell * (1.0 - p) ** (d - ell) for ell in range(k, d + 1)]
    return _clamp(math.fsum(terms))


def binomial_tail_alternating(d: int, k: int, p: float) -> float:
    """``k C(d,k) sum_{l=k}^{d} (-1)^(l-k) C(d-k, l-k) p^l / l``.

    The sum cancels heavily for large ``d``, so it is accumulated in exact
    rational arithmetic on the binary value of ``p`` and rounded once.
    """
    if k <= 0:
        return 1.0
    if d < k:
        return 0.0
    q = Fraction(p)
    total = sum(
        Fraction((-1) ** (ell - k) * math.comb(d - k, ell - k), ell) * q**ell
        for ell in range(k, d + 1)
    )
    return _clamp(float(k * math.comb(d, k) * total))


def min_cover_count(k: int, p: float, eps: float, n: int) -> Optional[int]:
    """Smallest ``d`` in ``[k, n]`` whose binomial tail reaches ``1 - eps``.

    The tail is nondecreasing in ``d`` so a binary search suffices. Returns
    ``None`` when even ``d = n`` falls short.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    target = 1.0 - eps - FEAS_TOL
    if k <= 0:
        return 0
    if n < k or p <= 0.0 or binomial_tail(n, k, p) < target:
        return None
    lo, hi = k, n
    while lo < hi:
        mid = (lo + hi) // 2
        if binomial_tail(mid, k, p) >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def markov_lower_bound(k: int, p: float, eps: float) -> int:
    """``max(k, ceil(k (1 - eps) / p))``, a necessary selection count."""
    if p <= 0.0:
        raise DomainError("p must be positive")
    v = k * (1.0 - eps) / p
    # back off by the feasibility slack so the bound never exceeds min_cover_count
    return max(k, math.ceil(v - k * FEAS_TOL / p - 1e-12))
