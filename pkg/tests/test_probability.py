import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccsmcp.errors import DomainError
from ccsmcp.probability import (
    binomial_tail,
    binomial_tail_alternating,
    binomial_tail_direct,
    bound_series,
    brute_force_cover_probability,
    cover_probability_ie,
    markov_lower_bound,
    min_cover_count,
    pmf_dft,
    regularized_incomplete_beta,
    symmetric_sums,
    tail_probability_dft,
    tail_probability_dft_batch,
    truncated_bound,
)

rows = st.lists(st.floats(0.0, 1.0), min_size=0, max_size=10)


# hand-checked values


def test_symmetric_sums_examples():
    # [DERIVED] subset products of (0.2, 0.3, 0.5) expanded by hand
    assert np.allclose(symmetric_sums([0.2, 0.3, 0.5], 3), [1, 1.0, 0.31, 0.03], atol=1e-15)
    assert np.allclose(symmetric_sums([], 0), [1.0])  # [TRIVIAL]
    assert np.allclose(symmetric_sums([0.5, 0.5], 2), [1, 1.0, 0.25])  # [TRIVIAL]


@pytest.mark.parametrize(
    "probs, k, expected",
    [
        ((0.5, 0.5), 1, 0.75),  # [TRIVIAL]
        ((0.2, 0.3, 0.5), 2, 0.25),  # [DERIVED] enumeration of 8 outcomes
        ((0.9, 0.9, 0.9), 2, 0.972),  # [DERIVED] 1 - 0.001 - 3*0.9*0.01
    ],
)
def test_cover_probability_examples(probs, k, expected):
    assert cover_probability_ie(probs, k) == pytest.approx(expected, abs=1e-12)
    assert tail_probability_dft(probs, k) == pytest.approx(expected, abs=1e-12)
    assert brute_force_cover_probability(probs, k) == pytest.approx(expected, abs=1e-12)


def test_degenerate_rows():
    assert brute_force_cover_probability([0.3], 0) == 1.0
    assert tail_probability_dft([], 1) == 0.0
    assert brute_force_cover_probability([0.5, 0.5], 2) == pytest.approx(0.25)


def test_pmf_examples():
    assert np.allclose(pmf_dft([0.5, 0.5]), [0.25, 0.5, 0.25], atol=1e-15)
    assert np.allclose(pmf_dft([1.0]), [0.0, 1.0], atol=1e-15)
    assert pmf_dft([0.2, 0.3, 0.5])[2:].sum() == pytest.approx(0.25, abs=1e-14)


def test_truncated_bound_examples():
    # [DERIVED] g_0 = h_0, g_1 = 1 - h_1, g_2 = 1 - h_1 + h_2
    assert truncated_bound([0.5, 0.5], 1, 0) == pytest.approx(1.0)
    assert truncated_bound([0.5, 0.5], 1, 1) == pytest.approx(0.0)
    assert truncated_bound([0.5, 0.5], 1, 2) == pytest.approx(0.25)
    s = bound_series([0.5, 0.5], 1)
    assert np.allclose(s.values, [1.0, 0.0, 0.25])
    assert s.exact == pytest.approx(0.25)


@pytest.mark.parametrize(
    "d, k, p, expected",
    [(3, 2, 0.5, 0.5), (3, 2, 0.9, 0.972), (1, 2, 0.9, 0.0)],
)
def test_binomial_tail_examples(d, k, p, expected):
    assert binomial_tail(d, k, p) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    "a, b, q, expected",
    [(2, 2, 0.5, 0.5), (1, 3, 0.1, 0.271), (2, 2, 0.9, 0.972)],
)
def test_incomplete_beta_examples(a, b, q, expected):
    assert regularized_incomplete_beta(a, b, q) == pytest.approx(expected, abs=1e-12)


def test_min_cover_count_examples():
    assert min_cover_count(1, 0.5, 0.25, 10) == 2  # [TRIVIAL] 1 - 0.5^d >= 0.75
    assert min_cover_count(2, 0.9, 0.1, 3) == 3  # [DERIVED] tail(2)=0.81, tail(3)=0.972
    assert min_cover_count(2, 0.1, 0.01, 3) is None  # [DERIVED] tail(3)=0.028


@pytest.mark.parametrize("k, p, eps, expected", [(2, 0.9, 0.1, 2), (3, 0.5, 0.05, 6), (1, 1.0, 0.5, 1)])
def test_markov_examples(k, p, eps, expected):
    assert markov_lower_bound(k, p, eps) == expected


def test_domain_errors():
    with pytest.raises(DomainError):
        cover_probability_ie([1.2], 1)
    with pytest.raises(DomainError):
        min_cover_count(1, 0.5, 0.0, 3)
    with pytest.raises(DomainError):
        markov_lower_bound(1, 0.0, 0.1)


# properties


@given(rows, st.integers(0, 11))
def test_three_routes_agree(probs, k):
    brute = brute_force_cover_probability(probs, k)
    assert tail_probability_dft(probs, k) == pytest.approx(brute, abs=1e-9)
    assert cover_probability_ie(probs, k) == pytest.approx(brute, abs=1e-9)


@given(rows)
def test_pmf_is_a_distribution(probs):
    f = pmf_dft(probs)
    assert f.shape == (len(probs) + 1,)
    assert np.all(f >= 0.0)
    assert math.fsum(f) == pytest.approx(1.0, abs=1e-12)
    assert math.fsum(j * v for j, v in enumerate(f)) == pytest.approx(sum(probs), abs=1e-9)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8), st.integers(1, 8))
def test_tail_monotone_in_demand_and_columns(probs, k):
    assert tail_probability_dft(probs, k) >= tail_probability_dft(probs, k + 1) - 1e-12
    assert tail_probability_dft(probs + [0.5], k) >= tail_probability_dft(probs, k) - 1e-12


def test_batch_matches_single():
    rng = np.random.default_rng(3)
    R = rng.uniform(size=(40, 7))
    R[rng.uniform(size=R.shape) < 0.3] = 0.0
    for k in range(0, 8):
        got = tail_probability_dft_batch(R, k)
        want = [tail_probability_dft(r, k) for r in R]
        assert np.allclose(got, want, atol=1e-12)


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=9), st.integers(1, 4))
def test_bounds_sandwich_the_exact_value(probs, k):
    # odd t gives a lower bound and even t an upper bound on P[sum < k]
    s = bound_series(probs, k)
    for t, g in enumerate(s.values):
        if t % 2:
            assert g <= s.exact + 1e-9
        else:
            assert g >= s.exact - 1e-9
    assert s.values[-1] == pytest.approx(s.exact, abs=1e-9)


def test_ladder_against_enumeration():
    # [DERIVED] failure probability by enumeration of all outcomes
    probs = [0.15, 0.3, 0.6, 0.8, 0.45]
    k = 2
    exact = 0.0
    for bits in itertools.product((0, 1), repeat=len(probs)):
        if sum(bits) < k:
            exact += math.prod(p if b else 1 - p for p, b in zip(probs, bits))
    assert bound_series(probs, k).exact == pytest.approx(exact, abs=1e-14)


@pytest.mark.parametrize("d", [1, 5, 12, 30])
def test_binomial_routes_agree(d):
    for k in range(1, d + 1):
        for p in np.arange(0.05, 0.96, 0.05):
            direct = binomial_tail_direct(d, k, p)
            assert binomial_tail_alternating(d, k, p) == pytest.approx(direct, abs=1e-10)
            assert regularized_incomplete_beta(k, d - k + 1, p) == pytest.approx(direct, abs=1e-10)


@given(st.integers(1, 5), st.floats(0.05, 1.0), st.floats(0.01, 0.9))
def test_markov_never_exceeds_min_cover_count(k, p, eps):
    d = min_cover_count(k, p, eps, 60)
    if d is not None:
        assert markov_lower_bound(k, p, eps) <= d
        assert binomial_tail(d, k, p) >= 1 - eps - 1e-9
        if d > k:
            assert binomial_tail(d - 1, k, p) < 1 - eps
