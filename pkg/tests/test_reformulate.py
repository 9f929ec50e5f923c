import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccsmcp.errors import InfeasibleError, SubsetBudgetError
from ccsmcp.model import Instance, generate_random, verify
from ccsmcp.presolve import general_only, presolve
from ccsmcp.reformulate import (
    BipModel,
    TruncationState,
    build_full,
    build_is,
    build_oa_relaxation,
    build_saa,
    linearize_product,
)
from ccsmcp.sampling import ScenarioSet, sample_scenarios
from ccsmcp.solver import solve_bip


def _blank(n):
    return BipModel.for_instance(Instance.from_dense([1] * n, [[0.5] * n], [1], [0.5]), "test")


def _all_x(n):
    return [np.array(bits) for bits in itertools.product((0, 1), repeat=n)]


def test_linearize_counts():
    model = _blank(6)
    y = linearize_product(model, {1, 2}, "I")
    assert len(model.constraints) == 2 and y in model.binaries
    model = _blank(6)
    y = linearize_product(model, {1, 2, 3}, "II")
    assert len(model.constraints) == 4 and y not in model.binaries
    assert linearize_product(model, {5}, "II") == 5
    assert len(model.constraints) == 4
    assert linearize_product(model, set(), "II") is None
    assert linearize_product(model, [3, 2, 1], "II") == y  # memoized


@pytest.mark.parametrize("variant", ["I", "II"])
@pytest.mark.parametrize("size", [2, 3, 4])
def test_linearization_pins_the_product(variant, size):
    # at every binary x the only admissible y is prod(x_T)
    model = _blank(size)
    y = linearize_product(model, range(size), variant)
    grid = (0.0, 1.0) if variant == "I" else np.linspace(0.0, 1.0, 11)
    for x in _all_x(size):
        ok = []
        for yv in grid:
            v = np.append(x.astype(float), yv)
            if all(c.violation(v) <= 1e-12 for c in model.constraints):
                ok.append(yv)
        assert ok == [float(np.prod(x))]
        assert model.complete(x)[y] == np.prod(x)


def test_full_model_running_example(running_example):
    for variant in ("I", "II"):
        model = build_full(running_example, variant, presolve(running_example, reduce=False))
        assert solve_bip(model).objective == 3.0  # [DERIVED] only x=(1,1,1) is feasible
    # the equal-probability row becomes a count row with dbar = 3
    model = build_full(running_example, "II")
    (con,) = model.constraints
    assert con.name == "count_0" and con.sense == ">=" and con.rhs == 3


def test_log_transform_row():
    inst = Instance.from_dense([1, 1, 1], [[0.3, 0.6, 0.0]], [1], [0.3])
    (con,) = build_full(inst).constraints
    assert con.name == "logcover_0"
    assert con.rhs == pytest.approx(math.log(0.3))
    assert con.coeffs == pytest.approx({0: math.log(0.7), 1: math.log(0.4)})


def test_infeasible_row_raises_with_certificate():
    inst = Instance.from_dense([1, 1, 1], [[0.1, 0.1, 0.1]], [2], [0.01])
    with pytest.raises(InfeasibleError) as info:
        build_full(inst)
    assert info.value.certificate["row"] == 0


def test_subset_budget_guard():
    inst = Instance.from_dense([1] * 12, [np.linspace(0.5, 0.9, 12)], [3], [0.05])
    with pytest.raises(SubsetBudgetError):
        build_full(inst, subset_budget=100)


def _feasible_sets_agree(inst, model, relax=False):
    for x in _all_x(inst.n):
        sol = verify(inst, x)
        if any(abs(q - (1 - e)) < 1e-7 for q, e in zip(sol.per_item_prob, inst.risks)):
            continue
        in_model = model.is_feasible(model.complete(x))
        if relax:
            assert in_model or not sol.feasible
        else:
            assert in_model == sol.feasible, x


@given(st.integers(0, 3000), st.sampled_from(["I", "II"]))
def test_full_model_matches_verify(seed, variant):
    inst = generate_random(7, 3, seed=seed, max_support=5, budget=5 if seed % 2 else None)
    try:
        model = build_full(inst, variant, general_only(inst))
    except InfeasibleError:
        return
    _feasible_sets_agree(inst, model)


def test_truncated_row_for_unit_demand():
    # [DERIVED] g_1 for k=1 is 1 - sum p_j x_j
    inst = Instance.from_dense([1, 1, 1], [[0.3, 0.6, 0.5]], [1], [0.2])
    model = build_oa_relaxation(inst, TruncationState.initial([0]), "II", general_only(inst))
    (con,) = model.constraints
    assert con.sense == "<=" and con.rhs == pytest.approx(0.2 - 1.0)
    assert con.coeffs == pytest.approx({0: -0.3, 1: -0.6, 2: -0.5})


@given(st.integers(0, 3000), st.sampled_from(["I", "II"]))
def test_relaxations_contain_the_feasible_set(seed, variant):
    inst = generate_random(7, 3, seed=seed, max_support=5)
    try:
        pre = general_only(inst)
        rows = pre.rows_of_kind("general")
        state = TruncationState.initial(rows)
        caps = {i: len(inst.rows[i]) for i in rows}
        while True:
            model = build_oa_relaxation(inst, state, variant, pre)
            _feasible_sets_agree(inst, model, relax=True)
            if all(state.t[i] >= caps[i] for i in rows):
                break
            state = state.advanced(rows, caps)
    except InfeasibleError:
        return
    # at the full order the relaxation is exact
    _feasible_sets_agree(inst, model)


def test_truncation_state_history():
    s = TruncationState.initial([0, 2]).advanced([0, 2], {0: 4, 2: 9}).advanced([0], {0: 4, 2: 9})
    assert s.t == {0: 4, 2: 3}
    assert s.history == {0: (1, 3), 2: (1,)}


def test_oa_relaxation_bounds_running_example(running_example):
    pre = general_only(running_example)
    model = build_oa_relaxation(running_example, TruncationState.initial([0]), "II", pre)
    assert solve_bip(model).objective <= 3.0  # [DERIVED] relaxation gives a lower bound


def _fixed_scenarios(draws, n, likelihoods=None):
    draws = np.asarray(draws, dtype=bool)
    return ScenarioSet(draws.shape[0], n, [np.arange(n)], [draws], likelihoods)


def test_saa_single_scenario_forces_coverage():
    inst = Instance.from_dense([1, 1, 1], [[0.5, 0.5, 0.5]], [2], [0.1])
    model = build_saa(inst, _fixed_scenarios([[1, 0, 1]], 3), alpha=0.0)
    rep = solve_bip(model)
    assert rep.objective == 2.0 and list(rep.x[:3]) == [1, 0, 1]


def test_saa_cardinality_row():
    inst = Instance.from_dense([1, 1, 1], [[0.5, 0.5, 0.5]], [1], [0.25])
    model = build_saa(inst, _fixed_scenarios(np.eye(3, dtype=int)[[0, 1, 2, 0]], 3), alpha=0.25)
    card = [c for c in model.constraints if c.name == "card_0"][0]
    assert card.rhs == 3.0  # [TRIVIAL] ceil of (1 - 0.25) * 4


def test_saa_all_ones_picks_cheapest():
    inst = Instance.from_dense([3, 1, 2, 5], [[0.5] * 4], [2], [0.1])
    model = build_saa(inst, _fixed_scenarios(np.ones((5, 4)), 4), alpha=0.0)
    rep = solve_bip(model)
    assert rep.objective == 3.0 and list(rep.x[:4]) == [0, 1, 1, 0]


def test_is_with_identity_tilt_equals_saa():
    inst = generate_random(8, 3, seed=4)
    tilts = {i: inst.row_probs(i) for i in range(inst.m)}
    weighted = sample_scenarios(inst, 30, seed=2, tilts=tilts)
    plain = sample_scenarios(inst, 30, seed=2)
    assert np.all(weighted.likelihoods == 1.0)
    assert build_is(inst, weighted).canonical_rows() == build_saa(inst, plain).canonical_rows()


def test_to_arrays_shapes(running_example):
    model = build_full(running_example, "I", general_only(running_example))
    c, A, senses, rhs = model.to_arrays()
    assert c.shape == (model.num_vars,)
    assert A.shape == (len(model.constraints), model.num_vars)
    assert len(senses) == len(rhs) == len(model.constraints)
