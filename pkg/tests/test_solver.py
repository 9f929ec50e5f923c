import itertools

import highspy
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccsmcp.errors import GuardError, InfeasibleError
from ccsmcp.model import Instance, generate_random, verify
from ccsmcp.presolve import general_only
from ccsmcp.reformulate import BipModel, build_full, build_saa
from ccsmcp.sampling import sample_scenarios
from ccsmcp.solver import (
    exhaustive_search,
    export_lp,
    greedy_heuristic,
    lp_text,
    simplex,
    solve_bip,
    solve_lp,
)
from ccsmcp.solver.lp import highs


def _model(n, rows, costs=None):
    model = BipModel(n=n)
    for j in range(n):
        model.add_var(f"x{j}", cost=1.0 if costs is None else costs[j])
    for coeffs, sense, rhs in rows:
        model.add_constraint(coeffs, sense, rhs)
    return model


# LP


def test_lp_examples():
    m = _model(2, [({0: 1.0, 1: 1.0}, ">=", 1.0)])
    assert solve_lp(m).objective == pytest.approx(1.0)
    m = _model(1, [({0: 1.0}, "<=", 0.5)], costs=[-1.0])
    assert solve_lp(m).objective == pytest.approx(-0.5)
    m = _model(1, [({0: 1.0}, ">=", 1.0), ({0: 1.0}, "<=", 0.0)])
    assert solve_lp(m).status == "infeasible"


@given(st.integers(0, 10**6))
def test_simplex_matches_highs(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, 8)), int(rng.integers(1, 7))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-2, 5, size=m).astype(float)
    senses = rng.choice(["<=", ">=", "="], size=m, p=[0.45, 0.45, 0.1]).astype(object)
    c = rng.integers(-4, 5, size=n).astype(float)
    lb = np.zeros(n)
    ub = rng.choice([1.0, 2.0, 5.0], size=n)
    own = simplex(c, A, senses, b, lb, ub)
    ref = highs(c, A, senses, b, lb, ub)
    assert own.status == ref.status
    if ref.status == "optimal":
        assert own.objective == pytest.approx(ref.objective, abs=1e-7)
        v = own.values
        assert np.all(v >= lb - 1e-9) and np.all(v <= ub + 1e-9)
        act = A @ v
        assert np.all(act[senses == "<="] <= b[senses == "<="] + 1e-7)
        assert np.all(act[senses == ">="] >= b[senses == ">="] - 1e-7)


def test_simplex_degenerate_cycle_example():
    # a classic degenerate LP on which textbook Dantzig pricing can cycle
    c = np.array([-0.75, 150.0, -0.02, 6.0])
    A = np.array([[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]])
    b = np.array([0.0, 0.0, 1.0])
    sol = simplex(c, A, np.array(["<=", "<=", "<="], dtype=object), b, np.zeros(4), np.full(4, 1e6))
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-0.05, abs=1e-9)  # [DERIVED] attained at (0.04, 0, 1, 0)


# branch-and-bound


def _brute_force_bip(model):
    best = np.inf
    for bits in itertools.product((0, 1), repeat=model.n):
        v = np.array(bits, dtype=float)
        if model.is_feasible(v):
            best = min(best, model.objective_value(v))
    return best


@given(st.integers(0, 10**6), st.sampled_from(["auto", "simplex"]))
def test_bnb_matches_enumeration_on_generic_models(seed, backend):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 10))
    rows = []
    for _ in range(int(rng.integers(1, 6))):
        cols = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        coeffs = {int(j): float(rng.integers(1, 4)) for j in cols}
        if rng.random() < 0.7:
            rows.append((coeffs, ">=", float(rng.integers(1, 4))))
        else:
            rows.append((coeffs, "<=", float(rng.integers(1, 6))))
    costs = rng.integers(1, 6, size=n).astype(float)
    model = _model(n, rows, costs)
    rep = solve_bip(model, engine="bnb", lp_backend=backend)
    best = _brute_force_bip(model)
    if np.isinf(best):
        assert rep.status == "infeasible"
    else:
        assert rep.status == "optimal"
        assert rep.objective == pytest.approx(best)
        assert model.is_feasible(rep.x)


def test_bnb_infeasible_model():
    model = _model(2, [({0: 1.0, 1: 1.0}, ">=", 3.0)])
    assert solve_bip(model, engine="bnb").status == "infeasible"
    assert solve_bip(model, engine="milp").status == "infeasible"


@pytest.mark.parametrize("variant", ["I", "II"])
@pytest.mark.parametrize("engine", ["bnb", "milp"])
def test_full_model_matches_exhaustive(small_instances, variant, engine):
    for inst in small_instances:
        try:
            want = exhaustive_search(inst).objective
        except InfeasibleError:
            want = None
        try:
            rep = solve_bip(build_full(inst, variant, general_only(inst)), engine=engine)
        except InfeasibleError:
            assert want is None
            continue
        if want is None:
            assert rep.status == "infeasible"
        else:
            assert rep.objective == pytest.approx(want)
            assert verify(inst, rep.x[: inst.n]).feasible


def test_bnb_with_own_simplex(small_instances):
    for inst in small_instances[:6]:
        try:
            want = exhaustive_search(inst).objective
        except InfeasibleError:
            continue
        rep = solve_bip(build_full(inst, "I", general_only(inst)), engine="bnb", lp_backend="simplex")
        assert rep.objective == pytest.approx(want)


def test_saa_model_bnb_matches_milp():
    inst = generate_random(10, 3, seed=11)
    model = build_saa(inst, sample_scenarios(inst, 12, seed=3))
    a = solve_bip(model, engine="bnb")
    b = solve_bip(model, engine="milp")
    assert a.status == b.status == "optimal"
    assert a.objective == pytest.approx(b.objective)


def test_node_limit_reports_incumbent():
    inst = generate_random(14, 6, seed=2, max_support=6)
    rep = solve_bip(build_full(inst, "I", general_only(inst)), engine="bnb", node_limit=1)
    assert rep.status in ("time_limit", "optimal")
    assert rep.nodes <= 1 or rep.status == "optimal"


# heuristics


def test_exhaustive_examples(running_example):
    sol = exhaustive_search(running_example)
    assert sol.x == (1, 1, 1) and sol.objective == 3.0  # [DERIVED]
    inst = Instance.from_dense([1, 1], [[0.5, 0.5]], [0], [0.1])
    assert exhaustive_search(inst).x == (0, 0)
    bad = Instance.from_dense([1, 1, 1], [[0.1, 0.1, 0.1]], [2], [0.01])
    with pytest.raises(InfeasibleError) as info:
        exhaustive_search(bad)
    assert info.value.certificate["row"] == 0
    with pytest.raises(GuardError):
        exhaustive_search(Instance.from_dense([1] * 21, [[0.5] * 21], [1], [0.1]))


def test_exhaustive_matches_itertools(small_instances):
    for inst in small_instances[:5]:
        feasible = [x for x in itertools.product((0, 1), repeat=inst.n) if verify(inst, x).feasible]
        if not feasible:
            continue
        best = min(verify(inst, x).objective for x in feasible)
        assert exhaustive_search(inst).objective == best


def test_greedy(running_example, small_instances):
    assert list(greedy_heuristic(running_example)) == [1, 1, 1]
    assert list(greedy_heuristic(Instance.from_dense([1, 1], [[0.5, 0.5]], [0], [0.1]))) == [0, 0]
    assert greedy_heuristic(Instance.from_dense([1, 1, 1], [[0.1, 0.1, 0.1]], [2], [0.01])) is None
    for inst in small_instances:
        x = greedy_heuristic(inst)
        if x is not None:
            assert verify(inst, x).feasible


# LP export


def test_lp_export_is_deterministic(tmp_path, running_example):
    model = build_full(running_example, "I", general_only(running_example))
    assert lp_text(model) == lp_text(build_full(running_example, "I", general_only(running_example)))
    text = lp_text(model)
    for name in model.var_names:
        assert f"0 <= {name} <= 1" in text
    assert all(model.var_names[j] in text.split("Binaries")[1] for j in model.binaries)
    assert " obj: 0" in lp_text(BipModel(n=0))


@pytest.mark.parametrize("variant", ["I", "II"])
def test_lp_export_reimports(tmp_path, small_instances, variant):
    inst = small_instances[1]
    model = build_full(inst, variant, general_only(inst))
    path = tmp_path / "model.lp"
    export_lp(model, path)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    lp = h.getLp()
    assert lp.num_col_ == model.num_vars and lp.num_row_ == len(model.constraints)
    h.run()
    want = solve_bip(model).objective
    assert h.getInfo().objective_function_value == pytest.approx(want, abs=1e-6)
