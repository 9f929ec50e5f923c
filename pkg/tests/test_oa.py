import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccsmcp.errors import InfeasibleError, SolveTimeout
from ccsmcp.model import Instance, SideConstraints, generate_random, generate_sparse
from ccsmcp.oa import solve_oa
from ccsmcp.solver import exhaustive_search


def _nondecreasing(values):
    return all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("variant", ["I", "II"])
def test_running_example(running_example, variant):
    sol, trace = solve_oa(running_example, variant)
    assert sol.objective == 3.0 and sol.feasible
    # the only row is an equal-probability row, so the first relaxation is exact
    assert trace.n_iterations == 1


def test_running_example_as_general_row(running_example):
    sol, trace = solve_oa(running_example, use_special=False)
    assert sol.objective == 3.0
    assert trace.n_iterations >= 1 and _nondecreasing(trace.nu)


@settings(max_examples=25)
@given(st.integers(0, 5000), st.sampled_from(["I", "II"]), st.booleans())
def test_matches_exhaustive(seed, variant, reduce):
    inst = generate_random(8, 4, seed=seed, max_support=5, budget=6 if seed % 3 == 0 else None)
    try:
        want = exhaustive_search(inst).objective
    except InfeasibleError:
        want = None
    try:
        sol, trace = solve_oa(inst, variant, reduce=reduce, use_special=bool(seed % 2))
    except InfeasibleError as exc:
        assert want is None
        assert exc.certificate
        return
    assert want is not None and sol.objective == pytest.approx(want)
    assert sol.feasible
    assert _nondecreasing(trace.nu)
    assert trace.nu[-1] == pytest.approx(sol.objective)


def test_presolve_infeasibility_is_reported_in_the_first_iteration():
    inst = Instance.from_dense([1, 1, 1], [[0.1, 0.1, 0.1], [0.9, 0.9, 0.9]], [2, 1], [0.01, 0.1])
    with pytest.raises(InfeasibleError) as info:
        solve_oa(inst)
    assert info.value.certificate["row"] == 0
    assert info.value.trace.n_iterations == 1


def test_relaxation_infeasibility_under_budget():
    # each row alone is satisfiable but together they need more than U columns
    inst = Instance.from_dense(
        [1, 1, 1, 1], [[0.9, 0.9, 0, 0], [0, 0, 0.9, 0.9]], [2, 2], [0.2, 0.2], SideConstraints("budget", 3)
    )
    with pytest.raises(InfeasibleError) as info:
        solve_oa(inst)
    assert info.value.certificate["reason"] == "relaxation infeasible"


@pytest.mark.slow
def test_sparse_instance_iterations_and_trace():
    inst = generate_sparse(30, 10, 0.05, seed=3)
    sol, trace = solve_oa(inst, "II")
    assert sol.feasible
    assert 1 <= trace.n_iterations <= 6
    assert _nondecreasing(trace.nu)
    doc = trace.to_json()
    assert doc["status"] == "optimal" and len(doc["iterations"]) == trace.n_iterations


def test_time_limit():
    inst = generate_sparse(60, 30, 0.05, seed=1)
    with pytest.raises(SolveTimeout) as info:
        solve_oa(inst, "I", time_limit=1e-6)
    assert info.value.trace.status == "time_limit"
    assert info.value.trace.n_iterations == 1
