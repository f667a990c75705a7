from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import oracle
from campaign_control.dynamics import BC, DG, Instance, InstanceError, convinced_count, simulate
from campaign_control.heuristics import (BudgetExceeded, InnerSolverError, SearchOptions, apply_index_sequence,
                                         convince_all_bound, convince_all_policy, constant_control_bound, constant_control_policy,
                                         modified_strongest_guy, mpc, mu, strongest_guy_inner,
                                         strongest_guy_search, worker_count)
from campaign_control.instances import benchmark
from reference import MODIFIED_CONTROL, MODIFIED_SEQUENCE, STRONGEST_GUY_TABLE
from strategies import bc_instances

F = Fraction


def test_mu_examples():
    b = benchmark()
    assert mu(b, b.start, 0) == F(1, 2)
    assert mu(b, b.start, 4) == F(9, 20)
    assert mu(b, b.start, 11) == F(17, 20)
    assert mu(b, b.start, 1, F(1, 10**6)) == F(3, 20) - F(1, 10**6)


@given(bc_instances(), st.data())
def test_mu_matches_oracle_and_stays_in_reach(inst, data):
    i = data.draw(st.integers(0, inst.n))
    u = mu(inst, inst.start, i)
    assert u == oracle.mu(inst.start, i, inst.epsilon, inst.left, inst.right)
    assert 0 <= u <= 1
    if i:
        assert abs(u - inst.start[i - 1]) <= inst.epsilon


@pytest.mark.parametrize("N", sorted(STRONGEST_GUY_TABLE))
def test_known_sequences(N):
    count, seq = STRONGEST_GUY_TABLE[N]
    controls, traj, got = apply_index_sequence(benchmark(), seq)
    assert got == count
    # independent re-simulation of the realized controls
    b = benchmark()
    assert oracle.count(oracle.run_bc(b.start, b.epsilon, controls)[-1], b.left, b.right) == count


def test_index_out_of_range():
    with pytest.raises(IndexError):
        apply_index_sequence(benchmark(), (12,))


@pytest.mark.parametrize("N, count, seq", [(0, 3, ()), (1, 3, (0,)), (2, 4, (4, 4)), (3, 5, (3, 8, 0))])
def test_exhaustive_small(N, count, seq):
    res = strongest_guy_search(benchmark(), N)
    assert (res.count, res.sequence) == (count, seq)
    assert res.optimal_in_space


def test_exhaustive_is_first_strict_improvement():
    # a plain lexicographic scan keeping strict improvements, written independently
    from itertools import product
    b = benchmark()
    best, winner = -1, None
    for seq in product(range(12), repeat=2):
        c = apply_index_sequence(b, seq)[2]
        if c > best:
            best, winner = c, seq
    res = strongest_guy_search(b, 2)
    assert (res.count, res.sequence) == (best, winner)


def test_parallel_equals_sequential():
    b = benchmark()
    seq = strongest_guy_search(b, 3, SearchOptions(workers=1))
    par = strongest_guy_search(b, 3, SearchOptions(workers=3))
    assert (seq.count, seq.sequence, seq.controls) == (par.count, par.sequence, par.controls)


def test_worker_env(monkeypatch):
    monkeypatch.setenv("CAMPAIGN_CONTROL_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2


def test_budget():
    with pytest.raises(BudgetExceeded, match="beam or random"):
        strongest_guy_search(benchmark(), 7)


def test_beam_and_random_are_labelled_lower_bounds():
    b = benchmark()
    beam = strongest_guy_search(b, 4, SearchOptions(mode="beam", width=8))
    rnd = strongest_guy_search(b, 4, SearchOptions(mode="random", samples=200, seed=3))
    assert not beam.optimal_in_space and not rnd.optimal_in_space
    assert beam.count <= 5 and rnd.count <= 5
    again = strongest_guy_search(b, 4, SearchOptions(mode="random", samples=200, seed=3))
    assert again.sequence == rnd.sequence


def test_beam_width_dominance_on_benchmark():
    # not a theorem for a greedy beam; checked empirically on the benchmark
    b = benchmark()
    counts = [strongest_guy_search(b, 5, SearchOptions(mode="beam", width=w)).count for w in (1, 4, 16, 64)]
    assert counts == sorted(counts)


@settings(max_examples=25)
@given(bc_instances(min_n=2, max_n=6), st.lists(st.integers(0, 6), min_size=2, max_size=2))
def test_exhaustive_dominates_explicit_sequences(inst, seq):
    seq = [min(i, inst.n) for i in seq]
    best = strongest_guy_search(inst, 2, SearchOptions(workers=1)).count
    assert best >= apply_index_sequence(inst, seq)[2]


def test_modified_strongest_guy_reproduces_known_control():
    b = benchmark()
    controls, _, count = apply_index_sequence(b, MODIFIED_SEQUENCE, F(1, 10**6))
    assert controls == MODIFIED_CONTROL
    assert count == 6


def test_delta_zero_is_plain_search():
    b = benchmark()
    a = modified_strongest_guy(b, 3, F(0))
    p = strongest_guy_search(b, 3)
    assert (a.count, a.sequence, a.controls) == (p.count, p.sequence, p.controls)


def test_delta_must_be_below_epsilon():
    with pytest.raises(ValueError):
        strongest_guy_search(benchmark(), 1, SearchOptions(delta=F(3, 20)))


def test_search_rejects_dg():
    from campaign_control.instances import benchmark_dg
    with pytest.raises(InstanceError):
        strongest_guy_search(benchmark_dg(), 1)


# ------------------------------------------------------------------ MPC

def test_mpc_long_horizon_equals_one_shot():
    b = benchmark()
    one = strongest_guy_search(b, 3)
    controls, count, _ = mpc(b, 3, 5, strongest_guy_inner())
    assert controls == one.controls and count == one.count


def test_mpc_result_is_exact_resimulation():
    b = benchmark()
    controls, count, traj = mpc(b, 6, 2, strongest_guy_inner())
    assert simulate(b, controls).final == traj.final
    assert convinced_count(traj.final, b.left, b.right) == count


def test_mpc_growing_mode_runs():
    controls, count, _ = mpc(benchmark(), 4, 2, strongest_guy_inner(), mode="growing")
    assert len(controls) == 4 and 3 <= count <= 11


def test_mpc_inner_failure_is_stage_tagged():
    calls = []

    def flaky(sub, h):
        calls.append(h)
        if len(calls) == 3:
            raise RuntimeError("boom")
        return (F(1, 2),) * h

    with pytest.raises(InnerSolverError) as err:
        mpc(benchmark(), 5, 2, flaky)
    assert err.value.stage == 2


def test_mpc_horizon_validation():
    with pytest.raises(ValueError):
        mpc(benchmark(), 3, 0, strongest_guy_inner())


# ------------------------------------------------------------------ constructive policies

def test_convince_all_trivial_when_all_inside():
    inst = Instance((F(1, 2), F(1, 2)), BC(F(1, 10)), F(2, 5), F(3, 5))
    traj, stages = convince_all_policy(inst)
    assert stages == 0


def test_convince_all_benchmark_like():
    eps = F(3, 20)
    inst = Instance(tuple(F(3, 20) + F(7, 100) * k for k in range(11)), BC(eps), F(3, 8), F(5, 8))
    traj, stages = convince_all_policy(inst)
    assert convinced_count(traj.final, inst.left, inst.right) == 11
    assert stages <= convince_all_bound(11, eps)
    assert simulate(inst, traj.controls).final == traj.final


def test_convince_all_single_voter_needs_order_one_over_eps():
    eps = F(1, 40)
    inst = Instance((eps,), BC(eps), 1 - 2 * eps, 1 - eps)
    traj, stages = convince_all_policy(inst)
    assert convinced_count(traj.final, inst.left, inst.right) == 1
    assert stages >= (1 - 3 * eps) / eps / 2
    assert stages <= convince_all_bound(1, eps)


def test_convince_all_precondition():
    with pytest.raises(InstanceError):
        convince_all_policy(benchmark())


def test_constant_control_halving_example():
    inst = Instance((F(1, 2),), DG(((F(1, 2), F(1, 2)),)), F(0), F(1, 2))
    traj, stages = constant_control_policy(inst, F(0), F(1, 100))
    for t, state in enumerate(traj.states):
        assert state[0] == F(1, 2 ** (t + 1))
    assert stages == 6  # 1/2**7 is the first value below 1/100
    assert stages <= constant_control_bound(F(1, 2), F(1, 100))


def test_constant_control_zero_stages_at_target():
    inst = Instance((F(1, 3),) * 2, DG(((F(1, 2), F(1, 2), F(0)),) * 2), F(0), F(1, 2))
    assert constant_control_policy(inst, F(1, 3), F(1, 100))[1] == 0


def test_constant_control_uniform_weights_log_bound():
    import math
    n = 4
    row = (F(1, n + 1),) * (n + 1)
    inst = Instance((F(0),) * n, DG((row,) * n), F(0), F(1, 2))
    delta = F(1, 100)
    _, stages = constant_control_policy(inst, F(1), delta)
    assert stages <= constant_control_bound(F(1, n + 1), delta) <= math.ceil(-(n + 1) * math.log(float(delta)))


def test_constant_control_uncontrollable():
    inst = Instance((F(0),), DG(((F(0), F(1)),)), F(0), F(1, 2))
    with pytest.raises(InstanceError):
        constant_control_policy(inst, F(1), F(1, 10))


def test_constant_control_bound_exact():
    assert constant_control_bound(F(1, 2), F(1, 100)) == 7
    assert constant_control_bound(F(1, 2), F(1, 128)) == 7
    assert constant_control_bound(F(1), F(1, 100)) == 1
