import json
from fractions import Fraction

import numpy as np
import pytest

from paveplan.network import (
    ARTERIAL,
    COLLECTOR,
    LOCAL,
    ActionKind,
    BudgetViolation,
    MaintenancePlan,
    NetworkState,
    RoadClass,
    Segment,
    condition_histogram,
    ehlos,
    halos,
    initial_state,
    load_network,
    load_plan,
    los,
    save_network,
    save_plan,
    to_cents,
)


def _flat_segment(sid, area, pqi, road_class=LOCAL):
    # Slow curve so arbitrary (pqi, age) pairs are representable.
    return Segment.from_pqi(sid, road_class, area, 0.001, 1.5, pqi)


def make_state(segments, horizon=1, budget=10**9):
    return initial_state(segments, horizon, budget)


def test_road_class_invariants():
    with pytest.raises(ValueError):
        RoadClass("Arterial", rehab_unit_cost=0.0, recon_unit_cost=10.0)
    with pytest.raises(ValueError):
        RoadClass("Arterial", rehab_unit_cost=50.0, recon_unit_cost=40.0)
    with pytest.raises(ValueError):
        RoadClass("Freeway", rehab_unit_cost=10.0, recon_unit_cost=40.0)
    assert ARTERIAL.recon_unit_cost == 200.0 and LOCAL.rehab_unit_cost == 20.0
    assert COLLECTOR.rehab_unit_cost == 30.0 and COLLECTOR.recon_unit_cost == 175.0


def test_segment_consistency_enforced():
    with pytest.raises(ValueError, match="disagree"):
        Segment(1, LOCAL, 100.0, 0.01, 2.0, pqi=5.0, effective_age=1.0)
    seg = Segment.from_pqi(1, LOCAL, 100.0, 0.01, 2.0, 5.0)
    again = Segment.from_age(1, LOCAL, 100.0, 0.01, 2.0, seg.effective_age)
    assert again.pqi == pytest.approx(5.0, abs=1e-9)


def test_los_weighted_average():
    state = make_state([_flat_segment(0, 1.0, 10.0), _flat_segment(1, 3.0, 6.0)])
    assert los(state) == pytest.approx(7.0, abs=1e-12)


def test_los_all_new_is_max():
    state = make_state([_flat_segment(i, 50.0 * (i + 1), 10.0) for i in range(5)])
    assert los(state) == pytest.approx(10.0, abs=1e-12)


def test_los_matches_extended_precision_oracle():
    rng = np.random.default_rng(5)
    segs = [
        _flat_segment(i, float(rng.uniform(10, 5000)), float(rng.uniform(0.5, 10.0)))
        for i in range(100)
    ]
    state = make_state(segs)
    num = sum(Fraction(s.area) * Fraction(s.pqi) for s in segs)
    den = sum(Fraction(s.area) for s in segs)
    assert los(state) == pytest.approx(float(num / den), abs=1e-12)


def test_los_invariant_under_area_scaling():
    rng = np.random.default_rng(6)
    pqis = rng.uniform(1, 10, size=20)
    areas = rng.uniform(100, 1000, size=20)
    s1 = make_state([_flat_segment(i, a, p) for i, (a, p) in enumerate(zip(areas, pqis))])
    s2 = make_state([_flat_segment(i, 7.5 * a, p) for i, (a, p) in enumerate(zip(areas, pqis))])
    assert los(s1) == pytest.approx(los(s2), abs=1e-12)


def test_los_empty_network_errors():
    state = make_state([_flat_segment(0, 1.0, 5.0)])
    empty = NetworkState((), 0, 1, (0,))
    with pytest.raises(ValueError, match="empty network"):
        los(empty)
    assert los(state) == 5.0


def _traj(los_values):
    return [make_state([_flat_segment(0, 1.0, v)]) for v in los_values]


def test_halos_constant_sequence():
    traj = _traj([7.0, 7.0, 7.0, 7.0])
    assert halos(traj, 3) == pytest.approx(7.0, abs=1e-12)
    assert halos(traj, 3) == pytest.approx(ehlos(traj), abs=1e-12)


def test_halos_mean_of_post_decision_states():
    traj = _traj([3.0, 6.0, 8.0])  # initial LoS is excluded
    assert halos(traj, 2) == pytest.approx(7.0, abs=1e-12)
    assert ehlos(traj) == pytest.approx(8.0, abs=1e-12)


def test_halos_random_matches_direct_mean():
    rng = np.random.default_rng(9)
    values = rng.uniform(2, 10, size=13)
    traj = _traj(values)
    assert halos(traj, 12) == pytest.approx(float(np.mean(values[1:])), abs=1e-12)


def test_halos_short_trajectory_errors():
    with pytest.raises(ValueError):
        halos(_traj([5.0, 5.0]), 2)
    with pytest.raises(ValueError):
        ehlos([])


def test_histogram_top_bin_includes_max():
    state = make_state([_flat_segment(0, 10.0, 10.0)])
    hist = condition_histogram(state)
    assert hist[-1] == 1.0
    assert hist[:-1].sum() == 0.0


def test_histogram_two_segments():
    state = make_state([_flat_segment(0, 5.0, 2.5), _flat_segment(1, 5.0, 7.5)])
    hist = condition_histogram(state)
    assert hist[2] == pytest.approx(0.5)
    assert hist[7] == pytest.approx(0.5)
    assert hist.sum() == pytest.approx(1.0, abs=1e-12)


def test_histogram_matches_counting_oracle():
    rng = np.random.default_rng(10)
    segs = [
        _flat_segment(i, float(rng.uniform(1, 100)), float(rng.uniform(0.1, 10.0)))
        for i in range(200)
    ]
    state = make_state(segs)
    hist = condition_histogram(state, bins=10)
    oracle = np.zeros(10)
    for s in segs:
        b = min(int(s.pqi // 1.0), 9)
        oracle[b] += s.area
    oracle /= oracle.sum()
    np.testing.assert_allclose(hist, oracle, atol=1e-12)
    assert (hist >= 0).all()
    assert hist.sum() == pytest.approx(1.0, abs=1e-12)


def test_network_state_invariants():
    seg = _flat_segment(0, 1.0, 5.0)
    with pytest.raises(ValueError):
        NetworkState((seg,), year=3, horizon=2, budgets_cents=(1, 1))
    with pytest.raises(ValueError):
        NetworkState((seg,), year=0, horizon=2, budgets_cents=(1,))
    with pytest.raises(ValueError):
        NetworkState((seg,), year=1, horizon=2, budgets_cents=(100, 100), spent_cents=150)
    ok = NetworkState((seg,), year=1, horizon=2, budgets_cents=(100, 100), spent_cents=90)
    assert ok.total_budget_cents == 200


def test_plan_validation_rejects_one_cent_overrun():
    plan = MaintenancePlan(
        segment_ids=(0, 1),
        actions=np.array([[1, 0], [0, 2]], dtype=np.int8),
        rehab_cents=(500, 0),
        recon_cents=(0, 1200),
    )
    plan.validate_budgets([500, 1200])  # exactly at budget is fine
    with pytest.raises(BudgetViolation):
        plan.validate_budgets([499, 1200])
    with pytest.raises(BudgetViolation):
        plan.validate_budgets([500, 1199])


def test_to_cents():
    assert to_cents(200.0) == 20000
    assert to_cents(0.1) == 10
    assert to_cents(1234.56) == 123456


def test_network_file_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(12)
    segs = [
        Segment.from_pqi(
            i,
            (ARTERIAL, COLLECTOR, LOCAL)[i % 3],
            float(rng.uniform(50, 2000)),
            float(rng.uniform(1e-4, 0.02)),
            float(rng.uniform(1.0, 2.5)),
            float(rng.uniform(2.0, 10.0)),
        )
        for i in range(40)
    ]
    state = initial_state(segs, horizon=5, annual_budget_cents=[10**8] * 5)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_network(state, p1)
    loaded = load_network(p1)
    save_network(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert loaded.segments == state.segments
    assert loaded.budgets_cents == state.budgets_cents


def test_load_network_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValueError):
        load_network(bad)
    bad.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(ValueError, match="not a network file"):
        load_network(bad)


def test_plan_file_round_trip(tmp_path):
    plan = MaintenancePlan(
        segment_ids=(3, 4, 5),
        actions=np.array([[0, 1], [2, 0], [0, 0]], dtype=np.int8),
        rehab_cents=(0, 777),
        recon_cents=(123456, 0),
    )
    path = tmp_path / "plan.json"
    save_plan(plan, [6.0, 5.5, 5.25], path, meta={"strategy": "test"})
    got, series, meta = load_plan(path)
    assert got.segment_ids == plan.segment_ids
    assert (got.actions == plan.actions).all()
    assert got.rehab_cents == plan.rehab_cents and got.recon_cents == plan.recon_cents
    assert series == [6.0, 5.5, 5.25]
    assert meta["strategy"] == "test"
