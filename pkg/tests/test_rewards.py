import numpy as np
import pytest

from paveplan.network import ARTERIAL, LOCAL, ActionKind, RoadClass, Segment, initial_state
from paveplan.rewards import (
    RewardRecord,
    action_cost_cents,
    cost_normalized_reward,
    global_reward,
    local_reward,
    unit_cost,
)


def _segment(area=100.0, pqi=6.0, road_class=LOCAL, lam=0.01, k=2.0, sid=0):
    return Segment.from_pqi(sid, road_class, area, lam, k, pqi)


def test_do_nothing_reward_is_exactly_zero():
    assert local_reward(_segment(), ActionKind.DO_NOTHING) == 0.0


def test_cost_normalized_reward_hand_case():
    # Fixed transition outputs: (7.0 - 5.5) / 20 = 0.075.
    assert cost_normalized_reward(7.0, 5.5, 20.0) == pytest.approx(0.075, abs=1e-15)


def test_cost_normalized_reward_rejects_free_actions():
    with pytest.raises(ValueError):
        cost_normalized_reward(7.0, 5.5, 0.0)


def test_reward_independent_of_area():
    small = local_reward(_segment(area=10.0), ActionKind.REHABILITATION)
    large = local_reward(_segment(area=10_000.0), ActionKind.REHABILITATION)
    assert small == large


def test_reward_scales_inversely_with_unit_cost():
    cheap = RoadClass("Local", rehab_unit_cost=10.0, recon_unit_cost=150.0)
    dear = RoadClass("Local", rehab_unit_cost=20.0, recon_unit_cost=150.0)
    r_cheap = local_reward(_segment(road_class=cheap), ActionKind.REHABILITATION)
    r_dear = local_reward(_segment(road_class=dear), ActionKind.REHABILITATION)
    assert r_cheap == pytest.approx(2.0 * r_dear, rel=1e-12)


def test_rehabilitation_reward_nonnegative():
    rng = np.random.default_rng(2)
    for _ in range(200):
        seg = _segment(
            pqi=float(rng.uniform(0.5, 10.0)),
            lam=float(rng.uniform(1e-4, 0.03)),
            k=float(rng.uniform(0.9, 2.5)),
        )
        assert local_reward(seg, ActionKind.REHABILITATION) >= 0.0


def test_action_cost_paper_endpoints():
    arterial = _segment(area=1000.0, road_class=ARTERIAL)
    assert action_cost_cents(arterial, ActionKind.RECONSTRUCTION) == 200_000 * 100
    local_seg = _segment(area=500.0, road_class=LOCAL)
    assert action_cost_cents(local_seg, ActionKind.REHABILITATION) == 10_000 * 100
    assert action_cost_cents(arterial, ActionKind.DO_NOTHING) == 0


def test_unit_cost_lookup():
    assert unit_cost(ARTERIAL, ActionKind.REHABILITATION) == 40.0
    assert unit_cost(ARTERIAL, ActionKind.RECONSTRUCTION) == 200.0
    assert unit_cost(ARTERIAL, ActionKind.DO_NOTHING) == 0.0


def _one_segment_state(pqi):
    return initial_state([_segment(pqi=pqi)], horizon=1, annual_budget_cents=0)


def test_global_reward_values():
    assert global_reward(_one_segment_state(10.0)) == pytest.approx(1.0, abs=1e-12)
    assert global_reward(_one_segment_state(5.62)) == pytest.approx(0.562, abs=1e-12)


def test_global_reward_permutation_invariant():
    rng = np.random.default_rng(8)
    segs = [
        _segment(area=float(rng.uniform(10, 500)), pqi=float(rng.uniform(1, 10)), sid=i)
        for i in range(30)
    ]
    fwd = initial_state(segs, 1, 0)
    rev = initial_state(list(reversed(segs)), 1, 0)
    assert global_reward(fwd) == pytest.approx(global_reward(rev), abs=1e-12)


def test_reward_record_invariants():
    RewardRecord(ActionKind.REHABILITATION, local=0.05, global_=0.6, cost_cents=1000)
    # A capped rehabilitation may legitimately earn zero.
    RewardRecord(ActionKind.REHABILITATION, local=0.0, global_=0.6, cost_cents=1000)
    with pytest.raises(ValueError):
        RewardRecord(ActionKind.DO_NOTHING, local=0.1, global_=0.6, cost_cents=0)
    with pytest.raises(ValueError):
        RewardRecord(ActionKind.REHABILITATION, local=0.1, global_=0.6, cost_cents=-5)
