import itertools

import numpy as np
import pytest

from paveplan.allocator import (
    AllocationResult,
    Candidate,
    exact_knapsack,
    greedy_knapsack,
    multichoice_allocate,
)
from paveplan.network import ActionKind

REHAB = ActionKind.REHABILITATION
RECON = ActionKind.RECONSTRUCTION
NOTHING = ActionKind.DO_NOTHING


def _cands(items):
    """items: iterable of (segment_id, score, cost_cents)."""
    return [Candidate(sid, REHAB, score, cost) for sid, score, cost in items]


def random_instance(rng, n):
    """Costs in whole dollars keep the DP oracle's integer rescaling small."""
    items = [
        (i, float(rng.uniform(0.05, 1.0)), int(rng.integers(1, 200)) * 100)
        for i in range(n)
    ]
    total = sum(c for _, _, c in items)
    budget = int(rng.uniform(0.3, 0.7) * total)
    return _cands(items), budget


# ---------------------------------------------------------------------------
# greedy_knapsack
# ---------------------------------------------------------------------------


def test_greedy_unconstrained_funds_all_positive():
    cands = _cands([(0, 0.5, 100), (1, 0.2, 300), (2, 0.9, 50)])
    cands.append(Candidate(3, RECON, -0.1, 400))  # negative score, never funded
    result = greedy_knapsack(cands, budget_cents=10_000)
    assert result.funded == {0, 1, 2}
    assert result.total_cost_cents == 450


def test_greedy_zero_budget_funds_nothing():
    cands = _cands([(0, 0.5, 100), (1, 0.9, 1)])
    result = greedy_knapsack(cands, budget_cents=0)
    assert result.funded == frozenset()
    assert result.total_cost_cents == 0
    assert result.objective_value == 0.0


def test_greedy_duplicate_ids_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        greedy_knapsack(_cands([(0, 0.5, 100), (0, 0.4, 50)]), 1000)


def test_greedy_skips_unaffordable_and_continues():
    cands = _cands([(0, 0.9, 800), (1, 0.5, 300), (2, 0.4, 200)])
    result = greedy_knapsack(cands, budget_cents=600)
    # Highest score does not fit; the next two do.
    assert result.funded == {1, 2}


def test_greedy_deterministic_with_seed():
    rng = np.random.default_rng(0)
    cands, budget = random_instance(rng, 20)
    a = greedy_knapsack(cands, budget, noise_sigma=0.4, rng=123)
    b = greedy_knapsack(cands, budget, noise_sigma=0.4, rng=123)
    assert a == b
    c = greedy_knapsack(cands, budget, noise_sigma=0.4, rng=124)
    assert isinstance(c, AllocationResult)


def test_greedy_feasibility_and_maximality():
    rng = np.random.default_rng(1)
    for _ in range(100):
        cands, budget = random_instance(rng, 15)
        result = greedy_knapsack(cands, budget)
        assert result.total_cost_cents <= budget
        remaining = budget - result.total_cost_cents
        for cand in cands:
            if cand.segment_id not in result.funded and cand.score > 0:
                assert cand.cost_cents > remaining


def test_greedy_objective_monotone_in_budget():
    rng = np.random.default_rng(2)
    for _ in range(50):
        cands, budget = random_instance(rng, 12)
        obj_small = greedy_knapsack(cands, budget).objective_value
        obj_large = greedy_knapsack(cands, budget + 50_000).objective_value
        assert obj_large >= obj_small - 1e-12


def test_greedy_near_optimal_on_random_instances():
    rng = np.random.default_rng(3)
    hits = 0
    for _ in range(200):
        cands, budget = random_instance(rng, 25)
        greedy = greedy_knapsack(cands, budget)
        exact = exact_knapsack(cands, budget)
        assert greedy.total_cost_cents <= budget
        assert greedy.objective_value <= exact.objective_value + 1e-9
        if greedy.objective_value >= 0.95 * exact.objective_value:
            hits += 1
    assert hits >= 190


# ---------------------------------------------------------------------------
# exact_knapsack
# ---------------------------------------------------------------------------


def test_exact_knapsack_classic_case():
    # Values (score * cost): 60, 100, 120; optimum is items 2 and 3 at 220.
    cands = _cands([(1, 6.0, 10), (2, 5.0, 20), (3, 4.0, 30)])
    result = exact_knapsack(cands, budget_cents=50)
    assert result.funded == {2, 3}
    assert result.objective_value == pytest.approx(220.0)
    assert result.total_cost_cents == 50
    # Greedy ranks by score and misses the optimum here.
    greedy = greedy_knapsack(cands, 50)
    assert greedy.funded == {1, 2}
    assert greedy.objective_value == pytest.approx(160.0)


def test_exact_knapsack_single_affordable_item():
    result = exact_knapsack(_cands([(7, 0.5, 400)]), budget_cents=400)
    assert result.funded == {7}


def test_exact_knapsack_everything_too_expensive():
    result = exact_knapsack(_cands([(0, 0.5, 900), (1, 0.9, 901)]), budget_cents=899)
    assert result.funded == frozenset()
    assert result.objective_value == 0.0


def test_exact_knapsack_scale_guard():
    cands = [
        Candidate(i, REHAB, 0.5, 1_000_001 + 2 * i) for i in range(60)
    ]
    with pytest.raises(ValueError, match="oracle scale exceeded"):
        exact_knapsack(cands, budget_cents=50_000_000)


def test_exact_matches_bruteforce_enumeration():
    rng = np.random.default_rng(4)
    for _ in range(40):
        cands, budget = random_instance(rng, 10)
        exact = exact_knapsack(cands, budget)
        best = 0.0
        for mask in itertools.product((0, 1), repeat=len(cands)):
            cost = sum(c.cost_cents for c, m in zip(cands, mask) if m)
            if cost <= budget:
                value = sum(c.score * c.cost_cents for c, m in zip(cands, mask) if m)
                best = max(best, value)
        assert exact.objective_value == pytest.approx(best, rel=1e-12)


# ---------------------------------------------------------------------------
# multichoice_allocate
# ---------------------------------------------------------------------------


def _menu(rehab_benefit, rehab_cost, recon_benefit, recon_cost):
    return [
        (NOTHING, 0.0, 0),
        (REHAB, rehab_benefit, rehab_cost),
        (RECON, recon_benefit, recon_cost),
    ]


def test_multichoice_requires_do_nothing():
    with pytest.raises(ValueError, match="DoNothing"):
        multichoice_allocate({0: [(REHAB, 5.0, 10)]}, 100)


def test_multichoice_infinite_budget_takes_argmax_benefit():
    menus = {
        0: _menu(10.0, 5, 12.0, 50),
        1: _menu(3.0, 5, 2.0, 50),
        2: _menu(0.0, 5, 0.0, 50),  # nothing worth doing
    }
    chosen = multichoice_allocate(menus, budget_cents=10**9)
    assert chosen == {0: RECON, 1: REHAB, 2: NOTHING}


def test_multichoice_small_budget_prefers_efficiency():
    chosen = multichoice_allocate({0: _menu(10.0, 5, 12.0, 50)}, budget_cents=20)
    assert chosen == {0: REHAB}


def test_multichoice_exactly_one_action_per_segment_and_feasible():
    rng = np.random.default_rng(5)
    for _ in range(50):
        menus = {
            i: _menu(
                float(rng.uniform(0, 10)),
                int(rng.integers(1, 50)),
                float(rng.uniform(0, 20)),
                int(rng.integers(30, 120)),
            )
            for i in range(12)
        }
        budget = int(rng.integers(0, 400))
        chosen = multichoice_allocate(menus, budget)
        assert set(chosen) == set(menus)
        spend = 0
        for sid, action in chosen.items():
            costs = {a: c for a, _, c in menus[sid]}
            spend += costs[action]
        assert spend <= budget


def _enumerate_best(menus, budget):
    seg_ids = list(menus)
    best = 0.0
    for combo in itertools.product(*(menus[s] for s in seg_ids)):
        cost = sum(c for _, _, c in combo)
        if cost <= budget:
            best = max(best, sum(b for _, b, _ in combo))
    return best


def test_multichoice_near_optimal_on_small_instances():
    rng = np.random.default_rng(6)
    hits = 0
    for _ in range(200):
        n = int(rng.integers(3, 9))
        menus = {
            i: _menu(
                float(rng.uniform(0.5, 10)),
                int(rng.integers(5, 60)),
                float(rng.uniform(0.5, 25)),
                int(rng.integers(40, 160)),
            )
            for i in range(n)
        }
        total = sum(c for m in menus.values() for _, _, c in m)
        budget = int(rng.uniform(0.2, 0.6) * total)
        chosen = multichoice_allocate(menus, budget)
        got = sum(
            {a: b for a, b, _ in menus[s]}[act] for s, act in chosen.items()
        )
        best = _enumerate_best(menus, budget)
        assert got <= best + 1e-9
        if got >= 0.95 * best:
            hits += 1
    assert hits >= 190
