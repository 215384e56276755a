"""Budget-constrained selection of candidate interventions.

Three entry points:

* ``greedy_knapsack`` ranks one candidate per segment by (optionally
  noise-perturbed) score and funds down the ranking while the annual budget
  lasts. This is the allocation step used during training and rollout.
* ``exact_knapsack`` solves the same 0/1 problem optimally by dynamic
  programming over integer cents. It exists as a test oracle for small
  instances only.
* ``multichoice_allocate`` picks exactly one action per segment from a menu,
  greedily by incremental benefit/cost ratio on each segment's efficient
  frontier.

The knapsack item value for a candidate is ``score * cost``: scores are
improvement-per-dollar estimates, so multiplying by cost recovers the total
expected improvement the candidate contributes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .network import ActionKind

# Guard for the DP oracle: value table cells (items x budget states).
_ORACLE_CELL_LIMIT = 50_000_000


@dataclass(frozen=True)
class Candidate:
    """One segment's proposed action with its value score and price."""

    segment_id: int
    action: ActionKind
    score: float
    cost_cents: int

    def __post_init__(self):
        if self.cost_cents < 0:
            raise ValueError("cost must be nonnegative")
        if self.action == ActionKind.DO_NOTHING and self.cost_cents != 0:
            raise ValueError("DoNothing candidates are free")


@dataclass(frozen=True)
class AllocationResult:
    funded: frozenset[int]
    total_cost_cents: int
    objective_value: float


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def greedy_funding_core(
    ids: np.ndarray,
    ranking_scores: np.ndarray,
    costs: np.ndarray,
    budget_cents: int,
) -> np.ndarray:
    """Boolean funded mask: rank by score desc, fund whatever still fits.

    Candidates with nonpositive ranking score are never funded. Ties break by
    lower cost, then lower segment id.
    """
    order = np.lexsort((ids, costs, -ranking_scores))
    funded = np.zeros(len(ids), dtype=bool)
    remaining = int(budget_cents)
    for idx in order:
        if ranking_scores[idx] <= 0.0:
            break  # sorted descending: everything after is nonpositive too
        c = int(costs[idx])
        if c <= remaining:
            funded[idx] = True
            remaining -= c
    return funded


def greedy_knapsack(
    candidates: Sequence[Candidate],
    budget_cents: int,
    noise_sigma: float = 0.0,
    rng=None,
) -> AllocationResult:
    """Greedy ranking allocation over at most one candidate per segment.

    Each score is perturbed by a factor (1 + e) with e ~ Normal(0, noise_sigma)
    before ranking, which lets slightly lower-valued actions win occasionally
    during exploration. With ``noise_sigma=0`` the result is deterministic.
    Unfunded segments are understood to default to DoNothing.
    """
    if budget_cents < 0:
        raise ValueError("budget must be nonnegative")
    ids = np.array([c.segment_id for c in candidates], dtype=np.int64)
    if len(np.unique(ids)) != len(ids):
        raise ValueError("duplicate segment ids among candidates")
    scores = np.array([c.score for c in candidates], dtype=float)
    costs = np.array([c.cost_cents for c in candidates], dtype=np.int64)

    if noise_sigma > 0.0:
        eps = _as_rng(rng).normal(0.0, noise_sigma, size=len(candidates))
        ranking = scores * (1.0 + eps)
    else:
        ranking = scores

    funded = greedy_funding_core(ids, ranking, costs, budget_cents)
    return AllocationResult(
        funded=frozenset(int(i) for i in ids[funded]),
        total_cost_cents=int(costs[funded].sum()) if funded.any() else 0,
        objective_value=float(np.dot(scores[funded], costs[funded])),
    )


def exact_knapsack(candidates: Sequence[Candidate], budget_cents: int) -> AllocationResult:
    """Optimal 0/1 allocation by dynamic programming over integer cents.

    Test oracle for small instances; raises "oracle scale exceeded" when the
    DP table would be too large. Items priced above the budget, or with
    nonpositive value, are never funded; free items with positive value are
    always funded.
    """
    if budget_cents < 0:
        raise ValueError("budget must be nonnegative")
    ids = [c.segment_id for c in candidates]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate segment ids among candidates")

    values = [c.score * c.cost_cents for c in candidates]
    forced = [
        i for i, c in enumerate(candidates) if c.cost_cents == 0 and values[i] > 0.0
    ]
    dp_items = [
        i
        for i, c in enumerate(candidates)
        if 0 < c.cost_cents <= budget_cents and values[i] > 0.0
    ]

    funded_idx = list(forced)
    if dp_items:
        costs = np.array([candidates[i].cost_cents for i in dp_items], dtype=np.int64)
        g = int(np.gcd.reduce(costs))
        scaled = costs // g
        width = int(min(budget_cents // g, scaled.sum())) + 1
        if len(dp_items) * width > _ORACLE_CELL_LIMIT:
            raise ValueError("oracle scale exceeded")

        val = np.zeros(width)
        take = np.zeros((len(dp_items), width), dtype=bool)
        for row, i in enumerate(dp_items):
            c = int(scaled[row])
            v = values[i]
            new = val.copy()
            if c < width:
                shifted = val[:-c] + v
                improved = shifted > new[c:]
                new[c:][improved] = shifted[improved]
                take[row, c:] = improved
            val = new

        j = int(np.argmax(val))
        for row in range(len(dp_items) - 1, -1, -1):
            if take[row, j]:
                funded_idx.append(dp_items[row])
                j -= int(scaled[row])

    total = sum(candidates[i].cost_cents for i in funded_idx)
    objective = math.fsum(values[i] for i in funded_idx)
    return AllocationResult(
        funded=frozenset(candidates[i].segment_id for i in funded_idx),
        total_cost_cents=total,
        objective_value=objective,
    )


def _frontier(options: Sequence[tuple[ActionKind, float, int]]):
    """Efficient concave frontier of (cost, benefit) points, from (0, 0).

    Returns the frontier as a list of (cost, benefit, action) starting at the
    DoNothing point, with strictly decreasing incremental benefit/cost ratios.
    """
    # Cheapest first; on cost ties prefer higher benefit, then lower action code.
    ordered = sorted(options, key=lambda o: (o[2], -o[1], int(o[0])))
    frontier = [(0, 0.0, ActionKind.DO_NOTHING)]
    for action, benefit, cost in ordered:
        if cost <= 0 or benefit <= frontier[-1][1]:
            continue  # dominated by a cheaper-or-equal point
        while len(frontier) >= 2:
            c1, b1, _ = frontier[-2]
            c2, b2, _ = frontier[-1]
            # Keep the hull concave: drop the middle point when it lies on or
            # below the segment joining its neighbours.
            if (benefit - b1) * (c2 - c1) >= (b2 - b1) * (cost - c1):
                frontier.pop()
            else:
                break
        frontier.append((cost, benefit, action))
    return frontier


# Below this many (segment, option) pairs the allocator runs a swap-based
# local search after the greedy; above it the fragmentation gap is negligible
# and only the cheap fill pass runs.
_SWAP_SEARCH_LIMIT = 600


class _Selection:
    """Mutable working state of a multiple-choice allocation."""

    def __init__(self, menus, budget_cents: int):
        self.menus = menus
        self.remaining = int(budget_cents)
        self.chosen = {s: ActionKind.DO_NOTHING for s in menus}
        self.spent = {s: 0 for s in menus}
        self.benefit = {s: 0.0 for s in menus}

    def set(self, seg_id, action, benefit, cost) -> None:
        self.remaining += self.spent[seg_id] - cost
        self.chosen[seg_id] = action
        self.spent[seg_id] = cost
        self.benefit[seg_id] = benefit

    def total_benefit(self) -> float:
        return math.fsum(self.benefit.values())

    def fill(self) -> None:
        """Spend leftover budget on whole-option upgrades, best gain first."""
        while True:
            best = None
            for seg_id, options in self.menus.items():
                for action, benefit, cost in options:
                    gain = benefit - self.benefit[seg_id]
                    extra = cost - self.spent[seg_id]
                    if gain <= 0 or extra > self.remaining:
                        continue
                    key = (-gain, extra, seg_id, int(action))
                    if best is None or key < best[0]:
                        best = (key, seg_id, action, benefit, cost)
            if best is None:
                return
            self.set(*best[1:])

    def best_swap(self):
        """Most profitable (downgrade one segment, upgrade another) move."""
        best = None
        for j, options_j in self.menus.items():
            for a_j, b_j, c_j in options_j:
                freed = self.spent[j] - c_j
                loss = self.benefit[j] - b_j
                if freed <= 0:
                    continue
                for i, options_i in self.menus.items():
                    if i == j:
                        continue
                    for a_i, b_i, c_i in options_i:
                        gain = b_i - self.benefit[i]
                        extra = c_i - self.spent[i]
                        if gain <= loss or extra > self.remaining + freed:
                            continue
                        key = (loss - gain, extra - freed, j, i)
                        if best is None or key < best[0]:
                            best = (key, (j, a_j, b_j, c_j), (i, a_i, b_i, c_i))
        return best


def _ratio_base(menus, budget_cents: int) -> _Selection:
    """Frontier greedy: fund increments by benefit/cost ratio, best first."""
    increments = []
    for seg_id, options in menus.items():
        front = _frontier(options)
        for step in range(1, len(front)):
            c_prev, b_prev, _ = front[step - 1]
            c, b, action = front[step]
            inc_cost = c - c_prev
            ratio = (b - b_prev) / inc_cost
            increments.append((ratio, inc_cost, seg_id, step, c, b, action))
    increments.sort(key=lambda it: (-it[0], it[1], it[2], int(it[6])))

    sel = _Selection(menus, budget_cents)
    level = {s: 0 for s in menus}
    for ratio, inc_cost, seg_id, step, cost, benefit, action in increments:
        if ratio <= 0:
            break
        if level[seg_id] != step - 1:
            continue  # predecessor increment was skipped
        if inc_cost <= sel.remaining:
            level[seg_id] = step
            sel.set(seg_id, action, benefit, cost)
    return sel


def _benefit_base(menus, budget_cents: int) -> _Selection:
    """Alternative base: fund whole options by absolute benefit, best first."""
    options = [
        (b, c, seg_id, a) for seg_id, menu in menus.items() for a, b, c in menu if b > 0
    ]
    options.sort(key=lambda o: (-o[0], o[1], o[2], int(o[3])))
    sel = _Selection(menus, budget_cents)
    for benefit, cost, seg_id, action in options:
        gain = benefit - sel.benefit[seg_id]
        extra = cost - sel.spent[seg_id]
        if gain > 0 and extra <= sel.remaining:
            sel.set(seg_id, action, benefit, cost)
    return sel


def multichoice_allocate(
    menus: Mapping[int, Sequence[tuple[ActionKind, float, int]]],
    budget_cents: int,
) -> dict[int, ActionKind]:
    """Pick exactly one action per segment under a shared budget.

    Each menu must include the (DoNothing, 0, 0) option. Two greedy bases are
    built (by incremental benefit/cost ratio on each segment's efficient
    frontier, and by absolute benefit), each is polished with a leftover
    budget fill pass, and the better one wins. On small instances, where the
    fragmentation gap of a greedy is material, a swap-based local search (one
    downgrade paying for a better upgrade elsewhere) also runs.
    """
    if budget_cents < 0:
        raise ValueError("budget must be nonnegative")
    n_options = 0
    for seg_id, options in menus.items():
        has_nothing = any(
            a == ActionKind.DO_NOTHING and benefit == 0 and cost == 0
            for a, benefit, cost in options
        )
        if not has_nothing:
            raise ValueError(f"segment {seg_id}: menu is missing the DoNothing option")
        n_options += len(options)

    best: _Selection | None = None
    for base in (_ratio_base(menus, budget_cents), _benefit_base(menus, budget_cents)):
        base.fill()
        if n_options <= _SWAP_SEARCH_LIMIT:
            while True:
                move = base.best_swap()
                if move is None:
                    break
                _, down, up = move
                base.set(*down)
                base.set(*up)
                base.fill()
        if best is None or base.total_benefit() > best.total_benefit():
            best = base
    return best.chosen
