"""Comparison strategies: Worst-First, Progressive LP, and the one-year hybrid.

All baselines are deterministic functions of the network and produce the same
(plan, trajectory) shape as the learned planner, so they share the report and
persistence paths.
"""

from __future__ import annotations

import numpy as np

from .agent import Trainer
from .allocator import multichoice_allocate
from .deterioration import rehab_boost, weibull_age, weibull_pqi
from .network import ActionKind, MaintenancePlan, NetworkState
from .simulate import ArrayNetwork


def _resolve(network: NetworkState, horizon, budgets_cents) -> NetworkState:
    if horizon is None and budgets_cents is None:
        return network
    horizon = network.horizon if horizon is None else int(horizon)
    if budgets_cents is None:
        budgets = network.budgets_cents[:horizon]
        if len(budgets) < horizon:
            budgets = budgets + (network.budgets_cents[-1],) * (horizon - len(budgets))
    else:
        budgets = tuple(int(b) for b in budgets_cents)
    return NetworkState(
        segments=network.segments,
        year=network.year,
        horizon=horizon,
        budgets_cents=budgets,
        spent_cents=network.spent_cents,
        pqi_max=network.pqi_max,
    )


def _finish(arr: ArrayNetwork, actions, rehab_cents, recon_cents, states):
    plan = MaintenancePlan(
        segment_ids=tuple(int(i) for i in arr.ids),
        actions=actions,
        rehab_cents=tuple(rehab_cents),
        recon_cents=tuple(recon_cents),
    )
    plan.validate_budgets([int(b) for b in arr.budgets_cents[states[0].year :]])
    return plan, states


def worst_first_plan(
    network: NetworkState, horizon: int | None = None, budgets_cents=None
) -> tuple[MaintenancePlan, list[NetworkState]]:
    """Reconstruct the lowest-condition segments first, every year, while the
    budget lasts. Ties break on segment id."""
    state = _resolve(network, horizon, budgets_cents)
    arr = ArrayNetwork.from_state(state)
    h = arr.horizon - arr.year
    actions = np.zeros((arr.n, h), dtype=np.int8)
    rehab_cents, recon_cents = [], []
    states = [state]
    for t in range(h):
        remaining = int(arr.budgets_cents[arr.year])
        year_actions = np.zeros(arr.n, dtype=np.int8)
        for i in np.lexsort((arr.ids, arr.pqis)):
            cost = int(arr.recon_cost_cents[i])
            if cost <= remaining:
                year_actions[i] = ActionKind.RECONSTRUCTION
                remaining -= cost
        r1, r2 = arr.step(year_actions)
        actions[:, t] = year_actions
        rehab_cents.append(r1)
        recon_cents.append(r2)
        states.append(arr.to_state())
    return _finish(arr, actions, rehab_cents, recon_cents, states)


def _one_year_menus(arr: ArrayNetwork):
    """Per-segment menus of (action, next-year weighted condition gain, cost)."""
    f0 = arr.pqi_if_nothing()
    boosted = rehab_boost(arr.pqis, arr.rehab_effect)
    f1 = weibull_pqi(arr.lams, arr.ks, weibull_age(arr.lams, arr.ks, boosted, arr.pqi_max) + 1.0, arr.pqi_max)
    f2 = weibull_pqi(arr.lams, arr.ks, 1.0, arr.pqi_max)
    gain1 = arr.areas * (f1 - f0)
    gain2 = arr.areas * (f2 - f0)
    menus = {}
    for i in range(arr.n):
        menus[int(arr.ids[i])] = [
            (ActionKind.DO_NOTHING, 0.0, 0),
            (ActionKind.REHABILITATION, float(gain1[i]), int(arr.rehab_cost_cents[i])),
            (ActionKind.RECONSTRUCTION, float(gain2[i]), int(arr.recon_cost_cents[i])),
        ]
    return menus


def progressive_lp_plan(
    network: NetworkState, horizon: int | None = None, budgets_cents=None
) -> tuple[MaintenancePlan, list[NetworkState]]:
    """Myopic plan: each year pick the action mix that maximizes next-year
    LoS under that year's budget, then repeat from the realized state."""
    state = _resolve(network, horizon, budgets_cents)
    arr = ArrayNetwork.from_state(state)
    h = arr.horizon - arr.year
    index_of = {int(sid): i for i, sid in enumerate(arr.ids)}
    actions = np.zeros((arr.n, h), dtype=np.int8)
    rehab_cents, recon_cents = [], []
    states = [state]
    for t in range(h):
        chosen = multichoice_allocate(_one_year_menus(arr), int(arr.budgets_cents[arr.year]))
        year_actions = np.zeros(arr.n, dtype=np.int8)
        for sid, action in chosen.items():
            year_actions[index_of[sid]] = action
        r1, r2 = arr.step(year_actions)
        actions[:, t] = year_actions
        rehab_cents.append(r1)
        recon_cents.append(r2)
        states.append(arr.to_state())
    return _finish(arr, actions, rehab_cents, recon_cents, states)


def hybrid_first_year_plan(
    trainer: Trainer,
    network: NetworkState,
    horizon: int | None = None,
    budgets_cents=None,
) -> tuple[MaintenancePlan, list[NetworkState]]:
    """Learned policy for the first year, then Progressive LP to the horizon."""
    state = _resolve(network, horizon, budgets_cents)
    arr = ArrayNetwork.from_state(state)
    first_actions = trainer.deterministic_year_actions(arr)
    r1, r2 = arr.step(first_actions)
    after_first = arr.to_state()
    rest_plan, rest_states = progressive_lp_plan(after_first)
    actions = np.concatenate([first_actions[:, None], rest_plan.actions], axis=1).astype(np.int8)
    rehab_cents = (r1, *rest_plan.rehab_cents)
    recon_cents = (r2, *rest_plan.recon_cents)
    states = [state, *rest_states]
    return _finish(arr, actions, rehab_cents, recon_cents, states)
