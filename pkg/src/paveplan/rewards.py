"""Local cost-normalized rewards, global rewards, and intervention costs.

The local reward is the improvement in condition per dollar of unit cost
relative to doing nothing, which makes action values comparable across
segments of very different sizes and classes. The global reward is the
normalized network LoS after the year's transitions, shared by every segment.
"""

from __future__ import annotations

from dataclasses import dataclass

from .deterioration import DEFAULT_REHAB, RehabEffect, transition
from .network import ActionKind, NetworkState, RoadClass, Segment, los, to_cents


def unit_cost(road_class: RoadClass, action: ActionKind) -> float:
    """Dollars per square meter for ``action`` on this class; 0 for DoNothing."""
    if action == ActionKind.DO_NOTHING:
        return 0.0
    if action == ActionKind.REHABILITATION:
        return road_class.rehab_unit_cost
    if action == ActionKind.RECONSTRUCTION:
        return road_class.recon_unit_cost
    raise ValueError(f"unknown action {action!r}")


def action_cost_cents(segment: Segment, action: ActionKind) -> int:
    """Total intervention cost in cents: area times the class unit cost."""
    if action == ActionKind.DO_NOTHING:
        return 0
    return to_cents(segment.area * unit_cost(segment.road_class, action))


def cost_normalized_reward(pqi_with_action: float, pqi_do_nothing: float, unit_cost_dollars: float) -> float:
    """Condition improvement over doing nothing, per dollar of unit cost."""
    if unit_cost_dollars <= 0:
        raise ValueError("unit cost must be positive for a paid action")
    return (pqi_with_action - pqi_do_nothing) / unit_cost_dollars


def local_reward(segment: Segment, action: ActionKind, effect: RehabEffect = DEFAULT_REHAB) -> float:
    """Cost-normalized one-step reward; exactly 0 for DoNothing."""
    if action == ActionKind.DO_NOTHING:
        return 0.0
    after_action = transition(segment, action, effect).pqi
    after_nothing = transition(segment, ActionKind.DO_NOTHING, effect).pqi
    return cost_normalized_reward(after_action, after_nothing, unit_cost(segment.road_class, action))


def global_reward(next_state: NetworkState) -> float:
    """Network LoS after the year's transitions, normalized to [0, 1]."""
    return los(next_state) / next_state.pqi_max


@dataclass(frozen=True)
class RewardRecord:
    """The rewards and cost observed for one segment-year."""

    action: ActionKind
    local: float
    global_: float
    cost_cents: int

    def __post_init__(self):
        if self.cost_cents < 0:
            raise ValueError("cost must be nonnegative")
        # A paid action can earn exactly 0 (rehabilitation at the cap), so only
        # the DoNothing direction is enforced.
        if self.action == ActionKind.DO_NOTHING and (self.local != 0.0 or self.cost_cents != 0):
            raise ValueError("DoNothing carries zero reward and zero cost")
