"""Weibull condition dynamics and intervention effects.

The one-step transition covers both the intervention (if any) and the year of
deterioration that follows it, so the result of an action in year t is the
condition observed at the start of year t+1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .network import PQI_MAX, ActionKind, Segment


def weibull_pqi(lam, k, age, pqi_max: float = PQI_MAX):
    """Condition after ``age`` years on the curve. Accepts scalars or arrays."""
    return pqi_max * np.exp(-lam * np.asarray(age, dtype=float) ** k)


def weibull_age(lam, k, pqi, pqi_max: float = PQI_MAX):
    """Age at which the curve passes through ``pqi``. Accepts scalars or arrays."""
    return (-np.log(np.asarray(pqi, dtype=float) / pqi_max) / lam) ** (1.0 / np.asarray(k, dtype=float))


@dataclass(frozen=True)
class WeibullCurve:
    lam: float
    k: float
    pqi_max: float = PQI_MAX

    def __post_init__(self):
        if self.lam <= 0 or self.k <= 0:
            raise ValueError("Weibull parameters must be positive")


def pqi_at_age(curve: WeibullCurve, tau: float) -> float:
    """Closed-form condition at age ``tau``: pqi_max * exp(-lam * tau^k)."""
    if tau < 0:
        raise ValueError("age must be nonnegative")
    return float(weibull_pqi(curve.lam, curve.k, tau, curve.pqi_max))


def effective_age(curve: WeibullCurve, pqi: float) -> float:
    """Inverse of the curve: the age at which condition equals ``pqi``.

    Needed because rehabilitation changes condition without resetting the
    segment's age to zero.
    """
    if pqi <= 0:
        raise ValueError("condition below model support")
    if pqi > curve.pqi_max:
        raise ValueError("condition above the curve maximum")
    return float(weibull_age(curve.lam, curve.k, pqi, curve.pqi_max))


@dataclass(frozen=True)
class RehabEffect:
    """Rehabilitation boost: condition-scaled, capped at ``cap``."""

    delta: float = 2.5
    cap: float = 9.5

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("rehabilitation boost must be positive")
        if not 0 < self.cap <= PQI_MAX:
            raise ValueError("cap must lie in (0, pqi_max]")


DEFAULT_REHAB = RehabEffect()


def rehab_boost(pqi, effect: RehabEffect = DEFAULT_REHAB):
    """Post-rehabilitation condition before the year's deterioration.

    min(pqi + delta * pqi / cap, cap), clamped so rehabilitation never
    worsens a segment already above the cap. Accepts scalars or arrays.
    """
    pqi = np.asarray(pqi, dtype=float)
    boosted = np.minimum(pqi + effect.delta * pqi / effect.cap, effect.cap)
    return np.maximum(boosted, pqi)


def transition(segment: Segment, action: ActionKind, effect: RehabEffect = DEFAULT_REHAB) -> Segment:
    """Deterministic one-year transition under ``action``.

    DoNothing ages the segment one year. Reconstruction resets it to new and
    then ages it one year. Rehabilitation boosts the condition, moves the
    segment back along its own curve to the matching age, then ages it one
    year.
    """
    if action == ActionKind.DO_NOTHING:
        new_age = segment.effective_age + 1.0
    elif action == ActionKind.RECONSTRUCTION:
        new_age = 1.0
    elif action == ActionKind.REHABILITATION:
        boosted = rehab_boost(segment.pqi, effect)
        new_age = float(weibull_age(segment.lam, segment.k, boosted)) + 1.0
    else:
        raise ValueError(f"unknown action {action!r}")
    new_pqi = float(weibull_pqi(segment.lam, segment.k, new_age))
    return replace(segment, pqi=new_pqi, effective_age=new_age)
