"""Core domain types and network-level condition metrics.

A road network is a collection of segments, each carrying its own Weibull
deterioration curve, size (the LoS weight) and per-class intervention costs.
All money is handled as integer cents so that budget feasibility checks are
exact comparisons, never float tolerances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PQI_MAX = 10.0
CENTS_PER_DOLLAR = 100

NETWORK_FORMAT = "paveplan-network"
NETWORK_FORMAT_VERSION = 1

ROAD_CLASS_NAMES = ("Arterial", "Collector", "Local")


def to_cents(dollars: float) -> int:
    """Convert a dollar amount to integer cents."""
    return int(round(dollars * CENTS_PER_DOLLAR))


def cents_to_dollars(cents: int) -> str:
    """Exact decimal dollar string for an integer cent amount."""
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{sign}{cents // 100}.{cents % 100:02d}"


class ActionKind(IntEnum):
    DO_NOTHING = 0
    REHABILITATION = 1
    RECONSTRUCTION = 2


@dataclass(frozen=True)
class RoadClass:
    """Road classification with per-square-meter intervention costs (dollars)."""

    name: str
    rehab_unit_cost: float
    recon_unit_cost: float

    def __post_init__(self):
        if self.name not in ROAD_CLASS_NAMES:
            raise ValueError(f"unknown road class {self.name!r}")
        if self.rehab_unit_cost <= 0 or self.recon_unit_cost <= 0:
            raise ValueError("unit costs must be positive")
        if self.recon_unit_cost <= self.rehab_unit_cost:
            raise ValueError("reconstruction must cost more per m^2 than rehabilitation")


# Arterial and Local endpoints; Collector costs default to the midpoints.
ARTERIAL = RoadClass("Arterial", rehab_unit_cost=40.0, recon_unit_cost=200.0)
COLLECTOR = RoadClass("Collector", rehab_unit_cost=30.0, recon_unit_cost=175.0)
LOCAL = RoadClass("Local", rehab_unit_cost=20.0, recon_unit_cost=150.0)

DEFAULT_COST_TABLE = {c.name: c for c in (ARTERIAL, COLLECTOR, LOCAL)}


@dataclass(frozen=True)
class Segment:
    """One road segment.

    ``effective_age`` is the canonical deterioration state: the age at which
    the segment's Weibull curve passes through its current condition. ``pqi``
    is kept alongside it (so files round-trip bit-exactly) and must agree with
    the curve at ``effective_age`` to within 1e-9.
    """

    id: int
    road_class: RoadClass
    area: float
    lam: float
    k: float
    pqi: float
    effective_age: float

    def __post_init__(self):
        if self.area <= 0:
            raise ValueError("segment area must be positive")
        if self.lam <= 0 or self.k <= 0:
            raise ValueError("Weibull parameters must be positive")
        if not 0.0 <= self.pqi <= PQI_MAX:
            raise ValueError("pqi must lie in [0, 10]")
        if self.effective_age < 0:
            raise ValueError("effective age must be nonnegative")
        implied = PQI_MAX * math.exp(-self.lam * self.effective_age**self.k)
        if abs(implied - self.pqi) > 1e-9:
            raise ValueError(
                f"pqi {self.pqi} and effective age {self.effective_age} disagree "
                f"(curve gives {implied})"
            )

    @classmethod
    def from_pqi(cls, id, road_class, area, lam, k, pqi) -> "Segment":
        """Build a segment from an observed condition; age comes from inversion."""
        if pqi <= 0:
            raise ValueError("condition below model support")
        if pqi > PQI_MAX:
            raise ValueError("pqi must lie in (0, 10]")
        age = (-math.log(pqi / PQI_MAX) / lam) ** (1.0 / k)
        return cls(id, road_class, area, lam, k, pqi, age)

    @classmethod
    def from_age(cls, id, road_class, area, lam, k, effective_age) -> "Segment":
        """Build a segment from a known age on the curve; pqi is derived."""
        pqi = PQI_MAX * math.exp(-lam * effective_age**k)
        return cls(id, road_class, area, lam, k, pqi, effective_age)


@dataclass(frozen=True)
class NetworkState:
    """Snapshot of the whole network at the start of planning year ``year``.

    ``budgets_cents`` holds one entry per planning year; ``spent_cents`` is
    the cumulative executed spend over the elapsed years.
    """

    segments: tuple[Segment, ...]
    year: int
    horizon: int
    budgets_cents: tuple[int, ...]
    spent_cents: int = 0
    pqi_max: float = PQI_MAX

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least one year")
        if not 0 <= self.year <= self.horizon:
            raise ValueError("year must lie in [0, horizon]")
        if len(self.budgets_cents) != self.horizon:
            raise ValueError("need one budget entry per planning year")
        if any(b < 0 for b in self.budgets_cents):
            raise ValueError("budgets must be nonnegative")
        elapsed = sum(self.budgets_cents[: self.year])
        if self.spent_cents > elapsed:
            raise ValueError("spend exceeds the budgets of elapsed years")

    @property
    def total_budget_cents(self) -> int:
        return sum(self.budgets_cents)


def initial_state(
    segments: Iterable[Segment],
    horizon: int,
    annual_budget_cents: int | Sequence[int],
) -> NetworkState:
    """Fresh year-0 state with a constant or per-year budget vector."""
    if isinstance(annual_budget_cents, (int, np.integer)):
        budgets = (int(annual_budget_cents),) * horizon
    else:
        budgets = tuple(int(b) for b in annual_budget_cents)
    return NetworkState(tuple(segments), year=0, horizon=horizon, budgets_cents=budgets)


def los(state: NetworkState) -> float:
    """Area-weighted mean condition of the network, in [0, 10]."""
    if not state.segments:
        raise ValueError("empty network")
    num = math.fsum(s.area * s.pqi for s in state.segments)
    den = math.fsum(s.area for s in state.segments)
    return num / den


def halos(trajectory: Sequence[NetworkState], h: int) -> float:
    """Horizon-averaged LoS over the h post-decision states.

    ``trajectory[0]`` is the initial network; entries 1..h are the states
    after each planning year.
    """
    if len(trajectory) < h + 1:
        raise ValueError(f"trajectory needs {h + 1} states, got {len(trajectory)}")
    return math.fsum(los(trajectory[t]) for t in range(1, h + 1)) / h


def ehlos(trajectory: Sequence[NetworkState]) -> float:
    """End-of-horizon LoS: the LoS of the final state."""
    if not trajectory:
        raise ValueError("empty trajectory")
    return los(trajectory[-1])


def condition_histogram(state: NetworkState, bins: int = 10) -> np.ndarray:
    """Area-weighted share of the network in each equal-width PQI bin.

    The top bin is right-closed so a segment at pqi_max lands in it.
    """
    if bins < 1:
        raise ValueError("need at least one bin")
    if not state.segments:
        raise ValueError("empty network")
    width = state.pqi_max / bins
    shares = np.zeros(bins)
    for s in state.segments:
        idx = min(int(s.pqi / width), bins - 1)
        shares[idx] += s.area
    return shares / shares.sum()


class BudgetViolation(ValueError):
    """A plan spends more in some year than that year's budget allows."""


@dataclass(frozen=True)
class MaintenancePlan:
    """A (segment x year) action matrix with per-year cost accounting.

    ``actions[i, t]`` is the ActionKind code applied to ``segment_ids[i]`` in
    year ``t``. Per-year spend is split by intervention kind, in cents.
    """

    segment_ids: tuple[int, ...]
    actions: np.ndarray
    rehab_cents: tuple[int, ...]
    recon_cents: tuple[int, ...]

    def __post_init__(self):
        n, h = self.actions.shape
        if n != len(self.segment_ids):
            raise ValueError("one action row per segment required")
        if len(self.rehab_cents) != h or len(self.recon_cents) != h:
            raise ValueError("need one cost entry per planning year")
        if not np.isin(self.actions, [a.value for a in ActionKind]).all():
            raise ValueError("unknown action code in plan")
        self.actions.setflags(write=False)

    @property
    def horizon(self) -> int:
        return self.actions.shape[1]

    def spend_cents(self, year: int) -> int:
        return self.rehab_cents[year] + self.recon_cents[year]

    def validate_budgets(self, budgets_cents: Sequence[int]) -> None:
        """Raise BudgetViolation if any year overspends by even one cent."""
        if len(budgets_cents) != self.horizon:
            raise ValueError("need one budget entry per planning year")
        for t, cap in enumerate(budgets_cents):
            spend = self.spend_cents(t)
            if spend > cap:
                raise BudgetViolation(
                    f"year {t}: spend {spend} cents exceeds budget {cap} cents"
                )


# ---------------------------------------------------------------------------
# Serialization. JSON round-trips Python floats exactly (repr-based), which
# gives the required bit-exact save/load/save cycle.
# ---------------------------------------------------------------------------


def network_to_dict(state: NetworkState, extra: dict | None = None) -> dict:
    classes = {}
    for s in state.segments:
        classes[s.road_class.name] = s.road_class
    doc = {
        "format": NETWORK_FORMAT,
        "version": NETWORK_FORMAT_VERSION,
        "horizon": state.horizon,
        "year": state.year,
        "budgets_cents": list(state.budgets_cents),
        "spent_cents": state.spent_cents,
        "pqi_max": state.pqi_max,
        "cost_table": {
            name: {"rehab": c.rehab_unit_cost, "recon": c.recon_unit_cost}
            for name, c in sorted(classes.items())
        },
        "segments": [
            [s.id, s.road_class.name, s.area, s.lam, s.k, s.pqi] for s in state.segments
        ],
    }
    if extra:
        doc["meta"] = extra
    return doc


def network_from_dict(doc: dict) -> NetworkState:
    if doc.get("format") != NETWORK_FORMAT:
        raise ValueError("not a network file")
    if doc.get("version") != NETWORK_FORMAT_VERSION:
        raise ValueError(f"unsupported network file version {doc.get('version')}")
    classes = {
        name: RoadClass(name, spec["rehab"], spec["recon"])
        for name, spec in doc["cost_table"].items()
    }
    segments = tuple(
        Segment.from_pqi(int(sid), classes[cname], area, lam, k, pqi)
        for sid, cname, area, lam, k, pqi in doc["segments"]
    )
    return NetworkState(
        segments=segments,
        year=int(doc["year"]),
        horizon=int(doc["horizon"]),
        budgets_cents=tuple(int(b) for b in doc["budgets_cents"]),
        spent_cents=int(doc["spent_cents"]),
        pqi_max=float(doc["pqi_max"]),
    )


def save_network(state: NetworkState, path: str | Path, extra: dict | None = None) -> None:
    text = json.dumps(network_to_dict(state, extra), separators=(",", ":")) + "\n"
    Path(path).write_text(text)


def load_network(path: str | Path) -> NetworkState:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt network file {path}: {exc}") from exc
    return network_from_dict(doc)


PLAN_FORMAT = "paveplan-plan"
PLAN_FORMAT_VERSION = 1


def save_plan(
    plan: MaintenancePlan,
    los_series: Sequence[float],
    path: str | Path,
    meta: dict | None = None,
) -> None:
    """Write a plan with its realized LoS series; shared by every strategy."""
    doc = {
        "format": PLAN_FORMAT,
        "version": PLAN_FORMAT_VERSION,
        "segment_ids": list(plan.segment_ids),
        "actions": plan.actions.tolist(),
        "rehab_cents": list(plan.rehab_cents),
        "recon_cents": list(plan.recon_cents),
        "los_series": [float(v) for v in los_series],
    }
    if meta:
        doc["meta"] = meta
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def load_plan(path: str | Path) -> tuple[MaintenancePlan, list[float], dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt plan file {path}: {exc}") from exc
    if doc.get("format") != PLAN_FORMAT:
        raise ValueError(f"{path}: not a plan file")
    if doc.get("version") != PLAN_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported plan file version")
    plan = MaintenancePlan(
        segment_ids=tuple(int(i) for i in doc["segment_ids"]),
        actions=np.array(doc["actions"], dtype=np.int8),
        rehab_cents=tuple(int(c) for c in doc["rehab_cents"]),
        recon_cents=tuple(int(c) for c in doc["recon_cents"]),
    )
    return plan, [float(v) for v in doc["los_series"]], doc.get("meta", {})
