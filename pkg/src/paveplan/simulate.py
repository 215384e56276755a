"""Array-backed simulation workspace.

``ArrayNetwork`` mirrors a NetworkState as flat numpy arrays so that whole
network-years (feature building, transitions, cost accounting) run as
vectorized operations. It is mutable by design and owned by exactly one
rollout at a time; the frozen dataclasses in :mod:`paveplan.network` remain
the exchange format.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .deterioration import DEFAULT_REHAB, RehabEffect, rehab_boost, weibull_age, weibull_pqi
from .network import (
    PQI_MAX,
    ActionKind,
    MaintenancePlan,
    NetworkState,
    RoadClass,
    Segment,
    to_cents,
)

N_FEATURES = 19
HIST_BINS = 10


@dataclass
class ArrayNetwork:
    ids: np.ndarray            # int64
    class_names: list[str]     # per segment
    areas: np.ndarray          # float64, m^2
    lams: np.ndarray           # float64
    ks: np.ndarray             # float64
    ages: np.ndarray           # float64, canonical state
    pqis: np.ndarray           # float64, derived from ages
    rehab_unit: np.ndarray     # float64, $/m^2
    recon_unit: np.ndarray     # float64, $/m^2
    rehab_cost_cents: np.ndarray  # int64
    recon_cost_cents: np.ndarray  # int64
    year: int
    horizon: int
    budgets_cents: np.ndarray  # int64, one per year
    spent_cents: int
    pqi_max: float
    cost_table: dict[str, RoadClass]
    rehab_effect: RehabEffect = DEFAULT_REHAB

    @classmethod
    def from_state(cls, state: NetworkState, rehab_effect: RehabEffect = DEFAULT_REHAB) -> "ArrayNetwork":
        segs = state.segments
        areas = np.array([s.area for s in segs])
        rehab_unit = np.array([s.road_class.rehab_unit_cost for s in segs])
        recon_unit = np.array([s.road_class.recon_unit_cost for s in segs])
        cost_table = {s.road_class.name: s.road_class for s in segs}
        return cls(
            ids=np.array([s.id for s in segs], dtype=np.int64),
            class_names=[s.road_class.name for s in segs],
            areas=areas,
            lams=np.array([s.lam for s in segs]),
            ks=np.array([s.k for s in segs]),
            ages=np.array([s.effective_age for s in segs]),
            pqis=np.array([s.pqi for s in segs]),
            rehab_unit=rehab_unit,
            recon_unit=recon_unit,
            rehab_cost_cents=np.array([to_cents(a * u) for a, u in zip(areas, rehab_unit)], dtype=np.int64),
            recon_cost_cents=np.array([to_cents(a * u) for a, u in zip(areas, recon_unit)], dtype=np.int64),
            year=state.year,
            horizon=state.horizon,
            budgets_cents=np.array(state.budgets_cents, dtype=np.int64),
            spent_cents=state.spent_cents,
            pqi_max=state.pqi_max,
            cost_table=cost_table,
            rehab_effect=rehab_effect,
        )

    def to_state(self) -> NetworkState:
        segments = tuple(
            Segment(
                id=int(i),
                road_class=self.cost_table[name],
                area=float(a),
                lam=float(lam),
                k=float(k),
                pqi=float(p),
                effective_age=float(age),
            )
            for i, name, a, lam, k, p, age in zip(
                self.ids, self.class_names, self.areas, self.lams, self.ks, self.pqis, self.ages
            )
        )
        return NetworkState(
            segments=segments,
            year=self.year,
            horizon=self.horizon,
            budgets_cents=tuple(int(b) for b in self.budgets_cents),
            spent_cents=self.spent_cents,
            pqi_max=self.pqi_max,
        )

    def copy(self) -> "ArrayNetwork":
        return ArrayNetwork(
            ids=self.ids,
            class_names=self.class_names,
            areas=self.areas,
            lams=self.lams,
            ks=self.ks,
            ages=self.ages.copy(),
            pqis=self.pqis.copy(),
            rehab_unit=self.rehab_unit,
            recon_unit=self.recon_unit,
            rehab_cost_cents=self.rehab_cost_cents,
            recon_cost_cents=self.recon_cost_cents,
            year=self.year,
            horizon=self.horizon,
            budgets_cents=self.budgets_cents,
            spent_cents=self.spent_cents,
            pqi_max=self.pqi_max,
            cost_table=self.cost_table,
            rehab_effect=self.rehab_effect,
        )

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def total_budget_cents(self) -> int:
        return int(self.budgets_cents.sum())

    def los(self) -> float:
        return float(np.dot(self.areas, self.pqis) / self.areas.sum())

    def histogram(self, bins: int = HIST_BINS) -> np.ndarray:
        width = self.pqi_max / bins
        idx = np.minimum((self.pqis / width).astype(np.int64), bins - 1)
        shares = np.bincount(idx, weights=self.areas, minlength=bins)
        return shares / self.areas.sum()

    def action_costs_cents(self, actions: np.ndarray) -> np.ndarray:
        costs = np.zeros(self.n, dtype=np.int64)
        costs[actions == ActionKind.REHABILITATION] = self.rehab_cost_cents[actions == ActionKind.REHABILITATION]
        costs[actions == ActionKind.RECONSTRUCTION] = self.recon_cost_cents[actions == ActionKind.RECONSTRUCTION]
        return costs

    def pqi_if_nothing(self) -> np.ndarray:
        """Condition every segment would have after one untreated year."""
        return weibull_pqi(self.lams, self.ks, self.ages + 1.0, self.pqi_max)

    def step(self, actions: np.ndarray) -> tuple[int, int]:
        """Apply one year of actions plus deterioration in place.

        Returns the (rehabilitation, reconstruction) spend of the year in
        cents; the caller is responsible for budget feasibility.
        """
        rehab = actions == ActionKind.REHABILITATION
        recon = actions == ActionKind.RECONSTRUCTION
        new_ages = self.ages + 1.0
        if rehab.any():
            boosted = rehab_boost(self.pqis[rehab], self.rehab_effect)
            new_ages[rehab] = weibull_age(self.lams[rehab], self.ks[rehab], boosted, self.pqi_max) + 1.0
        new_ages[recon] = 1.0
        self.ages = new_ages
        self.pqis = weibull_pqi(self.lams, self.ks, new_ages, self.pqi_max)
        rehab_spend = int(self.rehab_cost_cents[rehab].sum())
        recon_spend = int(self.recon_cost_cents[recon].sum())
        self.spent_cents += rehab_spend + recon_spend
        self.year += 1
        return rehab_spend, recon_spend

    def features(self) -> np.ndarray:
        """Per-segment augmented state matrix, shape (n, 19).

        Local block: pqi, normalized area, Weibull scale and shape, normalized
        unit costs. Global block: time fraction, remaining budget fraction,
        mean LoS / 10 and the 10 condition histogram shares.
        """
        x = np.empty((self.n, N_FEATURES))
        max_area = self.areas.max()
        max_recon_unit = self.recon_unit.max()
        x[:, 0] = self.pqis
        x[:, 1] = self.areas / max_area
        x[:, 2] = self.lams
        x[:, 3] = self.ks
        x[:, 4] = self.rehab_unit / max_recon_unit
        x[:, 5] = self.recon_unit / max_recon_unit
        x[:, 6] = self.year / self.horizon
        total = self.total_budget_cents
        x[:, 7] = (total - self.spent_cents) / total if total > 0 else 0.0
        x[:, 8] = self.los() / self.pqi_max
        x[:, 9:] = self.histogram()
        return x


def rollout_plan(state: NetworkState, actions_matrix: np.ndarray, validate: bool = True):
    """Re-simulate a fixed action matrix from ``state``.

    Returns (plan, trajectory) where the trajectory holds the initial state
    followed by one post-decision state per year. With ``validate`` the
    per-year budget is enforced to the cent.
    """
    arr = ArrayNetwork.from_state(state)
    n, h = actions_matrix.shape
    if n != arr.n or h != arr.horizon - arr.year:
        raise ValueError("action matrix does not match the network")
    trajectory = [state]
    rehab_cents, recon_cents = [], []
    for t in range(h):
        year = arr.year
        acts = actions_matrix[:, t].astype(np.int8)
        spend = int(arr.action_costs_cents(acts).sum())
        if validate and spend > int(arr.budgets_cents[year]):
            raise ValueError(
                f"year {year}: spend {spend} cents exceeds budget {int(arr.budgets_cents[year])}"
            )
        r1, r2 = arr.step(acts)
        rehab_cents.append(r1)
        recon_cents.append(r2)
        trajectory.append(arr.to_state())
    plan = MaintenancePlan(
        segment_ids=tuple(int(i) for i in arr.ids),
        actions=actions_matrix.astype(np.int8),
        rehab_cents=tuple(rehab_cents),
        recon_cents=tuple(recon_cents),
    )
    return plan, trajectory
