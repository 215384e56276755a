"""Seeded synthetic network generator.

Produces networks whose statistical shape resembles a large municipal
pavement inventory: lognormal segment areas, a three-class split targeted by
area share, mid-range initial conditions and multi-decade Weibull service
lives. All distribution parameters are synthetic defaults and overridable.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .network import DEFAULT_COST_TABLE, NetworkState, RoadClass, Segment, initial_state, to_cents

# Annual budget per square meter of pavement, roughly $3.34: a $200M budget
# spread over a ~59.86M m^2 network.
DEFAULT_BUDGET_PER_M2 = 200e6 / 59_856_743.2

CLASS_ORDER = ("Arterial", "Collector", "Local")


def _default_costs() -> dict[str, tuple[float, float]]:
    return {name: (c.rehab_unit_cost, c.recon_unit_cost) for name, c in DEFAULT_COST_TABLE.items()}


@dataclass
class GeneratorConfig:
    n_segments: int = 1000
    class_area_shares: tuple[float, float, float] = (0.304, 0.199, 0.497)
    area_median_m2: float = 600.0
    area_sigma_log: float = 0.8
    pqi_mean: float = 6.5
    pqi_sd: float = 1.5
    pqi_range: tuple[float, float] = (2.0, 10.0)
    k_range: tuple[float, float] = (1.2, 2.5)
    # Years for a new segment to deteriorate to condition 5.
    service_life_range: tuple[float, float] = (15.0, 40.0)
    cost_table: dict[str, tuple[float, float]] = field(default_factory=_default_costs)
    budget_per_m2_per_year: float = DEFAULT_BUDGET_PER_M2
    horizon: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("need at least one segment")
        if len(self.class_area_shares) != len(CLASS_ORDER):
            raise ValueError("one area share per road class required")
        if abs(sum(self.class_area_shares) - 1.0) > 1e-9:
            raise ValueError("class area shares must sum to 1")
        if min(self.class_area_shares) < 0:
            raise ValueError("class area shares must be nonnegative")
        if self.area_median_m2 <= 0 or self.area_sigma_log <= 0:
            raise ValueError("area distribution parameters must be positive")
        lo, hi = self.pqi_range
        if not 0 < lo <= hi <= 10.0:
            raise ValueError("pqi range must lie in (0, 10]")
        if self.k_range[0] <= 0 or self.k_range[0] > self.k_range[1]:
            raise ValueError("bad shape parameter range")
        if self.service_life_range[0] <= 0 or self.service_life_range[0] > self.service_life_range[1]:
            raise ValueError("bad service life range")
        if self.budget_per_m2_per_year <= 0:
            raise ValueError("budget density must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least one year")
        for name in CLASS_ORDER:
            if name not in self.cost_table:
                raise ValueError(f"cost table is missing class {name}")

    def road_classes(self) -> dict[str, RoadClass]:
        return {
            name: RoadClass(name, *self.cost_table[name]) for name in CLASS_ORDER
        }

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["class_area_shares"] = list(self.class_area_shares)
        doc["cost_table"] = {k: list(v) for k, v in self.cost_table.items()}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorConfig":
        doc = dict(doc)
        if "class_area_shares" in doc:
            doc["class_area_shares"] = tuple(doc["class_area_shares"])
        if "pqi_range" in doc:
            doc["pqi_range"] = tuple(doc["pqi_range"])
        if "k_range" in doc:
            doc["k_range"] = tuple(doc["k_range"])
        if "service_life_range" in doc:
            doc["service_life_range"] = tuple(doc["service_life_range"])
        if "cost_table" in doc:
            doc["cost_table"] = {k: tuple(v) for k, v in doc["cost_table"].items()}
        return cls(**doc)


def generate(config: GeneratorConfig) -> NetworkState:
    """Sample a network with seeded determinism.

    Classes are assigned by walking the segments in random order and always
    filling the class with the largest remaining area deficit, which pins the
    realized area shares to the targets within one segment's area.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_segments
    areas = rng.lognormal(mean=math.log(config.area_median_m2), sigma=config.area_sigma_log, size=n)
    pqis = np.clip(rng.normal(config.pqi_mean, config.pqi_sd, size=n), *config.pqi_range)
    ks = rng.uniform(*config.k_range, size=n)
    lives = rng.uniform(*config.service_life_range, size=n)
    lams = math.log(2.0) / lives**ks  # condition hits 5 at the sampled life

    total_area = float(areas.sum())
    targets = np.array(config.class_area_shares) * total_area
    assigned = np.zeros(len(CLASS_ORDER))
    class_idx = np.zeros(n, dtype=np.int64)
    for i in rng.permutation(n):
        c = int(np.argmax(targets - assigned))
        class_idx[i] = c
        assigned[c] += areas[i]

    classes = config.road_classes()
    segments = tuple(
        Segment.from_pqi(
            id=i,
            road_class=classes[CLASS_ORDER[class_idx[i]]],
            area=float(areas[i]),
            lam=float(lams[i]),
            k=float(ks[i]),
            pqi=float(pqis[i]),
        )
        for i in range(n)
    )
    budget_cents = to_cents(config.budget_per_m2_per_year * total_area)
    return initial_state(segments, horizon=config.horizon, annual_budget_cents=budget_cents)
