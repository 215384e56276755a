import math

import numpy as np
import pytest

from paveplan.deterioration import (
    DEFAULT_REHAB,
    RehabEffect,
    WeibullCurve,
    effective_age,
    pqi_at_age,
    rehab_boost,
    transition,
)
from paveplan.network import ARTERIAL, ActionKind, Segment


def test_pqi_at_age_zero_is_max():
    curve = WeibullCurve(lam=0.01, k=2.0)
    assert pqi_at_age(curve, 0.0) == 10.0


def test_pqi_at_age_hand_value():
    # 10 * exp(-0.01 * 5^2) = 10 * exp(-0.25)
    curve = WeibullCurve(lam=0.01, k=2.0)
    assert pqi_at_age(curve, 5.0) == pytest.approx(10.0 * math.exp(-0.25), abs=1e-12)
    assert pqi_at_age(curve, 5.0) == pytest.approx(7.788007830714049, abs=1e-9)


def test_pqi_at_age_rejects_negative_age():
    with pytest.raises(ValueError):
        pqi_at_age(WeibullCurve(0.01, 2.0), -0.5)


def test_pqi_strictly_decreasing_in_age():
    # Parameter ranges kept within float support (no underflow to 0).
    rng = np.random.default_rng(7)
    for _ in range(200):
        lam = rng.uniform(1e-4, 0.02)
        k = rng.uniform(0.8, 2.2)
        tau = rng.uniform(0.0, 30.0)
        curve = WeibullCurve(lam, k)
        assert pqi_at_age(curve, tau + 1.0) < pqi_at_age(curve, tau)


def test_effective_age_at_max_is_zero():
    assert effective_age(WeibullCurve(0.01, 2.0), 10.0) == 0.0


def test_effective_age_inverts_hand_value():
    curve = WeibullCurve(0.01, 2.0)
    assert effective_age(curve, 7.78800783) == pytest.approx(5.0, abs=1e-6)


def test_effective_age_rejects_out_of_support():
    curve = WeibullCurve(0.01, 2.0)
    with pytest.raises(ValueError, match="below model support"):
        effective_age(curve, 0.0)
    with pytest.raises(ValueError):
        effective_age(curve, 10.5)


def test_age_pqi_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(500):
        lam = rng.uniform(1e-4, 0.02)
        k = rng.uniform(0.8, 2.2)
        tau = rng.uniform(0.0, 30.0)
        curve = WeibullCurve(lam, k)
        assert effective_age(curve, pqi_at_age(curve, tau)) == pytest.approx(tau, abs=1e-9)


def test_rehab_boost_hand_values():
    # 4.75 + 2.5 * (4.75 / 9.5) = 6.0 exactly; 9.5 stays capped at 9.5.
    assert float(rehab_boost(4.75)) == pytest.approx(6.0, abs=1e-12)
    assert float(rehab_boost(9.5)) == 9.5
    # Above the cap the boost is a no-op, never a downgrade.
    assert float(rehab_boost(9.9)) == 9.9


def _segment(lam=0.01, k=2.0, pqi=6.0, area=100.0):
    return Segment.from_pqi(1, ARTERIAL, area, lam, k, pqi)


def test_transition_do_nothing_advances_age():
    seg = _segment()
    out = transition(seg, ActionKind.DO_NOTHING)
    assert out.effective_age == seg.effective_age + 1.0
    assert out.pqi < seg.pqi


def test_transition_reconstruction_next_year_value():
    seg = _segment(lam=0.01, k=2.0, pqi=3.3)
    out = transition(seg, ActionKind.RECONSTRUCTION)
    assert out.effective_age == 1.0
    assert out.pqi == pytest.approx(10.0 * math.exp(-0.01), abs=1e-8)
    assert out.pqi == pytest.approx(9.90049834, abs=1e-8)


def test_reconstruction_is_independent_of_prior_state():
    a = transition(_segment(pqi=2.5), ActionKind.RECONSTRUCTION)
    b = transition(_segment(pqi=9.8), ActionKind.RECONSTRUCTION)
    assert a.pqi == b.pqi
    assert a.effective_age == b.effective_age


def test_rehabilitation_never_worse_than_nothing():
    rng = np.random.default_rng(3)
    for _ in range(300):
        seg = _segment(
            lam=rng.uniform(1e-4, 0.05),
            k=rng.uniform(0.9, 2.8),
            pqi=rng.uniform(0.5, 10.0),
        )
        rehabbed = transition(seg, ActionKind.REHABILITATION)
        nothing = transition(seg, ActionKind.DO_NOTHING)
        assert rehabbed.pqi >= nothing.pqi - 1e-12


def test_repeated_do_nothing_matches_closed_form():
    seg = _segment(lam=0.004, k=1.7, pqi=8.2)
    curve = WeibullCurve(seg.lam, seg.k)
    out = seg
    for _ in range(15):
        out = transition(out, ActionKind.DO_NOTHING)
    assert out.pqi == pytest.approx(pqi_at_age(curve, seg.effective_age + 15), abs=1e-9)


def test_rehab_effect_validation():
    with pytest.raises(ValueError):
        RehabEffect(delta=-1.0)
    with pytest.raises(ValueError):
        RehabEffect(cap=11.0)
    assert DEFAULT_REHAB.delta == 2.5
    assert DEFAULT_REHAB.cap == 9.5


def test_weibull_curve_validation():
    with pytest.raises(ValueError):
        WeibullCurve(lam=0.0, k=2.0)
    with pytest.raises(ValueError):
        WeibullCurve(lam=0.01, k=-1.0)
