import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chaoskit.classify import (
    Thresholds,
    classify_pair,
    consistency_check,
    scrambled_search,
    sdc_from_profile,
    verdict_from_profile,
    witness_sequence,
)
from chaoskit.distfn import DistanceProfile, SequenceSpec, distance_profile
from chaoskit.errors import ConfigError, InsufficientData
from chaoskit.systems import Example1Point, SystemSpec, family_point, make_system

FLAGS = ("liyorke", "dc1", "dc2", "dc2prime", "dc3")

# two-scale profiles: every distance is either below the grid floor or above separation_tol
NEAR_FAR = [0.0, 1e-6, 1e-5, 0.2, 0.5, 1.0]
mixed = arrays(np.float64, st.integers(40, 400), elements=st.sampled_from(NEAR_FAR))

# alternating runs of near and far distances, the shape behind DC1 and witness sequences
runs = st.lists(st.tuples(st.sampled_from(NEAR_FAR), st.integers(1, 20_000)),
                min_size=1, max_size=8).map(lambda rs: np.concatenate([np.full(n, v) for v, n in rs]))

# any scale, including distances between proximal_tol and separation_tol
any_scale = arrays(np.float64, st.integers(40, 400),
                   elements=st.sampled_from([0.0, 1e-6, 1e-3, 0.02, 0.2, 0.5, 1.0]))


@pytest.fixture(scope="module")
def shift():
    return make_system(SystemSpec("shift2", horizon_cap=100_000))


def test_thresholds_validation_names_field():
    with pytest.raises(ConfigError) as err:
        Thresholds(zero_tol=1.5)
    assert err.value.field == "thresholds.zero_tol"
    with pytest.raises(ConfigError) as err:
        Thresholds(gap_tol=0.04)
    assert err.value.field == "thresholds.gap_tol"
    with pytest.raises(ConfigError):
        Thresholds.from_dict({"zero": 0.1})
    assert Thresholds.from_dict(Thresholds().to_dict()) == Thresholds()


def test_equal_points_are_all_clear():
    ex = make_system(SystemSpec("example1", horizon_cap=10_000))
    p = Example1Point(0.25, 0)
    v = classify_pair(ex, p, p, 10_000)
    assert not any(getattr(v, f) for f in FLAGS)


def test_example1_pair_is_dc2prime_not_dc1():
    ex = make_system(SystemSpec("example1", horizon_cap=10**6))
    v = classify_pair(ex, Example1Point(0.25, 0), Example1Point(0.75, 0), 10**6)
    assert v.dc2prime and not v.dc1
    assert consistency_check(v) == []


def test_family_pair_is_dc1_and_sdc(shift):
    x, y = family_point(1, shift.horizon_cap), family_point(2, shift.horizon_cap)
    v = classify_pair(shift, x, y, 100_000, sequences=[SequenceSpec.arith(2), SequenceSpec.arith(3)])
    assert v.dc1 and v.dc2 and v.dc2prime and v.dc3 and v.liyorke
    assert all(r.sdc1 for r in v.sdc)
    assert "dc1_epsilon" in v.witness


def test_rotation_pair_all_clear():
    rot = make_system(SystemSpec("rotation", horizon_cap=20_000))
    v = classify_pair(rot, 0.1, 0.35, 20_000)
    assert not any(getattr(v, f) for f in FLAGS)


def test_sdc_needs_enough_samples():
    prof = DistanceProfile(np.zeros(20))
    with pytest.raises(InsufficientData):
        sdc_from_profile(prof, SequenceSpec.arith(5))


def test_witness_on_family_pair(shift):
    x, y = family_point(3, shift.horizon_cap), family_point(4, shift.horizon_cap)
    prof = distance_profile(shift, x, y, 100_000)
    q = witness_sequence(prof)
    assert q is not None and q.kind == "witness"
    assert sdc_from_profile(prof, q).sdc1


def test_witness_none_without_close_indices():
    assert witness_sequence(DistanceProfile(np.full(500, 0.5))) is None


def test_scrambled_search(shift):
    pts = [family_point(k, shift.horizon_cap) for k in range(5)]
    res = scrambled_search(shift, pts, 100_000)
    assert res.members == [0, 1, 2, 3, 4]
    ident = make_system(SystemSpec("identity", horizon_cap=1000))
    res = scrambled_search(ident, [0.1, 0.2, 0.3], 1000)
    assert res.members == [0]
    with pytest.raises(ValueError):
        scrambled_search(ident, [0.1], 1000)


# -- properties ---------------------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(st.one_of(mixed, runs))
def test_lattice_holds_for_any_profile(values):
    prof = DistanceProfile(values)
    seqs = [SequenceSpec.arith(1), SequenceSpec.arith(2)] if len(prof) >= 32 else []
    v, _ = verdict_from_profile(prof, sequences=seqs)
    q = witness_sequence(prof)
    if q is not None and len(q.values) >= 16:
        v.sdc.append(sdc_from_profile(prof, q))
    assert consistency_check(v) == []


@settings(max_examples=150, deadline=None)
@given(any_scale)
def test_dc_lattice_without_liyorke_holds_at_any_scale(values):
    """Every rule not involving Li-Yorke holds for every profile; that one needs the two-scale regime."""
    prof = DistanceProfile(values)
    v, _ = verdict_from_profile(prof, sequences=[SequenceSpec.arith(1), SequenceSpec.arith(2)])
    v.liyorke = None
    assert consistency_check(v) == []


def test_mid_scale_pair_can_break_liyorke_rule():
    # DC2 fires at t <= 0.03, yet the pair never separates by separation_tol = 0.1
    v, _ = verdict_from_profile(DistanceProfile(np.array([0.0, 0.03])))
    assert v.dc2 and not v.liyorke
    assert consistency_check(v) == ["DC2 implies Li-Yorke"]


@settings(max_examples=100, deadline=None)
@given(runs)
def test_witness_self_consistent(values):
    prof = DistanceProfile(values)
    q = witness_sequence(prof)
    if q is not None:
        assert sdc_from_profile(prof, q).sdc1


LADDER = [0.01, 0.03, 0.05, 0.08]


@settings(max_examples=80, deadline=None)
@given(st.one_of(any_scale, runs), st.integers(0, 3), st.integers(0, 3))
def test_flags_monotone_in_tolerances(values, i, j):
    """Loosening zero_tol/one_tol can only add flags; raising gap_tol can only remove them."""
    prof = DistanceProfile(values)
    lo, hi = sorted((LADDER[i], LADDER[j]))
    v_lo, _ = verdict_from_profile(prof, Thresholds(zero_tol=lo, one_tol=lo))
    v_hi, _ = verdict_from_profile(prof, Thresholds(zero_tol=hi, one_tol=hi))
    for f in ("dc1", "dc2", "dc2prime", "dc3"):
        assert getattr(v_lo, f) <= getattr(v_hi, f)
    g_lo, _ = verdict_from_profile(prof, Thresholds(gap_tol=0.1 + lo))
    g_hi, _ = verdict_from_profile(prof, Thresholds(gap_tol=0.1 + hi))
    for f in ("dc2", "dc2prime", "dc3"):
        assert getattr(g_hi, f) <= getattr(g_lo, f)
