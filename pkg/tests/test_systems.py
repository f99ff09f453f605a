from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from chaoskit.errors import ConfigError, DomainError, HorizonExceeded
from chaoskit.systems import (
    BEYOND_HORIZON,
    KINDS,
    TENT_DENOM,
    Example1Point,
    SystemSpec,
    example1_blocks,
    family_boundaries,
    family_point,
    iterate,
    make_system,
    scrambled_family_point,
)


def brute_shift_distance(x: bytes, y: bytes) -> float:
    for j, (a, b) in enumerate(zip(x, y)):
        if a != b:
            return 2.0**-j
    return 0.0


def brute_example1_distance(x: float, y: float) -> float:
    """Direct transcription of the block metric on reals, using the block list only."""
    if x == y:
        return 0.0
    fx, fy = int(np.floor(x)), int(np.floor(y))
    if fx != fy or fx % 2:
        return 1.0
    L = [0, 1]
    while L[-1] <= fx:
        L.append(L[-1] + 2 ** L[-1])
    m = max(i for i, v in enumerate(L) if v <= fx)
    if m >= 2 and m % 2 == 0:
        return 2.0 ** -(m // 2)
    return 1.0


@pytest.fixture(scope="module")
def systems():
    return {k: make_system(SystemSpec(k, horizon_cap=5000)) for k in KINDS if k != "iterate"}


# -- examples --------------------------------------------------------------------------


def test_tent_step_values(systems):
    tent = systems["tent"]
    assert tent.step(Fraction(1, 4)) == Fraction(1, 2)
    assert tent.step(Fraction(3, 4)) == Fraction(1, 2)
    assert tent.step(Fraction(1, 2)) == 1


def test_example1_block_metric_values():
    ex = make_system(SystemSpec("example1", horizon_cap=10_000))
    p = ex.parse_point
    assert ex.distance(p("4.25"), p("4.75")) == 0.5
    assert ex.distance(p("2060.1"), p("2060.9")) == 0.25
    assert ex.distance(p("1.25"), p("1.75")) == 1.0
    assert ex.distance(p("3.25"), p("4.75")) == 1.0


def test_example1_block_table():
    table = example1_blocks(10**6)
    assert table.exact_L == [0, 1, 3, 11, 2059]
    assert table.b[:4] == [1, 2, 8, 2048]
    assert table.L[5] is BEYOND_HORIZON and table.b[4] is BEYOND_HORIZON
    assert table.saturated_at == 5
    with pytest.raises(HorizonExceeded):
        table.block_of(10**6 + 1)


def test_iterate_of_tent_composes():
    tent = make_system(SystemSpec("tent", horizon_cap=100))
    assert iterate(tent, 2).step(Fraction(1, 4)) == 1


def test_rotation_distance_wraps(systems):
    rot = systems["rotation"]
    assert rot.distance(0.05, 0.95) == pytest.approx(0.1, abs=1e-15)


def test_shift_distance_and_step(systems):
    sh = systems["shift2"]
    assert sh.distance(b"\x00\x01\x01", b"\x00\x01\x00") == 0.25
    assert sh.step(b"\x01\x00\x01") == b"\x00\x01"


@pytest.mark.parametrize("field,spec", [
    ("kind", {"kind": "henon"}),
    ("horizon_cap", {"kind": "tent", "horizon_cap": 0}),
    ("alpha", {"kind": "rotation", "alpha": 1.5}),
    ("N", {"kind": "iterate", "N": 0, "base": {"kind": "tent"}}),
    ("base", {"kind": "iterate", "N": 2}),
])
def test_make_system_names_bad_field(field, spec):
    with pytest.raises(ConfigError) as err:
        make_system(spec)
    assert err.value.field.endswith(field)


@pytest.mark.parametrize("kind,bad", [
    ("tent", 1.5), ("logistic4", -0.1), ("rotation", 1.0), ("shift2", b"\x02"), ("example1", 3.0),
])
def test_out_of_domain_points_raise(systems, kind, bad):
    with pytest.raises(DomainError):
        systems[kind].step(bad)


def test_horizon_cap_enforced(systems):
    with pytest.raises(HorizonExceeded):
        systems["tent"].profile_values(Fraction(1, 3), Fraction(1, 5), 5001)


# -- invariants ------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["tent", "logistic4", "rotation", "shift2", "example1", "identity"])
def test_metric_symmetry_and_identity(systems, kind):
    sys_ = systems[kind]
    rng = np.random.default_rng(11)
    pts = [sys_.sample_point(rng) for _ in range(200)]
    for a, b in zip(pts[::2], pts[1::2]):
        assert sys_.distance(a, a) == 0.0
        assert sys_.distance(a, b) == sys_.distance(b, a)
        assert sys_.distance(a, b) >= 0


def test_metric_symmetry_bulk_interval():
    rng = np.random.default_rng(3)
    x, y = rng.random(10_000), rng.random(10_000)
    tent = make_system(SystemSpec("tent"))
    d_xy = [tent.distance(a, b) for a, b in zip(x, y)]
    d_yx = [tent.distance(b, a) for a, b in zip(x, y)]
    assert d_xy == d_yx
    assert all(tent.distance(a, a) == 0.0 for a in x)


def test_shift_profile_matches_brute_force():
    sh = make_system(SystemSpec("shift2", horizon_cap=300))
    rng = np.random.default_rng(5)
    x = sh.sample_point(rng)
    y = bytearray(x)
    for j in rng.choice(len(y), 40, replace=False):
        y[j] ^= 1
    y = bytes(y)
    prof = sh.profile_values(x, y, 300)
    brute = [brute_shift_distance(x[i:], y[i:]) for i in range(300)]
    assert prof.tolist() == brute


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 5000), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_example1_distance_matches_brute(offset, s1, s2):
    assume(s1 != s2)
    ex = make_system(SystemSpec("example1", horizon_cap=10_000))
    a, b = Example1Point(s1, offset), Example1Point(s2, offset)
    assert ex.distance(a, b) == brute_example1_distance(offset + s1, offset + s2)


def test_example1_profile_matches_pointwise():
    ex = make_system(SystemSpec("example1", horizon_cap=3000))
    x, y = Example1Point(0.25, 0), Example1Point(0.75, 0)
    prof = ex.profile_values(x, y, 3000)
    pointwise = [ex.distance(Example1Point(0.25, i), Example1Point(0.75, i)) for i in range(3000)]
    assert prof.tolist() == pointwise


@pytest.mark.parametrize("seeds", [(0.25, 0.75), (0.1, 0.9), (0.5, 0.51)])
def test_example1_parity_law(seeds):
    ex = make_system(SystemSpec("example1", horizon_cap=200_000))
    prof = ex.profile_values(Example1Point(seeds[0], 0), Example1Point(seeds[1], 0), 200_000)
    assert np.all(prof[1::2] == 1.0)


def test_rotation_isometry():
    rot = make_system(SystemSpec("rotation", horizon_cap=20_000))
    rng = np.random.default_rng(9)
    for _ in range(20):
        x, y = rot.sample_point(rng), rot.sample_point(rng)
        prof = rot.profile_values(x, y, 20_000)
        assert np.all(prof == prof[0])


@pytest.mark.parametrize("kind,N", [("tent", 2), ("tent", 3), ("shift2", 5), ("example1", 2), ("rotation", 7)])
def test_iterate_is_every_nth(kind, N):
    n = 10_000 // N
    base = make_system(SystemSpec(kind, horizon_cap=10_000))
    rng = np.random.default_rng(2)
    x, y = base.sample_point(rng), base.sample_point(rng)
    full = base.profile_values(x, y, N * (n - 1) + 1)
    assert np.array_equal(iterate(base, N).profile_values(x, y, n), full[::N])


def test_tent_exact_orbit_stays_on_lattice():
    tent = make_system(SystemSpec("tent", horizon_cap=2000))
    p = tent.sample_point(np.random.default_rng(0))
    orbit = tent.orbit(p, 2000)
    assert all(o.denominator == TENT_DENOM or TENT_DENOM % o.denominator == 0 for o in orbit)
    assert len(set(orbit)) == 2000  # no collapse to a fixed point


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 10**7))
def test_block_table_invariants(cap):
    t = example1_blocks(cap)
    L = t.exact_L
    assert L[0] == 0 and L[1] == 1
    for i in range(1, len(L) - 1):
        assert t.b[i] == 2 ** L[i]
        assert L[i + 1] == L[i] + t.b[i]
    assert all(b > a for a, b in zip(L, L[1:]))
    assert t.saturated_at is not None and t.b[t.saturated_at - 1] is BEYOND_HORIZON


def test_family_construction():
    bounds = family_boundaries(10**6)
    assert bounds == [30, 930, 27930, 837930]
    c = np.ones(5000, dtype=np.uint8)
    p = np.frombuffer(scrambled_family_point(c, 1000), np.uint8)
    assert p[:30].sum() == 0 and p[30:930].all() and p[930:].sum() == 0
    a, b = family_point(1, 1000), family_point(2, 1000)
    assert a != b and len(a) == 1064
