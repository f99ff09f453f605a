import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chaoskit.distfn import (
    DistanceProfile,
    SequenceSpec,
    checkpoint_schedule,
    default_t_grid,
    distance_profile,
    distribution_estimate,
    empirical_density,
    subsample_profile,
)
from chaoskit.errors import ConfigError, InsufficientData
from chaoskit.systems import Example1Point, SystemSpec, make_system
from chaoskit.theorems import example1_upper_oracle

profiles = arrays(np.float64, st.integers(5, 300), elements=st.floats(0, 1))


def brute_density(values, t, n):
    return sum(1 for v in values[:n] if v < t) / n


def test_density_is_strict():
    prof = DistanceProfile(np.array([0.1, 0.2, 0.2, 0.5]))
    assert empirical_density(prof, 0.2, 4) == 0.25
    assert empirical_density(prof, 0.2000001, 4) == 0.75


def test_empty_profile_is_insufficient():
    with pytest.raises(InsufficientData):
        DistanceProfile(np.array([]))


def test_geometric_schedule():
    ck = checkpoint_schedule(100, burn_in=0)
    assert ck[0] == 1 and ck[-1] == 100
    assert all(b > a for a, b in zip(ck, ck[1:]))
    assert checkpoint_schedule(100, burn_in=9)[0] == 10


def test_block_boundary_schedule():
    assert checkpoint_schedule(3000, policy="block_boundaries", boundaries=[1, 3, 11, 2059, 5000]) == [1, 3, 11, 2059]
    with pytest.raises(ValueError):
        checkpoint_schedule(10, policy="block_boundaries", boundaries=[50])


@pytest.mark.parametrize("horizon,burn_in", [(0, 0), (10, 10), (10, -1)])
def test_schedule_rejects_bad_window(horizon, burn_in):
    with pytest.raises(ValueError):
        checkpoint_schedule(horizon, burn_in)


def test_default_grid_and_resolution_floor():
    g = default_t_grid()
    assert g.size == 32 and g[0] == pytest.approx(1e-4) and g[-1] == 1.0
    assert default_t_grid(0.25)[0] == pytest.approx(0.2525)
    assert default_t_grid(1.0).size == 0


def test_example1_upper_density_matches_oracle():
    ex = make_system(SystemSpec("example1", horizon_cap=10**6))
    prof = distance_profile(ex, Example1Point(0.25, 0), Example1Point(0.75, 0), 10**6)
    est = distribution_estimate(prof, [0.3])
    assert 0.49 <= est.upper[0] <= 0.5
    assert est.upper[0] == example1_upper_oracle(est.upper_at[0], 0.3)
    assert 2059 in est.checkpoints  # block boundaries merged into the schedule


def test_sequence_spec_roundtrip_and_errors():
    q = SequenceSpec.arith(3, 1)
    assert q.materialize(11).tolist() == [1, 4, 7, 10]
    assert SequenceSpec.from_dict(q.to_dict()) == q
    e = SequenceSpec.explicit([0, 2, 7], gap_bound=5)
    assert SequenceSpec.from_dict(e.to_dict()) == e
    with pytest.raises(ConfigError):
        SequenceSpec.explicit([3, 2])
    with pytest.raises(ConfigError):
        SequenceSpec.arith(0)
    with pytest.raises(ConfigError):
        SequenceSpec.explicit([0, 9], gap_bound=5).check_gap_bound(10)


def test_subsample_outside_horizon():
    prof = DistanceProfile(np.ones(10))
    with pytest.raises(InsufficientData):
        subsample_profile(prof, SequenceSpec.explicit([20, 30]))
    sub = subsample_profile(prof, SequenceSpec.explicit([2, 5, 30]))
    assert sub.truncated and len(sub) == 2


def test_csv_format():
    est = distribution_estimate(DistanceProfile(np.array([0.5, 0.1])), [0.2, 1.0])
    lines = est.to_csv().split("\n")
    assert lines[0] == "t,F_lower,F_upper"
    assert lines[1] == "0.2,0,0.5"
    assert est.to_csv().endswith("\n") and "\r" not in est.to_csv()


# -- properties -------------------------------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(profiles)
def test_estimate_matches_brute_force(values):
    prof = DistanceProfile(values)
    grid = [0.05, 0.3, 0.7, 1.5]
    est = distribution_estimate(prof, grid)
    for j, t in enumerate(grid):
        dens = [brute_density(values, t, n) for n in est.checkpoints]
        assert est.lower[j] == min(dens)
        assert est.upper[j] == max(dens)


@settings(max_examples=60, deadline=None)
@given(profiles)
def test_estimates_monotone_in_t_and_ordered(values):
    est = distribution_estimate(DistanceProfile(values), np.geomspace(1e-3, 1, 20))
    assert np.all(np.diff(est.lower) >= 0)
    assert np.all(np.diff(est.upper) >= 0)
    assert np.all(est.lower <= est.upper)
    assert np.all((0 <= est.lower) & (est.upper <= 1))


@settings(max_examples=60, deadline=None)
@given(profiles, st.data())
def test_checkpoint_superset_widens_bracket(values, data):
    prof = DistanceProfile(values)
    n = len(prof)
    small = sorted(data.draw(st.sets(st.integers(1, n), min_size=1, max_size=8)))
    extra = data.draw(st.sets(st.integers(1, n), max_size=8))
    big = sorted(set(small) | extra)
    grid = [0.1, 0.5, 0.9]
    a = distribution_estimate(prof, grid, small)
    b = distribution_estimate(prof, grid, big)
    assert np.all(b.lower <= a.lower) and np.all(b.upper >= a.upper)


@settings(max_examples=40, deadline=None)
@given(profiles)
def test_identity_subsample(values):
    prof = DistanceProfile(values)
    sub = subsample_profile(prof, SequenceSpec.arith(1))
    assert np.array_equal(sub.values, prof.values)


@settings(max_examples=40, deadline=None)
@given(profiles, st.integers(1, 5), st.integers(0, 4))
def test_arith_subsample_picks_indices(values, step, start):
    prof = DistanceProfile(values)
    if start >= len(prof):
        return
    sub = subsample_profile(prof, SequenceSpec.arith(step, start))
    assert np.array_equal(sub.values, values[start::step])


@settings(max_examples=40, deadline=None)
@given(profiles, st.sampled_from([0.125, 0.5, 2.0, 8.0]))
def test_metric_scaling(values, lam):
    # powers of two keep the scaling exact, so t-comparisons are unchanged
    grid = np.array([0.05, 0.2, 0.6])
    a = distribution_estimate(DistanceProfile(values, resolution=0.01), grid)
    b = distribution_estimate(DistanceProfile(values * lam, resolution=0.01 * lam), grid * lam)
    assert np.array_equal(a.lower, b.lower) and np.array_equal(a.upper, b.upper)
    assert b.resolution == a.resolution * lam
