import numpy as np
import pytest

from locpriv.mobility import (
    IidModel,
    IidProfile,
    Population,
    ProfileDensity,
    Trajectory,
    fit_iid_profile,
    sample_profile,
    sample_trajectory_iid,
)


def test_profile_validation():
    p = IidProfile([0.3, 0.7])
    assert p.r == 2
    with pytest.raises(ValueError):
        IidProfile([0.0, 1.0])
    with pytest.raises(ValueError):
        IidProfile([0.3, 0.6])
    with pytest.raises(ValueError):
        IidProfile([1.2, -0.2])


def test_profile_is_immutable():
    p = IidProfile([0.3, 0.7])
    with pytest.raises(ValueError):
        p.probs[0] = 0.5


def test_uniform_density_bounds_r2_are_exactly_one():
    d = ProfileDensity("uniform-simplex", 2)
    lo, hi = d.bounds
    assert lo == 1.0 and hi == 1.0


def test_bounded_mixture_bounds():
    d = ProfileDensity("bounded-mixture", 2, bump_weight=0.5, bump_alpha=2.0)
    lo, hi = d.bounds
    # flat part 0.5 * 1!, bump peak Gamma(4)/Gamma(2)^2 / 2^2 = 1.5
    assert lo == pytest.approx(0.5)
    assert hi == pytest.approx(0.5 + 0.5 * 1.5)
    assert 0.0 < lo <= hi


def test_density_rejects_bad_kinds():
    with pytest.raises(ValueError):
        ProfileDensity("spiky", 2)
    with pytest.raises(ValueError):
        ProfileDensity("bounded-mixture", 2, bump_alpha=1.0)


def test_sample_profile_r2_support_and_normalization():
    rng = np.random.default_rng(0)
    d = ProfileDensity("uniform-simplex", 2)
    for _ in range(200):
        p = sample_profile(d, rng)
        assert 0.0 < p.probs[0] < 1.0
        assert p.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_sample_profile_uniform_mean():
    # oracle: mean of U(0,1) is 1/2
    rng = np.random.default_rng(1)
    d = ProfileDensity("uniform-simplex", 2)
    draws = np.array([sample_profile(d, rng).probs[0] for _ in range(100_000)])
    assert abs(draws.mean() - 0.5) < 0.005


def test_sample_profile_r3_corner_mass():
    # oracle: under the flat prior on the 2-simplex, P(p0 > 1/2) is the
    # relative area of the corner sub-simplex, (1/2)^2 = 0.25
    rng = np.random.default_rng(2)
    d = ProfileDensity("uniform-simplex", 3)
    hits = 0
    trials = 100_000
    for _ in range(trials):
        if sample_profile(d, rng).probs[0] > 0.5:
            hits += 1
    assert abs(hits / trials - 0.25) < 0.01


def test_sample_profile_strictly_interior():
    rng = np.random.default_rng(3)
    for kind in ("uniform-simplex", "bounded-mixture"):
        d = ProfileDensity(kind, 3)
        for _ in range(500):
            assert sample_profile(d, rng).probs.min() >= 1e-9


def test_sampling_reproducible():
    d = ProfileDensity("bounded-mixture", 3)
    rng1, rng2 = np.random.default_rng(9), np.random.default_rng(9)
    for _ in range(10):
        assert np.array_equal(
            sample_profile(d, rng1).probs, sample_profile(d, rng2).probs
        )


def test_trajectory_empty_and_support():
    rng = np.random.default_rng(4)
    p = IidProfile([0.2, 0.3, 0.5])
    assert len(sample_trajectory_iid(p, 0, rng)) == 0
    t = sample_trajectory_iid(p, 1000, rng)
    assert len(t) == 1000
    assert t.states.max() < 3 and t.states.min() >= 0


def test_trajectory_frequency():
    rng = np.random.default_rng(5)
    p = IidProfile([0.5, 0.5])
    t = sample_trajectory_iid(p, 100_000, rng)
    assert abs(t.states.mean() - 0.5) < 0.005


def test_fit_iid_profile_formula():
    p = fit_iid_profile(Trajectory([0, 0, 0, 1]), r=2, smoothing=1.0)
    assert np.allclose(p.probs, [4 / 6, 2 / 6])
    p = fit_iid_profile(Trajectory([0, 0, 1, 1]), r=2, smoothing=0.0)
    assert np.allclose(p.probs, [0.5, 0.5])


def test_fit_iid_profile_boundary_rejected():
    with pytest.raises(ValueError):
        fit_iid_profile(Trajectory([1, 1, 1, 1, 1]), r=2, smoothing=0.0)
    with pytest.raises(ValueError):
        fit_iid_profile(Trajectory([]), r=2, smoothing=0.0)


def test_fit_iid_profile_smoothed_always_interior():
    rng = np.random.default_rng(6)
    for _ in range(50):
        states = rng.integers(0, 4, size=rng.integers(0, 30))
        p = fit_iid_profile(Trajectory(states), r=4, smoothing=1.0)
        assert np.all(p.probs > 0) and np.all(p.probs < 1)


def test_population_requires_users():
    with pytest.raises(ValueError):
        Population(model=IidModel(2), profiles=())
    pop = Population(model=IidModel(2), profiles=(IidProfile([0.4, 0.6]),))
    assert pop.n == 1
