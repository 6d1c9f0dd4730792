"""Disorder paths, tilted sampling, and the change-of-measure densities."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinlab.disorder import (
    DisorderPath,
    TiltParams,
    rn_density_ct,
    rn_density_discrete,
    sample_ct,
    sample_discrete,
    sample_tilted,
    tilt_moment_ct,
    tilt_moment_ct_bound,
    tilt_moment_discrete,
    tilt_moment_discrete_bound,
)
from pinlab.rngstreams import DISORDER, stream


def test_discrete_path_shape_and_steps():
    rng = stream(0, DISORDER, 0)
    p = sample_discrete(3, 20, rng)
    assert p.positions.shape == (21, 3)
    assert np.all(p.positions[0] == 0)
    steps = np.abs(np.diff(p.positions, axis=0)).sum(axis=1)
    assert np.all(steps == 1)


def test_ct_path_jump_times_sorted_inside_horizon():
    rng = stream(0, DISORDER, 1)
    p = sample_ct(2, 2.0, 10.0, rng)
    assert np.all(np.diff(p.jump_times) >= 0)
    assert np.all((p.jump_times > 0) & (p.jump_times < 10.0))
    assert len(p.increments) == len(p.jump_times)


def test_position_at_between_jumps():
    rng = stream(3, DISORDER, 0)
    p = sample_ct(2, 1.0, 6.0, rng)
    if len(p.jump_times):
        t_mid = p.jump_times[0] / 2.0
        assert np.all(p.position_at(t_mid) == 0)
        assert np.all(p.position_at(6.0) == p.positions[-1])


def test_tilt_params_validation():
    with pytest.raises(ValueError):
        TiltParams("discrete", 1.0)
    with pytest.raises(ValueError):
        TiltParams("continuous", 0.3, rho=0.0)
    with pytest.raises(ValueError):
        TiltParams("sideways", 0.1)


def test_rn_density_discrete_normalizes():
    """Average of the density over the untilted law is 1 (likelihood ratio)."""
    d, N, h = 2, 12, 0.35
    vals = []
    for r in range(4000):
        rng = stream(17, DISORDER, r)
        path = sample_discrete(d, N, rng)
        vals.append(rn_density_discrete(path, h))
    mean = float(np.mean(vals))
    err = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    assert abs(mean - 1.0) <= 4 * err


def test_rn_density_tilted_sampling_consistency():
    """E_tilted[1/f] = 1: sampling under the tilt and weighting back."""
    d, N, h = 1, 10, 0.4
    vals = []
    for r in range(4000):
        rng = stream(23, DISORDER, r)
        path = sample_tilted(d, N, h, rng)
        vals.append(1.0 / rn_density_discrete(path, h))
    mean = float(np.mean(vals))
    err = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    assert abs(mean - 1.0) <= 4 * err


def test_rn_density_ct_closed_form():
    """Rate change rho -> rho+h: density exp(-h t) ((rho+h)/rho)^jumps."""
    rho, h, t = 1.0, 0.3, 5.0
    rng = stream(5, DISORDER, 2)
    path = sample_ct(2, rho + h, t, rng)
    n = len(path.jump_times)
    ref = math.exp(h * t) * (rho / (rho + h)) ** n
    assert rn_density_ct(path, h, rho) == pytest.approx(1.0 / ref, rel=1e-12)


def test_tilt_moment_ct_closed_form():
    """E[f^{-gamma/(1-gamma)}] for the Poisson rate change, in closed form."""
    rho, h, gamma, t = 1.0, 0.25, 0.8, 7.0
    a = gamma / (1.0 - gamma)
    # E[exp(a h t) (rho/(rho+h))^{a J}] with J ~ Poisson(rho t) under the base law
    ratio = (rho / (rho + h)) ** a
    ref = math.exp(a * h * t) * math.exp(rho * t * (ratio - 1.0))
    assert tilt_moment_ct(rho, h, gamma, t) == pytest.approx(ref, rel=1e-12)
    assert tilt_moment_ct_bound(rho, h, gamma, t) >= tilt_moment_ct(rho, h, gamma, t)


def test_tilt_moment_discrete_mc_agreement():
    d, N, h, gamma = 1, 8, 0.3, 0.75
    exact = tilt_moment_discrete(d, h, gamma, N)
    a = gamma / (1.0 - gamma)
    vals = []
    for r in range(4000):
        rng = stream(29, DISORDER, r)
        path = sample_discrete(d, N, rng)
        vals.append(rn_density_discrete(path, h) ** (-a))
    mean = float(np.mean(vals))
    err = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    assert abs(exact - mean) <= 4 * err
    assert tilt_moment_discrete_bound(d, h, gamma, N) >= exact


@given(
    h=st.floats(0.05, 0.6),
    gamma=st.floats(0.55, 0.95),
    n=st.integers(2, 16),
)
@settings(max_examples=25, deadline=None)
def test_tilt_moment_discrete_at_least_one(h, gamma, n):
    """Jensen: E[f^{-a}] >= E[f]^{-a} = 1 for every tilt strength."""
    assert tilt_moment_discrete(2, h, gamma, n) >= 1.0 - 1e-12


def test_seed_streams_are_reproducible_and_distinct():
    a = stream(1, DISORDER, 0).integers(0, 1 << 30, 4)
    b = stream(1, DISORDER, 0).integers(0, 1 << 30, 4)
    c = stream(1, DISORDER, 1).integers(0, 1 << 30, 4)
    assert np.all(a == b)
    assert np.any(a != c)


def test_path_rejects_bad_mode():
    with pytest.raises(Exception):
        DisorderPath("neither", 2, np.zeros((0, 2), dtype=np.int64), 5)
