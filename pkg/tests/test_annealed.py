"""Annealed layer: return laws, free energy, critical points."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from pinlab.annealed import (
    annealed_curve,
    annealed_free_energy,
    annealed_partition,
    correlation_length,
    critical_point,
    renewal_law_ct,
    renewal_law_discrete,
)
from pinlab.disorder import DisorderPath
from pinlab.errors import ConfigError, RecurrentWalk
from pinlab.kernels import greens
from pinlab.moments import pair_return_masses
from pinlab.quenched import ModelParams, renewal_dp_partition


# -- return laws --------------------------------------------------------------


@pytest.mark.parametrize("d,defect_tol", [(3, 1e-6), (4, 1e-7), (5, 1e-7)])
def test_discrete_law_is_proper(d, defect_tol):
    # the two-term tail fit is weakest at d = 3 where the tail is fattest
    law = renewal_law_discrete(d)
    assert law.masses[0] == 0.0
    assert np.all(law.masses >= 0)
    assert abs(law.defect) < defect_tol
    assert law.tail_index == d / 2.0 - 1.0
    if d >= 5:
        assert math.isfinite(law.mean) and law.mean > 1.0
    else:
        assert law.mean == math.inf


def test_discrete_law_tail_extension():
    law = renewal_law_discrete(4)
    n0 = law.n_max
    ext = law.masses_to(n0 + 10)
    assert np.array_equal(ext[: n0 + 1], law.masses)
    n = n0 + 5
    fitted = law.tail_constant * n ** (-2.0) + law.tail_second * n ** (-3.0)
    assert ext[n] == pytest.approx(fitted, rel=1e-12)
    assert law.tail_mass(n0) > law.tail_mass(n0 + 50) > 0


def test_ct_law_is_proper():
    law = renewal_law_ct(4, 1.0)
    assert abs(law.defect) < 1e-6
    assert law.mean == math.inf
    g = greens.green_ct(4, 1.0).value
    assert law.density[0] == pytest.approx(1.0 / g, rel=1e-12)
    law5 = renewal_law_ct(5, 0.5)
    assert math.isfinite(law5.mean) and law5.mean > 0


def test_recurrent_dimensions_refuse_a_law():
    with pytest.raises(RecurrentWalk):
        renewal_law_discrete(2)
    with pytest.raises(RecurrentWalk):
        renewal_law_ct(1, 0.5)


# -- the annealed recursion is the disorder average of the quenched value -----


def test_annealed_equals_disorder_average():
    d, N = 3, 4
    params = ModelParams("discrete", d, beta=0.8)
    z = params.z_value
    law = renewal_law_discrete(d)
    # exact average of the pinned quenched value over every disorder path
    total = 0.0
    n_paths = (2 * d) ** N
    for code in range(n_paths):
        c, steps = code, np.zeros((N, d), dtype=np.int64)
        for n in range(N):
            digit = c % (2 * d)
            c //= 2 * d
            steps[n, digit >> 1] = 1 - 2 * (digit & 1)
        y = DisorderPath("discrete", d, steps, float(N))
        total += renewal_dp_partition(params, y, constrained=True).value
    avg = total / n_paths
    # same object from the homogeneous chain: last collision at j, free
    # pair-return stretch of length N - j afterwards
    p = pair_return_masses(d, N)
    ref = p[N] + sum(
        math.exp(annealed_partition(z, law, j, "pin")) * p[N - j]
        for j in range(1, N + 1)
    )
    assert avg == pytest.approx(ref, rel=1e-10)


def test_annealed_partition_free_dominates_pin():
    law = renewal_law_discrete(4)
    for z in (0.5, 1.0, 1.3):
        lp = annealed_partition(z, law, 64, "pin")
        lf = annealed_partition(z, law, 64, "free")
        assert lf >= lp


# -- free energy --------------------------------------------------------------


def test_free_energy_zero_at_and_below_one():
    law = renewal_law_discrete(5)
    assert annealed_free_energy(0.5, law) == 0.0
    assert annealed_free_energy(1.0, law) == 0.0
    with pytest.raises(ConfigError):
        annealed_free_energy(0.0, law)


def test_free_energy_defining_identity():
    # F solves z * sum_n K(n) e^{-F n} = 1; verify with a long partial sum
    law = renewal_law_discrete(5)
    z = 1.05
    F = annealed_free_energy(z, law)
    assert F > 0
    n = np.arange(4001, dtype=float)
    damped = float(np.sum(law.masses_to(4000) * np.exp(-F * n)))
    assert z * damped == pytest.approx(1.0, abs=1e-6)


def test_free_energy_monotone_in_z():
    law = renewal_law_discrete(4)
    fs = [annealed_free_energy(z, law) for z in (1.005, 1.02, 1.1, 1.5)]
    assert all(b > a for a, b in zip(fs, fs[1:]))


def test_slope_matches_inverse_mean_when_mean_is_finite():
    # finite-mean renewal: F(z)/(z-1) -> 1/mean as z -> 1+.  The exact-mass
    # discrete law supports a tight check close to 1; the continuous law's
    # transform rides a fixed trapezoid grid whose O(ds^2) mass bias caps how
    # small z - 1 can usefully be, so it is checked further out and looser.
    law = renewal_law_discrete(5)
    ratio = annealed_free_energy(1.002, law) / 0.002
    assert ratio == pytest.approx(1.0 / law.mean, rel=0.05)
    law_ct = renewal_law_ct(5, 0.5)
    r1 = annealed_free_energy(1.01, law_ct) / 0.01
    r2 = annealed_free_energy(1.02, law_ct) / 0.02
    assert r1 == pytest.approx(1.0 / law_ct.mean, rel=0.15)
    assert r2 == pytest.approx(r1, rel=0.01)


def test_slope_degenerates_at_the_marginal_dimension():
    # infinite-mean (d = 4) law: the per-excess ratio keeps falling as z -> 1
    law = renewal_law_discrete(4)
    r_far = annealed_free_energy(1.02, law) / 0.02
    r_near = annealed_free_energy(1.005, law) / 0.005
    assert r_near < r_far


def test_annealed_curve_slope_fit():
    law = renewal_law_discrete(5)
    curve = annealed_curve(law, (1.002, 1.005, 1.01))
    assert curve.slope_fit == pytest.approx(1.0 / law.mean, rel=0.10)
    assert [z for z, _ in curve.points] == [1.002, 1.005, 1.01]


# -- critical points ----------------------------------------------------------


def test_critical_point_recurrent_is_zero():
    for mode in ("discrete", "continuous"):
        for d in (1, 2):
            assert critical_point(mode, d) == 0.0


def test_critical_point_transient_inverts_green():
    for d in (4, 5):
        beta_c = critical_point("discrete", d)
        g = greens.green_pair(d).value
        assert math.expm1(beta_c) * g == pytest.approx(1.0, abs=1e-12)
    for rho in (0.0, 0.5, 1.0, 2.0):
        beta_c = critical_point("continuous", 3, rho)
        assert beta_c * greens.green_ct(3, rho).value == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ConfigError):
        critical_point("sideways", 3)


def test_ct_free_energy_above_threshold():
    law = renewal_law_ct(5, 0.5)
    z = 1.02
    F = annealed_free_energy(z, law)
    assert F > 0
    damped = float(np.trapezoid(law.density * np.exp(-F * law.grid), law.grid))
    # the truncated integral undershoots by the (small, damped) tail only
    assert z * damped == pytest.approx(1.0, abs=5e-4)


# -- correlation length -------------------------------------------------------


def test_correlation_length_exact_rationals():
    assert correlation_length(1.01).length == 100
    assert correlation_length(1.0625).length == 16
    got = correlation_length(1.003)
    assert got.length == 333
    assert got.rational == Fraction(1000, 3)
    assert correlation_length(Fraction(9, 8)).length == 8
    with pytest.raises(ConfigError):
        correlation_length(1.0)
