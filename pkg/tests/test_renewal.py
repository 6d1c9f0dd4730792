"""Renewal sampling, count generating functions, parity laws, domination."""
from __future__ import annotations

import math

import numpy as np
import pytest

from pinlab.annealed import renewal_law_ct, renewal_law_discrete
from pinlab.errors import ConfigError
from pinlab.renewal import (
    AppendixAParams,
    appendixA_scan,
    dominating_law,
    exact_gf_dp,
    parity_law,
    sample_renewal,
)


def _forward_gf(law, N: int, s: float) -> float:
    # forward accumulation over the last renewal epoch; the module solves
    # the same quantity by backward recursion from the horizon
    K = law.masses_to(N)
    surv = 1.0 - np.cumsum(K)
    c = np.zeros(N + 1)
    c[0] = 1.0
    for j in range(1, N + 1):
        c[j] = s * float(c[:j] @ K[j:0:-1])
    return float(sum(c[j] * surv[N - j] for j in range(N + 1)))


# -- count generating function ------------------------------------------------


def test_gf_forward_backward_agree():
    law = renewal_law_discrete(5)
    for N, s in [(16, 0.5), (64, 0.9), (128, 0.99)]:
        assert exact_gf_dp(law, N, s) == pytest.approx(_forward_gf(law, N, s), rel=1e-12)


def test_gf_boundary_cases():
    law = renewal_law_discrete(4)
    assert exact_gf_dp(law, 50, 1.0) == pytest.approx(1.0, abs=1e-12)
    k1 = law.masses[1]
    # one step: either a renewal lands at 1 (weight s) or nothing does
    assert exact_gf_dp(law, 1, 0.3) == pytest.approx(0.3 * k1 + (1.0 - k1), rel=1e-12)


def test_gf_monotone():
    law = renewal_law_discrete(4)
    assert exact_gf_dp(law, 64, 0.5) < exact_gf_dp(law, 64, 0.8) < 1.0
    assert exact_gf_dp(law, 128, 0.8) < exact_gf_dp(law, 32, 0.8)


def test_gf_rejects_bad_input():
    law = renewal_law_discrete(4)
    with pytest.raises(ConfigError):
        exact_gf_dp(law, 10, 0.0)
    with pytest.raises(ConfigError):
        exact_gf_dp(law, 10, 1.5)
    with pytest.raises(ConfigError):
        exact_gf_dp(law, 0, 0.5)
    with pytest.raises(ConfigError):
        exact_gf_dp(renewal_law_ct(4, 0.5), 10, 0.5)


# -- sampling -----------------------------------------------------------------


def test_sample_renewal_paths_are_ordered():
    law = renewal_law_discrete(4)
    path = sample_renewal(law, 200, seed=3)
    assert path.points[0] == 0.0
    assert np.all(np.diff(path.points) > 0)
    assert path.points[-1] <= 200
    assert path.count == len(path.points) - 1
    again = sample_renewal(law, 200, seed=3)
    assert np.array_equal(path.points, again.points)


def test_sample_renewal_ct_horizon_guard():
    law = renewal_law_ct(4, 0.5)
    path = sample_renewal(law, 50.0, seed=1)
    assert np.all(np.diff(path.points) > 0)
    with pytest.raises(ConfigError):
        sample_renewal(law, 1e6, seed=1)


# -- thinned-count decay scan -------------------------------------------------


def test_appendix_scan_small_grid():
    law = renewal_law_discrete(4)
    params = AppendixAParams(N_grid=(64, 128, 256))
    rep = appendixA_scan(law, params, replicas=80, seed=2)
    assert len(rep.rows) == 3
    for row in rep.rows:
        assert row.s == pytest.approx(math.exp(-row.N ** (-0.55)), rel=1e-12)
        assert row.prefactored == pytest.approx(row.N**0.1 * row.value, rel=1e-12)
        assert 0.0 < row.value < 1.0
    prefs = [r.prefactored for r in rep.rows]
    assert rep.strictly_decreasing == all(b < a for a, b in zip(prefs, prefs[1:]))
    assert rep.max_mc_sigma < 4.0


def test_appendix_scan_rejects_bad_exponents():
    law = renewal_law_discrete(4)
    with pytest.raises(ConfigError):
        appendixA_scan(law, AppendixAParams(delta1=0.9, delta2=0.5, N_grid=(64,)))


# -- parity-resolved tilted return laws ---------------------------------------


def test_parity_law_zero_tilt_collapses():
    laws = parity_law(4, 0.0, n_max=32)
    plain = renewal_law_discrete(4)
    n = np.arange(1, 17)
    assert np.allclose(laws.even.masses[n], plain.masses[n], rtol=1e-10)
    assert np.allclose(laws.odd.masses[n], plain.masses[n], rtol=1e-10)


def test_parity_law_dual_routes_agree():
    laws = parity_law(4, 0.2, n_max=48)
    assert laws.direct_check <= 1e-10
    assert laws.route_gap <= 1e-4
    for law in (laws.even, laws.odd):
        assert np.all(law.masses >= 0)
        assert law.defect == 0.0
        # proper by construction: table mass plus analytic tail is one
        total = float(np.sum(law.masses)) + law.tail_mass(law.n_max)
        assert total == pytest.approx(1.0, abs=1e-12)


def test_parity_law_rejects_bad_tilt():
    with pytest.raises(ConfigError):
        parity_law(4, 1.0)
    with pytest.raises(ConfigError):
        parity_law(4, 0.2, n_max=8)


# -- dominating law -----------------------------------------------------------


def test_dominating_law_majorizes_inputs():
    laws = parity_law(4, 0.2, n_max=48)
    fam = (laws.even, laws.odd)
    dom, cert = dominating_law(fam)
    assert cert.min_margin >= -1e-12
    assert cert.normalization == pytest.approx(1.0, abs=1e-10)
    assert np.all(dom.masses >= 0)
    assert float(np.sum(dom.masses)) + dom.tail_mass(dom.n_max) == pytest.approx(
        1.0, abs=1e-10
    )
    for n0 in (4, 16, 40):
        for law in fam:
            assert dom.tail_mass(n0) >= law.tail_mass(n0) - 1e-12
    ext = dom.masses_to(dom.n_max + 20)
    assert np.all(ext >= -1e-15)
    # recomputed via the profile route, so equal only to rounding
    assert np.allclose(ext[: dom.n_max + 1], dom.masses, atol=1e-14)


def test_dominating_law_rejects_bad_families():
    with pytest.raises(ConfigError):
        dominating_law(())
    with pytest.raises(ConfigError):
        dominating_law((renewal_law_ct(4, 0.5),))
    with pytest.raises(ConfigError):
        dominating_law((renewal_law_discrete(4), renewal_law_discrete(5)))
