"""Lattice kernel tables, characteristic functions, and Green functions."""
import math

import numpy as np
import pytest

from pinlab.kernels import (
    LatticeConfig,
    KernelTable,
    build_kernel_table,
    char_triple,
    ct_kernel_1d,
    ct_kernel_point,
    ct_pair_return,
    green_pair,
    green_ct,
    tilted_greens,
    gap_slope,
    torus_integral,
)


def brute_kernel(d: int, n_max: int):
    """Direct convolution table p_n(x) on the full box, for cross-checking."""
    side = 2 * n_max + 1
    p = np.zeros((side,) * d)
    p[(n_max,) * d] = 1.0
    out = [p.copy()]
    for _ in range(n_max):
        nxt = np.zeros_like(p)
        for ax in range(d):
            nxt += np.roll(p, 1, axis=ax) + np.roll(p, -1, axis=ax)
        p = nxt / (2 * d)
        out.append(p.copy())
    return out


@pytest.mark.parametrize("d,n_max", [(1, 8), (2, 6), (3, 5)])
def test_table_matches_brute_convolution(d, n_max):
    table = KernelTable(LatticeConfig(d=d, n_max=n_max)).build()
    brute = brute_kernel(d, n_max)
    for n in range(n_max + 1):
        for idx in np.ndindex(*(2 * n_max + 1,) * d):
            x = tuple(i - n_max for i in idx)
            assert table.value(n, x) == pytest.approx(brute[n][idx], abs=1e-14)


def test_table_rows_normalize():
    table = KernelTable(LatticeConfig(d=4, n_max=6)).build()
    for n in range(7):
        total = sum(
            table.value(n, x)
            for x in np.ndindex(*(2 * n + 1,) * 4)
            for x in [tuple(i - n for i in x)]
        )
        assert total == pytest.approx(1.0, abs=1e-12)


def test_table_symmetry():
    table = KernelTable(LatticeConfig(d=3, n_max=6)).build()
    assert table.value(4, (1, 2, 1)) == table.value(4, (2, 1, 1))
    assert table.value(4, (1, 2, 1)) == table.value(4, (-1, 2, -1))
    # odd site at even time is unreachable
    assert table.value(4, (1, 0, 0)) == 0.0


def test_table_disk_cache_roundtrip(tmp_path):
    cfg = LatticeConfig(d=3, n_max=5)
    fresh = build_kernel_table(cfg, cache_dir=str(tmp_path))
    assert fresh.from_cache is False
    again = build_kernel_table(cfg, cache_dir=str(tmp_path))
    assert again.from_cache is True
    for n in range(6):
        assert again.value(n, (1, 0, 1)) == fresh.value(n, (1, 0, 1))
    # corrupt the file: loader must rebuild, not trust it
    path = next(tmp_path.iterdir())
    path.write_bytes(b"garbage")
    rebuilt = build_kernel_table(cfg, cache_dir=str(tmp_path))
    assert rebuilt.from_cache is False
    assert rebuilt.value(4, (0, 0, 0)) == fresh.value(4, (0, 0, 0))


def test_char_triple_at_zero_momentum():
    tri = char_triple(4, 0.3)
    k0 = np.zeros((1, 4))
    assert tri.phi(k0)[0] == pytest.approx(1.0)
    assert tri.psi(k0)[0] == pytest.approx(1.0)


def test_char_psi_dominated_by_phi_squared():
    tri = char_triple(3, 0.4)
    rng = np.random.default_rng(0)
    k = rng.uniform(-math.pi, math.pi, size=(200, 3))
    assert np.all(tri.psi(k) <= tri.phi(k) ** 2 + 1e-15)


def test_ct_kernel_closed_forms():
    # one coordinate: exp(-s) I_x(s); product structure in d dimensions
    assert ct_kernel_1d(0, 0.0) == pytest.approx(1.0)
    s = 1.7
    val = ct_kernel_point(3, s, (1, 0, 2))
    ref = ct_kernel_1d(1, s / 3) * ct_kernel_1d(0, s / 3) * ct_kernel_1d(2, s / 3)
    assert val == pytest.approx(ref, rel=1e-12)


def test_ct_pair_return_rate_scaling():
    # the pair process at rates (1, rho) is the rate-(1+rho) single walk
    assert ct_pair_return(4, 2.0, 1.0) == pytest.approx(
        ct_kernel_point(4, 4.0, (0, 0, 0, 0)), rel=1e-12
    )


@pytest.mark.parametrize("d", [4, 5])
def test_green_pair_dual_route(d):
    g = green_pair(d)
    assert g.finite
    rel = abs(g.by_series - g.by_quadrature) / g.value
    assert rel <= 1e-6


def test_green_pair_recurrent_dimensions():
    for d in (1, 2):
        g = green_pair(d)
        assert not g.finite
        assert math.isinf(g.value)


def test_green_ct_rate_identity():
    g1 = green_ct(3, 0.0).value
    for rho in (0.5, 1.0, 2.0):
        assert green_ct(3, rho).value == g1 / (1.0 + rho)


def test_tilted_greens_collapse_and_order():
    d = 4
    g = green_pair(d).value
    tg0 = tilted_greens(d, 0.0)
    assert tg0.g_even == pytest.approx(g, rel=1e-9)
    assert tg0.g_odd == pytest.approx(g, rel=1e-9)
    tg = tilted_greens(d, 0.2)
    assert tg.g_even < tg.g_odd < g


def test_gap_slope_positive_and_linear():
    d = 5
    g = green_pair(d).value
    slope = gap_slope(d)
    assert slope > 0
    for h in (0.05, 0.1):
        drop = g - tilted_greens(d, h).g_odd
        assert drop == pytest.approx(slope * h, rel=0.02)


def test_torus_integral_constant():
    # order-2 endpoint map (d >= 4): midpoint rule is trig-exact on the
    # Jacobian, so a constant integrates to 1 at machine precision
    ones = lambda phi, s, lo, hi: np.ones_like(phi)
    assert torus_integral(ones, 4, 24) == pytest.approx(1.0, abs=1e-12)
    # order-3 map (d = 3): not exact, but converges fast in n
    err24 = abs(torus_integral(ones, 3, 24) - 1.0)
    err96 = abs(torus_integral(ones, 3, 96) - 1.0)
    assert err96 < 1e-7
    assert err96 < err24 / 50
