"""Green functions of the pair walk, plain and tilted, by two routes.

Series route: exact big-integer return masses summed to a horizon, closed
with a two-term power tail fitted on exact data (Hurwitz zeta completion).

Quadrature route: the Fourier integrals on the torus.  The integrands carry
1/|k|^2 singularities at k = 0 and k = (pi, ..., pi); each axis is mapped
through u -> u - sin(2 pi u)/(2 pi), whose Jacobian vanishes quadratically
at both endpoints and tames both corners at once.  A plain midpoint product
rule on the mapped grid then converges fast; measured against the exact
series this reaches ~5e-9 relative error at d=4 (96 nodes) and ~4e-10 at
d=5 (48 nodes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ive, zeta as hurwitz_zeta

from ..errors import NumericalFailure, RecurrentWalk
from ..moments import pair_return_masses

_DEFAULT_NODES = {3: 192, 4: 96, 5: 48}
_SERIES_HORIZON = {3: 400, 4: 400, 5: 240}


@dataclass
class GreenValue:
    value: float
    error: float
    finite: bool = True
    by_series: float | None = None
    by_quadrature: float | None = None


@dataclass
class TiltedGreens:
    d: int
    h: float
    g_even: float
    g_odd: float
    gap: float
    gap_integral: float
    error: float


@dataclass
class GreenValues:
    """Aggregate record for reports."""

    g_pair: float | None = None
    g_ct: float | None = None
    g_even: float | None = None
    g_odd: float | None = None


def _mapped_axis(n: int, order: int):
    # endpoint maps clustering nodes at k = 0 and k = pi to tame the
    # 1/|k|^2 corners.  order 3 (Jacobian ~ sin^3) is needed for d = 3,
    # where the corner contribution decays slowest; order 2 (~ sin^2)
    # spends more nodes mid-range and measures better for d >= 4.
    u = (np.arange(n) + 0.5) / n
    if order == 3:
        cu = np.cos(np.pi * u)
        k = np.pi * (0.5 - 0.75 * cu + 0.25 * cu**3)
        w = (0.75 * np.pi * np.sin(np.pi * u) ** 3) / n
    else:
        k = np.pi * (u - np.sin(2 * np.pi * u) / (2 * np.pi))
        w = (2.0 * np.sin(np.pi * u) ** 2) / n
    return k, w


def torus_integral(fn, d: int, n: int) -> float:
    """(2pi)^-d integral over [-pi, pi]^d of fn(phi, sigma, lo, hi).

    fn receives phi = (1/d) sum cos k_i, sigma = sum sin^2 k_i, and the
    cancellation-free combinations lo = 1 - phi and hi = 1 + phi built
    from half-angle sums, on a broadcast slab.  It must be even in every
    axis, which all integrands here are.  Evaluation is slabbed over the
    first axis to bound memory.
    """
    k, w = _mapped_axis(n, 3 if d == 3 else 2)
    c = np.cos(k)
    s2 = np.sin(k) ** 2
    lo1 = 2.0 * np.sin(k / 2.0) ** 2  # 1 - cos k, exact near k = 0
    hi1 = 2.0 * np.cos(k / 2.0) ** 2  # 1 + cos k, exact near k = pi
    total = 0.0
    for i in range(n):
        cc = c[i]
        ss = s2[i]
        ll = lo1[i]
        hh = hi1[i]
        wt = w[i]
        for _ax in range(1, d):
            cc = np.add.outer(cc, c)
            ss = np.add.outer(ss, s2)
            ll = np.add.outer(ll, lo1)
            hh = np.add.outer(hh, hi1)
            wt = np.multiply.outer(wt, w)
        total += float(np.sum(fn(cc / d, ss, ll / d, hh / d) * wt))
    return total


def _series_green_pair(d: int, n0: int):
    """Exact head sum plus fitted C n^{-d/2} + D n^{-d/2-1} tail."""
    p = pair_return_masses(d, n0)
    head = float(np.sum(p[1:][::-1]))
    ns = np.arange(n0 // 2, n0 + 1)
    X = np.stack([ns ** (-d / 2.0), ns ** (-d / 2.0 - 1.0)], axis=1)
    coef, *_ = np.linalg.lstsq(X, p[ns], rcond=None)
    C, D = float(coef[0]), float(coef[1])
    resid = float(np.max(np.abs(X @ coef - p[ns]) / p[ns]))
    tail = C * hurwitz_zeta(d / 2.0, n0 + 1) + D * hurwitz_zeta(d / 2.0 + 1.0, n0 + 1)
    err = abs(tail) * (resid + 10.0 / n0**2) + 1e-13 * head
    return head + tail, err, (C, D)


_pair_cache: dict = {}


def green_pair(d: int, eps: float = 1e-6, nodes: int | None = None) -> GreenValue:
    """Green function of the pair walk at the origin, excluding step zero.

    Finite only for d >= 3; d <= 2 returns a divergence flag.  The two
    routes must agree within eps or a NumericalFailure is raised.
    """
    if d <= 2:
        return GreenValue(math.inf, math.nan, finite=False)
    key = (d, nodes)
    if key in _pair_cache:
        return _pair_cache[key]
    n = nodes or _DEFAULT_NODES.get(d, 32)
    series, err_s, _ = _series_green_pair(d, _SERIES_HORIZON.get(d, 240))
    quadrature = torus_integral(lambda p, s, lo, hi: p * p / (lo * hi), d, n)
    rel = abs(series - quadrature) / series
    if rel > eps:
        raise NumericalFailure(
            f"pair Green function routes disagree at d={d}: "
            f"series {series!r} vs quadrature {quadrature!r} (rel {rel:.3e} > eps {eps:.1e})",
            tolerance=eps,
            observed=rel,
        )
    out = GreenValue(quadrature, max(rel, err_s / series), True, series, quadrature)
    _pair_cache[key] = out
    return out


def _time_integral_g1(d: int) -> float:
    """G_1 = int_0^inf p_s(0) ds by quadrature plus asymptotic tail."""
    f = lambda s: ive(0, s / d) ** d
    T = 1e4
    total = 0.0
    for a, b in ((0.0, 1.0), (1.0, 100.0), (100.0, T)):
        v, _ = quad(f, a, b, limit=400)
        total += v
    pref = (d / (2 * math.pi)) ** (d / 2.0)
    # p_s(0) ~ pref s^{-d/2} (1 + d^2/(8s) + ...)
    tail = pref * (T ** (1 - d / 2.0) / (d / 2.0 - 1.0) + (d**2 / 8.0) * T ** (-d / 2.0) / (d / 2.0))
    return total + tail


_ct_cache: dict = {}


def green_ct(d: int, rho: float = 0.0, eps: float = 1e-6, nodes: int | None = None) -> GreenValue:
    """Green function of the continuous pair process with rates (1, rho).

    Equals G_1 / (1 + rho) exactly, where G_1 is the rate-1 value; the
    identity is applied literally so the scaling law holds to the bit.
    """
    if d <= 2:
        return GreenValue(math.inf, math.nan, finite=False)
    key = (d, nodes)
    if key not in _ct_cache:
        n = nodes or max(_DEFAULT_NODES.get(d, 32), 160 if d == 3 else 0)
        fourier = torus_integral(lambda p, s, lo, hi: 1.0 / lo, d, n)
        titime = _time_integral_g1(d)
        rel = abs(fourier - titime) / titime
        if rel > eps:
            raise NumericalFailure(
                f"continuous Green function routes disagree at d={d}: "
                f"Fourier {fourier!r} vs time integral {titime!r} (rel {rel:.3e} > eps {eps:.1e})",
                tolerance=eps,
                observed=rel,
            )
        _ct_cache[key] = (fourier, rel, titime)
    g1, rel, titime = _ct_cache[key]
    return GreenValue(g1 / (1.0 + rho), rel, True, titime / (1.0 + rho), g1 / (1.0 + rho))


_tilt_cache: dict = {}


def tilted_greens(d: int, h: float, eps: float = 1e-6, nodes: int | None = None) -> TiltedGreens:
    """Even- and odd-start Green functions of the tilted pair and their gap.

    The gap against the plain pair Green function is evaluated both as a
    direct difference and through its own integral representation

        (h / d^2) (2pi)^-d int phi^4 sigma / ((1 - phi^2)(1 - phi^2 psi)) dk;

    the two must agree within eps (scaled by the gap magnitude) or a
    NumericalFailure is raised.  For h > 0, g_even < g_odd < g_pair.
    """
    if d <= 2:
        raise RecurrentWalk(f"tilted Green functions require d >= 3, got d={d}")
    if not 0 <= h < 1:
        raise ValueError(f"tilt h must lie in [0, 1), got {h}")
    key = (d, h, nodes)
    if key in _tilt_cache:
        return _tilt_cache[key]
    n = nodes or _DEFAULT_NODES.get(d, 32)
    hd2 = h / d**2

    def denom(p, s, lo, hi):
        # 1 - phi^2 psi = (1 - phi^2)(1 + phi^2) + phi^2 h sigma / d^2,
        # assembled from nonnegative pieces so the corners stay exact
        return lo * hi * (1.0 + p * p) + p * p * hd2 * s

    def even_fn(p, s, lo, hi):
        return p * p * (1.0 + p * p - hd2 * s) / denom(p, s, lo, hi)

    def odd_fn(p, s, lo, hi):
        return p * p * (1.0 + p * p) / denom(p, s, lo, hi)

    def gap_fn(p, s, lo, hi):
        return p**4 * s / (lo * hi * denom(p, s, lo, hi))

    g_even = torus_integral(even_fn, d, n)
    g_odd = torus_integral(odd_fn, d, n)
    g_pair = green_pair(d, nodes=nodes).value
    gap_direct = g_pair - g_odd
    gap_integral = hd2 * torus_integral(gap_fn, d, n)
    tol = eps * max(1.0, abs(gap_direct))
    if abs(gap_direct - gap_integral) > tol:
        raise NumericalFailure(
            f"gap routes disagree at d={d}, h={h}: direct {gap_direct!r} "
            f"vs integral {gap_integral!r} (tol {tol:.1e})",
            tolerance=tol,
            observed=abs(gap_direct - gap_integral),
        )
    out = TiltedGreens(d, h, g_even, g_odd, gap_direct, gap_integral,
                       abs(gap_direct - gap_integral))
    _tilt_cache[key] = out
    return out


def gap_slope(d: int, nodes: int | None = None) -> float:
    """d(gap)/dh at h = 0, the leading coefficient of the tilted-mass loss."""
    n = nodes or _DEFAULT_NODES.get(d, 32)
    val = torus_integral(
        lambda p, s, lo, hi: p**4 * s / ((lo * hi) ** 2 * (1.0 + p * p)), d, n
    )
    return val / d**2
