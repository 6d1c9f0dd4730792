"""Continuous-time kernels of the rate-1 walk and derived diagnostics.

The rate-1 walk on Z^d jumps to a uniform neighbor, so each coordinate is
an independent rate-1/d one-dimensional walk and the kernel factorizes:

    p_t(x) = prod_i q_{t/d}(x_i),     q_s(x) = e^{-s} I_x(s),

with I the modified Bessel function.  scipy's exponentially scaled `ive`
evaluates q_s directly.  A Poissonized sum over discrete kernels provides
an independent route for cross checks at small t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ive
from scipy.stats import poisson

from .tables import KernelTable


def ct_kernel_1d(x, s):
    """q_s(x) = e^{-s} I_|x|(s), vectorized in x."""
    return ive(np.abs(x), s)


def log_ct_kernel_1d(x, s):
    """log q_s(x), switching to a uniform asymptotic past float underflow."""
    x = np.abs(np.asarray(x, dtype=float))
    v = ive(x, s)
    with np.errstate(divide="ignore"):
        direct = np.log(v)
    # Olver-type leading term: ln I_nu(z) ~ r - nu asinh(nu/z) - ln(2 pi r)/2,
    # r = sqrt(nu^2 + z^2); accurate where the direct value underflowed
    if s <= 0:
        return np.where(x == 0, 0.0, -np.inf)
    r = np.sqrt(x**2 + s**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        asym = r - s - np.where(x > 0, x * np.arcsinh(x / s), 0.0) - 0.5 * np.log(2 * np.pi * r)
    return np.where(v > 0, direct, asym)


def ct_kernel_point(d: int, t: float, x, eps: float = 1e-8) -> float:
    """p_t(x) for the rate-1 walk; exact product of coordinate kernels."""
    if t < 0:
        raise ValueError("t must be >= 0")
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (d,):
        raise ValueError(f"x must have shape ({d},)")
    if t == 0:
        return 1.0 if not x.any() else 0.0
    return float(np.prod(ive(np.abs(x), t / d)))


def poissonized_ct_kernel(d: int, t: float, x, table: KernelTable, eps: float = 1e-8) -> float:
    """Cross-check route: sum_n P(Poisson(t)=n) p^disc_n(x), tail below eps.

    Requires a discrete table whose horizon covers the Poisson upper quantile.
    """
    n_hi = int(poisson.ppf(1 - eps / 2, t)) + 1
    if n_hi > table.config.n_max:
        raise ValueError(
            f"table horizon {table.config.n_max} below Poisson quantile {n_hi}"
        )
    weights = poisson.pmf(np.arange(n_hi + 1), t)
    total = 0.0
    for n in range(n_hi + 1):
        if weights[n] > 0:
            total += weights[n] * table.value(n, x)
    return total


def ct_pair_return(d: int, s: float, rho: float = 0.0) -> float:
    """p_{(1+rho)s}(0): collision mass of two walks with rate 1 and rho."""
    if s == 0:
        return 1.0
    return float(ive(0, (1 + rho) * s / d) ** d)


def entropy_sum(d: int, rho: float, t: float) -> float:
    """sum_x p_{rho t}(x) log p_t(x), reduced to one-dimensional sums.

    The product form of the kernel collapses the d-dimensional sum to

        d * sum_{x in Z} q_{rho t / d}(x) log q_{t/d}(x).

    As t grows the value divided by log t approaches -d/2 for any fixed
    rho > 0.  rho = 0 returns log p_t(0) exactly.
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    s_w = rho * t / d  # weight kernel time scale
    s_f = t / d  # log factor time scale
    if rho == 0:
        return float(d * np.log(ive(0, s_f)))
    radius = int(s_w + 12 * np.sqrt(s_w) + 40)
    xs = np.arange(0, radius + 1)
    w = ive(xs, s_w)
    logq = log_ct_kernel_1d(xs, s_f)
    terms = np.where(w > 0, w * logq, 0.0)
    one_dim = terms[0] + 2 * np.sum(terms[1:][::-1])
    return float(d * one_dim)


@dataclass
class KernelBoundRow:
    t: float
    x: int
    regime: str
    kernel: float
    bound: float
    ok: bool


@dataclass
class KernelBoundReport:
    """Fitted lower-bound constants for the 1-d kernel in three regimes.

    near (|x| <= eps_inner * t):  q_t(x) >= C1 t^{-1/2} exp(-C2 x^2 / t)
    mid  (eps_inner t < |x| < a_outer t):  q_t(x) >= exp(-C3 t)
    far  (|x| >= a_outer t):  q_t(x) >= exp(-2 |x| log |x|)

    The constants are existential: C2 comes from a slope fit, C1 and C3 are
    then chosen so the bounds hold pointwise on the supplied grids.  The far
    regime uses the fixed constant 2.
    """

    c1: float
    c2: float
    c3: float
    eps_inner: float
    a_outer: float
    rows: list

    @property
    def all_hold(self) -> bool:
        return all(r.ok for r in self.rows)


def kernel_bound_report(
    t_grid, x_grid, eps_inner: float = 0.25, a_outer: float = 3.0
) -> KernelBoundReport:
    """Check the three-regime lower-bound shape of the 1-d kernel q_t(x)."""
    pts = []
    for t in t_grid:
        if t <= 0:
            continue
        for x in x_grid:
            x = abs(int(x))
            logq = float(log_ct_kernel_1d(np.array([x]), float(t))[0])
            if x <= eps_inner * t:
                regime = "near"
            elif x < a_outer * t:
                regime = "mid"
            else:
                regime = "far"
            pts.append((float(t), x, regime, logq))

    near = [(t, x, lq) for t, x, r, lq in pts if r == "near"]
    if len(near) >= 2:
        u = np.array([x * x / t for t, x, _ in near])
        y = np.array([lq + 0.5 * np.log(t) for t, _, lq in near])
        c2 = max(0.0, -float(np.polyfit(u, y, 1)[0])) if len(set(u)) > 1 else 0.5
        c1 = float(np.exp(np.min(y + c2 * u)))
    else:
        c1, c2 = 1.0, 0.5
    mid = [(t, lq) for t, x, r, lq in pts if r == "mid"]
    c3 = max((-lq / t for t, lq in mid), default=1.0)

    rows = []
    for t, x, regime, logq in pts:
        if regime == "near":
            logbound = np.log(c1) - 0.5 * np.log(t) - c2 * x * x / t
        elif regime == "mid":
            logbound = -c3 * t
        else:
            logbound = -2.0 * x * np.log(max(x, 3))
        rows.append(
            KernelBoundRow(t, x, regime, float(np.exp(logq)), float(np.exp(logbound)),
                           bool(logq >= logbound - 1e-9))
        )
    return KernelBoundReport(c1, c2, c3, eps_inner, a_outer, rows)
