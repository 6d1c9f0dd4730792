"""Homogeneous pinning over the pair-walk renewal law: partition recursions,
annealed free energy, critical points, correlation length.

The inter-arrival law is K(n) = p^{X-Y}_n(0) / G^{X-Y} (discrete) or
K_{1+rho}(s) = p_{(1+rho)s}(0) / G_{1+rho} (continuous); both are proper
probability laws exactly when the pair walk is transient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from scipy import integrate
from scipy import special as sp

from .errors import ConfigError, NumericalFailure, RecurrentWalk
from .kernels import greens
from .kernels.ctime import ct_pair_return
from .moments import pair_return_masses

DEFAULT_N_MAX = {3: 400, 4: 400, 5: 240}


def _fit_tail(masses: np.ndarray, d: int) -> tuple[float, float, float]:
    """Two-term fit m(n) ~ C n^{-d/2} + D n^{-d/2-1} on the upper half of the
    table; returns (C, D, rms relative residual on the window)."""
    n_max = len(masses) - 1
    lo = max(8, n_max // 2)
    ns = np.arange(lo, n_max + 1, dtype=float)
    A = np.stack([ns ** (-d / 2.0), ns ** (-d / 2.0 - 1.0)], axis=1)
    y = masses[lo:]
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(A @ coef - y) / y))
    return float(coef[0]), float(coef[1]), resid


@dataclass
class RenewalLaw:
    """Inter-arrival law with exact head masses and a fitted power tail."""

    mode: str
    d: int
    masses: np.ndarray  # masses[n] = K(n); masses[0] = 0
    tail_constant: float  # C with K(n) ~ C n^{-(1+alpha)-... } i.e. C n^{-d/2}
    tail_second: float
    tail_index: float  # alpha = d/2 - 1
    defect: float
    mean: float
    rho: float = 0.0
    grid: np.ndarray | None = None  # continuous mode: s grid
    density: np.ndarray | None = None  # continuous mode: K(s) on the grid

    @property
    def n_max(self) -> int:
        return len(self.masses) - 1

    def tail_mass(self, n0: int) -> float:
        """sum_{n > n0} K(n), analytic beyond the table."""
        if n0 >= self.n_max:
            return self.tail_constant * float(
                sp.zeta(self.d / 2.0, n0 + 1)
            ) + self.tail_second * float(sp.zeta(self.d / 2.0 + 1.0, n0 + 1))
        head = float(np.sum(self.masses[n0 + 1 :]))
        return head + self.tail_mass(self.n_max)

    def masses_to(self, N: int) -> np.ndarray:
        """K(1..N) with tail-formula extension past the exact table."""
        if N <= self.n_max:
            return self.masses[: N + 1].copy()
        out = np.empty(N + 1)
        out[: self.n_max + 1] = self.masses
        ns = np.arange(self.n_max + 1, N + 1, dtype=float)
        out[self.n_max + 1 :] = self.tail_constant * ns ** (
            -self.d / 2.0
        ) + self.tail_second * ns ** (-self.d / 2.0 - 1.0)
        return out

    def mean_partial(self, N: int) -> float:
        m = self.masses_to(N)
        return float(np.arange(N + 1) @ m)

    def fitted_tail_exponent(self) -> float:
        """Log-log slope magnitude of the mass tail over the upper half table."""
        lo = max(8, self.n_max // 2)
        ns = np.arange(lo, self.n_max + 1, dtype=float)
        slope = np.polyfit(np.log(ns), np.log(self.masses[lo:]), 1)[0]
        return -float(slope)


def renewal_law_discrete(d: int, n_max: int | None = None) -> RenewalLaw:
    """Pair-walk return law: exact masses then the fitted two-term tail.

    Normalization against the dual-route Green value; the leftover defect is
    the (tiny) disagreement between the mass sum and the Green value.
    """
    if d <= 2:
        raise RecurrentWalk(f"pair walk is recurrent in d={d}; no renewal law")
    if n_max is None:
        n_max = DEFAULT_N_MAX.get(d, 240)
    g = greens.green_pair(d).value
    raw = pair_return_masses(d, n_max)  # p^{X-Y}_n(0), n = 0..n_max
    masses = raw / g
    masses[0] = 0.0
    c, dd, _ = _fit_tail(masses, d)
    tail = c * float(sp.zeta(d / 2.0, n_max + 1)) + dd * float(
        sp.zeta(d / 2.0 + 1.0, n_max + 1)
    )
    total = float(np.sum(masses)) + tail
    if d >= 5:
        mean = float(np.arange(n_max + 1) @ masses) + c * float(
            sp.zeta(d / 2.0 - 1.0, n_max + 1)
        ) + dd * float(sp.zeta(d / 2.0, n_max + 1))
    else:
        mean = math.inf
    return RenewalLaw(
        mode="discrete",
        d=d,
        masses=masses,
        tail_constant=c,
        tail_second=dd,
        tail_index=d / 2.0 - 1.0,
        defect=1.0 - total,
        mean=mean,
    )


def renewal_law_ct(
    d: int, rho: float, s_max: float = 200.0, steps: int = 4096
) -> RenewalLaw:
    """Continuous-time inter-arrival density on a uniform grid plus power tail."""
    if d <= 2:
        raise RecurrentWalk(f"pair walk is recurrent in d={d}; no renewal law")
    g = greens.green_ct(d, rho).value
    grid = np.linspace(0.0, s_max, steps + 1)
    density = np.array([ct_pair_return(d, s, rho) for s in grid]) / g
    # p_{(1+rho)s}(0) ~ (d / (2 pi (1+rho) s))^{d/2} (1 + d^2/(8(1+rho)s)),
    # the second factor being the next Bessel order summed over coordinates
    c = (d / (2 * math.pi * (1 + rho))) ** (d / 2.0) / g
    c2 = c * d * d / (8.0 * (1 + rho))
    tail = c * s_max ** (1.0 - d / 2.0) / (d / 2.0 - 1.0) + c2 * s_max ** (
        -d / 2.0
    ) / (d / 2.0)
    # Simpson for the mass/mean certificates (the density is smooth, so this
    # buys ~4 orders over the trapezoid at the same grid); downstream
    # transforms keep the plain trapezoid on the shared grid.
    total = float(integrate.simpson(density, x=grid)) + tail
    mean = math.inf
    if d >= 5:
        mean = (
            float(integrate.simpson(density * grid, x=grid))
            + c * s_max ** (2.0 - d / 2.0) / (d / 2.0 - 2.0)
            + c2 * s_max ** (1.0 - d / 2.0) / (d / 2.0 - 1.0)
        )
    return RenewalLaw(
        mode="continuous",
        d=d,
        masses=np.empty(0),
        tail_constant=c,
        tail_second=c2,
        tail_index=d / 2.0 - 1.0,
        defect=1.0 - total,
        mean=mean,
        rho=rho,
        grid=grid,
        density=density,
    )


@dataclass
class AnnealedCurve:
    law: RenewalLaw
    points: list  # (z, F_ann)
    slope_fit: float


def annealed_partition(z: float, law: RenewalLaw, N: int, variant: str = "pin") -> float:
    """log of the homogeneous recursion c_N = sum_n z·K(n)·c_{N-n}, c_0 = 1.

    variant="free" returns log sum_{j<=N} c_j (last return anywhere, the
    remaining stretch unweighted)."""
    if law.mode != "discrete":
        raise ConfigError("discrete law required", key="law")
    if z < 0:
        raise ConfigError("z must be >= 0", key="z")
    K = law.masses_to(N)
    c = np.zeros(N + 1)
    c[0] = 1.0
    log_scale = 0.0
    free_acc = 1.0
    for j in range(1, N + 1):
        c[j] = z * float(c[:j] @ K[j:0:-1])
        free_acc += c[j]
        if c[j] > 1e280 or free_acc > 1e280:
            c[: j + 1] /= 1e280
            free_acc /= 1e280
            log_scale += math.log(1e280)
    value = free_acc if variant == "free" else c[N]
    if value <= 0:
        return float("-inf")
    return math.log(value) + log_scale


def _lerch_tail(x: float, s: float, n0: int) -> float:
    """sum_{n > n0} n^{-s} x^n for x in (0, 1]."""
    if x <= 0:
        return 0.0
    return float(x ** (n0 + 1) * mpmath.lerchphi(x, s, n0 + 1))


def _geometric_transform(z: float, law: RenewalLaw, F: float) -> float:
    """z * sum_n K(n) e^{-F n} (discrete) or z * int K(s) e^{-F s} ds (ct),
    with the analytic tail carried under the damping."""
    if law.mode == "discrete":
        n = np.arange(law.n_max + 1, dtype=float)
        head = float(np.sum(law.masses * np.exp(-F * n)))
        x = math.exp(-F)
        tail = law.tail_constant * _lerch_tail(
            x, law.d / 2.0, law.n_max
        ) + law.tail_second * _lerch_tail(x, law.d / 2.0 + 1.0, law.n_max)
        return z * (head + tail)
    head = float(np.trapezoid(law.density * np.exp(-F * law.grid), law.grid))
    s_max = float(law.grid[-1])
    p = law.d / 2.0
    if F == 0.0:
        tail = law.tail_constant * s_max ** (1.0 - p) / (p - 1.0)
    else:
        tail = law.tail_constant * float(
            F ** (p - 1.0) * mpmath.gammainc(1.0 - p, F * s_max)
        )
    return z * (head + tail)


def annealed_free_energy(z: float, law: RenewalLaw, tol: float = 1e-12) -> float:
    """F solving z·(damped mass) = 1 for z > 1, else 0; bisection on the
    strictly decreasing damped-mass map."""
    if z <= 0:
        raise ConfigError("z must be > 0", key="z")
    if z <= 1.0:
        return 0.0
    lo = 0.0
    hi = 1e-3
    while _geometric_transform(z, law, hi) > 1.0:
        hi *= 2.0
        if hi > 1e4:
            raise NumericalFailure(
                "bracket failure in free-energy bisection", tolerance=tol, observed=hi
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _geometric_transform(z, law, mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def annealed_curve(law: RenewalLaw, z_grid, tol: float = 1e-12) -> AnnealedCurve:
    points = [(float(z), annealed_free_energy(float(z), law, tol)) for z in z_grid]
    dz = np.array([z - 1.0 for z, _ in points])
    fv = np.array([f for _, f in points])
    slope = float(dz @ fv / (dz @ dz)) if np.any(dz > 0) else 0.0
    return AnnealedCurve(law, points, slope)


def critical_point(mode: str, d: int, rho: float = 0.0) -> float:
    """Annealed critical coupling: 0 when the pair walk is recurrent,
    log(1 + 1/G) in discrete time, 1/G_{1+rho} in continuous time."""
    if mode not in ("discrete", "continuous"):
        raise ConfigError(f"unknown mode {mode!r}", key="mode")
    if d <= 2:
        return 0.0
    if mode == "discrete":
        return math.log1p(1.0 / greens.green_pair(d).value)
    return 1.0 / greens.green_ct(d, rho).value


@dataclass(frozen=True)
class CorrelationLength:
    length: int
    rational: Fraction


def correlation_length(z) -> CorrelationLength:
    """floor(1/(z-1)) with the exact rational kept.

    The coupling is reinterpreted through its decimal literal so that e.g.
    z = 1.01 gives exactly 100 rather than tripping on binary rounding.
    """
    zq = z if isinstance(z, Fraction) else Fraction(str(z))
    if zq <= 1:
        raise ConfigError("correlation length needs z > 1", key="z")
    inv = 1 / (zq - 1)
    return CorrelationLength(int(math.floor(inv)), inv)
