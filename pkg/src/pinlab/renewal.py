"""Renewal structures built on the pair-collision return law.

The return times of the difference walk form a renewal process once
normalized by the Green function.  This module samples such processes,
evaluates the moment generating function of the point count exactly by
backward recursion, scans the stretched-exponential decay of thinned
intersection counts, and constructs the parity-resolved return laws of
the tilted comparison walk together with a single renewal law that
stochastically dominates any finite family of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy import special as sp

from .annealed import RenewalLaw, _fit_tail
from .errors import ConfigError, NumericalFailure
from .kernels import greens
from .mcstats import replica_map, summarize
from .moments import tilted_return_masses
from .rngstreams import RENEWAL, stream

_GAP_BATCH = 128


@dataclass
class RenewalPath:
    """Increasing renewal epochs starting from the origin."""

    points: np.ndarray
    horizon: float
    law: object = None

    @property
    def count(self) -> int:
        """Number of renewals in (0, horizon]; the origin is not counted."""
        return len(self.points) - 1


def _sample_points(law: RenewalLaw, horizon: float, rng: np.random.Generator) -> np.ndarray:
    """Renewal epochs in [0, horizon] drawn gap by gap from the law.

    Gaps larger than the remaining horizon only ever matter through the
    event "exceeds", so the draw lumps everything beyond the horizon into
    a single terminating bucket and stays exact.
    """
    if law.mode == "discrete":
        H = int(horizon)
        cum = np.cumsum(law.masses_to(H))
        pts = [0.0]
        t = 0.0
        while True:
            u = rng.random(_GAP_BATCH)
            gaps = np.searchsorted(cum, u, side="right").astype(float)
            csum = t + np.cumsum(gaps)
            bad = (gaps > H) | (csum > horizon)
            if bad.any():
                k = int(np.argmax(bad))
                pts.extend(csum[:k])
                break
            pts.extend(csum)
            t = csum[-1]
        return np.asarray(pts)
    if horizon > law.grid[-1] + 1e-9:
        raise ConfigError(
            f"horizon {horizon} exceeds the tabulated gap range {law.grid[-1]}",
            key="horizon",
        )
    cdf = np.concatenate([[0.0], np.cumsum((law.density[1:] + law.density[:-1]) / 2.0 * np.diff(law.grid))])
    pts = [0.0]
    t = 0.0
    while True:
        u = rng.random(_GAP_BATCH)
        gaps = np.interp(u, cdf, law.grid)
        csum = t + np.cumsum(gaps)
        bad = (u >= cdf[-1]) | (csum > horizon)
        if bad.any():
            k = int(np.argmax(bad))
            pts.extend(csum[:k])
            break
        pts.extend(csum)
        t = csum[-1]
    return np.asarray(pts)


def sample_renewal(law: RenewalLaw, horizon: float, seed: int) -> RenewalPath:
    """One renewal path on [0, horizon] from a dedicated stream."""
    rng = stream(seed, RENEWAL, 0)
    return RenewalPath(
        points=_sample_points(law, horizon, rng), horizon=float(horizon), law=law
    )


def _count_gf(law, N: int, s: float) -> float:
    # g(j) = E[s^{#renewals in (j, N]} | renewal at j], solved backwards;
    # the survival term covers both "gap exceeds the horizon" and the
    # law's defect mass in one complement.
    K = law.masses_to(N)
    surv = 1.0 - np.cumsum(K)
    g = np.empty(N + 1)
    g[N] = 1.0
    for j in range(N - 1, -1, -1):
        M = N - j
        g[j] = s * float(K[1 : M + 1] @ g[j + 1 :]) + surv[M]
    return float(g[0])


def exact_gf_dp(law, N: int, s: float) -> float:
    """E[s^{#renewals in (0, N]}] for a renewal process started at 0."""
    if getattr(law, "mode", None) != "discrete":
        raise ConfigError("count generating function needs a discrete law", key="law")
    if not 0.0 < s <= 1.0:
        raise ConfigError(f"s must lie in (0, 1], got {s}", key="s")
    if N < 1:
        raise ConfigError(f"horizon must be positive, got {N}", key="N")
    return _count_gf(law, N, s)


@dataclass(frozen=True)
class AppendixAParams:
    """Thinned-count decay scan: s = exp(-c N^{-delta1}), prefactor N^{1-delta2}."""

    c: float = 1.0
    delta1: float = 0.55
    delta2: float = 0.9
    N_grid: tuple = (256, 512, 1024, 2048, 4096)
    alpha: float = 1.0  # stable exponent of the gap law; recorded only


@dataclass
class AppendixARow:
    N: int
    s: float
    value: float
    prefactored: float
    mc_value: float
    mc_stderr: float


@dataclass
class AppendixAReport:
    params: AppendixAParams
    rows: list
    strictly_decreasing: bool
    max_decade_ratio: float  # worst shrink factor per tenfold increase of N
    decay_flag: bool  # every decade shrinks the prefactored value >= 2x
    max_mc_sigma: float


def appendixA_scan(
    law,
    params: AppendixAParams = AppendixAParams(),
    replicas: int = 200,
    seed: int = 0,
    threads: int = 1,
) -> AppendixAReport:
    """Exact decay of N^{1-delta2} E[exp(-c N^{-delta1} #renewals)] plus an
    independent sampling cross-check of every grid point."""
    if not 0.0 < params.delta1 < params.delta2 < 1.0:
        raise ConfigError(
            f"exponents must satisfy 0 < delta1 < delta2 < 1, "
            f"got ({params.delta1}, {params.delta2})",
            key="delta1",
        )
    rows = []
    for idx, N in enumerate(params.N_grid):
        s = math.exp(-params.c * float(N) ** (-params.delta1))
        value = exact_gf_dp(law, int(N), s)
        offset = idx * replicas

        def one(r: int, N=N, s=s, offset=offset) -> float:
            rng = stream(seed, RENEWAL, offset + r)
            count = len(_sample_points(law, N, rng)) - 1
            return s**count

        est = summarize(replica_map(one, replicas, threads))
        rows.append(
            AppendixARow(
                N=int(N),
                s=s,
                value=value,
                prefactored=float(N) ** (1.0 - params.delta2) * value,
                mc_value=est.mean,
                mc_stderr=est.stderr,
            )
        )
    prefs = [r.prefactored for r in rows]
    # per-decade geometric shrink: raise the per-step ratio to 1/log10(step)
    ratios = [
        (b / a) ** (1.0 / math.log10(rb.N / ra.N))
        for (a, b), (ra, rb) in zip(zip(prefs, prefs[1:]), zip(rows, rows[1:]))
    ]
    sigmas = [
        abs(r.value - r.mc_value) / r.mc_stderr if r.mc_stderr > 0 else math.inf
        for r in rows
    ]
    max_ratio = max(ratios) if ratios else math.nan
    return AppendixAReport(
        params=params,
        rows=rows,
        strictly_decreasing=all(b < a for a, b in zip(prefs, prefs[1:])),
        max_decade_ratio=max_ratio,
        decay_flag=max_ratio <= 0.5,
        max_mc_sigma=max(sigmas),
    )


# ---------------------------------------------------------------------------
# parity-resolved tilted return laws


@dataclass
class ParityLaws:
    """Return laws of the walk against the two-step tilted walk, split by
    the pair-alignment parity of the renewal the gap starts from."""

    d: int
    h: float
    even: RenewalLaw
    odd: RenewalLaw
    greens: greens.TiltedGreens
    direct_check: float
    route_gap: float  # relative disagreement of mass sum vs Green quadrature


def _unit(d: int, ax: int, sign: int) -> np.ndarray:
    v = np.zeros(d, dtype=int)
    v[ax] = sign
    return v


def _direct_tilted_masses(d: int, h: float, n_top: int) -> tuple[np.ndarray, np.ndarray]:
    """Real-space route to the tilted return masses for small n.

    Builds the distribution of the tilted walk by explicit convolution of
    its pair-increment kernel (plus a conditioned half step for the
    mid-pair start) and correlates it against the plain-walk distribution.
    Entirely independent of the Fourier-moment route.
    """
    s1 = np.zeros((3,) * d)
    dirs = []
    for ax in range(d):
        for sign in (1, -1):
            v = _unit(d, ax, sign)
            dirs.append(v)
            s1[tuple(v + 1)] = 1.0 / (2 * d)
    p2 = np.zeros((5,) * d)
    for v in dirs:
        for w in dirs:
            pr = 1.0 / (2 * d) ** 2
            if np.array_equal(w, v):
                pr *= 1.0 + h
            elif np.array_equal(w, -v):
                pr *= 1.0 - h
            p2[tuple(v + w + 2)] += pr
    # mid-pair start: half step conditioned on the previous increment +e_1
    q1 = np.full((3,) * d, 0.0)
    for v in dirs:
        q1[tuple(v + 1)] = 1.0 / (2 * d)
    e1 = _unit(d, 0, 1)
    q1[tuple(e1 + 1)] *= 1.0 + h
    q1[tuple(-e1 + 1)] *= 1.0 - h

    even = np.zeros(n_top + 1)
    odd = np.zeros(n_top + 1)
    xdist = np.ones((1,) * d)
    ydist_e = np.ones((1,) * d)  # even start, rebuilt per n below
    for n in range(1, n_top + 1):
        xdist = signal.fftconvolve(xdist, s1)
        m, r = divmod(n, 2)
        ydist_e = np.ones((1,) * d)
        for _ in range(m):
            ydist_e = signal.fftconvolve(ydist_e, p2)
        if r:
            ydist_e = signal.fftconvolve(ydist_e, s1)
        m2, r2 = divmod(n - 1, 2)
        ydist_o = q1.copy()
        for _ in range(m2):
            ydist_o = signal.fftconvolve(ydist_o, p2)
        if r2:
            ydist_o = signal.fftconvolve(ydist_o, s1)
        even[n] = float(np.vdot(xdist, ydist_e))
        odd[n] = float(np.vdot(xdist, ydist_o))
    return even, odd


def _law_from_masses(d: int, raw: np.ndarray, green_value: float) -> tuple[RenewalLaw, float]:
    """Build an exactly proper return law from unnormalized masses.

    Mathematically the mass sum equals the Green value, so the mass
    missing beyond the table is known exactly; the fitted two-term tail
    only supplies the *shape* of the extension and is rescaled to carry
    exactly that missing mass.  The resulting law is proper to float
    rounding, which is what domination constructions downstream need.
    Returns the law and the relative disagreement between the fitted
    tail sum and the exact missing mass (the dual-route diagnostic).
    """
    n_max = len(raw) - 1
    c, dd, _ = _fit_tail(raw, d)
    z_a = float(sp.zeta(d / 2.0, n_max + 1))
    z_b = float(sp.zeta(d / 2.0 + 1.0, n_max + 1))
    fitted_tail = c * z_a + dd * z_b
    missing = green_value - float(np.sum(raw))
    if missing <= 0 or fitted_tail <= 0:
        raise NumericalFailure(
            f"mass table already exceeds the Green value (missing {missing:.3e})",
            tolerance=0.0,
            observed=missing,
        )
    scale = missing / fitted_tail
    c *= scale / green_value
    dd *= scale / green_value
    masses = raw / green_value
    if c * (n_max + 1.0) ** (-d / 2.0) + dd * (n_max + 1.0) ** (-d / 2.0 - 1.0) <= 0:
        raise NumericalFailure(
            "tail extension turns negative right past the table",
            tolerance=0.0,
            observed=c,
        )
    if d >= 5:
        mean = float(np.arange(n_max + 1) @ masses) + c * float(
            sp.zeta(d / 2.0 - 1.0, n_max + 1)
        ) + dd * z_a
    else:
        mean = math.inf
    law = RenewalLaw(
        mode="discrete",
        d=d,
        masses=masses,
        tail_constant=c,
        tail_second=dd,
        tail_index=d / 2.0 - 1.0,
        defect=0.0,
        mean=mean,
    )
    return law, abs(fitted_tail - missing) / green_value


def parity_law(
    d: int,
    h: float,
    n_max: int = 64,
    direct_n: int = 8,
    eps: float = 1e-10,
    eps_route: float = 1e-4,
) -> ParityLaws:
    """Even- and odd-start return laws of the tilted comparison walk.

    Masses come from the Fourier-moment table, normalization from the
    quadrature Green values; the small-n masses are recomputed by direct
    convolution and the two routes must agree within eps.
    """
    if not 0.0 <= h < 1.0:
        raise ConfigError(f"tilt h must lie in [0, 1), got {h}", key="h")
    if n_max < 16:
        raise ConfigError(f"n_max too small for a tail fit, got {n_max}", key="n_max")
    u_even, u_odd = tilted_return_masses(d, h, n_max)
    tg = greens.tilted_greens(d, h)
    n_chk = min(direct_n, n_max)
    dir_even, dir_odd = _direct_tilted_masses(d, h, n_chk)
    worst = 0.0
    for n in range(1, n_chk + 1):
        worst = max(
            worst,
            abs(dir_even[n] - u_even[n]) / u_even[n],
            abs(dir_odd[n] - u_odd[n]) / u_odd[n],
        )
    if worst > eps:
        raise NumericalFailure(
            f"tilted mass routes disagree at d={d}, h={h}: worst rel {worst:.3e}",
            tolerance=eps,
            observed=worst,
        )
    law_even, gap_even = _law_from_masses(d, u_even, tg.g_even)
    law_odd, gap_odd = _law_from_masses(d, u_odd, tg.g_odd)
    route_gap = max(gap_even, gap_odd)
    if route_gap > eps_route:
        raise NumericalFailure(
            f"tilted mass sum strays from the Green value by {route_gap:.3e}",
            tolerance=eps_route,
            observed=route_gap,
        )
    return ParityLaws(
        d=d,
        h=h,
        even=law_even,
        odd=law_odd,
        greens=tg,
        direct_check=worst,
        route_gap=route_gap,
    )


# ---------------------------------------------------------------------------
# dominating renewal law


def _tail_profile(law: RenewalLaw, n_top: int) -> np.ndarray:
    """tails[m] = sum_{n > m} K(n) for m = 0..n_top, analytic past the table."""
    K = law.masses_to(n_top)
    partial = np.cumsum(K[::-1])[::-1]
    beyond = _tail_beyond(law, np.array([n_top], dtype=float))[0]
    return np.append(partial[1:], 0.0) + beyond


def _tail_beyond(law: RenewalLaw, n0s: np.ndarray) -> np.ndarray:
    """Vectorized sum_{n > n0} K(n) for n0 >= the law's table end."""
    return law.tail_constant * sp.zeta(law.d / 2.0, n0s + 1.0) + law.tail_second * sp.zeta(
        law.d / 2.0 + 1.0, n0s + 1.0
    )


@dataclass
class DominationCertificate:
    min_margin: float
    n_checked: int
    normalization: float


@dataclass
class DominatingLaw:
    """Proper renewal law whose gap tails majorize every input law's.

    Taking the pointwise maximum of nonincreasing tail functions keeps
    monotonicity, so differencing it always yields nonnegative masses;
    dividing by the total mass at gap >= 1 makes the law proper.
    """

    laws: tuple
    n_max: int
    norm: float
    masses: np.ndarray
    mode: str = "discrete"
    d: int = 0

    def tail_mass(self, n0: int) -> float:
        return max(law.tail_mass(n0) for law in self.laws) / self.norm

    def masses_to(self, N: int) -> np.ndarray:
        if N <= self.n_max:
            return self.masses[: N + 1].copy()
        prof = np.stack([_tail_profile(law, N + 1) for law in self.laws]).max(axis=0)
        out = np.zeros(N + 1)
        out[1:] = -np.diff(prof[: N + 1]) / self.norm
        return out


def dominating_law(
    laws, n_max: int | None = None, slack: float = 1e-12
) -> tuple[DominatingLaw, DominationCertificate]:
    """Single renewal law dominating every law in the family.

    After normalization the domination is rechecked margin by margin; a
    violation beyond the slack aborts, since every downstream bound
    leans on this ordering.
    """
    laws = tuple(laws)
    if not laws:
        raise ConfigError("need at least one law to dominate", key="laws")
    if any(law.mode != "discrete" for law in laws):
        raise ConfigError("domination is built for discrete laws", key="laws")
    d = laws[0].d
    if any(law.d != d for law in laws):
        raise ConfigError("laws mix dimensions", key="laws")
    if n_max is None:
        n_max = min(law.n_max for law in laws)
    profiles = np.stack([_tail_profile(law, n_max + 1) for law in laws])
    tstar = profiles.max(axis=0)
    norm = float(tstar[0])
    masses = np.zeros(n_max + 1)
    masses[1:] = -np.diff(tstar[: n_max + 1]) / norm
    out = DominatingLaw(laws=laws, n_max=n_max, norm=norm, masses=masses, d=d)
    margins = tstar[None, :] / norm - profiles
    min_margin = float(margins.min())
    if min_margin < -slack:
        raise NumericalFailure(
            f"dominating law fails its own ordering by {min_margin:.3e}",
            tolerance=slack,
            observed=-min_margin,
        )
    cert = DominationCertificate(
        min_margin=min_margin, n_checked=n_max + 1, normalization=norm
    )
    return out, cert
