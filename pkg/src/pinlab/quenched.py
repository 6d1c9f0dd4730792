"""Quenched partition functions at fixed disorder.

Routes, all computing E^X[e^{beta L}] variants for one disorder path:

* exhaustive enumeration over every X path (the oracle, tiny horizons),
* a lattice-field dynamic program on the reachable box,
* the return-time expansion dynamic program (discrete time),
* piecewise uniformization of the Feynman-Kac field (continuous time),
* grid Volterra recursions for the modified continuous-time variants.

The return-time expansion writes E^X[prod_n (1 + z'·1{X_n=Y_n})],
z' = e^beta − 1, as a sum over pinned return chains q_j; the free value is
sum_j q_j and the endpoint-constrained wrapped value is q_N.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp
from scipy import stats

from .disorder import DisorderPath, sample_ct, sample_discrete
from .errors import (
    BudgetExceeded,
    ConfigError,
    InstanceTooLarge,
    NumericalFailure,
    RecurrentWalk,
)
from .kernels import greens
from .kernels.tables import KernelTable, cached_table
from .mcstats import McEstimate, replica_map, summarize
from .rngstreams import COLLISION, QUENCHED, stream

FIELD_SITE_BUDGET = 40_000_000
Z_BETA_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Coupling parameters in either time mode.

    ``z`` is the annealed-normalized coupling: (e^beta − 1)·G for the
    discrete pair walk, beta·G_{1+rho} in continuous time.  Either beta or z
    may be given; supplying both asserts consistency.  The conversion needs
    the pair Green value, so it is only defined for d ≥ 3.
    """

    mode: str
    d: int
    beta: float | None = None
    z: float | None = None
    rho: float = 0.0

    def __post_init__(self):
        if self.mode not in ("discrete", "continuous"):
            raise ConfigError(f"unknown mode {self.mode!r}", key="mode")
        if self.d < 1:
            raise ConfigError("dimension must be >= 1", key="d")
        if self.beta is None and self.z is None:
            raise ConfigError("need beta or z", key="beta")
        if self.rho < 0:
            raise ConfigError("rho must be >= 0", key="rho")
        if self.mode == "discrete" and self.rho != 0:
            raise ConfigError("rho applies to continuous mode only", key="rho")
        if self.beta is not None and self.z is not None:
            zd = self._z_from_beta(self.beta)
            if abs(zd - self.z) > Z_BETA_TOL * max(1.0, abs(self.z)):
                raise ConfigError(
                    f"beta={self.beta} and z={self.z} disagree (z from beta: {zd})",
                    key="z",
                )

    def green(self) -> float:
        if self.mode == "discrete":
            return greens.green_pair(self.d).value
        return greens.green_ct(self.d, self.rho).value

    def _z_from_beta(self, beta: float) -> float:
        if self.mode == "discrete":
            return math.expm1(beta) * self.green()
        return beta * self.green()

    @property
    def beta_value(self) -> float:
        if self.beta is not None:
            return self.beta
        if self.mode == "discrete":
            return math.log1p(self.z / self.green())
        return self.z / self.green()

    @property
    def z_value(self) -> float:
        if self.z is not None:
            return self.z
        return self._z_from_beta(self.beta)

    @property
    def z_prime(self) -> float:
        """Per-collision excess weight e^beta − 1 (discrete expansion)."""
        return math.expm1(self.beta_value)


@dataclass(frozen=True)
class PartitionValue:
    log_value: float
    variant: str
    window: tuple
    params: ModelParams
    error_bound: float = 0.0

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


@dataclass
class CollisionSample:
    x_path: DisorderPath
    collision_value: float


@dataclass
class CollisionReport:
    l_values: np.ndarray
    estimate: McEstimate
    samples: list[CollisionSample]
    ratio_to_log: float | None = None
    ratio_reference: float | None = None


def _log_or_ninf(x: float) -> float:
    return math.log(x) if x > 0 else float("-inf")


# -- exhaustive oracle --------------------------------------------------------


def enumerate_partition(
    params: ModelParams,
    path: DisorderPath,
    N: int | None = None,
    constrained: bool = False,
    block: int = 1 << 15,
) -> PartitionValue:
    """Average e^{beta L_N} over every X path.  Exact; exponential cost."""
    d = params.d
    if N is None:
        N = len(path.increments)
    total = (2 * d) ** N
    if total > 10**7:
        raise InstanceTooLarge(f"(2d)^N = {total} exceeds 10^7")
    beta = params.beta_value
    Y = path.positions[: N + 1]
    block_sums = []
    for start in range(0, total, block):
        codes = np.arange(start, min(start + block, total), dtype=np.int64)
        rows = np.arange(len(codes))
        pos = np.zeros((len(codes), d), dtype=np.int64)
        L = np.zeros(len(codes))
        c = codes.copy()
        for n in range(N):
            digit = c % (2 * d)
            c //= 2 * d
            pos[rows, digit >> 1] += 1 - 2 * (digit & 1)
            L += np.all(pos == Y[n + 1], axis=1)
        w = np.exp(beta * L)
        if constrained:
            w = w * np.all(pos == Y[N], axis=1)
        block_sums.append(float(np.sum(w)))
    value = math.fsum(block_sums) / total
    return PartitionValue(
        _log_or_ninf(value), "pin" if constrained else "free", (0, N), params
    )


# -- lattice-field DP ---------------------------------------------------------


def _neighbor_mean(u: np.ndarray) -> np.ndarray:
    """Average over the 2d lattice neighbors with absorbing (zero) boundary."""
    out = np.zeros_like(u)
    for ax in range(u.ndim):
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        out[tuple(lo)] += u[tuple(hi)]
        out[tuple(hi)] += u[tuple(lo)]
    return out / (2 * u.ndim)


def field_dp_partition(
    params: ModelParams,
    path: DisorderPath,
    N: int | None = None,
    constrained: bool = False,
    budget: int = FIELD_SITE_BUDGET,
) -> PartitionValue:
    """Weight-field DP on the radius-N box; exact up to float rounding.

    One multiply by e^{beta} at the disorder site per step, renormalized
    whenever the field max passes e^300 so large beta·L cannot overflow.
    """
    d = params.d
    if N is None:
        N = len(path.increments)
    side = 2 * N + 1
    if side**d > budget:
        raise BudgetExceeded(f"box {side}^{d} exceeds {budget} sites")
    beta = params.beta_value
    reward = math.exp(beta)
    Y = path.positions[: N + 1]
    u = np.zeros((side,) * d)
    u[(N,) * d] = 1.0
    log_scale = 0.0
    for n in range(1, N + 1):
        u = _neighbor_mean(u)
        u[tuple(Y[n] + N)] *= reward
        peak = u.max()
        if peak > 1e300:
            u /= peak
            log_scale += math.log(peak)
    if constrained:
        value = u[tuple(Y[N] + N)]
    else:
        value = float(np.sum(u))
    return PartitionValue(
        _log_or_ninf(value) + log_scale,
        "pin" if constrained else "free",
        (0, N),
        params,
    )


# -- return-time expansion DP -------------------------------------------------


def _log_binomial_kernel(n: np.ndarray, x: np.ndarray) -> np.ndarray:
    """log p_n(x) for the 1-d walk, -inf off parity; vectorized."""
    n = np.asarray(n, dtype=float)
    x = np.abs(np.asarray(x, dtype=float))
    with np.errstate(invalid="ignore"):
        lg = (
            sp.gammaln(n + 1)
            - sp.gammaln((n + x) / 2 + 1)
            - sp.gammaln((n - x) / 2 + 1)
            - n * math.log(2)
        )
    bad = ((n + x) % 2 != 0) | (x > n)
    lg = np.where(bad, -np.inf, lg)
    return lg


def _gap_matrix(d: int, Y: np.ndarray, N: int, table: KernelTable | None) -> np.ndarray:
    """M[i, j] = p^X_{j-i}(Y_j - Y_i) for 0 <= i < j <= N."""
    M = np.zeros((N + 1, N + 1))
    if d == 1:
        idx = np.arange(N + 1)
        gaps = idx[None, :] - idx[:, None]
        diffs = Y[None, :, 0] - Y[:, None, 0]
        upper = gaps > 0
        lg = _log_binomial_kernel(np.where(upper, gaps, 1), diffs)
        M[upper] = np.exp(lg[upper])
        return M
    if table is None:
        table = cached_table(d, N)
    for n in range(1, N + 1):
        xs = Y[n:] - Y[:-n]
        M[np.arange(N + 1 - n), np.arange(n, N + 1)] = table.values_at(n, xs)
    return M


def renewal_profile(
    params: ModelParams,
    path: DisorderPath,
    N: int | None = None,
    table: KernelTable | None = None,
) -> np.ndarray:
    """All pinned return-chain values q_0..q_N in one pass.

    q_j is the endpoint-wrapped expansion value over [0, j]; q_0 = 1.
    """
    if params.mode != "discrete":
        raise ConfigError("return-time expansion is discrete-mode only", key="mode")
    if N is None:
        N = len(path.increments)
    Y = path.positions[: N + 1]
    M = _gap_matrix(params.d, Y, N, table)
    zp = params.z_prime
    q = np.empty(N + 1)
    q[0] = 1.0
    for j in range(1, N + 1):
        q[j] = zp * float(q[:j] @ M[:j, j])
    return q


def renewal_dp_partition(
    params: ModelParams,
    path: DisorderPath,
    N: int | None = None,
    constrained: bool = False,
    table: KernelTable | None = None,
) -> PartitionValue:
    """Partition value via the return-time expansion.

    Free: sum_j q_j equals the field value E^X[e^{beta L_N}] identically.
    Constrained: returns E^X[e^{beta L_N}; X_N = Y_N], which relates to the
    wrapped chain by q_N = z'/(1+z') · E^X[e^{beta L_N}; X_N = Y_N].
    """
    if N is None:
        N = len(path.increments)
    zp = params.z_prime
    if zp == 0.0:
        # no reward: free value 1, constrained value is the endpoint mass
        if not constrained:
            return PartitionValue(0.0, "free", (0, N), params)
        Y = path.positions[: N + 1]
        if params.d == 1:
            lv = float(_log_binomial_kernel(np.array([N]), Y[N])[0])
        else:
            if table is None:
                table = cached_table(params.d, N)
            lv = _log_or_ninf(table.value(N, Y[N]))
        return PartitionValue(lv, "pin", (0, N), params)
    q = renewal_profile(params, path, N, table)
    if constrained:
        value = q[N] * (1 + zp) / zp
    else:
        value = float(np.sum(q))
    return PartitionValue(
        _log_or_ninf(value), "pin" if constrained else "free", (0, N), params
    )


# -- continuous time: piecewise uniformization --------------------------------


def _ct_box_radius(d: int, t: float, y_extent: int, eps: float) -> int:
    """Box radius: Poisson displacement quantile plus the disorder extent."""
    lam = max(t / d, 1e-9)
    r = int(stats.poisson.isf(min(eps * 1e-3, 1e-10), lam)) + 4
    return r + y_extent


def _evolve_uniformized(u, y_idx, beta, dt, eps_tail):
    """exp(dt·(Laplacian + beta·delta_y)) u by a nonnegative shifted series.

    Returns (new_field, remainder_bound) with the remainder in the same
    scale as the field (caller handles renormalization bookkeeping).
    """
    c = 1.0 + max(0.0, -beta)
    bmax = c + max(beta, 0.0)
    lam = bmax * dt
    n_top = int(lam + 10.0 * math.sqrt(lam + 1.0) + 30.0)
    diag = c - 1.0
    bcoef = beta

    def apply_b(v):
        out = _neighbor_mean(v)
        if diag != 0.0:
            out += diag * v
        out[y_idx] += bcoef * v[y_idx]
        return out

    scale = math.exp(-c * dt)
    term = u * scale
    acc = term.copy()
    for n in range(1, n_top + 1):
        term = apply_b(term) * (dt / n)
        acc += term
        if n > lam and float(np.sum(term)) < 1e-18 * float(np.sum(acc)):
            n_top = n
            break
    # sum_{n>n_top} lam^n/n! = e^lam P(Pois(lam) > n_top)
    tail_p = float(sp.gammainc(n_top + 1, lam)) if lam > 0 else 0.0
    rem = float(np.sum(u)) * math.exp((bmax - c) * dt) * tail_p
    return acc, rem


def ct_partition(
    params: ModelParams,
    path: DisorderPath,
    t: float | None = None,
    eps: float = 1e-8,
    constrained: bool = False,
    budget: int = FIELD_SITE_BUDGET,
) -> PartitionValue:
    """Continuous-time E^X[e^{beta L_t}] by integrating the field between
    disorder jumps; the series truncation bound is tracked and must come in
    under eps relative to the value."""
    if params.mode != "continuous":
        raise ConfigError("ct_partition needs continuous mode", key="mode")
    if t is None:
        t = path.horizon
    d = params.d
    beta = params.beta_value
    jumps = path.jump_times if path.jump_times is not None else np.empty(0)
    keep = jumps < t
    times = np.concatenate([[0.0], jumps[keep], [t]])
    y_positions = path.positions[: int(np.sum(keep)) + 1]
    y_extent = int(np.max(np.abs(y_positions))) if len(y_positions) else 0
    R = _ct_box_radius(d, t, y_extent, eps)
    side = 2 * R + 1
    if side**d > budget:
        raise BudgetExceeded(f"box {side}^{d} exceeds {budget} sites")
    u = np.zeros((side,) * d)
    u[(R,) * d] = 1.0
    log_scale = 0.0
    rem_total = 0.0
    for seg in range(len(times) - 1):
        dt = times[seg + 1] - times[seg]
        if dt <= 0:
            continue
        y_idx = tuple(y_positions[seg] + R)
        u, rem = _evolve_uniformized(u, y_idx, beta, dt, eps)
        rem_total += rem
        peak = u.max()
        if peak > 1e250 or (0 < peak < 1e-250):
            u /= peak
            rem_total /= peak
            log_scale += math.log(peak)
    if constrained:
        value = float(u[tuple(y_positions[-1] + R)])
    else:
        value = float(np.sum(u))
    rel_err = rem_total / value if value > 0 else float("inf")
    if not rel_err <= eps:
        raise NumericalFailure(
            "uniformization truncation exceeded tolerance",
            tolerance=eps,
            observed=rel_err,
        )
    return PartitionValue(
        _log_or_ninf(value) + log_scale,
        "pin" if constrained else "free",
        (0.0, t),
        params,
        error_bound=rel_err,
    )


def ct_partition_dense(
    params: ModelParams, t: float, radius: int, constrained: bool = False
) -> PartitionValue:
    """Independent small-box solve for a jump-free disorder path (Y = 0):
    exact matrix exponential via symmetric eigen-decomposition."""
    d = params.d
    beta = params.beta_value
    side = 2 * radius + 1
    sites = side**d
    if sites > 4000:
        raise BudgetExceeded("dense eigen-solve box too large")
    idx = np.arange(sites)
    coords = np.stack(np.unravel_index(idx, (side,) * d), axis=1) - radius
    H = np.zeros((sites, sites))
    for ax in range(d):
        step = np.zeros(d, dtype=int)
        step[ax] = 1
        for sgn in (1, -1):
            nb = coords + sgn * step
            ok = np.all(np.abs(nb) <= radius, axis=1)
            j = np.ravel_multi_index(tuple((nb[ok] + radius).T), (side,) * d)
            H[idx[ok], j] += 1.0 / (2 * d)
    H[idx, idx] -= 1.0
    center = np.ravel_multi_index((radius,) * d, (side,) * d)
    H[center, center] += beta
    vals, vecs = np.linalg.eigh(H)
    weights = vecs[center] * np.exp(vals * t)
    if constrained:
        value = float(vecs[center] @ weights)
    else:
        value = float(np.sum(vecs, axis=0) @ weights)
    return PartitionValue(
        _log_or_ninf(value), "pin" if constrained else "free", (0.0, t), params
    )


# -- continuous time: modified variants on a grid -----------------------------


def _ct_log_kernel_matrix(d: int, dt_grid: np.ndarray, disp: np.ndarray) -> np.ndarray:
    """log p_s(x) on an (entries,) grid of time gaps and displacements."""
    out = np.zeros(len(dt_grid))
    for ax in range(d):
        out += np.log(sp.ive(np.abs(disp[:, ax]), dt_grid / d))
    return out


@dataclass
class ModifiedPartitions:
    z1: PartitionValue
    pin1: PartitionValue
    pin2: PartitionValue
    pin: PartitionValue
    grid: np.ndarray
    pin1_values: np.ndarray = field(repr=False, default=None)
    pin_values: np.ndarray = field(repr=False, default=None)
    plain_kernel: np.ndarray = field(repr=False, default=None)


def _volterra_grid(params: ModelParams, path: DisorderPath, t: float, dt: float):
    """Uniform grid, disorder positions on it, and the lower-triangular
    transition kernel P[j, i] = p_{t_j - t_i}(Y_j - Y_i)."""
    M = int(round(t / dt))
    if M < 2:
        raise ConfigError("grid too coarse", key="dt")
    dt = t / M
    grid = np.linspace(0.0, t, M + 1)
    d = params.d
    if path.jump_times is not None and len(path.jump_times):
        Y = path.position_at(grid)
    else:
        Y = np.zeros((M + 1, d), dtype=np.int64)
    P = np.zeros((M + 1, M + 1))
    for j in range(1, M + 1):
        P[j, :j] = np.exp(_ct_log_kernel_matrix(d, grid[j] - grid[:j], Y[j] - Y[:j]))
    return grid, Y, P, dt, M


def _implicit_trapezoid(P: np.ndarray, beta: float, dt: float, seed: np.ndarray) -> np.ndarray:
    """Solve f(t_j) = seed_j + beta·int_0^{t_j} f(u) p_{t_j-u}(Y_j-Y_u) du.

    The diagonal kernel value p_0(0) = 1 makes the half-weighted endpoint
    term implicit: (1 - beta·dt/2)·f_j on the left."""
    M = len(seed) - 1
    denom = 1.0 - beta * dt / 2.0
    if denom <= 0:
        raise ConfigError("dt too large for implicit step at this beta", key="dt")
    f = np.empty(M + 1)
    f[0] = seed[0]
    for j in range(1, M + 1):
        w = P[j, :j].copy()
        w[0] *= 0.5
        f[j] = (seed[j] + beta * dt * float(f[:j] @ w)) / denom
    return f


def ct_pin_volterra(
    params: ModelParams, path: DisorderPath, t: float | None = None, dt: float | None = None
) -> PartitionValue:
    """The wrapped chain density a(t) = beta·p_t(Y_t) + beta·(a * p)(t),
    which equals beta·E^X[e^{beta L_t}; X_t = Y_t].  Valid in any dimension."""
    if params.mode != "continuous":
        raise ConfigError("continuous mode required", key="mode")
    if t is None:
        t = path.horizon
    if dt is None:
        dt = t / 2048
    beta = params.beta_value
    grid, _, P, dt, M = _volterra_grid(params, path, t, dt)
    seed = beta * np.concatenate([[1.0], P[1:, 0]])
    pin = _implicit_trapezoid(P, beta, dt, seed)
    return PartitionValue(_log_or_ninf(pin[M]), "pin", (0.0, t), params)


def ct_modified_partitions(
    params: ModelParams, path: DisorderPath, t: float | None = None, dt: float | None = None
) -> ModifiedPartitions:
    """Volterra recursions for the return-chain variants on a uniform grid.

    Omitting the first and/or last return weight from the wrapped chain
    gives the pin1/pin2/z1 variants; the per-return weight is
    K_{1+rho}(s)·w(beta_bar, s, y) = beta·p_s(y) with every Green factor
    cancelled, and the unweighted kernel K_{1+rho}(s) = p_{(1+rho)s}(0)/G_{1+rho}
    is finite at s = 0.  Implicit trapezoid stepping; second order in dt
    (first order locally at disorder jump times).
    """
    if params.mode != "continuous":
        raise ConfigError("modified partitions are continuous-mode only", key="mode")
    g_ct = params.green()
    if not math.isfinite(g_ct):
        raise RecurrentWalk("modified variants need a transient pair walk (d >= 3)")
    if t is None:
        t = path.horizon
    if dt is None:
        dt = t / 2048
    beta = params.beta_value
    rho = params.rho
    grid, _, P, dt, M = _volterra_grid(params, path, t, dt)
    d = params.d
    K_plain = (
        np.exp(_ct_log_kernel_matrix(d, (1 + rho) * grid, np.zeros((M + 1, d)))) / g_ct
    )

    pin = _implicit_trapezoid(P, beta, dt, beta * np.concatenate([[1.0], P[1:, 0]]))
    pin1 = _implicit_trapezoid(P, beta, dt, K_plain)

    # pin2: explicit final unweighted gap;  z1: running integral of pin1
    trap = np.ones(M + 1)
    trap[0] = trap[-1] = 0.5
    pin2_val = K_plain[M] + dt * float(np.sum(pin1 * K_plain[::-1] * trap))
    z1_val = 1.0 + dt * float(np.sum(pin1 * trap))

    def mk(v, name):
        return PartitionValue(_log_or_ninf(v), name, (0.0, t), params)

    return ModifiedPartitions(
        z1=mk(z1_val, "z1"),
        pin1=mk(pin1[M], "pin1"),
        pin2=mk(pin2_val, "pin2"),
        pin=mk(pin[M], "pin"),
        grid=grid,
        pin1_values=pin1,
        pin_values=pin,
        plain_kernel=K_plain,
    )


def ct_weight_bound(d: int, rho: float, beta_bar: float, s_max: float = 200.0) -> float:
    """sup_s beta_bar·p_s(0)/p_{(1+rho)s}(0): the uniform return-weight bound."""
    s = np.linspace(0.0, s_max, 4001)
    ratio = np.exp(
        _ct_log_kernel_matrix(d, s, np.zeros((len(s), d)))
        - _ct_log_kernel_matrix(d, (1 + rho) * s, np.zeros((len(s), d)))
    )
    limit = (1 + rho) ** (d / 2.0)
    return beta_bar * max(float(ratio.max()), limit)


# -- estimators ---------------------------------------------------------------


@dataclass
class FreeEnergyEstimate:
    horizons: tuple
    estimates: dict
    params: ModelParams
    seed: int

    def estimate(self, horizon) -> McEstimate:
        return self.estimates[horizon]


def free_energy_estimate(
    params: ModelParams,
    N_or_t,
    replicas: int,
    seed: int,
    threads: int = 1,
    doubling: bool = True,
) -> FreeEnergyEstimate:
    """Mean of (1/N)·log of the endpoint-constrained partition over disorder.

    Evaluates the doubled horizon on the same replica paths as well, so the
    super-additive comparison a_{2N} >= 2·a_N uses common randomness.
    """
    horizons = (N_or_t, 2 * N_or_t) if doubling else (N_or_t,)
    top = horizons[-1]

    if params.mode == "discrete":
        table = None if params.d == 1 else cached_table(params.d, int(top))

        def one(r):
            rng = stream(seed, QUENCHED, r)
            y = sample_discrete(params.d, int(top), rng)
            out = []
            for N in horizons:
                pv = renewal_dp_partition(params, y, int(N), constrained=True, table=table)
                out.append(pv.log_value / N)
            return out
    else:

        def one(r):
            rng = stream(seed, QUENCHED, r)
            y = sample_ct(params.d, params.rho, float(top), rng)
            out = []
            for t in horizons:
                pv = ct_partition(params, y, float(t), constrained=True)
                out.append(pv.log_value / t)
            return out

    rows = np.array(replica_map(one, replicas, threads))
    estimates = {h: summarize(rows[:, k]) for k, h in enumerate(horizons)}
    return FreeEnergyEstimate(horizons, estimates, params, seed)


def collision_mc(
    d: int,
    rho: float,
    horizon,
    replicas: int,
    seed: int,
    mode: str = "discrete",
    keep_paths: int = 8,
) -> CollisionReport:
    """Simulate both walks and return collision local times."""
    values = np.empty(replicas)
    samples: list[CollisionSample] = []
    for r in range(replicas):
        rng = stream(seed, COLLISION, r)
        if mode == "discrete":
            N = int(horizon)
            x = sample_discrete(d, N, rng)
            y = sample_discrete(d, N, rng)
            L = float(np.sum(np.all(x.positions[1:] == y.positions[1:], axis=1)))
        else:
            x = sample_ct(d, 1.0, float(horizon), rng)
            y = sample_ct(d, rho, float(horizon), rng)
            L = _ct_collision_time(x, y, float(horizon))
        values[r] = L
        if r < keep_paths:
            samples.append(CollisionSample(x, L))
    est = summarize(values)
    ratio = ref = None
    if d == 2 and horizon > 1:
        ratio = est.mean / math.log(horizon)
        # pair-walk local CLT constants: rate (1+rho) in continuous time,
        # per-step variance 2/d per coordinate in discrete time
        ref = 1.0 / (math.pi * (1 + rho)) if mode == "continuous" else 1.0 / (2 * math.pi)
    return CollisionReport(values, est, samples, ratio, ref)


def _ct_collision_time(x: DisorderPath, y: DisorderPath, t: float) -> float:
    events = np.concatenate([[0.0], x.jump_times, y.jump_times, [t]])
    order = np.argsort(events, kind="stable")
    events = events[order]
    # positions after each event time, for both walks
    xi = np.searchsorted(x.jump_times, events, side="right")
    yi = np.searchsorted(y.jump_times, events, side="right")
    same = np.all(x.positions[xi] == y.positions[yi], axis=1)
    return float(np.sum(np.diff(events) * same[:-1]))
