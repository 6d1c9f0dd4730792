"""Heat equation with a single moving point catalyst, and directed-polymer
size-bias identities.

The field solver integrates du/dt = Lap(u) + beta*delta_{Y_t}(x)*u from the
flat initial condition u(0,.) = 1 with the same piecewise uniformization
engine as the continuous-time partition solver: between catalyst jumps the
generator is constant and exp(dt*A) is applied as a nonnegative shifted
Poisson series.  (1/t) log u(t,0) then estimates the growth rate at the
origin, which matches the collision free energy of the two-walk model.

The directed-polymer half evaluates the normalized partition
Z = E^X[exp(sum_i lam*w(i, X_i) - M(lam))] exactly or by a field DP, and
verifies by exhaustive enumeration that reweighting the disorder on an
independent walk's path realizes the size-biased law of Z.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .disorder import DisorderPath, sample_ct
from .errors import BudgetExceeded, ConfigError, InstanceTooLarge, NumericalFailure
from .mcstats import McEstimate, replica_map, summarize
from .quenched import FIELD_SITE_BUDGET, _ct_box_radius, _evolve_uniformized, _neighbor_mean
from .rngstreams import PAM, POLYMER, stream

EXACT_PATH_BUDGET = 10_000_000


# ---------------------------------------------------------------------------
# catalyst field


@dataclass
class Field:
    """Solution field on a centered box at one time stamp.

    ``values`` are scaled so the array stays in float range; the physical
    value at lattice site x is values[index] * exp(log_scale).
    ``series_error`` is the accumulated relative bound on the truncated
    uniformization series; ``escape_mass`` bounds the probability that the
    driving walk started at the origin leaves the box by the time stamp
    (contributions of such walks to u(t,0) are at most
    exp(max(beta,0)*t) * escape_mass); ``mass_deficit`` is the fraction of
    the flat field's total mass absorbed at the boundary, which corrects
    the box-average mass bounds.
    """

    d: int
    radius: int
    values: np.ndarray = field(repr=False)
    t: float
    beta: float
    log_scale: float = 0.0
    series_error: float = 0.0
    escape_mass: float = 0.0
    mass_deficit: float = 0.0

    def _index(self, x) -> tuple:
        idx = tuple(int(c) + self.radius for c in np.atleast_1d(x))
        if len(idx) != self.d or any(c < 0 or c >= 2 * self.radius + 1 for c in idx):
            raise ConfigError(f"site {x} outside the solved box", key="x")
        return idx

    def log_value_at(self, x) -> float:
        v = float(self.values[self._index(x)])
        if v <= 0.0:
            return -math.inf
        return math.log(v) + self.log_scale

    def value_at(self, x) -> float:
        return math.exp(self.log_value_at(x))

    @property
    def box_mean(self) -> float:
        return float(np.mean(self.values)) * math.exp(self.log_scale)


def pam_solve(
    d: int,
    beta: float,
    rho: float,
    t: float,
    path: DisorderPath,
    eps: float = 1e-8,
    budget: int = FIELD_SITE_BUDGET,
) -> Field:
    """Integrate the catalyst field from u(0,.) = 1 along one disorder path.

    The box radius comes from Poisson displacement quantiles at eps (plus
    the catalyst's range), the per-segment series truncation is accumulated
    and must come in under eps relative to the box total, and a companion
    beta = 0 field tracks exactly how much mass the absorbing boundary
    removes from the flat initial condition (``mass_deficit``) and how
    likely a walk from the origin is to reach the boundary
    (``escape_mass``).
    """
    if path.mode != "continuous":
        raise ConfigError("pam_solve needs a continuous-time path", key="path")
    if d != path.d:
        raise ConfigError("dimension does not match the path", key="d")
    if t <= 0:
        raise ConfigError("t must be positive", key="t")
    if rho < 0:
        raise ConfigError("rho must be >= 0", key="rho")
    jumps = path.jump_times if path.jump_times is not None else np.empty(0)
    keep = jumps < t
    times = np.concatenate([[0.0], jumps[keep], [t]])
    y_positions = path.positions[: int(np.sum(keep)) + 1]
    y_extent = int(np.max(np.abs(y_positions))) if len(y_positions) else 0
    R = _ct_box_radius(d, t, y_extent, eps)
    side = 2 * R + 1
    if side**d > budget:
        raise BudgetExceeded(f"box {side}^{d} exceeds {budget} sites")
    if beta == 0.0:
        # the heat flow preserves the flat field on the full lattice
        return Field(d, R, np.ones((side,) * d), t, beta)
    u = np.ones((side,) * d)
    flat = np.ones((side,) * d)
    log_scale = 0.0
    rem_total = 0.0
    flat_rem = 0.0
    for seg in range(len(times) - 1):
        dt = times[seg + 1] - times[seg]
        if dt <= 0:
            continue
        y_idx = tuple(y_positions[seg] + R)
        u, rem = _evolve_uniformized(u, y_idx, beta, dt, eps)
        flat, frem = _evolve_uniformized(flat, y_idx, 0.0, dt, eps)
        rem_total += rem
        flat_rem += frem
        peak = u.max()
        if peak > 1e250 or (0 < peak < 1e-250):
            u /= peak
            rem_total /= peak
            log_scale += math.log(peak)
    total = float(np.sum(u))
    rel_err = rem_total / total if total > 0 else float("inf")
    if not rel_err <= eps:
        raise NumericalFailure(
            "uniformization truncation exceeded tolerance",
            tolerance=eps,
            observed=rel_err,
        )
    n_sites = side**d
    deficit = max(0.0, 1.0 - float(np.sum(flat)) / n_sites) + flat_rem / n_sites
    escape = max(0.0, 1.0 - float(flat[(R,) * d])) + flat_rem / n_sites
    return Field(
        d,
        R,
        u,
        t,
        beta,
        log_scale=log_scale,
        series_error=rel_err,
        escape_mass=escape,
        mass_deficit=deficit,
    )


def lyapunov_estimate(
    d: int,
    beta: float,
    rho: float,
    t: float,
    replicas: int,
    seed: int = 0,
    eps: float = 1e-8,
    threads: int = 1,
) -> McEstimate:
    """Mean/stderr of (1/t) log u(t,0) over independent catalyst paths."""
    if replicas < 1:
        raise ConfigError("replicas must be >= 1", key="replicas")

    def one(r: int) -> float:
        rng = stream(seed, PAM, r)
        path = sample_ct(d, rho, t, rng)
        fld = pam_solve(d, beta, rho, t, path, eps=eps)
        return fld.log_value_at((0,) * d) / t

    return summarize(np.asarray(replica_map(one, replicas, threads)))


# ---------------------------------------------------------------------------
# directed polymer


def bernoulli_log_mgf(lam: float) -> float:
    """log E[exp(lam*w)] for the centered +-1 coin."""
    return float(np.logaddexp(lam, -lam) - math.log(2.0))


def beta_hat(lam: float, log_mgf=bernoulli_log_mgf) -> float:
    """Collision coupling M(2*lam) - 2*M(lam) left after size-biasing."""
    if lam < 0:
        raise ConfigError("lam must be >= 0", key="lam")
    return float(log_mgf(2.0 * lam) - 2.0 * log_mgf(lam))


@dataclass
class PolymerSpec:
    """Disorder strength plus the disorder law's cumulant function.

    The finite-support law (values, probs) must be centered; M(0) = 0 is
    checked, and ``beta_hat`` is the derived collision coupling.
    """

    lam: float
    log_mgf: object = bernoulli_log_mgf
    values: tuple = (1.0, -1.0)
    probs: tuple = (0.5, 0.5)

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lam must be >= 0", key="lam")
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or len(v) < 2:
            raise ConfigError("disorder law needs matching values/probs", key="values")
        if abs(float(np.sum(p)) - 1.0) > 1e-12 or np.any(p < 0):
            raise ConfigError("probs must form a distribution", key="probs")
        if abs(float(v @ p)) > 1e-12:
            raise ConfigError("disorder law must be centered", key="values")
        if abs(float(self.log_mgf(0.0))) > 1e-12:
            raise ConfigError("log_mgf must vanish at 0", key="log_mgf")

    @property
    def beta_hat(self) -> float:
        return beta_hat(self.lam, self.log_mgf)


def sample_polymer_field(
    N: int, d: int, rng: np.random.Generator, values=(1.0, -1.0), probs=(0.5, 0.5)
) -> np.ndarray:
    """Disorder array w[i-1, x+N, ...] over times 1..N and the reachable box."""
    shape = (N,) + (2 * N + 1,) * d
    return rng.choice(np.asarray(values, dtype=float), size=shape, p=np.asarray(probs))


def _step_vectors(d: int) -> np.ndarray:
    steps = np.zeros((2 * d, d), dtype=np.int64)
    for ax in range(d):
        steps[2 * ax, ax] = 1
        steps[2 * ax + 1, ax] = -1
    return steps


def _enumerate_paths(N: int, d: int) -> np.ndarray:
    """Positions of every length-N nearest-neighbor path: (count, N, d)."""
    steps = _step_vectors(d)
    codes = np.array(list(itertools.product(range(2 * d), repeat=N)), dtype=np.int64)
    return np.cumsum(steps[codes], axis=1)


def _field_weights(omega_field: np.ndarray, paths: np.ndarray, N: int) -> np.ndarray:
    """w(i, X_i) along each path: (count, N)."""
    idx = (np.arange(N)[None, :],) + tuple(
        paths[:, :, ax] + N for ax in range(paths.shape[2])
    )
    return omega_field[idx]


def polymer_partition(
    lam: float,
    N: int,
    d: int,
    omega_field: np.ndarray,
    log_mgf=bernoulli_log_mgf,
    method: str = "auto",
) -> float:
    """Normalized polymer partition E^X[exp(sum lam*w - M(lam))].

    ``method`` chooses the exact path enumeration (up to ten million
    paths) or the field DP over the reachable box; "auto" prefers exact
    while it fits.  Both routes agree to rounding.
    """
    if lam < 0:
        raise ConfigError("lam must be >= 0", key="lam")
    if N < 1:
        raise ConfigError("N must be >= 1", key="N")
    expected = (N,) + (2 * N + 1,) * d
    if omega_field.shape != expected:
        raise ConfigError(
            f"omega_field shape {omega_field.shape} != {expected}", key="omega_field"
        )
    M = float(log_mgf(lam))
    n_paths = (2 * d) ** N
    if method == "auto":
        method = "exact" if n_paths <= EXACT_PATH_BUDGET else "dp"
    if method == "exact":
        if n_paths > EXACT_PATH_BUDGET:
            raise InstanceTooLarge(
                f"instance too large: {n_paths} paths exceed the exact-route "
                f"budget {EXACT_PATH_BUDGET}"
            )
        w = _field_weights(omega_field, _enumerate_paths(N, d), N)
        return float(np.mean(np.exp(lam * np.sum(w, axis=1) - N * M)))
    if method != "dp":
        raise ConfigError(f"unknown method {method!r}", key="method")
    side = 2 * N + 1
    if side**d > FIELD_SITE_BUDGET:
        raise BudgetExceeded(f"box {side}^{d} exceeds {FIELD_SITE_BUDGET} sites")
    u = np.zeros((side,) * d)
    u[(N,) * d] = 1.0
    for i in range(1, N + 1):
        u = _neighbor_mean(u)
        u *= np.exp(lam * omega_field[i - 1] - M)
    return float(np.sum(u))


def size_bias_check(lam: float, N: int, d: int, f, log_mgf=bernoulli_log_mgf):
    """Exhaustive check that reweighting the disorder on an independent
    walk's path size-biases the partition law: E[f(Z-tilde)] vs E[Z f(Z)].

    Enumerates every walk pair (X, Y), every +-1 disorder assignment on
    the reachable space-time cone, and every tilted assignment on Y's
    path; returns (lhs, rhs, difference).
    """
    if lam < 0:
        raise ConfigError("lam must be >= 0", key="lam")
    if N < 1:
        raise ConfigError("N must be >= 1", key="N")
    paths = _enumerate_paths(N, d)
    n_paths = len(paths)
    # reachable space-time cells |x|_1 <= i with matching parity
    cells = sorted({(i, tuple(x)) for i in range(N) for x in paths[:, i, :]})
    n_cells = len(cells)
    work = n_paths * n_paths * (2**n_cells) * (2**N)
    if work > 200_000_000:
        raise InstanceTooLarge(f"instance too large: size-bias check needs {work} terms")
    cell_index = {c: k for k, c in enumerate(cells)}
    path_cells = np.array(
        [[cell_index[(i, tuple(x))] for i, x in enumerate(p)] for p in paths]
    )
    M = float(log_mgf(lam))
    # all +-1 assignments: omegas[a, k] for config a, cell k
    bits = np.arange(2**n_cells, dtype=np.int64)
    omegas = 1.0 - 2.0 * ((bits[:, None] >> np.arange(n_cells)) & 1)
    w_all = omegas[:, path_cells]  # (configs, paths, N)
    energy = lam * np.sum(w_all, axis=2) - N * M
    z_all = np.mean(np.exp(energy), axis=1)  # Z per omega config
    p_omega = 1.0 / 2**n_cells
    rhs = float(np.sum(z_all * np.vectorize(f)(z_all)) * p_omega)

    # tilted +-1 assignments along Y's path, with their probabilities
    tilt_bits = np.arange(2**N, dtype=np.int64)
    tilted = 1.0 - 2.0 * ((tilt_bits[:, None] >> np.arange(N)) & 1)  # (tconf, N)
    p_plus = math.exp(lam - M) / 2.0
    p_tilt = np.prod(np.where(tilted > 0, p_plus, 1.0 - p_plus), axis=1)
    lhs = 0.0
    for yi in range(n_paths):
        match = np.all(paths == paths[yi][None, :, :], axis=2)  # (paths, N)
        for tc in range(2**N):
            w_mix = np.where(match[None, :, :], tilted[tc][None, None, :], w_all)
            zt = np.mean(np.exp(lam * np.sum(w_mix, axis=2) - N * M), axis=1)
            lhs += float(p_tilt[tc] * np.sum(np.vectorize(f)(zt)) * p_omega) / n_paths
    return lhs, rhs, lhs - rhs
