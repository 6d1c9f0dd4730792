"""Disorder walks: plain, two-step tilted, and continuous-time samplers,
with their Radon-Nikodym densities and tilt moments.

The two-step tilted walk repeats at every odd time: the step drawn at an
odd time copies the previous increment with probability (1+h)/(2d),
reverses it with probability (1-h)/(2d), and is uniform over the other
2d-2 directions.  Even-time steps are uniform.  The continuous tilt is a
rate change rho -> rho + h with unchanged jump distribution.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TiltParams:
    """Tilt strength for either mode.

    h must lie in [0, 1) so the repeat/reverse probabilities stay in [0, 1].
    Continuous mode requires a positive base rate when h > 0, since the
    density below divides by rho.
    """

    mode: str
    h: float
    rho: float = 0.0

    def __post_init__(self):
        if self.mode not in ("discrete", "continuous"):
            raise ValueError(f"mode must be discrete or continuous, got {self.mode}")
        if not 0 <= self.h < 1:
            raise ValueError(f"tilt h must lie in [0, 1), got {self.h}")
        if self.mode == "continuous" and self.h > 0 and self.rho <= 0:
            raise ValueError("continuous tilt needs rho > 0")


@dataclass
class DisorderPath:
    """One sampled disorder trajectory.

    Discrete: `increments` has shape (N, d), row i is the step into time i+1.
    Continuous: `jump_times` sorted in (0, t), `increments` one row per jump,
    `rho` the rate the path was sampled at.
    """

    mode: str
    d: int
    increments: np.ndarray
    horizon: float
    jump_times: np.ndarray | None = None
    rho: float = 0.0
    _positions: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in ("discrete", "continuous"):
            raise ValueError(f"mode must be discrete or continuous, got {self.mode}")
        if self.mode == "continuous" and self.jump_times is None:
            raise ValueError("continuous paths need jump_times")

    @property
    def positions(self) -> np.ndarray:
        """Positions including the origin row: shape (N+1, d) or (jumps+1, d)."""
        if self._positions is None:
            steps = np.vstack([np.zeros((1, self.d), dtype=np.int64), self.increments])
            self._positions = np.cumsum(steps, axis=0)
        return self._positions

    def position_at(self, s) -> np.ndarray:
        """Continuous-mode position at times s (vectorized, right-continuous)."""
        if self.mode != "continuous":
            raise ValueError("position_at applies to continuous paths")
        idx = np.searchsorted(self.jump_times, np.atleast_1d(s), side="right")
        return self.positions[idx]


def _decode_steps(raw: np.ndarray, d: int) -> np.ndarray:
    axis = raw // 2
    sign = 1 - 2 * (raw % 2)
    steps = np.zeros((len(raw), d), dtype=np.int64)
    steps[np.arange(len(raw)), axis] = sign
    return steps


def sample_discrete(d: int, N: int, rng: np.random.Generator) -> DisorderPath:
    """Uniform nearest-neighbor walk, N steps."""
    raw = rng.integers(0, 2 * d, size=N)
    return DisorderPath("discrete", d, _decode_steps(raw, d), float(N))


def sample_tilted(d: int, N: int, h: float, rng: np.random.Generator) -> DisorderPath:
    """Two-step tilted walk, N steps; a trailing unpaired step stays uniform.

    The tilted odd-step law equals the uniform law plus h/(2d) mass moved
    from the reversal onto the repeat, so we draw uniformly and, with
    probability h, turn a reversal into a repeat.
    """
    TiltParams("discrete", h)
    steps = _decode_steps(rng.integers(0, 2 * d, size=N), d)
    flip = rng.random(size=N // 2)
    evens = steps[0 : 2 * (N // 2) : 2]
    odds = steps[1::2]
    promote = np.all(odds == -evens, axis=1) & (flip < h)
    odds[promote] = evens[promote]
    return DisorderPath("discrete", d, steps, float(N))


def rn_density_discrete(path: DisorderPath, h: float) -> float:
    """Density of the tilted law against the uniform law at this path.

    A factor (1+h) per odd-time repeat, (1-h) per reverse, 1 otherwise;
    the trailing unpaired step of odd N contributes nothing.
    """
    inc = path.increments
    n_pairs = len(inc) // 2
    evens = inc[0 : 2 * n_pairs : 2]
    odds = inc[1::2]
    repeats = int(np.all(odds == evens, axis=1).sum())
    reverses = int(np.all(odds == -evens, axis=1).sum())
    return float((1 + h) ** repeats * (1 - h) ** reverses)


def sample_ct(d: int, rho: float, t: float, rng: np.random.Generator) -> DisorderPath:
    """Rate-rho walk on [0, t]: Poisson jump count, sorted uniform times."""
    if rho < 0 or t < 0:
        raise ValueError("rho and t must be >= 0")
    n = int(rng.poisson(rho * t)) if rho > 0 else 0
    times = np.sort(rng.random(n) * t)
    raw = rng.integers(0, 2 * d, size=n)
    return DisorderPath("continuous", d, _decode_steps(raw, d), float(t),
                        jump_times=times, rho=rho)


def rn_density_ct(path: DisorderPath, h: float, rho: float) -> float:
    """Density of the rate-(rho+h) law against the rate-rho law at this path:
    exp(-h t) (1 + h/rho)^{jumps}."""
    if rho <= 0:
        raise ValueError("base rate rho must be > 0")
    n = len(path.increments)
    return float(np.exp(-h * path.horizon) * (1 + h / rho) ** n)


# -- closed-form tilt moments -------------------------------------------------


def tilt_moment_discrete(d: int, h: float, gamma: float, N: int) -> float:
    """E[f^{-gamma/(1-gamma)}] under the uniform law, exact.

    Per even-odd pair the density takes value 1+h once, 1-h once, and 1 on
    the remaining 2d-2 directions, giving

        (1 - 1/d + ((1+h)^{-a} + (1-h)^{-a}) / (2d)) ** floor(N/2),

    a = gamma/(1-gamma).
    """
    a = gamma / (1 - gamma)
    base = 1 - 1 / d + ((1 + h) ** (-a) + (1 - h) ** (-a)) / (2 * d)
    return base ** (N // 2)


def tilt_moment_discrete_bound(d: int, h: float, gamma: float, N: int) -> float:
    """Second-order upper bound exp(gamma h^2 N / (2 d (1-gamma)^2))."""
    return float(np.exp(gamma * h**2 * N / (2 * d * (1 - gamma) ** 2)))


def tilt_moment_ct(rho: float, h: float, gamma: float, t: float) -> float:
    """E[f^{-gamma/(1-gamma)}] for the rate tilt, exact:
    exp((rho (1+h/rho)^{-a} - rho + a h) t), a = gamma/(1-gamma)."""
    a = gamma / (1 - gamma)
    return float(np.exp((rho * (1 + h / rho) ** (-a) - rho + a * h) * t))


def tilt_moment_ct_bound(rho: float, h: float, gamma: float, t: float) -> float:
    """Second-order upper bound exp(gamma h^2 t / (2 rho (1-gamma)^2))."""
    return float(np.exp(gamma * h**2 * t / (2 * rho * (1 - gamma) ** 2)))
