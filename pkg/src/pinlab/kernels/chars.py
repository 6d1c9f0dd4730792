"""Characteristic functions of the walk, the two-step tilted pair, and the
tilted single step."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CharTriple:
    """Fourier data at tilt strength h.

    phi     single uniform step, (1/d) sum_i cos k_i
    psi     one even-odd pair of the tilted walk,
            phi^2 - (h/d^2) sum_i sin^2 k_i
    varphi  one tilted step following an e_1 increment,
            phi + i (h/d) sin k_1

    h lives in [0, 1): the repeat/reverse step probabilities (1 +- h)/(2d)
    stay nonnegative there.  psi <= phi^2 pointwise for h >= 0.
    """

    d: int
    h: float

    def __post_init__(self):
        if not 0 <= self.h < 1:
            raise ValueError(f"tilt h must lie in [0, 1), got {self.h}")

    def phi(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return np.cos(k).mean(axis=-1)

    def psi(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        p = self.phi(k)
        return p * p - (self.h / self.d**2) * np.sum(np.sin(k) ** 2, axis=-1)

    def varphi(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return self.phi(k) + 1j * (self.h / self.d) * np.sin(k[..., 0])


def char_triple(d: int, h: float) -> CharTriple:
    return CharTriple(d, h)
