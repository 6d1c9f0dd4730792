"""Exact n-step kernels of the simple random walk on Z^d.

Tables store one value per orbit of the signed-permutation symmetry group:
the fundamental domain is the set of coordinate-sorted nonnegative sites.
Entries with the wrong parity (|x|_1 mod 2 != n mod 2) are never
materialized.  The recursion

    p_{n+1}(x) = (1/2d) sum_{|e|=1} p_n(canon(x - e))

runs entirely on the domain via precomputed gather maps, so symmetry holds
bit-identically by construction.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import BudgetExceeded

MAGIC = b"PINK1"
DEFAULT_BUDGET = 80_000_000  # stored float64 entries


@dataclass(frozen=True)
class LatticeConfig:
    """Dimension and horizon of a kernel table.

    Parameters
    ----------
    d : int
        Lattice dimension, >= 1.
    n_max : int
        Largest step count tabulated.
    budget : int
        Cap on stored entries; exceeding it raises BudgetExceeded.
    """

    d: int
    n_max: int
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")


def canonical(x) -> tuple:
    """Representative of the signed-permutation orbit of x."""
    return tuple(sorted((abs(int(c)) for c in x), reverse=True))


def _domain_sites(d: int, n_max: int) -> list[tuple]:
    """All nonincreasing nonnegative d-tuples with coordinate sum <= n_max."""
    out = []

    def rec(prefix, remaining, bound):
        if len(prefix) == d:
            out.append(tuple(prefix))
            return
        for c in range(min(remaining, bound), -1, -1):
            rec(prefix + [c], remaining - c, c)

    rec([], n_max, n_max)
    out.sort()
    return out


class KernelTable:
    """Step kernels p_n(x) for n = 0..n_max on the fundamental domain."""

    def __init__(self, config: LatticeConfig):
        self.config = config
        d, n_max = config.d, config.n_max
        sites = _domain_sites(d, n_max)
        self._sites = [
            [s for s in sites if sum(s) % 2 == 0],
            [s for s in sites if sum(s) % 2 == 1],
        ]
        est = sum(
            len(self._sites[n % 2]) for n in range(n_max + 1)
        )
        if est > config.budget:
            raise BudgetExceeded(
                f"kernel table (d={d}, n_max={n_max}) needs {est} entries, "
                f"budget is {config.budget}"
            )
        self._sums = [
            np.array([sum(s) for s in self._sites[p]], dtype=np.int64)
            for p in (0, 1)
        ]
        base = n_max + 2
        self._keys = []
        self._key_order = []
        for p in (0, 1):
            enc = np.array([self._encode_tuple(s, base) for s in self._sites[p]], dtype=np.int64)
            order = np.argsort(enc, kind="stable")
            self._keys.append(enc[order])
            self._key_order.append(order)
        self._base = base
        self.values: list[np.ndarray] = []
        self._max_cache: dict[int, float] = {}

    @staticmethod
    def _encode_tuple(s, base) -> int:
        k = 0
        for c in s:
            k = k * base + c
        return k

    # -- construction -----------------------------------------------------

    def _gather_map(self, target_parity: int) -> np.ndarray:
        """For each target site, domain rows of its 2d lattice neighbors."""
        d = self.config.d
        src_parity = 1 - target_parity
        src_index = {s: i for i, s in enumerate(self._sites[src_parity])}
        sentinel = len(self._sites[src_parity])
        rows = np.empty((len(self._sites[target_parity]), 2 * d), dtype=np.int64)
        for i, s in enumerate(self._sites[target_parity]):
            col = 0
            for ax in range(d):
                for delta in (1, -1):
                    y = list(s)
                    y[ax] += delta
                    rows[i, col] = src_index.get(canonical(y), sentinel)
                    col += 1
        return rows

    def build(self) -> "KernelTable":
        n_max = self.config.n_max
        gmaps = [self._gather_map(0), self._gather_map(1)]
        v = np.zeros(len(self._sites[0]))
        origin = self._sites[0].index((0,) * self.config.d)
        v[origin] = 1.0
        self.values = [v]
        inv = 1.0 / (2 * self.config.d)
        for n in range(1, n_max + 1):
            p = n % 2
            prev = np.append(self.values[-1], 0.0)  # sentinel slot
            self.values.append(inv * prev[gmaps[p]].sum(axis=1))
        return self

    # -- lookups ----------------------------------------------------------

    def value(self, n: int, x) -> float:
        """p_n(x); zero outside range or off parity."""
        s = canonical(x)
        m = sum(s)
        if n < 0 or n > self.config.n_max or m > n or (m - n) % 2 != 0:
            return 0.0
        p = n % 2
        k = self._encode_tuple(s, self._base)
        j = np.searchsorted(self._keys[p], k)
        if j >= len(self._keys[p]) or self._keys[p][j] != k:
            return 0.0
        return float(self.values[n][self._key_order[p][j]])

    def values_at(self, n: int, xs: np.ndarray) -> np.ndarray:
        """Vectorized p_n(x) over a batch of sites, shape (m, d)."""
        out = np.zeros(len(xs))
        if n < 0 or n > self.config.n_max:
            return out
        p = n % 2
        cs = -np.sort(-np.abs(np.asarray(xs, dtype=np.int64)), axis=1)
        sums = cs.sum(axis=1)
        ok = (sums <= n) & ((sums - n) % 2 == 0)
        if not ok.any():
            return out
        keys = np.zeros(len(xs), dtype=np.int64)
        for ax in range(self.config.d):
            keys = keys * self._base + cs[:, ax]
        j = np.searchsorted(self._keys[p], keys[ok])
        j = np.minimum(j, len(self._keys[p]) - 1)
        hit = self._keys[p][j] == keys[ok]
        rows = self._key_order[p][j[hit]]
        idx = np.flatnonzero(ok)[hit]
        out[idx] = self.values[n][rows]
        return out

    def max_value(self, n: int) -> float:
        """max_x p_n(x), exact from the table."""
        if n not in self._max_cache:
            if not (0 <= n <= self.config.n_max):
                raise ValueError(f"n={n} outside table horizon {self.config.n_max}")
            self._max_cache[n] = float(self.values[n].max())
        return self._max_cache[n]

    def mass(self, n: int) -> float:
        """Total probability at step n (orbit sizes times stored values)."""
        p = n % 2
        return float(np.dot(self.values[n], self._orbit_sizes(p)))

    def _orbit_sizes(self, parity: int) -> np.ndarray:
        key = f"_orbit{parity}"
        if not hasattr(self, key):
            sizes = np.array([_orbit_size(s) for s in self._sites[parity]], dtype=np.float64)
            setattr(self, key, sizes)
        return getattr(self, key)

    def dense_box(self, n: int) -> np.ndarray:
        """Full kernel on [-n, n]^d, for small-instance cross checks."""
        d = self.config.d
        w = 2 * n + 1
        out = np.zeros((w,) * d)
        for idx in np.ndindex(*(w,) * d):
            x = tuple(i - n for i in idx)
            out[idx] = self.value(n, x)
        return out

    # -- serialization ----------------------------------------------------

    def save(self, path: str) -> None:
        cfg = self.config
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IIII", cfg.d, cfg.n_max, cfg.n_max, 1))
            for n in range(cfg.n_max + 1):
                run = self.values[n][self._sums[n % 2] <= n]
                fh.write(struct.pack("<Q", len(run)))
                fh.write(np.ascontiguousarray(run, dtype="<f8").tobytes())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str, config: LatticeConfig) -> "KernelTable":
        with open(path, "rb") as fh:
            if fh.read(5) != MAGIC:
                raise ValueError("bad magic")
            d, n_max, _radius, parity_flag = struct.unpack("<IIII", fh.read(16))
            if (d, n_max) != (config.d, config.n_max) or parity_flag != 1:
                raise ValueError("cache header mismatch")
            table = cls(config)
            table.values = []
            for n in range(n_max + 1):
                (count,) = struct.unpack("<Q", fh.read(8))
                run = np.frombuffer(fh.read(8 * count), dtype="<f8")
                mask = table._sums[n % 2] <= n
                if int(mask.sum()) != count:
                    raise ValueError("cache run length mismatch")
                v = np.zeros(len(table._sites[n % 2]))
                v[mask] = run
                table.values.append(v)
        return table


def _orbit_size(s: tuple) -> int:
    """Number of lattice images of a fundamental-domain site."""
    from collections import Counter
    from math import factorial

    d = len(s)
    perm = factorial(d)
    for mult in Counter(s).values():
        perm //= factorial(mult)
    sign = 2 ** sum(1 for c in s if c != 0)
    return perm * sign


def cache_filename(d: int, n_max: int) -> str:
    return f"kernels_d{d}_n{n_max}.pink1"


def build_kernel_table(config: LatticeConfig, cache_dir: str | None = None) -> KernelTable:
    """Build a kernel table, consulting a binary cache when a directory is given.

    Stale or corrupt cache files are rebuilt, never trusted.
    """
    path = None
    if cache_dir:
        path = os.path.join(cache_dir, cache_filename(config.d, config.n_max))
        if os.path.exists(path):
            try:
                table = KernelTable.load(path, config)
                table.from_cache = True
                return table
            except (ValueError, OSError):
                pass
    table = KernelTable(config).build()
    table.from_cache = False
    if path:
        os.makedirs(cache_dir, exist_ok=True)
        table.save(path)
    return table


_MEMO: dict[tuple[int, int], KernelTable] = {}


def cached_table(d: int, n_max: int) -> KernelTable:
    """Process-wide memo of built tables; grows n_max requests to the max seen."""
    for (dd, nn), table in _MEMO.items():
        if dd == d and nn >= n_max:
            return table
    table = build_kernel_table(LatticeConfig(d=d, n_max=n_max))
    _MEMO[(d, n_max)] = table
    return table
