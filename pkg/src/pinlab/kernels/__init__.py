"""Lattice kernels: exact discrete tables, continuous-time products,
characteristic functions, and Green functions."""
from .tables import LatticeConfig, KernelTable, build_kernel_table, canonical, cache_filename
from .chars import CharTriple, char_triple
from .ctime import (
    ct_kernel_1d,
    log_ct_kernel_1d,
    ct_kernel_point,
    poissonized_ct_kernel,
    ct_pair_return,
    entropy_sum,
    kernel_bound_report,
    KernelBoundReport,
)
from .greens import (
    GreenValue,
    GreenValues,
    TiltedGreens,
    green_pair,
    green_ct,
    tilted_greens,
    gap_slope,
    torus_integral,
)

__all__ = [
    "LatticeConfig",
    "KernelTable",
    "build_kernel_table",
    "canonical",
    "cache_filename",
    "CharTriple",
    "char_triple",
    "ct_kernel_1d",
    "log_ct_kernel_1d",
    "ct_kernel_point",
    "poissonized_ct_kernel",
    "ct_pair_return",
    "entropy_sum",
    "kernel_bound_report",
    "KernelBoundReport",
    "GreenValue",
    "GreenValues",
    "TiltedGreens",
    "green_pair",
    "green_ct",
    "tilted_greens",
    "gap_slope",
    "torus_integral",
]
