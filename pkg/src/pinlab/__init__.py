"""pinlab: a numerical laboratory for a random walk pinned to a second,
independently moving random walk.

The package computes collision partition functions along fixed disorder
paths (exact enumeration, field and renewal dynamic programs, continuous-time
uniformization), the annealed theory of the induced pair-walk pinning model
(Green functions, renewal laws, critical points), fractional-moment and
change-of-measure machinery for the quenched/annealed gap, thinned renewal
count asymptotics, and the companion views of the same free energy: the
lattice heat equation with a moving point catalyst and the size-biased
directed polymer.  The ``pinlab`` CLI drives the report pipelines.
"""
from .errors import (
    BudgetExceeded,
    ConfigError,
    InstanceTooLarge,
    NumericalFailure,
    PinlabError,
    RecurrentWalk,
)
from .rngstreams import stream
from .mcstats import McEstimate, replica_map, summarize
from .kernels import (
    LatticeConfig,
    KernelTable,
    build_kernel_table,
    char_triple,
    ct_kernel_point,
    ct_pair_return,
    green_pair,
    green_ct,
    tilted_greens,
    gap_slope,
)
from .disorder import (
    DisorderPath,
    TiltParams,
    sample_discrete,
    sample_tilted,
    sample_ct,
    rn_density_discrete,
    rn_density_ct,
    tilt_moment_discrete,
    tilt_moment_ct,
)
from .quenched import (
    ModelParams,
    PartitionValue,
    enumerate_partition,
    field_dp_partition,
    renewal_dp_partition,
    renewal_profile,
    ct_partition,
    ct_modified_partitions,
    FreeEnergyEstimate,
    free_energy_estimate,
    collision_mc,
)
from .annealed import (
    RenewalLaw,
    renewal_law_discrete,
    renewal_law_ct,
    annealed_partition,
    annealed_free_energy,
    critical_point,
    correlation_length,
    CorrelationLength,
)
from .renewal import (
    sample_renewal,
    exact_gf_dp,
    AppendixAParams,
    AppendixAReport,
    appendixA_scan,
    ParityLaws,
    parity_law,
    DominatingLaw,
    dominating_law,
)
from .fracmom import (
    FracMomConfig,
    partition_samples,
    frac_moment_mc,
    RhoHat,
    rho_hat,
    head_sum_bound,
    TiltedAnnealed,
    tilted_annealed_discrete,
    CtTiltedAnnealed,
    tilted_annealed_ct,
    ShrinkFactor,
    shrink_factor,
    HolderSplit,
    holder_split,
    FracMomReport,
    GapScanEntry,
    gap_scan,
)
from .pam_polymer import (
    Field,
    pam_solve,
    lyapunov_estimate,
    PolymerSpec,
    bernoulli_log_mgf,
    beta_hat,
    sample_polymer_field,
    polymer_partition,
    size_bias_check,
)
from .reports import RunManifest, emit, verify_manifest

__all__ = [
    "BudgetExceeded",
    "ConfigError",
    "InstanceTooLarge",
    "NumericalFailure",
    "PinlabError",
    "RecurrentWalk",
    "stream",
    "McEstimate",
    "replica_map",
    "summarize",
    "LatticeConfig",
    "KernelTable",
    "build_kernel_table",
    "char_triple",
    "ct_kernel_point",
    "ct_pair_return",
    "green_pair",
    "green_ct",
    "tilted_greens",
    "gap_slope",
    "DisorderPath",
    "TiltParams",
    "sample_discrete",
    "sample_tilted",
    "sample_ct",
    "rn_density_discrete",
    "rn_density_ct",
    "tilt_moment_discrete",
    "tilt_moment_ct",
    "ModelParams",
    "PartitionValue",
    "enumerate_partition",
    "field_dp_partition",
    "renewal_dp_partition",
    "renewal_profile",
    "ct_partition",
    "ct_modified_partitions",
    "FreeEnergyEstimate",
    "free_energy_estimate",
    "collision_mc",
    "RenewalLaw",
    "renewal_law_discrete",
    "renewal_law_ct",
    "annealed_partition",
    "annealed_free_energy",
    "critical_point",
    "correlation_length",
    "CorrelationLength",
    "sample_renewal",
    "exact_gf_dp",
    "AppendixAParams",
    "AppendixAReport",
    "appendixA_scan",
    "ParityLaws",
    "parity_law",
    "DominatingLaw",
    "dominating_law",
    "FracMomConfig",
    "partition_samples",
    "frac_moment_mc",
    "RhoHat",
    "rho_hat",
    "head_sum_bound",
    "TiltedAnnealed",
    "tilted_annealed_discrete",
    "CtTiltedAnnealed",
    "tilted_annealed_ct",
    "ShrinkFactor",
    "shrink_factor",
    "HolderSplit",
    "holder_split",
    "FracMomReport",
    "GapScanEntry",
    "gap_scan",
    "Field",
    "pam_solve",
    "lyapunov_estimate",
    "PolymerSpec",
    "bernoulli_log_mgf",
    "beta_hat",
    "sample_polymer_field",
    "polymer_partition",
    "size_bias_check",
    "RunManifest",
    "emit",
    "verify_manifest",
]
