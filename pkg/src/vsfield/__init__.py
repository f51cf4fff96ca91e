"""V/S test of long-range dependence for stationary random fields.

The hot lattice kernels come from a compiled extension when it was built and
from numpy otherwise; ``BACKEND`` names the one in use.  Set
``VSFIELD_BACKEND=python`` before import to force the numpy path.
"""
from ._backend import NAME as BACKEND
from .exceptions import (
    CellParseError,
    ConfigError,
    DegenerateFieldError,
    DimensionMismatchError,
    FieldFormatError,
    HeaderError,
    InvalidFieldError,
    LagOutOfRangeError,
    ModelSpecError,
    NullTableError,
    VSFieldError,
)
from .field import (
    Field,
    PrefixSum,
    RngSpec,
    center,
    difference,
    field_mean,
    gaussian_noise_field,
    prefix_sum,
    read_field,
    write_field,
)
from .statistic import (
    VsConfig,
    VsResult,
    bartlett_weight,
    default_q,
    empirical_cov,
    long_run_variance,
    vs_statistic,
    vs_statistic_bruteforce,
)
from .nulldist import (
    NullTable,
    SheetGrid,
    brownian_sheet,
    build_null_table,
    cached_null_table,
    expected_u,
    kolmogorov_cdf,
    p_value,
    quantile,
    read_null_table,
    u1_cdf,
    u_d_realization,
    write_null_table,
)
from .simulators import (
    IsotropicLM,
    ModelSpec,
    OneDirectionLM,
    ProductLM,
    SeparableAR,
    SpectralSample,
    WhiteNoise,
    gamma_of,
    parse_model,
    sample_spectral_point,
    simulate,
    simulate_ar,
    simulate_spectral,
    spectral_density,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    power_curve,
    qvalue_sweep,
    run_experiment,
)

__version__ = "0.1.0"
