"""Nonlinear-Laplacian spectral algorithms for rank-one signal detection.

Subpackages follow the pipeline: sample an instance (``models``), deform it
with a nonlinearity (``nonlin``, ``laplacian``), examine its spectrum
(``spectra``), compare against the analytic phase-transition predictions
(``theory``), tune the nonlinearity (``optimize``), and reproduce the
experiments (``experiments``, CLI ``nl-spectra``).
"""

__version__ = "0.1.0"

from .models import (  # noqa: F401
    Eta,
    HALF_NORMAL,
    Instance,
    ModelSpec,
    POINT_MASS_1,
    SparsityMode,
    derive_seed,
    gaussian_planted_submatrix_model,
    instance_from_json,
    instance_to_json,
    load_instance,
    sample_goe,
    sample_observation,
    sample_planted_clique,
    sample_signal,
    save_instance,
    substream,
)
from .nonlin import (  # noqa: F401
    Constant,
    SigmaSpec,
    Step,
    Tabulated,
    Tanh,
    Zero,
    ZShaped,
    eval_sigma,
    shifted,
    sigma_edges,
    sigma_from_json,
    sigma_to_json,
    validate_sigma,
)
from .laplacian import (  # noqa: F401
    CompressionBasis,
    build_compressed,
    build_laplacian,
    compress_vector,
    ones_complement_basis,
)
from .spectra import (  # noqa: F401
    SpectralSummary,
    full_spectrum,
    max_row_statistic,
    overlap,
    secular_top_eigenvalue,
    summarize,
    top_eigenpair,
)
from .theory import (  # noqa: F401
    DEFAULT_QUADRATURE,
    DensityResult,
    QuadratureConfig,
    TheoryResult,
    beta_star,
    dense_theta_beta_star,
    free_conv_density,
    free_conv_edge,
    gauss_expect_inverse,
    predicted_lambda1,
    stieltjes_pushforward,
    theta_sigma,
)
