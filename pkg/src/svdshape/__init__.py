"""SVD shape analysis for landmark data under elliptical models.

Pipeline: landmark matrices -> whitening and Helmert centering -> SVD
shape coordinates -> zonal-polynomial shape densities (Gaussian and Kotz
generator families) -> maximum likelihood, information-criterion model
selection, and a likelihood ratio test of equal mean shape.
"""

from .errors import (
    CapacityError,
    ConfigError,
    ContractViolationError,
    DecompositionError,
    DegenerateFigureError,
    DomainError,
    EvaluationError,
    InvalidDimensionError,
    ParseError,
    ShapeAnalysisError,
    TruncationError,
)
from .polyalg import (
    MAX_ZONAL_DEGREE,
    Partition,
    SeriesControl,
    ZonalTable,
    enumerate_partitions,
    gen_pochhammer,
    zonal,
    zonal_at_identity,
    zonal_table,
)
from .shape import (
    LandmarkMatrix,
    ShapeDecomposition,
    ShapeSample,
    WhitenConfig,
    angles_from_w,
    helmert_submatrix,
    jacobian_j,
    svd_shape,
    shape_from_centered,
    w_from_angles,
    whiten,
)
from .generators import (
    KotzParams,
    NoncentralityScalars,
    central_radial_norm,
    kotz_h,
    kotz_h_deriv,
    radial_integral,
)
from .densities import (
    CentralModel,
    DensityValue,
    IsotropicModel,
    McConfig,
    ShapeDims,
    central_cone_density,
    central_disk_density,
    cone_density_isotropic,
    disk_density_gaussian_explicit,
    disk_density_isotropic,
    disk_density_kotz_explicit,
    sample_isotropic_figure,
    sample_shape_angles,
    sample_stiefel,
    stiefel_volume,
)
from .inference import (
    FAMILIES,
    EvidenceGrade,
    FitReport,
    LrtResult,
    ModelSpec,
    OptimizerConfig,
    bic_star,
    chisq_sf,
    fit_mle,
    grade_evidence,
    log_likelihood,
    lrt_equal_mean_shape,
)
from .io import DatasetFile, parse_dataset, parse_theta, write_synthetic_dataset

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConfigError",
    "ContractViolationError",
    "DecompositionError",
    "DegenerateFigureError",
    "DomainError",
    "EvaluationError",
    "InvalidDimensionError",
    "ParseError",
    "ShapeAnalysisError",
    "TruncationError",
    "MAX_ZONAL_DEGREE",
    "Partition",
    "SeriesControl",
    "ZonalTable",
    "enumerate_partitions",
    "gen_pochhammer",
    "zonal",
    "zonal_at_identity",
    "zonal_table",
    "LandmarkMatrix",
    "ShapeDecomposition",
    "ShapeSample",
    "WhitenConfig",
    "angles_from_w",
    "helmert_submatrix",
    "jacobian_j",
    "svd_shape",
    "shape_from_centered",
    "w_from_angles",
    "whiten",
    "KotzParams",
    "NoncentralityScalars",
    "central_radial_norm",
    "kotz_h",
    "kotz_h_deriv",
    "radial_integral",
    "CentralModel",
    "DensityValue",
    "IsotropicModel",
    "McConfig",
    "ShapeDims",
    "central_cone_density",
    "central_disk_density",
    "cone_density_isotropic",
    "disk_density_gaussian_explicit",
    "disk_density_isotropic",
    "disk_density_kotz_explicit",
    "sample_isotropic_figure",
    "sample_shape_angles",
    "sample_stiefel",
    "stiefel_volume",
    "FAMILIES",
    "EvidenceGrade",
    "FitReport",
    "LrtResult",
    "ModelSpec",
    "OptimizerConfig",
    "bic_star",
    "chisq_sf",
    "fit_mle",
    "grade_evidence",
    "log_likelihood",
    "lrt_equal_mean_shape",
    "DatasetFile",
    "parse_dataset",
    "parse_theta",
    "write_synthetic_dataset",
]
