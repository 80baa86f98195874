"""Wasserstein-barycenter image morphing with manifold priors.

The package computes entropic optimal transport between gray images seen
as probability measures on a pixel grid, Wasserstein barycenters of such
measures, and barycenters constrained to a prior manifold through an
ADMM splitting.  On top sit morphing sequences between image pairs plus
quality metrics for them, a learned sparse-coding prior, and file
formats for images, dictionaries, and metric reports.
"""

from .admm import AdmmConfig, AdmmState, constrained_barycenter, resume
from .barycenter import (
    BarycenterWeights,
    ProxTerm,
    entropic_barycenter,
    prox_barycenter_step,
)
from .errors import (
    AllZeroInput,
    BadMagic,
    ConfigError,
    EmptyInputs,
    IndexOutOfRange,
    InconsistentState,
    InstanceTooLarge,
    IoError,
    NegativeInput,
    NotConverged,
    OtmorphError,
    ProcessUnavailable,
    ProtocolViolation,
    ShapeMismatch,
    SparsityOutOfRange,
    StepNotPositive,
    Timeout,
    TooFewSamples,
    TruncatedFile,
)
from .io import (
    IdxDataset,
    RunConfig,
    format_metrics,
    load_dictionary,
    load_idx,
    load_raw,
    parse_metrics,
    quantize_pgm,
    read_pgm,
    save_dictionary,
    write_idx,
    write_pgm,
)
from .kernels import GibbsKernel
from .measures import (
    GridMeasure,
    GridShape,
    GroundCost,
    axis_coordinates,
    cost_between,
    normalize_to_measure,
)
from .morph import (
    MorphSequence,
    TransitionReport,
    evaluate,
    morph,
    morph4,
    morph_alphas,
)
from .priors import (
    ExternalProjector,
    IdentityProjector,
    Projector,
    SparseProjector,
    resimplex,
)
from .sparse import Dictionary, SparseCode, learn_dictionary, omp, project_sparse
from .transport import (
    DualPotentials,
    TransportResult,
    barycentric_displacement,
    exact_lp_transport,
    sinkhorn,
)

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "AdmmState",
    "AllZeroInput",
    "BadMagic",
    "BarycenterWeights",
    "ConfigError",
    "Dictionary",
    "DualPotentials",
    "EmptyInputs",
    "ExternalProjector",
    "GibbsKernel",
    "GridMeasure",
    "GridShape",
    "GroundCost",
    "IdentityProjector",
    "IdxDataset",
    "InconsistentState",
    "IndexOutOfRange",
    "InstanceTooLarge",
    "IoError",
    "MorphSequence",
    "NegativeInput",
    "NotConverged",
    "OtmorphError",
    "ProcessUnavailable",
    "ProtocolViolation",
    "Projector",
    "ProxTerm",
    "RunConfig",
    "ShapeMismatch",
    "SparseCode",
    "SparseProjector",
    "SparsityOutOfRange",
    "StepNotPositive",
    "Timeout",
    "TooFewSamples",
    "TransitionReport",
    "TransportResult",
    "TruncatedFile",
    "axis_coordinates",
    "barycentric_displacement",
    "constrained_barycenter",
    "cost_between",
    "entropic_barycenter",
    "evaluate",
    "exact_lp_transport",
    "format_metrics",
    "learn_dictionary",
    "load_dictionary",
    "load_idx",
    "load_raw",
    "morph",
    "morph4",
    "morph_alphas",
    "normalize_to_measure",
    "omp",
    "parse_metrics",
    "project_sparse",
    "prox_barycenter_step",
    "quantize_pgm",
    "read_pgm",
    "resimplex",
    "resume",
    "save_dictionary",
    "sinkhorn",
    "write_idx",
    "write_pgm",
]
