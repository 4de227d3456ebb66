"""On-line fuzzy change-point detection for equidistant time series.

Growing windows are summarized by coefficients over a monic discrete
Chebyshev basis; segments close when a deviation or slope-sign-switch
threshold trips; closed segments are scored against user-written fuzzy
rules, clustered, or compared across runs.
"""

from .analysis_toolkit import (
    ClusterResult,
    LevelShift,
    NoiseBurst,
    OffsetResult,
    SensitivityReport,
    aggregate_sensitivity,
    change_point_offsets,
    generate_cycle,
    kmeans_points,
    kmeans_segments,
    sensitivity_bounds,
)
from .cli_io import (
    QueryResult,
    RunConfig,
    ScoredSegment,
    SkippedSegment,
    ingest,
    main,
    normalize,
    run_query,
)
from .errors import (
    FcpdError,
    InsufficientDataError,
    InvalidConfigError,
    InvalidDataError,
    MissingFeatureError,
)
from .features import (
    FeatureRecord,
    build_records,
    coefficient_feature,
    resolve_feature_name,
    size_features,
    variation_feature,
)
from .fuzzy_inference import (
    And,
    Atom,
    FisConfig,
    InferenceResult,
    LinguisticVariable,
    MembershipFunction,
    Or,
    Rule,
    gaussian,
    infer,
    mf_eval,
    s_shape,
    trapezoidal,
    triangular,
    z_shape,
)
from .query_dsl import (
    ArityError,
    DslSyntaxError,
    DslValueError,
    DuplicateNameError,
    QueryDocument,
    QueryError,
    UnknownReferenceError,
    parse,
    print_document,
    to_fis,
)
from .segmentation import (
    ClosedBy,
    Segment,
    Segmentation,
    SegmentationConfig,
    SegmentStream,
    TailPolicy,
    dpu_triggered,
    segment_series,
    sss_triggered,
)
from .shape_space import (
    MAX_DEGREE,
    MAX_WINDOW_LEN,
    OrthoBasis,
    ShapeVector,
    SlopeSignMode,
    WindowState,
    build_basis,
    evaluate,
    fit,
    squared_norm,
    validate_series,
    window_grow,
    window_init,
)

__version__ = "0.1.0"

__all__ = [
    "And",
    "ArityError",
    "Atom",
    "ClosedBy",
    "ClusterResult",
    "DslSyntaxError",
    "DslValueError",
    "DuplicateNameError",
    "FcpdError",
    "FeatureRecord",
    "FisConfig",
    "InferenceResult",
    "InsufficientDataError",
    "InvalidConfigError",
    "InvalidDataError",
    "LevelShift",
    "LinguisticVariable",
    "MAX_DEGREE",
    "MAX_WINDOW_LEN",
    "MembershipFunction",
    "MissingFeatureError",
    "NoiseBurst",
    "OffsetResult",
    "Or",
    "OrthoBasis",
    "QueryDocument",
    "QueryError",
    "QueryResult",
    "Rule",
    "RunConfig",
    "ScoredSegment",
    "Segment",
    "Segmentation",
    "SegmentationConfig",
    "SegmentStream",
    "SensitivityReport",
    "ShapeVector",
    "SkippedSegment",
    "SlopeSignMode",
    "TailPolicy",
    "UnknownReferenceError",
    "WindowState",
    "aggregate_sensitivity",
    "build_basis",
    "build_records",
    "change_point_offsets",
    "coefficient_feature",
    "dpu_triggered",
    "evaluate",
    "fit",
    "gaussian",
    "generate_cycle",
    "infer",
    "ingest",
    "kmeans_points",
    "kmeans_segments",
    "main",
    "mf_eval",
    "normalize",
    "parse",
    "print_document",
    "resolve_feature_name",
    "run_query",
    "s_shape",
    "segment_series",
    "sensitivity_bounds",
    "size_features",
    "squared_norm",
    "sss_triggered",
    "to_fis",
    "trapezoidal",
    "triangular",
    "validate_series",
    "variation_feature",
    "window_grow",
    "window_init",
    "z_shape",
]
