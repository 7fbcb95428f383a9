"""Survival trees with parametric instability tests.

The library grows binary survival trees whose nodes are selected by
score-process instability tests on both the event-time and the
censoring-time distribution, with split points chosen by maximally
selected two-sample statistics.  A seeded simulation lab reproduces
the operating characteristics (size, power, structure recovery) of the
procedure.
"""

__version__ = "0.1.0"

from .datasets import (
    CATEGORICAL,
    CONTINUOUS,
    CovariateSpec,
    SurvivalDataset,
    SurvivalRecord,
)
from .errors import (
    DataError,
    DegenerateComponentError,
    EmptyDatasetError,
    EmptyGroupError,
    EmptyInputError,
    InvalidTimeError,
    MissingColumnError,
    MissingValueError,
    NonConvergenceError,
    ParseError,
    SchemaMismatchError,
    SingularInformationError,
    SpecParseError,
    SurvcartError,
    TooFewGroupsError,
    TruthMismatchError,
    UnknownVariableError,
)
from .families import (
    CENSOR,
    EVENT,
    FAMILY_NAMES,
    FittedModel,
    fit,
    get_family,
    loglik_and_aic,
    n_params,
    score_contributions,
)
from .stability import (
    CategoricalResult,
    ComponentTest,
    ContinuousResult,
    StabilityReport,
    categorical_test,
    continuous_test,
    fd_cdf,
    fd_sf,
    fd_quantile,
    hochberg,
    variable_test,
)
from .km import KMCurve, km_fit, km_median
from .splitting import (
    LogrankResult,
    SplitCandidate,
    best_split,
    candidate_splits,
    logrank,
)
from .tree import (
    SplitInfo,
    SurvTree,
    TreeConfig,
    TreeMetrics,
    TreeNode,
    TruthSpec,
    grow,
    predict_node,
    tree_metrics,
)
from .simlab import (
    DEFAULT_SUBGROUP_RATES,
    ExperimentSpec,
    PowerDesign,
    RNG_NAME,
    RejectionResult,
    SizeDesign,
    TreeRecoveryDesign,
    TreeRecoveryResult,
    censor_rate_for,
    format_rates,
    gen_exponential,
    parse_spec,
    replicate_rng,
    run_power,
    run_size,
    run_spec,
    run_tree_recovery,
)
from .dataio import (
    SchemaSpec,
    load_csv,
    load_tree,
    parse_variable_flags,
    render_text,
    save_tree,
    tree_to_document,
    document_to_tree,
)

__all__ = [
    "__version__",
    "CATEGORICAL",
    "CONTINUOUS",
    "CovariateSpec",
    "SurvivalDataset",
    "SurvivalRecord",
    "SurvcartError",
    "DataError",
    "DegenerateComponentError",
    "NonConvergenceError",
    "InvalidTimeError",
    "SchemaMismatchError",
    "TooFewGroupsError",
    "SingularInformationError",
    "EmptyGroupError",
    "EmptyInputError",
    "MissingValueError",
    "UnknownVariableError",
    "TruthMismatchError",
    "ParseError",
    "MissingColumnError",
    "EmptyDatasetError",
    "SpecParseError",
    "EVENT",
    "CENSOR",
    "FAMILY_NAMES",
    "FittedModel",
    "fit",
    "get_family",
    "n_params",
    "score_contributions",
    "loglik_and_aic",
    "fd_cdf",
    "fd_sf",
    "fd_quantile",
    "hochberg",
    "categorical_test",
    "continuous_test",
    "variable_test",
    "CategoricalResult",
    "ContinuousResult",
    "ComponentTest",
    "StabilityReport",
    "KMCurve",
    "km_fit",
    "km_median",
    "LogrankResult",
    "SplitCandidate",
    "logrank",
    "candidate_splits",
    "best_split",
    "TreeConfig",
    "SplitInfo",
    "TreeNode",
    "SurvTree",
    "grow",
    "predict_node",
    "TruthSpec",
    "TreeMetrics",
    "tree_metrics",
    "SizeDesign",
    "PowerDesign",
    "TreeRecoveryDesign",
    "TreeRecoveryResult",
    "RejectionResult",
    "DEFAULT_SUBGROUP_RATES",
    "RNG_NAME",
    "format_rates",
    "replicate_rng",
    "gen_exponential",
    "censor_rate_for",
    "run_size",
    "run_power",
    "run_tree_recovery",
    "ExperimentSpec",
    "parse_spec",
    "run_spec",
    "SchemaSpec",
    "parse_variable_flags",
    "load_csv",
    "save_tree",
    "load_tree",
    "tree_to_document",
    "document_to_tree",
    "render_text",
]
