"""Random Hierarchy Model experiments: grammars, exact denoising, correlation
statistics and the hierarchical synonym-clustering learner."""

from ._core import (
    ClusterModel,
    Grammar,
    GrammarParams,
    RhmError,
    __version__,
    accuracy_curve,
    bp_marginals,
    corrupt,
    derive_seed,
    enumeration_count,
    learn_grammar,
    max_valid_level,
    one_step,
    population_token_token_correlation,
    run,
    sample,
    theory,
    token_token_correlation,
    token_tuple_correlation,
    tree_distance,
)

__all__ = [
    "ClusterModel",
    "Grammar",
    "GrammarParams",
    "RhmError",
    "__version__",
    "accuracy_curve",
    "bp_marginals",
    "corrupt",
    "derive_seed",
    "enumeration_count",
    "learn_grammar",
    "max_valid_level",
    "one_step",
    "population_token_token_correlation",
    "run",
    "sample",
    "theory",
    "token_token_correlation",
    "token_tuple_correlation",
    "tree_distance",
]
