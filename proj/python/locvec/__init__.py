"""Location embeddings learned from mobility trajectories."""

from ._locvec import (
    ConfigError,
    Dendrogram,
    DomainError,
    FitError,
    InputError,
    LocvecError,
    LookupError,
    MatchingError,
    Model,
    NumericError,
    ParseError,
    SchemaError,
    TrainingError,
    cosine_distance,
    eigenvector_centrality,
    element_centric_similarity,
    fit_gravity,
    gini,
    great_circle_km,
    hierarchical_cluster,
    jsd,
    load_model,
    ppr,
    rank_by_axis,
    read_visits,
    run,
    skewness,
    spearman,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
