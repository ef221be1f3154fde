"""Random-walk embeddings of the k-simplices of a simplicial complex."""

__version__ = "0.1.0"

from .complex import (
    Simplex,
    SimplicialComplex,
    clique_complex,
    lower_neighbors,
    make_simplex,
    upper_neighbors,
)
from .embed import EmbeddingModel, Hyperparams, train
from .errors import (
    ConfigError,
    DegenerateCorpus,
    DuplicateVertex,
    EmptyDimension,
    InvalidDimension,
    LengthMismatch,
    Simplex2VecError,
    StageError,
    TooFewPoints,
    UnknownVertex,
)
from .evaluation import NOISE, dbscan, kmeans, pca_project, rand_index
from .pipeline import ExperimentGrid, RunConfig, run_grid, run_pipeline
from .sbm import class_labels, sample_sbm, simplex_class
from .walks import WalkCorpus, WalkMode, generate_corpus, simplicial_walk, transition_matrix

__all__ = [
    "__version__",
    "Simplex",
    "SimplicialComplex",
    "clique_complex",
    "lower_neighbors",
    "make_simplex",
    "upper_neighbors",
    "EmbeddingModel",
    "Hyperparams",
    "train",
    "ConfigError",
    "DegenerateCorpus",
    "DuplicateVertex",
    "EmptyDimension",
    "InvalidDimension",
    "LengthMismatch",
    "Simplex2VecError",
    "StageError",
    "TooFewPoints",
    "UnknownVertex",
    "NOISE",
    "dbscan",
    "kmeans",
    "pca_project",
    "rand_index",
    "ExperimentGrid",
    "RunConfig",
    "run_grid",
    "run_pipeline",
    "class_labels",
    "sample_sbm",
    "simplex_class",
    "WalkCorpus",
    "WalkMode",
    "generate_corpus",
    "simplicial_walk",
    "transition_matrix",
]
