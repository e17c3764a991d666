"""Partitioned probabilistic neighbour selection for neighbourhood CF.

Private kNN-style recommendation where the k neighbours are drawn, with
exponential-mechanism weights, from the top ``beta`` size-k partitions of a
target's candidate list.  Includes kNN, nPNS and PNCF baselines, the
accuracy metric alpha, and a kNN-attack simulator.
"""

from ._backend import BACKEND
from .attack import AttackConfig, DisclosureReport, forge_profiles, run_attack
from .errors import ConfigurationError, ParseError, PPNSError, ValidationError
from .metrics import alpha_empirical, alpha_expected, verify_allocation_optimality
from .predict import EvaluationReport, Prediction, evaluate_mae, predict_rating, sample_targets
from .ratings import RatingMatrix, ingest_csv, ingest_movielens, transpose
from .selection import (
    AllocationVector,
    NeighbourSet,
    SelectionPolicy,
    ppns_allocation,
    select_knn,
    select_neighbours,
    select_npns,
    select_pncf,
    select_ppns,
)
from .similarity import (
    SimilarityRow,
    cosine_similarity,
    recommendation_sensitivity,
    selection_weights,
    similarity_row,
)
from .wallenius import (
    Population,
    exact_inclusion_probabilities,
    wallenius_mean,
    weighted_sample_without_replacement,
)

__version__ = "0.1.0"
