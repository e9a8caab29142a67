"""Disaster response network assessment over fixed-list survey data."""

from .errors import DRNError, InputError, InsufficientEvidence, PreconditionError, SurveyFormatError
from .graph import UNREACHABLE, EgoNetwork, Graph, NodeId, ego_network, geodesic_distances, org_node, respondent_node
from .measures import Profile, compute_profiles
from .subgroup import co_membership, maximal_cliques, n_cliques, predict_tier, select_clusters
from .survey import Codebook, SurveyRecord, default_codebook, parse_survey_csv
from .synthetic import GeneratorConfig, generate_synthetic

__version__ = "0.1.0"
