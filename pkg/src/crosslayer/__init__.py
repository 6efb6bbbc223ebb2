"""Two-layer network simulator: influence seeding on a friendship graph,
message-cost accounting on the underlying ad-hoc (hop-count) layer, and a
distributed heuristic that delegates nodes to agents to cut that cost."""

from .agents import (AgentAssignment, AsmtcParams, ControlCostModel,
                     RmoReport, asmtc, brute_force_asp, das, mor, objective,
                     rmo_delta)
from .diffusion import (OverheadLedger, TrialOutcome, TrialPool,
                        estimate_spread, ic_trial, trial_overhead)
from .errors import (CrosslayerError, DomainError, InternalError,
                     InvalidLedgerError, ParseError)
from .experiments import ExperimentConfig, Instance, build_instance
from .graphs import (AdhocGraph, DistanceOracle, LayerMapping, SocialGraph,
                     dump_adhoc, dump_social, hop_distance, load_adhoc,
                     load_social, validate_layers)
from .netgen import (GenParams, ProbabilityModel, assign_probabilities,
                     generate_manet, random_mapping, social_from_undirected)
from .seeding import (DeploymentCostModel, SeedSelection, celf_select,
                      deployment_overhead, deployment_profile, greedy_select)

__version__ = "0.1.0"
