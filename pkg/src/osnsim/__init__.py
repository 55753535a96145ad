"""Monte-Carlo simulator for transport load in spatial social networks."""

from .complexity import SessionLoad, SteinerRatioBound, session_load, total_transport_complexity
from .experiments import ScalingFitReport, SweepPlan, fit_scaling_exponent, run_sweep, run_trial
from .model import ModelConfig, SocialGraph, TorusDeployment, form_social_graph, sample_deployment
from .sessions import DisseminationSession, SessionSet, gen_broadcast_sessions, gen_multicast_sessions
from .tables import AsymptoticOrder, predict

__version__ = "0.1.0"

__all__ = [
    "AsymptoticOrder",
    "DisseminationSession",
    "ModelConfig",
    "ScalingFitReport",
    "SessionLoad",
    "SessionSet",
    "SocialGraph",
    "SteinerRatioBound",
    "SweepPlan",
    "TorusDeployment",
    "fit_scaling_exponent",
    "form_social_graph",
    "gen_broadcast_sessions",
    "gen_multicast_sessions",
    "predict",
    "run_sweep",
    "run_trial",
    "sample_deployment",
    "session_load",
    "total_transport_complexity",
]
