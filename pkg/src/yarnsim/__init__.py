"""Discrete-event simulator for YARN capacity/fair scheduling-policy combinations."""

from .engine import ClusterConfig, Simulator, run
from .policies import IntraPolicy, PlacementPolicy, SpcKind, schedule_pass
from .queues import ScenarioConfig, ScenarioKind, build_hierarchy
from .resources import ConfigError, ResourceVector, dominant_share, fits
from .workload import AppSpec, AppType, DurationModel, WorkloadSpec, generate_workload

__all__ = [
    "AppSpec", "AppType", "ClusterConfig", "ConfigError", "DurationModel", "IntraPolicy",
    "PlacementPolicy", "ResourceVector", "ScenarioConfig", "ScenarioKind", "Simulator",
    "SpcKind", "WorkloadSpec", "build_hierarchy", "dominant_share", "fits",
    "generate_workload", "run", "schedule_pass",
]
