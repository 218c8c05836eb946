"""Heterogeneous EO satellite cluster simulator + multi-agent RL engine."""

__version__ = "0.1.0"

from .orbit import OrbitElements, GeoPoint, AccessWindow, EclipseState
from .resources import SatelliteSpec, ResourceState, Payload, ActionClass
from .world import AreaOfInterest, GroundStation, WorldData
from .scenario import ScenarioConfig, scenario_preset, load_scenario
from .cluster import ClusterLayout, cluster_preset

__all__ = [
    "OrbitElements", "GeoPoint", "AccessWindow", "EclipseState",
    "SatelliteSpec", "ResourceState", "Payload", "ActionClass",
    "AreaOfInterest", "GroundStation", "WorldData",
    "ScenarioConfig", "scenario_preset", "load_scenario",
    "ClusterLayout", "cluster_preset",
]
