"""Multi-agent sandbox simulation and hybrid bottom-up story generation."""

from .world import Address, EnvironmentTree, parse_address, parse_world
from .persona import PersonaScratch, SpatialMemory, parse_scratch
from .events import Event, EventStore, HashEmbedder
from .sim import SimConfig, Simulation
from .storyteller import StoryHyper, tell_story
from .evaluation import EvalDimension, EvalVerdict, PairingPlan, aggregate, plan_pairings

__all__ = [
    "Address",
    "EnvironmentTree",
    "parse_address",
    "parse_world",
    "PersonaScratch",
    "SpatialMemory",
    "parse_scratch",
    "Event",
    "EventStore",
    "HashEmbedder",
    "SimConfig",
    "Simulation",
    "StoryHyper",
    "tell_story",
    "EvalDimension",
    "EvalVerdict",
    "PairingPlan",
    "aggregate",
    "plan_pairings",
]

__version__ = "0.1.0"
