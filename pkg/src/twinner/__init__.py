"""Agent-based social digital twin.

Agents play roles in environments, a day-stepped engine drives a
school-dropout scenario over a synthetic population placed in real-style
building data, and every agent can be interrogated in natural language
through a grounded, prompt-templated conversation layer.  Control is
headless via the ``twinner`` CLI or interactive via the HTTP service.
"""

__version__ = "0.1.0"

from .engine import Engine
from .geo import GeoEnvironment, GeoPoint, haversine_distance
from .scenario import DropoutExperiment, ScenarioConfig, run_experiment

__all__ = [
    "Engine",
    "GeoEnvironment",
    "GeoPoint",
    "haversine_distance",
    "DropoutExperiment",
    "ScenarioConfig",
    "run_experiment",
    "__version__",
]
