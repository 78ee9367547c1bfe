"""Deterministic conveyor-belt visual inspection station simulator.

Subsystems: plant (motor, belt, sensor), controller (PID supervisor and
camera trigger), vision (thresholding, morphology, blobs), camera
(rendering, capture, recipes), scenarios (the three case studies),
metrics (pass/fail statistics and event log), service (simulation loop)
and server (HTTP + WebSocket telemetry).
"""

from .config import SimConfig, load_config
from .metrics import ConfusionCounts, RunSummary, sensitivity, specificity
from .scenarios import ScenarioConfig, recipe_for, spawn_stream
from .service import SimLoop, run

__version__ = "0.1.0"

__all__ = [
    "SimConfig", "load_config", "ConfusionCounts", "RunSummary",
    "sensitivity", "specificity", "ScenarioConfig", "recipe_for",
    "spawn_stream", "SimLoop", "run", "__version__",
]
