"""Gradient-free Nash equilibrium seeking for N-coalition games."""

__version__ = "0.1.0"

from .errors import CoalitionNEError  # noqa: E402
from .game import (  # noqa: E402
    BoxConstraint,
    CostOracle,
    GameSpec,
    PlayerSpec,
    assemble_game,
    coalition_cost,
    project_box,
)
from .graph import CoalitionGraph, build_complete, build_ring, validate_graph  # noqa: E402
from .seeker import AlgorithmParams, SeekerState, init, run, step  # noqa: E402
from .smoothing import SmoothingSchedule, oracle_pi  # noqa: E402

__all__ = [
    "AlgorithmParams",
    "BoxConstraint",
    "CoalitionGraph",
    "CoalitionNEError",
    "CostOracle",
    "GameSpec",
    "PlayerSpec",
    "SeekerState",
    "SmoothingSchedule",
    "assemble_game",
    "build_complete",
    "build_ring",
    "coalition_cost",
    "init",
    "oracle_pi",
    "project_box",
    "run",
    "step",
    "validate_graph",
]
