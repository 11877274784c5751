"""Preisach hysteresis operator: relays, staircase memory, densities, loop geometry."""
from .density import Density, discrete_density, gaussian_density, uniform_density
from .loops import LoopRatio, discretize, lipschitz_K, loop_ratio_L, loop_width
from .relay import OFF, ON, RelayBank, Thresholds, relay_step
from .staircase import (Branch, MemoryStaircase, branch_eval, preisach_output,
                        staircase_init, staircase_update, state_distance)

__all__ = [
    "Density", "gaussian_density", "uniform_density", "discrete_density",
    "LoopRatio", "discretize", "lipschitz_K", "loop_ratio_L", "loop_width",
    "OFF", "ON", "RelayBank", "Thresholds", "relay_step",
    "Branch", "MemoryStaircase", "branch_eval", "preisach_output",
    "staircase_init", "staircase_update", "state_distance",
]
