"""SIR epidemic model with a vaccination rate driven by a Preisach hysteresis operator."""
__version__ = "0.1.0"

from ._backend import NAME as backend
from .equilibria import EndemicEquilibrium, endemic_from_v0, endemic_on_branch, infection_free
from .preisach import (Density, MemoryStaircase, RelayBank, Thresholds, discretize,
                       gaussian_density, uniform_density, discrete_density)
from .simulate import AttractorClass, SolverSpec, Trajectory, classify, integrate, run
from .sir import ModelParams, SirState, r0, vector_field
