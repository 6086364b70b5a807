"""Scattering theory for 2D quantum walks with a compactly supported coin perturbation."""
from .lattice import *  # noqa: F401,F403
from .linalg import *  # noqa: F401,F403
from .green import *  # noqa: F401,F403
from .eigen import *  # noqa: F401,F403
from .smatrix import *  # noqa: F401,F403
from .config import ExperimentConfig, load_config  # noqa: F401

__version__ = "0.1.0"
