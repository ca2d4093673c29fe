"""Z2-symmetric hybrid automaton circuits, their classical particle
models, and the scaling analysis that ties them together."""

__version__ = "0.1.0"

from .rng import Stream, derive_seed
from .tableau import GateKind, GateSpec, PauliString, Tableau, tableau_init_plus
from .oracle import PhaseVector, RegionPhaseTracker, dense_init

__all__ = [
    "Stream",
    "derive_seed",
    "GateKind",
    "GateSpec",
    "PauliString",
    "Tableau",
    "tableau_init_plus",
    "PhaseVector",
    "RegionPhaseTracker",
    "dense_init",
    "__version__",
]
