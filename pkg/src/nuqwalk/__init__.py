"""Discrete-time non-unitary quantum walks with balanced gain and loss.

One walker or two exchange-symmetric walkers on a line; joint densities,
entanglement entropies and bipartition concurrences, with a dense reference
implementation for small lattices.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ModelParams,
    Phase,
    PhaseClass,
    classify_phase,
    exceptional_gamma,
    mode_operator,
    quasi_energy,
)
from .evolution import OneParticleField, evolve, init_localized, mode_evolve, overlap, step  # noqa: E402
from .twoparticle import Sym, TwoParticleRun, bipartition_spectra, joint_density, make_run  # noqa: E402

__all__ = [
    "ModelParams", "Phase", "PhaseClass", "classify_phase", "exceptional_gamma",
    "mode_operator", "quasi_energy", "OneParticleField", "evolve", "init_localized",
    "mode_evolve", "overlap", "step", "Sym", "TwoParticleRun", "bipartition_spectra",
    "joint_density", "make_run",
]
