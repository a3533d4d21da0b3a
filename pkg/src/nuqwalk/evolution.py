"""Position-space and mode-space evolution of a single walker.

Position space keeps only even sites.  Between the two half-steps of a split
step the walker sits on odd sites; that staging buffer lives inside ``step``
and is never returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ModelParams, coin_op, gain_loss_op, mode_operator, phase_op
from .errors import LatticeOverflow, SizeMismatch

# Rescale window for raw amplitudes; outside it the field is renormalized and
# the factor moved into ``log_scale``.
RESCALE_LOW = 1e-100
RESCALE_HIGH = 1e100


@dataclass(frozen=True)
class OneParticleField:
    """Amplitudes psi[n, s] on even sites, times ``exp(log_scale)``.

    ``amplitudes`` has shape (2T+1, 2); row j is site n = 2(j - T).
    """

    amplitudes: np.ndarray
    origin_qubit: int
    elapsed_steps: int = 0
    log_scale: float = 0.0

    @property
    def capacity(self) -> int:
        return (self.amplitudes.shape[0] - 1) // 2

    @property
    def sites(self) -> np.ndarray:
        T = self.capacity
        return np.arange(-2 * T, 2 * T + 1, 2)

    def raw(self) -> np.ndarray:
        """Amplitudes with the tracked scale folded back in."""
        return self.amplitudes * math.exp(self.log_scale)

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real) * math.exp(2 * self.log_scale)

    def scaled(self, alpha: complex) -> "OneParticleField":
        return replace(self, amplitudes=alpha * self.amplitudes)


def init_localized(q: int, T: int) -> OneParticleField:
    if q not in (0, 1):
        raise ValueError(f"qubit value must be 0 or 1, got {q!r}")
    amps = np.zeros((2 * T + 1, 2), dtype=complex)
    amps[T, q] = 1.0
    return OneParticleField(amps, origin_qubit=q)


def _half_step_ops(params: ModelParams):
    ph = phase_op(params.phi)
    first = gain_loss_op(-params.gamma) @ ph @ coin_op(params.theta1)
    second = gain_loss_op(params.gamma) @ ph @ coin_op(params.theta2)
    # rows hold spinors, so apply M as v @ M.T
    return first.T, second.T


def rescale(field: OneParticleField) -> OneParticleField:
    """Renormalize to max |amplitude| = 1, moving the factor into ``log_scale``."""
    peak = float(np.max(np.abs(field.amplitudes)))
    if peak == 0.0:
        return field
    return replace(field, amplitudes=field.amplitudes / peak,
                   log_scale=field.log_scale + math.log(peak))


def step(field: OneParticleField, params: ModelParams) -> OneParticleField:
    """One split step: C1, Phi, G(-g), shift, C2, Phi, G(g), shift."""
    N = field.amplitudes.shape[0]
    if field.elapsed_steps >= field.capacity:
        raise LatticeOverflow(
            f"field already at {field.elapsed_steps} steps on a {field.capacity}-step lattice")
    first, second = _half_step_ops(params)

    a = field.amplitudes @ first
    # odd site index i holds n = 2i - 2T - 1; s=0 moves n -> n-1, s=1 moves n -> n+1
    odd = np.zeros((N + 1, 2), dtype=complex)
    odd[:N, 0] = a[:, 0]
    odd[1:, 1] = a[:, 1]

    b = odd @ second
    out = np.empty((N, 2), dtype=complex)
    out[:, 0] = b[1:, 0]
    out[:, 1] = b[:N, 1]

    new = replace(field, amplitudes=out, elapsed_steps=field.elapsed_steps + 1)
    peak = float(np.max(np.abs(out)))
    if peak > 0 and not (RESCALE_LOW <= peak <= RESCALE_HIGH):
        new = rescale(new)
    return new


def evolve_field(field: OneParticleField, params: ModelParams, t: int) -> OneParticleField:
    for _ in range(t):
        field = step(field, params)
    return field


def evolve(q: int, params: ModelParams, t: int) -> OneParticleField:
    if t > params.steps:
        raise LatticeOverflow(f"t={t} exceeds the {params.steps}-step lattice")
    return evolve_field(init_localized(q, params.steps), params, t)


def trajectory(q: int, params: ModelParams, t_max: int | None = None):
    """Yield the field at t = 0, 1, ..., t_max (default ``params.steps``)."""
    t_max = params.steps if t_max is None else t_max
    field = init_localized(q, params.steps)
    yield field
    for _ in range(t_max):
        field = step(field, params)
        yield field


def overlap(a: OneParticleField, b: OneParticleField) -> complex:
    """<a|b> over sites and qubit states."""
    if a.amplitudes.shape != b.amplitudes.shape:
        raise SizeMismatch(f"{a.amplitudes.shape} vs {b.amplitudes.shape}")
    return complex(np.vdot(a.amplitudes, b.amplitudes)) * math.exp(a.log_scale + b.log_scale)


# -- mode space ---------------------------------------------------------------

def brillouin_zone(n_sites: int) -> np.ndarray:
    """Mode grid for an even-site ring of ``n_sites`` sites.

    Modes satisfy exp(2ikN) = 1 and sit symmetrically inside [-pi/2, pi/2).
    """
    return math.pi * (np.arange(n_sites) - (n_sites - 1) / 2) / n_sites


def mode_evolve(params: ModelParams, k: float, q: int, t: int) -> np.ndarray:
    """(U_k)^t |q> by repeated multiplication (U_k may be defective)."""
    u = mode_operator(params, k)
    spinor = np.zeros(2, dtype=complex)
    spinor[q] = 1.0
    for _ in range(t):
        spinor = u @ spinor
    return spinor


def mode_fields(params: ModelParams, q: int, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Evolved spinors for every mode of the lattice's Brillouin zone.

    Returns ``(ks, spinors)`` with spinors of shape (N, 2).
    """
    ks = brillouin_zone(params.n_sites)
    return ks, np.array([mode_evolve(params, k, q, t) for k in ks])


def modes_to_position(ks: np.ndarray, spinors: np.ndarray, sites: np.ndarray) -> np.ndarray:
    """psi[n] = (1/N) sum_k exp(ikn) psi_k."""
    phases = np.exp(1j * np.outer(sites, ks))
    return phases @ spinors / len(ks)
