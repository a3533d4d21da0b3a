"""Mode operators, quasi-energy dispersion and PT-phase classification for the
split-step walk with balanced gain and loss.

2x2 operators are plain ``complex128`` numpy arrays of shape (2, 2); spinors
are shape (2,).  Qubit basis order is (|0>, |1>), so sigma_3 = diag(1, -1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoExceptionalPoint

PHASE_TOL = 1e-9

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class ModelParams:
    """Walk parameters (angles in radians) plus the step budget.

    The lattice holds the even sites -2*steps..2*steps, i.e. ``2*steps + 1``
    sites, which is exactly what ``steps`` full steps can reach.
    """

    theta1: float
    theta2: float
    phi: float = 0.0
    gamma: float = 0.0
    steps: int = 0

    def __post_init__(self):
        for name in ("theta1", "theta2", "phi", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a non-negative integer, got {self.steps!r}")
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def n_sites(self) -> int:
        return 2 * self.steps + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-2 * self.steps, 2 * self.steps + 1, 2)

    @property
    def gain(self) -> float:
        """e^gamma."""
        return math.exp(self.gamma)

    def replace(self, **changes) -> "ModelParams":
        values = dict(theta1=self.theta1, theta2=self.theta2, phi=self.phi,
                      gamma=self.gamma, steps=self.steps)
        values.update(changes)
        return ModelParams(**values)


class Phase(enum.Enum):
    UNBROKEN = "Unbroken"
    EXCEPTIONAL_POINT = "ExceptionalPoint"
    BROKEN = "Broken"


@dataclass(frozen=True)
class PhaseClass:
    phase: Phase
    f_max: float
    k_star: tuple = field(default=())

    def __str__(self):
        return self.phase.value


def coin_op(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=complex)


def gain_loss_op(gamma: float) -> np.ndarray:
    return np.array([[math.exp(gamma), 0], [0, math.exp(-gamma)]], dtype=complex)


def phase_op(phi: float) -> np.ndarray:
    return np.diag([np.exp(1j * phi), np.exp(-1j * phi)])


def shift_mode_op(k: float) -> np.ndarray:
    return np.diag([np.exp(1j * k), np.exp(-1j * k)])


def mode_operator(params: ModelParams, k: float) -> np.ndarray:
    """U_k = S_k G(g) Phi C(theta2) S_k G(-g) Phi C(theta1); rightmost acts first."""
    s_k = shift_mode_op(k)
    ph = phase_op(params.phi)
    first = s_k @ gain_loss_op(-params.gamma) @ ph @ coin_op(params.theta1)
    second = s_k @ gain_loss_op(params.gamma) @ ph @ coin_op(params.theta2)
    return second @ first


def dispersion(params: ModelParams, k) -> np.ndarray | float:
    """cos(eps_k) = cos t1 cos t2 cos 2(k+phi) - sin t1 sin t2 cosh 2g.

    Equal to Tr(U_k)/2 since det U_k = 1.  Accepts scalar or array ``k``.
    """
    cc = math.cos(params.theta1) * math.cos(params.theta2)
    ss = math.sin(params.theta1) * math.sin(params.theta2)
    return cc * np.cos(2 * (np.asarray(k) + params.phi)) - ss * math.cosh(2 * params.gamma)


def quasi_energy(params: ModelParams, k: float) -> complex:
    """Principal arccos of the dispersion, continued to complex values for |f| > 1.

    Only |Im eps| is meaningful in the broken phase; the sign convention of the
    growing mode is whatever numpy's complex branch gives.
    """
    f = complex(dispersion(params, k))
    return complex(np.arccos(f))


def _extremes(params: ModelParams):
    cc = math.cos(params.theta1) * math.cos(params.theta2)
    ss = math.sin(params.theta1) * math.sin(params.theta2)
    return cc, ss * math.cosh(2 * params.gamma)


def _wrap_bz(k: float) -> float:
    # fold into [-pi/2, pi/2)
    return (k + math.pi / 2) % math.pi - math.pi / 2


def classify_phase(params: ModelParams, tol: float = PHASE_TOL) -> PhaseClass:
    """Classify by f_max = max_k |f(k)|, reached at cos 2(k+phi) = +-1."""
    a, b = _extremes(params)
    f_max = abs(a) + abs(b)
    if f_max < 1 - tol:
        return PhaseClass(Phase.UNBROKEN, f_max)
    phase = Phase.EXCEPTIONAL_POINT if abs(f_max - 1) <= tol else Phase.BROKEN

    k_star = set()
    if a != 0.0:
        # f(k) = a cos 2(k+phi) - b = +-1
        for target in (1.0, -1.0):
            v = (target + b) / a
            if abs(v) > 1 + tol:
                continue
            half = 0.5 * math.acos(max(-1.0, min(1.0, v)))
            for sgn in (1, -1):
                k_star.add(round(_wrap_bz(-params.phi + sgn * half), 12))
    return PhaseClass(phase, f_max, tuple(sorted(k_star)))


def exceptional_gamma(theta1: float, theta2: float) -> float:
    """Smallest gamma >= 0 at which the quasi-energy gap closes."""
    cc = abs(math.cos(theta1) * math.cos(theta2))
    ss = abs(math.sin(theta1) * math.sin(theta2))
    if ss < 1e-15:
        raise NoExceptionalPoint(
            f"sin(theta1) sin(theta2) = 0 for ({theta1}, {theta2}); gain-loss cannot close the gap")
    if cc + ss >= 1.0:
        raise NoExceptionalPoint(
            f"gap already closed at gamma=0 for ({theta1}, {theta2}) (f_max = {cc + ss})")
    return 0.5 * math.acosh((1.0 - cc) / ss)
