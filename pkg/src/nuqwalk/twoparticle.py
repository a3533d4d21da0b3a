"""Two-particle states built from a pair of one-particle fields.

The initial state (|0,0>|0,1> +- |0,1>|0,0>)/sqrt(2) evolves under U x U, so
the state at time t is (Psi0 x Psi1 +- Psi1 x Psi0)/sqrt(2) with Psi_q the
one-particle field evolved from |0,q>.  Every observable here is assembled
from the two fields and their overlaps; the (2N)^2 state is never formed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ModelParams
from .errors import InvalidSpectrum, ZeroNorm
from .evolution import OneParticleField, evolve, init_localized, step

EIG_CLIP = 1e-10
# raw traces smaller than this fraction of <Psi0|Psi0><Psi1|Psi1> are noise
ZERO_NORM_REL = 1e-13


class Sym(enum.IntEnum):
    PLUS = 1
    MINUS = -1

    @property
    def label(self) -> str:
        return "plus" if self is Sym.PLUS else "minus"


@dataclass(frozen=True)
class TwoParticleRun:
    psi0: OneParticleField
    psi1: OneParticleField
    sym: Sym
    params: ModelParams
    t: int

    def __post_init__(self):
        object.__setattr__(self, "sym", Sym(self.sym))
        if not (self.psi0.elapsed_steps == self.psi1.elapsed_steps == self.t):
            raise ValueError("both fields must have elapsed exactly t steps")
        if self.psi0.origin_qubit != 0 or self.psi1.origin_qubit != 1:
            raise ValueError("psi0 must start in |0> and psi1 in |1>")

    @property
    def sites(self) -> np.ndarray:
        return self.psi0.sites

    @property
    def log_scale(self) -> float:
        """Scale carried by every term of the two-particle density operator."""
        return 2.0 * (self.psi0.log_scale + self.psi1.log_scale)


def make_run(params: ModelParams, sym: int, t: int) -> TwoParticleRun:
    return TwoParticleRun(evolve(0, params, t), evolve(1, params, t), Sym(sym), params, t)


def iter_runs(params: ModelParams, syms=(Sym.PLUS, Sym.MINUS), t_max: int | None = None):
    """Yield ``{sym: run}`` for t = 0..t_max, evolving each field once."""
    t_max = params.steps if t_max is None else t_max
    f0 = init_localized(0, params.steps)
    f1 = init_localized(1, params.steps)
    for t in range(t_max + 1):
        if t:
            f0, f1 = step(f0, params), step(f1, params)
        yield {Sym(s): TwoParticleRun(f0, f1, Sym(s), params, t) for s in syms}


def gram(run: TwoParticleRun) -> np.ndarray:
    """G[i, j] = <Psi_i|Psi_j> on stored (unscaled) amplitudes."""
    x = np.stack([run.psi0.amplitudes.ravel(), run.psi1.amplitudes.ravel()], axis=1)
    return x.conj().T @ x


def _coefficients(run: TwoParticleRun, g: np.ndarray) -> np.ndarray:
    # rho_S = sum_ij A_ij |Psi_i><Psi_j|
    s = int(run.sym)
    return 0.5 * np.array([[g[1, 1], s * g[0, 1]],
                           [s * g[1, 0], g[0, 0]]])


def _stored_trace(run: TwoParticleRun, g: np.ndarray | None = None) -> float:
    g = gram(run) if g is None else g
    a, b, c = g[0, 0].real, g[1, 1].real, g[0, 1]
    tr = a * b + int(run.sym) * abs(c) ** 2
    if not math.isfinite(tr) or tr <= ZERO_NORM_REL * a * b or a * b == 0.0:
        raise ZeroNorm(f"raw trace {tr!r} at t={run.t} (sym={run.sym.label})")
    return tr


def raw_trace(run: TwoParticleRun) -> float:
    """Tr rho for the unnormalized two-particle state: ab +- |c|^2."""
    return _stored_trace(run) * math.exp(run.log_scale)


def log_raw_trace(run: TwoParticleRun) -> float:
    return math.log(_stored_trace(run)) + run.log_scale


def clip_spectrum(values) -> np.ndarray:
    """Zero eigenvalues in [-EIG_CLIP, 0); anything more negative is a bug."""
    values = np.asarray(values, dtype=float)
    if values.size and values.min() < -EIG_CLIP:
        raise InvalidSpectrum(f"eigenvalue {values.min():.3e} below -{EIG_CLIP}")
    return np.where(values < 0, 0.0, values)


def hermitian_spectrum(rho: np.ndarray) -> np.ndarray:
    """Clipped eigenvalues, descending."""
    return clip_spectrum(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))[::-1]


# -- spatial ------------------------------------------------------------------

@dataclass(frozen=True)
class JointDensity:
    grid: np.ndarray
    sites: np.ndarray
    sym: Sym
    norm_used: float


def _site_weights(run: TwoParticleRun):
    a0 = run.psi0.amplitudes
    a1 = run.psi1.amplitudes
    w0 = np.sum(np.abs(a0) ** 2, axis=1)
    w1 = np.sum(np.abs(a1) ** 2, axis=1)
    x = np.sum(a1.conj() * a0, axis=1)  # <Psi1_n|Psi0_n>
    return w0, w1, x


def joint_density(run: TwoParticleRun) -> JointDensity:
    """P(n1, n2) from sum_s |Psi0 Psi1 +- Psi1 Psi0|^2 / 2, normalized."""
    w0, w1, x = _site_weights(run)
    grid = 0.5 * (np.outer(w0, w1) + np.outer(w1, w0)) \
        + int(run.sym) * np.real(np.outer(x, x.conj()))
    total = float(grid.sum())
    _stored_trace(run)
    grid = grid / total
    if grid.min() < -EIG_CLIP:
        raise InvalidSpectrum(f"negative joint probability {grid.min():.3e}")
    grid = np.where(grid < 0, 0.0, grid)
    return JointDensity(grid, run.sites, run.sym, total * math.exp(run.log_scale))


def product_joint_density(a: OneParticleField, b: OneParticleField) -> np.ndarray:
    """Joint density of the unsymmetrized product state a x b."""
    wa = np.sum(np.abs(a.amplitudes) ** 2, axis=1)
    wb = np.sum(np.abs(b.amplitudes) ** 2, axis=1)
    grid = np.outer(wa, wb)
    return grid / grid.sum()


def marginal_density(jd: JointDensity) -> np.ndarray:
    return jd.grid.sum(axis=1)


# -- internal (qubit) degrees of freedom --------------------------------------

def qubit_correlators(run: TwoParticleRun) -> np.ndarray:
    """M[q, q'] = sum_n |Psi_q(n)><Psi_q'(n)| as an array of shape (2, 2, 2, 2).

    Uses stored amplitudes; with rescaling active the true correlators differ
    by exp(log_scale_q + log_scale_q').
    """
    fields = (run.psi0.amplitudes, run.psi1.amplitudes)
    m = np.empty((2, 2, 2, 2), dtype=complex)
    for q in range(2):
        for qq in range(2):
            m[q, qq] = fields[q].T @ fields[qq].conj()
    return m


def rho_Q(run: TwoParticleRun) -> np.ndarray:
    """Normalized two-qubit operator sum (+-1)^(q xor q') M^{qq'} x M^{~q ~q'}."""
    m = qubit_correlators(run)
    s = int(run.sym)
    rho = np.zeros((4, 4), dtype=complex)
    for q in range(2):
        for qq in range(2):
            rho += s ** (q ^ qq) * np.kron(m[q, qq], m[1 - q, 1 - qq])
    tr = np.trace(rho).real
    if not math.isfinite(tr) or tr <= 0:
        raise ZeroNorm(f"two-qubit trace {tr!r} at t={run.t}")
    rho /= tr
    return 0.5 * (rho + rho.conj().T)


def rho_q(rho_Q_: np.ndarray) -> np.ndarray:
    """Trace out the second qubit (equal to tracing the first, by exchange symmetry)."""
    return np.einsum("ijkj->ik", rho_Q_.reshape(2, 2, 2, 2))


def rho_q_other(rho_Q_: np.ndarray) -> np.ndarray:
    return np.einsum("jijk->ik", rho_Q_.reshape(2, 2, 2, 2))


def _psd_sqrt(g: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (g + g.conj().T))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def rho_S_spectrum(run: TwoParticleRun) -> np.ndarray:
    """Nonzero spectrum of the one-particle reduced operator (rank <= 2).

    rho_S = X A X^dag with X = [Psi0, Psi1]; its nonzero eigenvalues are those
    of G^1/2 A G^1/2 where G = X^dag X is the Gram matrix.
    """
    g = gram(run)
    tr = _stored_trace(run, g)
    root = _psd_sqrt(g)
    h = root @ _coefficients(run, g) @ root
    return hermitian_spectrum(h / tr)


def rho_p_purity(run: TwoParticleRun) -> float:
    """Tr(rho_p^2) for the single-position operator, via a 4x4 Gram matrix."""
    g = gram(run)
    tr = _stored_trace(run, g)
    # columns (field i, qubit s) -> index 2i + s
    x = np.concatenate([run.psi0.amplitudes, run.psi1.amplitudes], axis=1)
    k = x.conj().T @ x
    b = np.kron(_coefficients(run, g), np.eye(2))
    bk = b @ k / tr
    return float(np.trace(bk @ bk).real)


@dataclass(frozen=True)
class BipartitionSpectra:
    t: int
    sym: Sym
    Q: np.ndarray
    q: np.ndarray
    S: np.ndarray
    p_purity: float
    raw_trace: float
    log_raw_trace: float

    @property
    def purities(self) -> dict:
        return {
            "Q": float(np.sum(self.Q ** 2)),
            "q": float(np.sum(self.q ** 2)),
            "S": float(np.sum(self.S ** 2)),
            "p": float(self.p_purity),
        }


def bipartition_spectra(run: TwoParticleRun) -> BipartitionSpectra:
    rq = rho_Q(run)
    lg = log_raw_trace(run)
    return BipartitionSpectra(
        t=run.t,
        sym=run.sym,
        Q=hermitian_spectrum(rq),
        q=hermitian_spectrum(rho_q(rq)),
        S=rho_S_spectrum(run),
        p_purity=rho_p_purity(run),
        raw_trace=math.exp(lg) if lg < 700 else math.inf,
        log_raw_trace=lg,
    )
