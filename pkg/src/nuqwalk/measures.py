"""Entropies, concurrences, spatial statistics and the asymptotic fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .core import ModelParams
from .errors import FitFailure, InsufficientData, InvalidSpectrum
from .evolution import OneParticleField, evolve
from .twoparticle import (
    BipartitionSpectra,
    JointDensity,
    TwoParticleRun,
    bipartition_spectra,
    clip_spectrum,
    hermitian_spectrum,
    joint_density,
)

LN2 = math.log(2.0)
GAUSSIAN_R2_LABEL = 0.98


@dataclass(frozen=True)
class EntropyRecord:
    t: int
    E_Q: float
    E_q: float
    E_q_oneparticle: float | None = None


@dataclass(frozen=True)
class ConcurrenceRecord:
    t: int
    C_Q: float
    C_q: float
    C_S: float
    C_p: float

    @property
    def C_GME(self) -> float:
        return min(self.C_Q, self.C_q, self.C_S, self.C_p)


def von_neumann_entropy(spectrum) -> float:
    """-sum(l ln l) in nats, with 0 ln 0 = 0."""
    lam = clip_spectrum(spectrum)
    total = lam.sum()
    if abs(total - 1.0) > 1e-8:
        raise InvalidSpectrum(f"spectrum sums to {total!r}")
    nz = lam[lam > 0]
    return float(-np.sum(nz * np.log(nz))) + 0.0  # no -0.0


def linear_entropy(purity: float) -> float:
    return 1.0 - purity


def concurrence(purity: float) -> float:
    # purities a hair above 1 are rounding
    return math.sqrt(2.0 * max(0.0, linear_entropy(purity)))


def gme_concurrence(rec: BipartitionSpectra) -> ConcurrenceRecord:
    p = rec.purities
    return ConcurrenceRecord(rec.t, concurrence(p["Q"]), concurrence(p["q"]),
                             concurrence(p["S"]), concurrence(p["p"]))


def qubit_entropy(field: OneParticleField) -> float:
    """Entanglement entropy of a single walker's qubit with its position."""
    a = field.amplitudes
    rho = a.T @ a.conj()
    rho = rho / np.trace(rho).real
    return von_neumann_entropy(hermitian_spectrum(rho))


def one_particle_entropy(params: ModelParams, t: int) -> float:
    """E_q of the one-particle walk started in |0,0>."""
    return qubit_entropy(evolve(0, params, t))


def entropy_record(run: TwoParticleRun, rec: BipartitionSpectra | None = None) -> EntropyRecord:
    rec = bipartition_spectra(run) if rec is None else rec
    return EntropyRecord(run.t, von_neumann_entropy(rec.Q), von_neumann_entropy(rec.q),
                         qubit_entropy(run.psi0))


# -- spatial ------------------------------------------------------------------

def distance_rms(jd: JointDensity) -> float:
    d = jd.sites[:, None] - jd.sites[None, :]
    return float(math.sqrt(max(0.0, np.sum(jd.grid * d ** 2))))


@dataclass(frozen=True)
class GaussianFit:
    mean: float
    variance: float
    r_squared: float

    @property
    def is_gaussian(self) -> bool:
        return self.r_squared >= GAUSSIAN_R2_LABEL


def _r_squared(data, model) -> float:
    ss_res = float(np.sum((data - model) ** 2))
    ss_tot = float(np.sum((data - data.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)


def _lattice_gaussian(sites, mean, variance):
    # sites are two units apart, so the discretized density carries a factor 2
    return 2.0 / math.sqrt(2 * math.pi * variance) * np.exp(-(sites - mean) ** 2 / (2 * variance))


def gaussian_fit(marginal: np.ndarray, sites: np.ndarray) -> GaussianFit:
    """Moment-matched Gaussian on the even-site support and its r^2."""
    marginal = np.asarray(marginal, dtype=float)
    sites = np.asarray(sites, dtype=float)
    mean = float(np.sum(marginal * sites))
    var = float(np.sum(marginal * (sites - mean) ** 2))
    if var <= 0:
        return GaussianFit(mean, 0.0, 1.0 if np.count_nonzero(marginal) == 1 else 0.0)
    return GaussianFit(mean, var, _r_squared(marginal, _lattice_gaussian(sites, mean, var)))


@dataclass(frozen=True)
class AntisymmetricGaussianFit:
    center: float
    separation: float
    variance: float
    r_squared: float


def antisymmetric_gaussian_fit(jd: JointDensity) -> AntisymmetricGaussianFit:
    """Least-squares fit of (N(n1; c+d) N(n2; c-d) - N(n1; c-d) N(n2; c+d))^2.

    Suited to the antisymmetric state in the broken phase, whose joint density
    has two off-diagonal lobes and a vanishing diagonal.  As the separation
    shrinks the model tends to (n1 - n2)^2 times a product Gaussian, so a
    small fitted ``separation`` is a legitimate outcome.
    """
    sites = jd.sites.astype(float)
    marg = jd.grid.sum(axis=1)
    c0 = float(np.sum(marg * sites))
    spread = float(np.sum(marg * (sites - c0) ** 2))
    d0 = max(1.0, math.sqrt(spread) / 2)

    def model(x):
        c, d, log_var = x
        var = math.exp(log_var)
        plus = np.exp(-(sites - c - d) ** 2 / (2 * var))
        minus = np.exp(-(sites - c + d) ** 2 / (2 * var))
        m = (np.outer(plus, minus) - np.outer(minus, plus)) ** 2
        s = m.sum()
        return m / s if s > 0 else m

    res = optimize.least_squares(lambda x: (model(x) - jd.grid).ravel(),
                                 x0=[c0, d0, math.log(max(spread, 1.0))])
    c, d, log_var = res.x
    return AntisymmetricGaussianFit(float(c), abs(float(d)), math.exp(log_var),
                                    _r_squared(jd.grid.ravel(), model(res.x).ravel()))


def scaling_exponent(ts, values, window=None) -> float:
    """Least-squares slope of ln(value) against ln(t) inside ``window``."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is not None:
        mask = (ts >= window[0]) & (ts <= window[1])
        ts, values = ts[mask], values[mask]
    if len(ts) < 5:
        raise InsufficientData(f"need >= 5 points in window, got {len(ts)}")
    if np.any(values <= 0) or np.any(ts <= 0):
        raise InsufficientData("log-log fit needs positive t and values")
    slope, _ = np.polyfit(np.log(ts), np.log(values), 1)
    return float(slope)


# -- entropy decay law ----------------------------------------------------------

def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(1 - p) * np.log1p(-p) - p * np.log(p)
    return np.where(p > 0, h, 0.0)


def inverse_binary_entropy(e: float) -> float:
    """p in (0, 1/2] with binary_entropy(p) = e."""
    if not 0.0 < e <= LN2 + 1e-12:
        raise ValueError(f"entropy {e!r} outside (0, ln 2]")
    if e >= LN2:
        return 0.5
    return optimize.brentq(lambda p: float(binary_entropy(p)) - e, 1e-300, 0.5,
                           xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class DecayFit:
    c1: float
    c2: float
    residual: float
    relative_residual: float
    window: tuple

    def p(self, t):
        t = np.asarray(t, dtype=float)
        return self.c1 / t + self.c2 / t ** 2

    def entropy(self, t):
        return binary_entropy(np.clip(self.p(t), 0.0, 0.5))


def default_window(ts) -> tuple:
    """Last 60% of the series."""
    ts = np.asarray(ts)
    lo = ts.min() + 0.4 * (ts.max() - ts.min())
    return (float(lo), float(ts.max()))


def entropy_decay_fit(ts, entropies, window=None, fix_c2_zero=False) -> DecayFit:
    """Fit p(t) = c1/t + c2/t^2 after inverting E = H(p) pointwise.

    ``residual`` is the sum of squared errors in entropy; ``relative_residual``
    is its square root divided by the entropy series' L2 norm.
    """
    ts = np.asarray(ts, dtype=float)
    entropies = np.asarray(entropies, dtype=float)
    window = default_window(ts) if window is None else tuple(window)
    mask = (ts >= window[0]) & (ts <= window[1]) & (ts > 0)
    mask &= (entropies > 0) & (entropies <= LN2 + 1e-12)
    if not np.any(mask):
        raise FitFailure("no invertible entropy values in window")
    t_fit = ts[mask]
    e_fit = entropies[mask]
    p = np.array([inverse_binary_entropy(min(e, LN2)) for e in e_fit])

    design = [1 / t_fit] if fix_c2_zero else [1 / t_fit, 1 / t_fit ** 2]
    coef, *_ = np.linalg.lstsq(np.column_stack(design), p, rcond=None)
    if not np.all(np.isfinite(coef)):
        raise FitFailure("least-squares fit diverged")
    c1 = float(coef[0])
    c2 = 0.0 if fix_c2_zero else float(coef[1])

    fit = DecayFit(c1, c2, 0.0, 0.0, window)
    err = fit.entropy(t_fit) - e_fit
    sse = float(np.sum(err ** 2))
    rel = math.sqrt(sse) / float(np.linalg.norm(e_fit))
    return DecayFit(c1, c2, sse, rel, window)


# -- per-step bundle --------------------------------------------------------------

OBSERVABLE_COLUMNS = ("t", "raw_trace", "distance_rms", "E_Q", "E_q", "E_q_op",
                      "C_Q", "C_q", "C_S", "C_p", "C_GME")


def observables(run: TwoParticleRun) -> dict:
    """Every per-step scalar reported for a two-particle run."""
    rec = bipartition_spectra(run)
    jd = joint_density(run)
    ent = entropy_record(run, rec)
    conc = gme_concurrence(rec)
    return {
        "t": run.t,
        "raw_trace": rec.raw_trace,
        "distance_rms": distance_rms(jd),
        "E_Q": ent.E_Q,
        "E_q": ent.E_q,
        "E_q_op": ent.E_q_oneparticle,
        "C_Q": conc.C_Q,
        "C_q": conc.C_q,
        "C_S": conc.C_S,
        "C_p": conc.C_p,
        "C_GME": conc.C_GME,
    }
