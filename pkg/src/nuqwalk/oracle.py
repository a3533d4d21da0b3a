"""Dense brute-force reference for small lattices.

Builds the one-particle step matrix explicitly from the conditional shift on
the full integer lattice, evolves the two-particle vector with its tensor
square, and forms every reduced operator by index contraction.  Nothing here
calls into the fast path except the 2x2 factor constructors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, coin_op, gain_loss_op, phase_op
from .errors import CertificationFailure, TooLarge

MAX_STEPS = 8
BIPARTITIONS = ("Q", "q", "S", "p", "P")


def _shift_matrix(n_int: int) -> np.ndarray:
    """Conditional shift on integer sites -n_int..n_int; index 2*(n + n_int) + s."""
    m = 2 * n_int + 1
    shift = np.zeros((2 * m, 2 * m), dtype=complex)
    for i in range(m):
        if i - 1 >= 0:
            shift[2 * (i - 1), 2 * i] = 1.0      # |n-1><n| x |0><0|
        if i + 1 < m:
            shift[2 * (i + 1) + 1, 2 * i + 1] = 1.0  # |n+1><n| x |1><1|
    return shift


def step_matrix(params: ModelParams) -> np.ndarray:
    """Full-step operator restricted to the even sites -2T..2T, shape (2N, 2N)."""
    T = params.steps
    n_int = 2 * T + 1
    m = 2 * n_int + 1
    eye = np.eye(m)
    ph = phase_op(params.phi)
    local1 = np.kron(eye, np.linalg.inv(gain_loss_op(params.gamma)) @ ph @ coin_op(params.theta1))
    local2 = np.kron(eye, gain_loss_op(params.gamma) @ ph @ coin_op(params.theta2))
    shift = _shift_matrix(n_int)
    full = shift @ local2 @ shift @ local1

    even = [i for i in range(m) if (i - n_int) % 2 == 0 and abs(i - n_int) <= 2 * T]
    idx = np.array([2 * i + s for i in even for s in (0, 1)])
    return full[np.ix_(idx, idx)]


@dataclass
class DenseState:
    vector: np.ndarray  # flattened (site1, qubit1, site2, qubit2)
    n_sites: int
    t: int
    sym: int

    @property
    def tensor(self) -> np.ndarray:
        n = self.n_sites
        return self.vector.reshape(n, 2, n, 2)


def _initial_vector(n_sites: int, sym: int) -> np.ndarray:
    origin = n_sites // 2
    e = np.zeros((n_sites, 2), dtype=complex)
    a = e.copy()
    a[origin, 0] = 1.0
    b = e.copy()
    b[origin, 1] = 1.0
    return (np.kron(a.ravel(), b.ravel()) + sym * np.kron(b.ravel(), a.ravel())) / math.sqrt(2)


def exchange(state: DenseState) -> np.ndarray:
    """Particle-swap of the state vector."""
    return state.tensor.transpose(2, 3, 0, 1).ravel()


def _check_size(params: ModelParams):
    if params.steps > MAX_STEPS:
        raise TooLarge(f"dense reference capped at T={MAX_STEPS}, got T={params.steps}")


def dense_states(params: ModelParams, sym: int, t_max: int):
    """Yield DenseState for t = 0..t_max."""
    _check_size(params)
    if t_max > params.steps:
        raise TooLarge(f"t_max={t_max} exceeds lattice of T={params.steps}")
    n = params.n_sites
    w = step_matrix(params)
    w2 = np.kron(w, w)
    v = _initial_vector(n, sym)
    for t in range(t_max + 1):
        if t:
            v = w2 @ v
        yield DenseState(v, n, t, sym)


def dense_evolve(params: ModelParams, sym: int, t: int) -> DenseState:
    *_, last = dense_states(params, sym, t)
    return last


def dense_reduced(state: DenseState, bipartition: str):
    """Normalized reduced operator and its (descending) spectrum."""
    x = state.tensor
    n = state.n_sites
    norm = float(np.vdot(state.vector, state.vector).real)
    if bipartition == "Q":
        rho = np.einsum("aibj,akbl->ijkl", x, x.conj()).reshape(4, 4)
    elif bipartition == "q":
        rho = np.einsum("aibj,akbj->ik", x, x.conj())
    elif bipartition == "S":
        y = x.reshape(2 * n, 2 * n)
        rho = y @ y.conj().T
    elif bipartition == "p":
        rho = np.einsum("aibj,cibj->ac", x, x.conj())
    elif bipartition == "P":
        rho = np.einsum("aibj,cidj->abcd", x, x.conj()).reshape(n * n, n * n)
    else:
        raise ValueError(f"unknown bipartition {bipartition!r}")
    rho = rho / norm
    rho = 0.5 * (rho + rho.conj().T)
    return rho, np.sort(np.linalg.eigvalsh(rho))[::-1]


def _entropy(lam):
    lam = lam[lam > 1e-300]
    return float(-np.sum(lam * np.log(lam)))


def _concurrence(rho):
    purity = float(np.trace(rho @ rho).real)
    return math.sqrt(2.0 * max(0.0, 1.0 - purity))


def dense_observables(state: DenseState, sites: np.ndarray) -> dict:
    ops = {b: dense_reduced(state, b) for b in ("Q", "q", "S", "p", "P")}
    n = state.n_sites
    joint = np.real(np.diag(ops["P"][0])).reshape(n, n)
    d2 = (sites[:, None] - sites[None, :]) ** 2
    conc = {f"C_{b}": _concurrence(ops[b][0]) for b in ("Q", "q", "S", "p")}
    return {
        "joint_density": joint,
        "marginal": joint.sum(axis=1),
        "distance_rms": math.sqrt(max(0.0, float(np.sum(joint * d2)))),
        "spectrum_Q": ops["Q"][1],
        "spectrum_q": ops["q"][1],
        "spectrum_S": ops["S"][1],
        "purity_p": float(np.trace(ops["p"][0] @ ops["p"][0]).real),
        "E_Q": _entropy(ops["Q"][1]),
        "E_q": _entropy(ops["q"][1]),
        **conc,
        "C_GME": min(conc.values()),
    }


def fast_observables(params: ModelParams, sym: int, t: int) -> dict:
    """The same observables from the separable fast path."""
    from . import measures, twoparticle

    run = twoparticle.make_run(params, sym, t)
    jd = twoparticle.joint_density(run)
    rec = twoparticle.bipartition_spectra(run)
    conc = measures.gme_concurrence(rec)
    return {
        "joint_density": jd.grid,
        "marginal": twoparticle.marginal_density(jd),
        "distance_rms": measures.distance_rms(jd),
        "spectrum_Q": rec.Q,
        "spectrum_q": rec.q,
        "spectrum_S": rec.S,
        "purity_p": rec.p_purity,
        "E_Q": measures.von_neumann_entropy(rec.Q),
        "E_q": measures.von_neumann_entropy(rec.q),
        "C_Q": conc.C_Q,
        "C_q": conc.C_q,
        "C_S": conc.C_S,
        "C_p": conc.C_p,
        "C_GME": conc.C_GME,
    }


def _deviation(a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        # rank-deficient spectra: pad the shorter with zeros
        size = max(a.size, b.size)
        a = np.pad(a.ravel(), (0, size - a.size))
        b = np.pad(b.ravel(), (0, size - b.size))
    return float(np.max(np.abs(a - b)))


@dataclass
class CertificationReport:
    params: ModelParams
    sym: int
    t_max: int
    tol: float
    deviations: dict = field(default_factory=dict)

    @property
    def worst(self):
        name = max(self.deviations, key=self.deviations.get)
        return name, self.deviations[name]

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.deviations.values())

    def to_dict(self) -> dict:
        p = self.params
        return {
            "theta1": p.theta1, "theta2": p.theta2, "phi": p.phi, "gamma": p.gamma,
            "steps": p.steps, "sym": self.sym, "t_max": self.t_max, "tol": self.tol,
            "passed": self.passed, "max_abs_deviation": dict(self.deviations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def certify(params: ModelParams, sym: int, t_max: int, tol: float = 1e-10,
            fast=fast_observables, raise_on_failure: bool = True) -> CertificationReport:
    """Compare every fast-path observable with the dense reference for t <= t_max.

    ``fast(params, sym, t)`` supplies the observables under test.
    """
    report = CertificationReport(params, int(sym), t_max, tol)
    sites = params.sites
    for state in dense_states(params, int(sym), t_max):
        ref = dense_observables(state, sites)
        got = fast(params, int(sym), state.t)
        for name, value in ref.items():
            dev = _deviation(got[name], value)
            report.deviations[name] = max(report.deviations.get(name, 0.0), dev)
    if raise_on_failure and not report.passed:
        name, dev = report.worst
        raise CertificationFailure(name, dev, f"tol {tol:g}, sym {int(sym):+d}")
    return report
