"""End-to-end acceptance checks, one recorded PASS/FAIL line per criterion.

Each test records its outcome before asserting, so the terminal summary lists
every criterion even when some fail.
"""

import csv
import math
import time

import numpy as np
import pytest

from nuqwalk import cli
from nuqwalk.core import ModelParams, exceptional_gamma
from nuqwalk.measures import (
    LN2,
    binary_entropy,
    distance_rms,
    entropy_decay_fit,
    entropy_record,
    gaussian_fit,
    gme_concurrence,
    one_particle_entropy,
    qubit_entropy,
    scaling_exponent,
)
from nuqwalk.oracle import certify
from nuqwalk.twoparticle import Sym, bipartition_spectra, iter_runs, joint_density, make_run

from conftest import GAMMA_EP, GAMMA_GRID, fig1, fig3

GAIN_LABELS = {0.0: "1.0", math.log(1.3): "1.3", GAMMA_EP: "ep", math.log(1.5): "1.5"}


def test_criterion_01_exceptional_point(record_criterion):
    value = math.exp(exceptional_gamma(math.pi / 4, -math.pi / 7))
    best = math.inf
    for _ in range(50):
        start = time.perf_counter()
        exceptional_gamma(math.pi / 4, -math.pi / 7)
        best = min(best, time.perf_counter() - start)
    ok = abs(value - 1.347) <= 0.001 and best < 1e-3
    record_criterion("1 exceptional point", ok, f"e^g_ep={value:.6f} runtime={best * 1e6:.1f}us")
    assert ok


def test_criterion_02_oracle_certification(record_criterion):
    start = time.perf_counter()
    worst = 0.0
    failures = []
    for gamma in GAMMA_GRID:
        p = ModelParams(math.pi / 4, -math.pi / 7, 0.0, gamma, steps=5)
        for sym in (1, -1):
            rep = certify(p, sym, 5, tol=1e-10, raise_on_failure=False)
            worst = max(worst, rep.worst[1])
            if not rep.passed:
                failures.append((GAIN_LABELS[gamma], sym, rep.worst))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 30
    record_criterion("2 oracle certification", ok, f"worst={worst:.2e} runtime={elapsed:.2f}s")
    assert ok, failures


def test_criterion_03_constant_antisymmetric_concurrence(record_criterion):
    worst = 0.0
    for gamma in GAMMA_GRID:
        for runs in iter_runs(fig3(gamma=gamma, steps=100), syms=(Sym.MINUS,)):
            c = gme_concurrence(bipartition_spectra(runs[Sym.MINUS]))
            worst = max(worst, abs(c.C_S - 1))
    ok = worst <= 1e-9
    record_criterion("3 constant C_S for sym=-1", ok, f"max|C_S-1|={worst:.2e}")
    assert ok


def test_criterion_04_pauli_exclusion(record_criterion):
    worst = 0.0
    for gamma in GAMMA_GRID:
        grid = joint_density(make_run(fig1(gamma=gamma), Sym.MINUS, 25)).grid
        worst = max(worst, float(np.max(np.diag(grid))))
    ok = worst <= 1e-12
    record_criterion("4 Pauli exclusion", ok, f"max P(n,n)={worst:.3e}")
    assert ok


def test_criterion_05_initial_entropies(record_criterion):
    devs = []
    for sym in (Sym.PLUS, Sym.MINUS):
        rec = entropy_record(make_run(fig3(), sym, 0))
        devs += [abs(rec.E_q - LN2), abs(rec.E_Q)]
    ok = max(devs) <= 1e-12
    record_criterion("5 initial entropies", ok, f"max dev={max(devs):.1e}")
    assert ok


# -- criteria 6 and 7: distance RMS at theta1=pi/4, theta2=-pi/7 ---------------------

WINDOWS = {0.0: (10, 50), math.log(1.3): (10, 50), GAMMA_EP: (10, 50),
           math.log(1.5): (30, 100)}
TARGETS = {0.0: (1.0, 0.05), math.log(1.3): (1.0, 0.05), GAMMA_EP: (1.0, 0.05),
           math.log(1.5): (0.5, 0.15)}


@pytest.fixture(scope="module")
def distance_series():
    start = time.perf_counter()
    series = {}
    for gamma, (_, t_hi) in WINDOWS.items():
        d = {Sym.PLUS: [], Sym.MINUS: []}
        for runs in iter_runs(fig1(gamma=gamma, steps=t_hi)):
            for sym, run in runs.items():
                d[sym].append(distance_rms(joint_density(run)))
        series[gamma] = {s: np.array(v) for s, v in d.items()}
    return series, time.perf_counter() - start


@pytest.mark.parametrize("sym", [Sym.PLUS, Sym.MINUS], ids=["plus", "minus"])
@pytest.mark.parametrize("gamma", list(WINDOWS), ids=["1.0", "1.3", "ep", "1.5"])
def test_criterion_06_distance_scaling(distance_series, record_criterion, gamma, sym):
    series, _ = distance_series
    lo, hi = WINDOWS[gamma]
    d = series[gamma][sym]
    ts = np.arange(len(d))
    slope = scaling_exponent(ts, d, window=(lo, hi))
    target, tol = TARGETS[gamma]
    ok = abs(slope - target) <= tol
    record_criterion(f"6 distance RMS slope e^g={GAIN_LABELS[gamma]} sym={sym.label}", ok,
                     f"slope={slope:.4f} target={target}+-{tol} window=[{lo},{hi}]")
    assert ok


def test_criterion_06_runtime(distance_series, record_criterion):
    _, elapsed = distance_series
    ok = elapsed < 60
    record_criterion("6 distance RMS runtime", ok, f"{elapsed:.2f}s")
    assert ok


def test_criterion_07_symmetry_ordering(distance_series, record_criterion):
    series, _ = distance_series
    margin = math.inf
    for gamma, (lo, hi) in WINDOWS.items():
        diff = series[gamma][Sym.MINUS][lo:hi + 1] - series[gamma][Sym.PLUS][lo:hi + 1]
        margin = min(margin, float(diff.min()))
    ok = margin >= 0
    record_criterion("7 symmetry ordering of distance RMS", ok, f"min(d- - d+)={margin:.4f}")
    assert ok


# -- criteria 8 to 10: entropies at theta1=-pi/4, theta2=-pi/7 ----------------------

@pytest.fixture(scope="module")
def entropy_series():
    out = {}
    for gamma in (math.log(1.3), GAMMA_EP, math.log(1.5)):
        e = {Sym.PLUS: [], Sym.MINUS: []}
        e_op = []
        for runs in iter_runs(fig3(gamma=gamma)):
            for sym, run in runs.items():
                e[sym].append(entropy_record(run).E_q)
            e_op.append(qubit_entropy(runs[Sym.PLUS].psi0))
        out[gamma] = ({s: np.array(v) for s, v in e.items()}, np.array(e_op))
    return out


def test_criterion_08_ep_entropy_contrast(entropy_series, record_criterion):
    e, _ = entropy_series[GAMMA_EP]
    margin = float(np.min(e[Sym.MINUS][20:101] - e[Sym.PLUS][20:101]))
    ok = margin >= 0
    record_criterion("8 EP entropy contrast", ok, f"min(E_q- - E_q+)={margin:.4f}")
    assert ok


def test_criterion_09_one_vs_two_particle_entropy(entropy_series, record_criterion):
    margin = math.inf
    gaps_ok = True
    for gamma in (GAMMA_EP, math.log(1.5)):
        e, e_op = entropy_series[gamma]
        for sym in (Sym.PLUS, Sym.MINUS):
            margin = min(margin, float(np.min(e[sym][20:101] - e_op[20:101])))
        gaps_ok &= (e[Sym.MINUS][100] - e_op[100]) > (e[Sym.PLUS][100] - e_op[100])
    ok = margin > 0 and gaps_ok
    record_criterion("9 one- vs two-particle entropy", ok,
                     f"min(E_q - E_op)={margin:.4f} gap larger for sym=-1: {gaps_ok}")
    assert ok


def test_criterion_10_decay_law_fit(entropy_series, record_criterion):
    e, _ = entropy_series[GAMMA_EP]
    ts = np.arange(101)
    rel = {s: entropy_decay_fit(ts, e[s], window=(40, 100)).relative_residual
           for s in (Sym.PLUS, Sym.MINUS)}
    t_syn = np.arange(20, 101)
    syn = entropy_decay_fit(t_syn, binary_entropy(0.8 / t_syn + 2.0 / t_syn ** 2),
                            window=(20, 100))
    round_trip = max(abs(syn.c1 - 0.8), abs(syn.c2 - 2.0))
    ok = max(rel.values()) < 0.05 and round_trip <= 1e-6
    record_criterion("10 decay-law fit", ok,
                     f"rel residual +:{rel[Sym.PLUS]:.3%} -:{rel[Sym.MINUS]:.3%} "
                     f"round trip err={round_trip:.1e}")
    assert ok


def test_criterion_11_broken_phase_gaussianity(record_criterion):
    def r2(gamma):
        jd = joint_density(make_run(fig1(gamma=gamma), Sym.PLUS, 25))
        return gaussian_fit(jd.grid.sum(axis=1), jd.sites).r_squared

    broken, unitary = r2(math.log(1.5)), r2(0.0)
    ok = broken > 0.98 and unitary < 0.9
    record_criterion("11 broken-phase Gaussianity", ok,
                     f"r2(e^g=1.5)={broken:.4f} r2(e^g=1)={unitary:.4f}")
    assert ok


def test_criterion_12_fig4_robustness(record_criterion, tmp_path):
    out = tmp_path / "fig4"
    assert cli.main(["sweep", "--preset", "fig4", "--out", str(out)]) == 0
    with open(out / "sweep.csv", newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r["region"] == "I"]
    two = min(min(float(r["E_q_plus"]), float(r["E_q_minus"])) for r in rows)
    one = min(float(r["E_q_op"]) for r in rows)
    ok = bool(rows) and two > one
    record_criterion("12 theta2 sweep region-I robustness", ok,
                     f"min E_q={two:.4f} > min E_op={one:.4f} over {len(rows)} points")
    assert ok


PRESET_COMMANDS = [("fig1", "density"), ("fig2", "evolve"), ("fig3", "evolve"),
                   ("fig4", "sweep"), ("fig5", "evolve"), ("certify", "certify")]


def test_criterion_13_determinism(record_criterion, tmp_path):
    mismatched = []
    compared = 0
    for preset, command in PRESET_COMMANDS:
        dirs = []
        for workers in (1, 4):
            d = tmp_path / f"{preset}_w{workers}"
            assert cli.main([command, "--preset", preset, "--out", str(d),
                             "--workers", str(workers)]) == 0
            dirs.append(d)
        a, b = dirs
        names = sorted(p.name for p in a.glob("*.csv"))
        if names != sorted(p.name for p in b.glob("*.csv")):
            mismatched.append(f"{preset}: file sets differ")
        for name in names:
            compared += 1
            if (a / name).read_bytes() != (b / name).read_bytes():
                mismatched.append(f"{preset}/{name}")
    ok = not mismatched
    record_criterion("13 determinism across worker counts", ok,
                     f"{compared} CSVs compared, {len(mismatched)} differ")
    assert ok, mismatched


def test_unbroken_entropy_persistence(entropy_series):
    e, _ = entropy_series[math.log(1.3)]
    for sym in (Sym.PLUS, Sym.MINUS):
        assert e[sym][50:101].min() >= 0.9 * LN2


def test_one_particle_entropy_companion(entropy_series):
    _, e_op = entropy_series[GAMMA_EP]
    assert e_op[37] == one_particle_entropy(fig3(gamma=GAMMA_EP), 37)
