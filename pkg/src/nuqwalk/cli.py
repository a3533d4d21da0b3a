"""Command-line harness: ``nuqwalk {spectrum,evolve,density,sweep,certify}``.

Every subcommand writes CSV files plus a ``manifest.json`` into ``--out``.
Exit codes: 0 ok, 1 certification/observable failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import GammaPoint, RunConfig, load_config, preset_names
from .core import ModelParams, classify_phase, exceptional_gamma, quasi_energy
from .errors import CertificationFailure, ConfigError, NoExceptionalPoint, TooLarge, ZeroNorm
from .evolution import brillouin_zone, evolve, init_localized, step
from .measures import (
    entropy_decay_fit,
    gaussian_fit,
    antisymmetric_gaussian_fit,
    observables,
    qubit_entropy,
)
from .oracle import certify
from .twoparticle import Sym, TwoParticleRun, joint_density, make_run, marginal_density

log = logging.getLogger("nuqwalk")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def fmt(x) -> str:
    """17 significant digits: round-trippable doubles."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _params(cfg: RunConfig, g: GammaPoint, steps=None) -> ModelParams:
    return ModelParams(cfg.theta1, cfg.theta2, cfg.phi, g.gamma,
                       cfg.steps if steps is None else steps)


def _cell_name(prefix, i, g: GammaPoint, sym=None, ext="csv"):
    name = f"{prefix}_{i:02d}_eg{g.gain:.6f}"
    if sym is not None:
        name += f"_{Sym(sym).label}"
    return f"{name}.{ext}"


def _phase_info(params: ModelParams) -> dict:
    pc = classify_phase(params)
    info = {"phase": pc.phase.value, "f_max": pc.f_max, "k_star": list(pc.k_star)}
    try:
        gep = exceptional_gamma(params.theta1, params.theta2)
        info["gamma_ep"] = gep
        info["gamma_exp_ep"] = math.exp(gep)
    except NoExceptionalPoint:
        info["gamma_ep"] = None
    return info


def _pool_map(fn, items, workers):
    """Ordered map; results never depend on the worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


# -- cells (module-level so they pickle) -------------------------------------------

def _evolve_cell(job):
    params, sym, columns, fit_window = job
    rows = []
    e_q = []
    f0 = init_localized(0, params.steps)
    f1 = init_localized(1, params.steps)
    for t in range(params.steps + 1):
        if t:
            f0, f1 = step(f0, params), step(f1, params)
        try:
            obs = observables(TwoParticleRun(f0, f1, Sym(sym), params, t))
            flag = ""
        except ZeroNorm:
            obs = {c: math.nan for c in columns}
            obs["t"] = t
            obs["E_q_op"] = qubit_entropy(f0)
            flag = "zero_norm"
        rows.append([obs[c] for c in columns] + [flag])
        e_q.append(obs["E_q"] if "E_q" in obs else math.nan)

    fit = None
    ts = np.arange(params.steps + 1)
    e_q = np.array(e_q)
    if params.steps >= 10 and classify_phase(params).phase.value != "Unbroken":
        ok = np.isfinite(e_q)
        try:
            f = entropy_decay_fit(ts[ok], e_q[ok], fit_window)
            fit = {"c1": f.c1, "c2": f.c2, "residual": f.residual,
                   "relative_residual": f.relative_residual, "window": list(f.window)}
        except Exception as exc:  # reported, never fatal
            fit = {"error": str(exc)}
    return rows, fit


def _density_cell(job):
    params, sym, t = job
    try:
        jd = joint_density(make_run(params, sym, t))
    except ZeroNorm as exc:
        return None, None, {"error": str(exc)}
    marg = marginal_density(jd)
    gf = gaussian_fit(marg, jd.sites)
    summary = {"gaussian_mean": gf.mean, "gaussian_variance": gf.variance,
               "gaussian_r_squared": gf.r_squared, "gaussian_regime": gf.is_gaussian}
    if Sym(sym) is Sym.MINUS:
        af = antisymmetric_gaussian_fit(jd)
        summary.update({"antisym_center": af.center, "antisym_separation": af.separation,
                        "antisym_variance": af.variance, "antisym_r_squared": af.r_squared})
    long_rows = [(int(n1), int(n2), jd.grid[i, j])
                 for i, n1 in enumerate(jd.sites) for j, n2 in enumerate(jd.sites)]
    marg_rows = [(int(n), p) for n, p in zip(jd.sites, marg)]
    return long_rows, marg_rows, summary


def region_label(params: ModelParams, phase: str) -> str:
    """I / II / III labels for the theta2 sweep.

    II is the broken (or exceptional) phase; unbroken points are I when the
    folded |theta2| is smaller than |theta1| and III otherwise.
    """
    if phase != "Unbroken":
        return "II"

    def fold(a):
        a = abs(a) % math.pi
        return min(a, math.pi - a)

    return "I" if fold(params.theta2) < fold(params.theta1) else "III"


def _sweep_cell(params: ModelParams):
    phase = classify_phase(params).phase.value
    row = {"phase": phase, "region": region_label(params, phase)}
    t = params.steps
    for sym in (Sym.PLUS, Sym.MINUS):
        try:
            row[f"E_q_{sym.label}"] = observables(make_run(params, sym, t))["E_q"]
        except ZeroNorm:
            row[f"E_q_{sym.label}"] = math.nan
    row["E_q_op"] = qubit_entropy(evolve(0, params, t))
    return row


# -- commands -----------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, out: Path):
    ks = brillouin_zone(cfg.modes)
    files, runs = [], []
    for i, g in enumerate(cfg.gammas):
        params = _params(cfg, g)
        name = _cell_name("spectrum", i, g)
        rows = []
        for k in ks:
            eps = quasi_energy(params, k)
            rows.append((k, eps.real, abs(eps.imag)))
        write_csv(out / name, ("k", "re_eps", "im_eps"), rows)
        files.append(name)
        runs.append({"gamma": g.gamma, "gamma_exp": g.gain, "label": g.label,
                     **_phase_info(params), "file": name})
    return files, runs, EXIT_OK


def cmd_evolve(cfg: RunConfig, out: Path):
    columns = list(cfg.observables)
    jobs, names, meta = [], [], []
    for i, g in enumerate(cfg.gammas):
        params = _params(cfg, g)
        for sym in cfg.syms:
            jobs.append((params, int(sym), columns, cfg.fit_window))
            names.append(_cell_name("evolve", i, g, sym))
            meta.append({"gamma": g.gamma, "gamma_exp": g.gain, "label": g.label,
                         "sym": Sym(sym).label, **_phase_info(params)})
    results = _pool_map(_evolve_cell, jobs, cfg.workers)
    runs = []
    for name, m, (rows, fit) in zip(names, meta, results):
        write_csv(out / name, columns + ["flag"], rows)
        m.update(file=name, zero_norm_rows=sum(1 for r in rows if r[-1]), entropy_decay_fit=fit)
        runs.append(m)
    return names, runs, EXIT_OK


def cmd_density(cfg: RunConfig, out: Path):
    t = cfg.steps if cfg.t is None else cfg.t
    jobs, meta = [], []
    for i, g in enumerate(cfg.gammas):
        params = _params(cfg, g)
        for sym in cfg.syms:
            jobs.append((params, int(sym), t))
            meta.append((i, g, sym, params))
    results = _pool_map(_density_cell, jobs, cfg.workers)
    files, runs = [], []
    status = EXIT_OK
    for (i, g, sym, params), (long_rows, marg_rows, summary) in zip(meta, results):
        entry = {"gamma": g.gamma, "gamma_exp": g.gain, "label": g.label,
                 "sym": Sym(sym).label, "t": t, **_phase_info(params), **summary}
        if long_rows is None:
            status = EXIT_FAIL
        else:
            grid_name = _cell_name("density", i, g, sym)
            marg_name = _cell_name("marginal", i, g, sym)
            write_csv(out / grid_name, ("n1", "n2", "P"), long_rows)
            write_csv(out / marg_name, ("n", "P"), marg_rows)
            files += [grid_name, marg_name]
            entry["files"] = [grid_name, marg_name]
        runs.append(entry)
    return files, runs, status


def cmd_sweep(cfg: RunConfig, out: Path):
    if cfg.sweep is None:
        raise ConfigError("sweep: no 'sweep' axis configured")
    axis = cfg.sweep
    g0 = cfg.gammas[0]
    base = ModelParams(cfg.theta1, cfg.theta2, cfg.phi, g0.gamma, cfg.steps)
    points = []
    for v in axis.values():
        if axis.param == "gamma_exp":
            points.append(base.replace(gamma=math.log(v)))
        else:
            points.append(base.replace(**{axis.param: v}))
    results = _pool_map(_sweep_cell, points, cfg.workers)
    header = ("index", axis.param, "phase", "region", "E_q_plus", "E_q_minus", "E_q_op")
    rows = [(i, v, r["phase"], r["region"], r["E_q_plus"], r["E_q_minus"], r["E_q_op"])
            for i, (v, r) in enumerate(zip(axis.values(), results))]
    name = "sweep.csv"
    write_csv(out / name, header, rows)
    runs = [{"param": axis.param, "count": axis.count, "t": cfg.steps,
             "gamma_exp": g0.gain, "phases": [r["phase"] for r in results]}]
    return [name], runs, EXIT_OK


def cmd_certify(cfg: RunConfig, out: Path):
    reports, status = [], EXIT_OK
    for g in cfg.gammas:
        params = _params(cfg, g)
        for sym in cfg.syms:
            rep = certify(params, int(sym), cfg.steps, cfg.tol, raise_on_failure=False)
            d = rep.to_dict()
            d["label"] = g.label
            reports.append(d)
            name, dev = rep.worst
            line = (f"{'PASS' if rep.passed else 'FAIL'} e^g={g.gain:.6f} sym={Sym(sym).label}"
                    f" worst={name} {dev:.3e}")
            print(line)
            if not rep.passed:
                status = EXIT_FAIL
    name = "certify.json"
    (out / name).write_text(json.dumps(reports, indent=2, sort_keys=True) + "\n")
    return [name], reports, status


HELP = {
    "spectrum": "quasi-energy dispersion and PT phase per gain-loss value",
    "evolve": "per-step distances, entropies and concurrences",
    "density": "joint and marginal position densities at time t",
    "sweep": "final-time qubit entropies across one model parameter",
    "certify": "compare the fast path with the dense reference (T <= 8)",
}

COMMANDS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "density": cmd_density,
    "sweep": cmd_sweep,
    "certify": cmd_certify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nuqwalk",
        description="One- and two-particle non-unitary split-step quantum walks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--preset", metavar="NAME",
                       help=f"bundled preset ({', '.join(preset_names())})")
        p.add_argument("--out", metavar="DIR", help="output directory (default: out)")
        p.add_argument("--workers", type=int, metavar="N",
                       help="worker processes (default: $NUQWALK_WORKERS or 1)")
        p.add_argument("--gamma-exp", type=float, action="append", metavar="FLOAT",
                       help="e^gamma value; repeat for several")
        p.add_argument("--sym", choices=("plus", "minus", "both"))
        p.add_argument("--steps", type=int, metavar="INT")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _default_workers() -> int | None:
    env = os.environ.get("NUQWALK_WORKERS")
    if env is None:
        return None
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"NUQWALK_WORKERS: expected an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError(f"NUQWALK_WORKERS must be >= 1, got {n}")
    return n


def run(command: str, cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    files, runs, status = COMMANDS[command](cfg, out)
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg.to_dict(),
        "wall_time_s": time.perf_counter() - start,
        "runs": runs,
        "files": sorted(files),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {"out": args.out, "workers": args.workers or _default_workers()}
        if args.gamma_exp:
            overrides["gamma_exp"] = args.gamma_exp
        if args.sym:
            overrides["sym"] = args.sym
        if args.steps is not None:
            overrides["steps"] = args.steps
            overrides["t"] = args.steps
        preset = args.preset
        if preset is None and args.config is None and args.command == "certify":
            preset = "certify"
        cfg = load_config(args.config, preset, overrides)
        return run(args.command, cfg)
    except (ConfigError, TooLarge) as exc:
        print(f"nuqwalk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificationFailure as exc:
        print(f"nuqwalk: certification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
