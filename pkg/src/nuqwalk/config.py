"""Run configuration: JSON files, bundled presets and command-line overrides.

Angles may be given in radians or as multiples of pi ("pi/4", "-pi/7",
"0.25pi").  Gain-loss values are given either as ``gamma`` or as
``gamma_exp`` (e^gamma); the string "ep" in ``gamma_exp`` stands for the
exceptional point of the configured angles.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .core import exceptional_gamma
from .errors import ConfigError, NoExceptionalPoint
from .measures import OBSERVABLE_COLUMNS
from .twoparticle import Sym

_PI_RE = re.compile(
    r"^\s*(?P<coef>[+-]?(?:\d+\.?\d*|\.\d+)?(?:[eE][+-]?\d+)?)\s*\*?\s*pi\s*"
    r"(?:/\s*(?P<den>\d+\.?\d*))?\s*$")

SWEEPABLE = ("theta1", "theta2", "phi", "gamma", "gamma_exp")
KNOWN_KEYS = {"description", "theta1", "theta2", "phi", "gamma", "gamma_exp", "sym",
              "steps", "t", "modes", "sweep", "tol", "workers", "out", "observables",
              "fit_window"}


def parse_angle(value, name="angle") -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        s = value.strip().lower()
        m = _PI_RE.match(s)
        if m:
            coef = m.group("coef")
            if coef in ("", "+"):
                c = 1.0
            elif coef == "-":
                c = -1.0
            else:
                c = float(coef)
            den = float(m.group("den")) if m.group("den") else 1.0
            return c * math.pi / den
        try:
            return float(s)
        except ValueError:
            pass
    raise ConfigError(f"{name}: cannot parse {value!r} as an angle")


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


@dataclass(frozen=True)
class GammaPoint:
    gamma: float
    label: str

    @property
    def gain(self) -> float:
        return math.exp(self.gamma)


@dataclass(frozen=True)
class SweepAxis:
    param: str
    start: float
    stop: float
    count: int

    def values(self) -> list:
        if self.count == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.count - 1)
        return [self.start + i * step for i in range(self.count)]


@dataclass
class RunConfig:
    theta1: float
    theta2: float
    phi: float = 0.0
    gammas: list = field(default_factory=lambda: [GammaPoint(0.0, "1")])
    syms: tuple = (Sym.PLUS, Sym.MINUS)
    steps: int = 25
    t: int | None = None
    modes: int = 201
    sweep: SweepAxis | None = None
    tol: float = 1e-10
    workers: int = 1
    out: str = "out"
    observables: tuple = OBSERVABLE_COLUMNS
    fit_window: tuple | None = None
    preset: str | None = None
    description: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["syms"] = [Sym(s).label for s in self.syms]
        d["gammas"] = [{"gamma": g.gamma, "gamma_exp": g.gain, "label": g.label}
                       for g in self.gammas]
        return d


def _resolve_gammas(raw: dict, theta1: float, theta2: float) -> list:
    if "gamma" in raw and "gamma_exp" in raw:
        raise ConfigError("give either 'gamma' or 'gamma_exp', not both")
    points = []
    if "gamma_exp" in raw:
        for v in _as_list(raw["gamma_exp"]):
            if isinstance(v, str) and v.strip().lower() == "ep":
                try:
                    points.append(GammaPoint(exceptional_gamma(theta1, theta2), "ep"))
                except NoExceptionalPoint as exc:
                    raise ConfigError(f"gamma_exp: 'ep' requested but {exc}") from None
                continue
            try:
                g = float(v)
            except (TypeError, ValueError):
                raise ConfigError(f"gamma_exp: cannot parse {v!r}") from None
            if not g > 0:
                raise ConfigError(f"gamma_exp: e^gamma must be positive, got {v!r}")
            points.append(GammaPoint(math.log(g), repr(g)))
    elif "gamma" in raw:
        for v in _as_list(raw["gamma"]):
            g = parse_angle(v, "gamma")
            points.append(GammaPoint(g, f"g={g!r}"))
    else:
        points.append(GammaPoint(0.0, "1.0"))
    if not points:
        raise ConfigError("no gain-loss values configured")
    return points


def _parse_sym(value) -> tuple:
    v = str(value).strip().lower()
    table = {"plus": (Sym.PLUS,), "+": (Sym.PLUS,), "+1": (Sym.PLUS,), "1": (Sym.PLUS,),
             "minus": (Sym.MINUS,), "-": (Sym.MINUS,), "-1": (Sym.MINUS,),
             "both": (Sym.PLUS, Sym.MINUS)}
    if v not in table:
        raise ConfigError(f"sym: expected plus, minus or both, got {value!r}")
    return table[v]


def _parse_int(raw, key, minimum=0):
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{key}: expected an integer >= {minimum}, got {v!r}")
    return v


def _parse_sweep(spec) -> SweepAxis:
    if not isinstance(spec, dict):
        raise ConfigError("sweep: expected an object with param, min, max, count")
    missing = {"param", "min", "max", "count"} - spec.keys()
    if missing:
        raise ConfigError(f"sweep: missing field(s) {sorted(missing)}")
    param = spec["param"]
    if param not in SWEEPABLE:
        raise ConfigError(f"sweep.param: {param!r} is not a model parameter {SWEEPABLE}")
    count = _parse_int(spec, "count", 1)
    lo = parse_angle(spec["min"], "sweep.min")
    hi = parse_angle(spec["max"], "sweep.max")
    if param == "gamma_exp" and (lo <= 0 or hi <= 0):
        raise ConfigError("sweep: gamma_exp bounds must be positive")
    return SweepAxis(param, lo, hi, count)


def _parse_observables(value) -> tuple:
    names = _as_list(value)
    bad = [n for n in names if n not in OBSERVABLE_COLUMNS]
    if bad:
        raise ConfigError(f"observables: unknown {bad}; choose from {list(OBSERVABLE_COLUMNS)}")
    # keep column order fixed; t always leads
    return tuple(c for c in OBSERVABLE_COLUMNS if c == "t" or c in names)


def build_config(raw: dict, preset: str | None = None) -> RunConfig:
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    for key in ("theta1", "theta2"):
        if key not in raw:
            raise ConfigError(f"missing required field {key!r}")
    theta1 = parse_angle(raw["theta1"], "theta1")
    theta2 = parse_angle(raw["theta2"], "theta2")
    phi = parse_angle(raw.get("phi", 0.0), "phi")
    for name, v in (("theta1", theta1), ("theta2", theta2), ("phi", phi)):
        if not math.isfinite(v):
            raise ConfigError(f"{name}: must be finite")
    cfg = RunConfig(theta1=theta1, theta2=theta2, phi=phi,
                    gammas=_resolve_gammas(raw, theta1, theta2), preset=preset,
                    description=str(raw.get("description", "")))
    if "sym" in raw:
        cfg.syms = _parse_sym(raw["sym"])
    if "steps" in raw:
        cfg.steps = _parse_int(raw, "steps")
    if "t" in raw:
        cfg.t = _parse_int(raw, "t")
    if "modes" in raw:
        cfg.modes = _parse_int(raw, "modes", 1)
    if "workers" in raw:
        cfg.workers = _parse_int(raw, "workers", 1)
    if "tol" in raw:
        cfg.tol = float(raw["tol"])
    if "out" in raw:
        cfg.out = str(raw["out"])
    if "sweep" in raw:
        cfg.sweep = _parse_sweep(raw["sweep"])
    if "observables" in raw:
        cfg.observables = _parse_observables(raw["observables"])
    if "fit_window" in raw:
        w = raw["fit_window"]
        if not (isinstance(w, list) and len(w) == 2 and all(isinstance(x, (int, float)) for x in w)
                and 0 < w[0] < w[1]):
            raise ConfigError(f"fit_window: expected [t_min, t_max] with 0 < t_min < t_max, got {w!r}")
        cfg.fit_window = (float(w[0]), float(w[1]))
    check(cfg)
    return cfg


def check(cfg: RunConfig):
    if cfg.t is not None and cfg.t > cfg.steps:
        raise ConfigError(f"t={cfg.t} exceeds steps={cfg.steps}")


def preset_names() -> list:
    files = resources.files("nuqwalk.presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files("nuqwalk.presets") / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return _loads(path.read_text(), f"preset {name}")


def _loads(text: str, source: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return data


def _merge(raw: dict, layer: dict):
    # a later layer's gain-loss values replace the earlier ones in either form
    for key, other in (("gamma", "gamma_exp"), ("gamma_exp", "gamma")):
        if key in layer:
            raw.pop(other, None)
    raw.update(layer)


def load_config(path=None, preset=None, overrides: dict | None = None) -> RunConfig:
    """Merge preset, then config file, then overrides (later wins)."""
    raw = {}
    if preset:
        _merge(raw, load_preset(preset))
    if path:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from None
        _merge(raw, _loads(text, str(p)))
    _merge(raw, {k: v for k, v in (overrides or {}).items() if v is not None})
    if not raw:
        raise ConfigError("no configuration: pass --config or --preset")
    return build_config(raw, preset)
