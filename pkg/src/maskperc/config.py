"""Experiment configuration: an INI-style key/value file.

Keys live in sections (``[network]`` with ``n = 100000``) or, equivalently,
as flat dotted keys before any section (``network.n = 100000``). Every
problem found is collected and reported together in a :class:`ConfigError`.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .degree import DegreeDistribution, load_pmf
from .graph import MaskModelParams
from .simulate import DEFAULT_CUTOFF, PATIENT_ZERO_POLICIES

KINDS = ("emergence", "size", "threshold", "mask_sweep", "T_sweep", "mutation_compare")
DISTRIBUTIONS = ("poisson", "powerlaw", "empirical")
EXPLICIT_KEYS = ("T11", "T12", "T21", "T22")
FACTORED_KEYS = ("T", "T_mask1", "T_mask2")
UNIT_AXES = ("m", "T", "T_mask1", "T_mask2") + EXPLICIT_KEYS
AXES = ("mean", "exponent") + UNIT_AXES
DEFAULT_AXIS = {"emergence": "mean", "size": "mean", "mask_sweep": "m", "T_sweep": "T",
                "mutation_compare": "mean", "threshold": "m"}

KNOWN_KEYS = {
    "experiment": {"kind", "name"},
    "network": {"distribution", "n", "mean", "exponent", "kmin", "kmax", "pmf_file", "normalize"},
    "model": {"m", *EXPLICIT_KEYS, *FACTORED_KEYS},
    "sweep": {"axis", "grid"},
    "sim": {"trials", "master_seed", "patient_zero", "cutoff_floor", "cutoff_fraction",
            "regenerate_network", "simple_graph", "undirected", "workers"},
    "threshold": {"axis", "bracket", "scan_grid", "emergence_cutoff"},
    "solver": {"tol", "max_iter"},
    "output": {"csv", "plot"},
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    name: str
    dist: DegreeDistribution
    n: int
    params: MaskModelParams
    factored: bool
    axis: str
    grid: tuple[float, ...]
    trials: int = 2000
    master_seed: int = 0
    patient_zero: str = "random"
    cutoff_floor: int = DEFAULT_CUTOFF[0]
    cutoff_fraction: float = DEFAULT_CUTOFF[1]
    regenerate_network: bool = True
    simple_graph: bool = False
    undirected: bool = False
    workers: int = 1
    threshold_axis: str = "mean"
    bracket: tuple[float, float] = (0.0, 50.0)
    scan_grid: tuple[float, ...] = ()
    emergence_cutoff: float = 0.05
    tol: float = 1e-12
    max_iter: int = 1_000_000
    csv: Path = field(default_factory=lambda: Path("results.csv"))
    plot: bool = True

    def with_overrides(self, *, seed: int | None = None, out: str | Path | None = None,
                       workers: int | None = None, simple_graph: bool | None = None) -> "ExperimentSpec":
        changes: dict[str, object] = {}
        if seed is not None:
            changes["master_seed"] = int(seed)
        if out is not None:
            changes["csv"] = Path(out)
        if workers is not None:
            changes["workers"] = int(workers)
        if simple_graph:
            changes["simple_graph"] = True
        return replace(self, **changes)

    def resolved(self) -> dict[str, str]:
        """Every setting, defaults included, as the strings a config file would hold."""
        d = {"experiment.kind": self.kind, "experiment.name": self.name}
        for k, v in self.dist.describe().items():
            d["network." + k] = str(v)
        d["network.n"] = str(self.n)
        d["model.m"] = repr(self.params.m)
        keys = FACTORED_KEYS if self.factored else ()
        for k in (*keys, *EXPLICIT_KEYS):
            v = self.params.as_dict()[k]
            d["model." + k] = repr(v)
        d["sweep.axis"] = self.axis
        d["sweep.grid"] = ",".join(repr(g) for g in self.grid)
        for k in ("trials", "master_seed", "patient_zero", "cutoff_floor", "cutoff_fraction",
                  "regenerate_network", "simple_graph", "undirected", "workers"):
            d["sim." + k] = str(getattr(self, k))
        if self.kind == "threshold":
            d["threshold.axis"] = self.threshold_axis
            d["threshold.bracket"] = f"{self.bracket[0]!r},{self.bracket[1]!r}"
            d["threshold.scan_grid"] = ",".join(repr(g) for g in self.scan_grid)
            d["threshold.emergence_cutoff"] = repr(self.emergence_cutoff)
        d["solver.tol"] = repr(self.tol)
        d["solver.max_iter"] = str(self.max_iter)
        d["output.csv"] = str(self.csv)
        d["output.plot"] = str(self.plot)
        return d

    def resolved_text(self) -> str:
        return "\n".join(f"{k} = {v}" for k, v in self.resolved().items()) + "\n"


def parse_grid(text: str) -> tuple[float, ...]:
    """``"a:b:step"`` (inclusive of ``b``) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range grid must be 'start:stop:step', got {text!r}")
        a, b, step = (float(p) for p in parts)
        if not all(math.isfinite(x) for x in (a, b, step)) or step <= 0:
            raise ValueError(f"grid step must be positive and finite, got {text!r}")
        if b < a:
            raise ValueError(f"grid stop below start in {text!r}")
        count = int(math.floor((b - a) / step + 1e-9)) + 1
        return tuple(round(a + i * step, 12) for i in range(count))
    values = tuple(float(p) for p in text.split(",") if p.strip())
    if not values:
        raise ValueError("grid is empty")
    return values


def _section_items(text: str) -> tuple[dict[str, dict[str, str]], list[str]]:
    errors: list[str] = []
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str  # keep T11 etc. case-sensitive
    try:
        cp.read_string("[__flat__]\n" + text)
    except configparser.Error as exc:
        return {}, [f"unparseable config: {exc}".replace("[line  ", "[line ")]
    out: dict[str, dict[str, str]] = {}
    for sec in cp.sections():
        for key, value in cp.items(sec):
            if sec == "__flat__":
                if "." not in key:
                    errors.append(f"key {key!r} outside a section must be written as section.key")
                    continue
                s, k = key.split(".", 1)
            else:
                s, k = sec, key
            if s not in KNOWN_KEYS:
                errors.append(f"unknown section {s!r}")
                continue
            if k not in KNOWN_KEYS[s]:
                errors.append(f"unknown key {s}.{k}")
                continue
            if k in out.setdefault(s, {}):
                errors.append(f"duplicate key {s}.{k}")
            out[s][k] = value.strip()
    return out, errors


class _Reader:
    def __init__(self, raw: dict[str, dict[str, str]], errors: list[str]):
        self.raw = raw
        self.errors = errors

    def has(self, sec: str, key: str) -> bool:
        return key in self.raw.get(sec, {})

    def str(self, sec: str, key: str, default: str | None = None) -> str | None:
        return self.raw.get(sec, {}).get(key, default)

    def num(self, sec: str, key: str, default: float | None = None, *, lo: float | None = None,
            hi: float | None = None, integer: bool = False, name: str | None = None):
        name = name or key
        s = self.str(sec, key)
        if s is None:
            return default
        try:
            v = int(s) if integer else float(s)
        except ValueError:
            self.errors.append(f"{sec}.{key}: expected {'an integer' if integer else 'a number'}, got {s!r}")
            return default
        if not integer and not math.isfinite(v):
            self.errors.append(f"{name} must be finite")
            return default
        if lo is not None and hi is not None and not lo <= v <= hi:
            self.errors.append(f"{name} must lie in [{_fmt(lo)},{_fmt(hi)}]")
            return default
        if lo is not None and hi is None and v < lo:
            self.errors.append(f"{name} must be >= {_fmt(lo)}")
            return default
        return v

    def flag(self, sec: str, key: str, default: bool) -> bool:
        s = self.str(sec, key)
        if s is None:
            return default
        if s.lower() in _TRUE:
            return True
        if s.lower() in _FALSE:
            return False
        self.errors.append(f"{sec}.{key}: expected true/false, got {s!r}")
        return default


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(x)


def validate_config(text: str, base_dir: str | Path = ".") -> ExperimentSpec:
    """Parse and validate a config; raise :class:`ConfigError` listing every problem."""
    raw, errors = _section_items(text)
    r = _Reader(raw, errors)

    kind = r.str("experiment", "kind", "emergence")
    if kind not in KINDS:
        errors.append(f"experiment.kind must be one of {', '.join(KINDS)}, got {kind!r}")
        kind = "emergence"
    name = r.str("experiment", "name", kind)

    # network
    dist_kind = r.str("network", "distribution", "poisson")
    n = r.num("network", "n", 100_000, lo=2, integer=True, name="n")
    dist = None
    if dist_kind not in DISTRIBUTIONS:
        errors.append(f"network.distribution must be one of {', '.join(DISTRIBUTIONS)}, got {dist_kind!r}")
    elif dist_kind == "poisson":
        mean = r.num("network", "mean", 5.0, lo=0, name="mean")
        dist = DegreeDistribution.poisson(mean)
    elif dist_kind == "powerlaw":
        exponent = r.num("network", "exponent", 2.5, name="exponent")
        kmin = r.num("network", "kmin", 1, lo=1, integer=True, name="kmin")
        kmax = r.num("network", "kmax", 100, lo=1, integer=True, name="kmax")
        try:
            dist = DegreeDistribution.powerlaw(exponent, kmin, kmax)
        except ValueError as exc:
            errors.append(str(exc))
    else:
        path = r.str("network", "pmf_file")
        if path is None:
            errors.append("network.pmf_file is required for an empirical distribution")
        else:
            try:
                dist = load_pmf(Path(base_dir) / path, normalize=r.flag("network", "normalize", False))
            except (OSError, ValueError) as exc:
                errors.append(f"network.pmf_file: {exc}")

    # model
    m = r.num("model", "m", None, lo=0, hi=1, name="m")
    if m is None and not r.has("model", "m"):
        errors.append("model.m is required")
    has_explicit = [k for k in EXPLICIT_KEYS if r.has("model", k)]
    has_factored = [k for k in FACTORED_KEYS if r.has("model", k)]
    factored = bool(has_factored)
    params = None
    if has_factored and [k for k in has_explicit if k != "T21"]:
        errors.append("give exactly one of an explicit T matrix (T11, T12, T21, T22) or the factored "
                      "form (T, T_mask1, T_mask2), not both")
    elif has_factored:
        missing = [k for k in FACTORED_KEYS if k not in has_factored]
        if missing:
            errors.append(f"factored form needs T, T_mask1 and T_mask2; missing {', '.join(missing)}")
        vals = {k: r.num("model", k, None, lo=0, hi=1) for k in FACTORED_KEYS}
        t21 = r.num("model", "T21", None, lo=0, hi=1)
        if m is not None and None not in vals.values():
            params = MaskModelParams.factored(m, vals["T"], vals["T_mask1"], vals["T_mask2"], T21=t21)
    elif has_explicit:
        missing = [k for k in EXPLICIT_KEYS if k not in has_explicit]
        if missing:
            errors.append(f"explicit T matrix needs T11, T12, T21 and T22; missing {', '.join(missing)}")
        vals = {k: r.num("model", k, None, lo=0, hi=1) for k in EXPLICIT_KEYS}
        if m is not None and None not in vals.values():
            params = MaskModelParams(m=m, **vals)
    else:
        errors.append("give exactly one of an explicit T matrix (T11, T12, T21, T22) or the factored "
                      "form (T, T_mask1, T_mask2)")

    # sweep
    default_axis = DEFAULT_AXIS[kind]
    if default_axis == "mean" and dist_kind != "poisson":
        default_axis = "m"
    axis = r.str("sweep", "axis", default_axis)
    grid: tuple[float, ...] = ()
    if axis not in AXES:
        errors.append(f"sweep.axis must be one of {', '.join(AXES)}, got {axis!r}")
    else:
        errors.extend(_axis_errors("sweep.axis", axis, dist_kind, factored))
        grid = _read_grid(r, "sweep", "grid", axis, errors, default=())

    # sim
    trials = r.num("sim", "trials", 2000, lo=0, integer=True, name="trials")
    seed = r.num("sim", "master_seed", 0, lo=0, integer=True, name="master_seed")
    patient_zero = r.str("sim", "patient_zero", "random")
    if patient_zero not in PATIENT_ZERO_POLICIES:
        errors.append(f"sim.patient_zero must be one of {', '.join(PATIENT_ZERO_POLICIES)}, "
                      f"got {patient_zero!r}")
    floor = r.num("sim", "cutoff_floor", DEFAULT_CUTOFF[0], lo=2, integer=True, name="cutoff floor")
    frac = r.num("sim", "cutoff_fraction", DEFAULT_CUTOFF[1], name="cutoff fraction")
    if frac is not None and not 0 < frac < 1:
        errors.append("cutoff fraction must lie in (0,1)")
    workers = r.num("sim", "workers", 1, lo=1, integer=True, name="workers")

    # threshold
    t_axis = r.str("threshold", "axis", "mean")
    bracket = (0.0, 50.0) if t_axis == "mean" else (0.0, 1.0)
    scan_grid: tuple[float, ...] = ()
    if kind == "threshold":
        if t_axis not in AXES:
            errors.append(f"threshold.axis must be one of {', '.join(AXES)}, got {t_axis!r}")
        else:
            errors.extend(_axis_errors("threshold.axis", t_axis, dist_kind, factored))
            if t_axis == axis:
                errors.append("threshold.axis must differ from sweep.axis")
        if r.has("threshold", "bracket"):
            try:
                lo, hi = (float(x) for x in r.str("threshold", "bracket").split(","))
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise ValueError
                bracket = (lo, hi)
            except ValueError:
                errors.append("threshold.bracket must be 'lo,hi' with lo < hi")
        if t_axis in AXES:
            scan_grid = _read_grid(r, "threshold", "scan_grid", t_axis, errors, default=())
    cutoff = r.num("threshold", "emergence_cutoff", 0.05, name="threshold.emergence_cutoff")
    if cutoff is not None and not 0 < cutoff < 1:
        errors.append("threshold.emergence_cutoff must lie in (0,1)")

    tol = r.num("solver", "tol", 1e-12, name="solver.tol")
    if tol is not None and not tol > 0:
        errors.append("solver.tol must be > 0")
    max_iter = r.num("solver", "max_iter", 1_000_000, lo=1, integer=True, name="solver.max_iter")

    csv_path = Path(r.str("output", "csv", f"{name}.csv"))
    plot = r.flag("output", "plot", True)

    if not grid and axis in AXES and dist is not None and params is not None and not errors:
        grid = (_current_value(axis, dist, params),)
    if errors:
        raise ConfigError(errors)
    return ExperimentSpec(
        kind=kind, name=name, dist=dist, n=n, params=params, factored=factored, axis=axis,
        grid=grid, trials=trials, master_seed=seed, patient_zero=patient_zero, cutoff_floor=floor,
        cutoff_fraction=frac, regenerate_network=r.flag("sim", "regenerate_network", True),
        simple_graph=r.flag("sim", "simple_graph", False), undirected=r.flag("sim", "undirected", False),
        workers=workers, threshold_axis=t_axis, bracket=bracket, scan_grid=scan_grid,
        emergence_cutoff=cutoff, tol=tol, max_iter=max_iter, csv=csv_path, plot=plot)


def load_config(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    return validate_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _current_value(axis: str, dist: DegreeDistribution, params: MaskModelParams) -> float:
    if axis == "mean":
        return dist.mean_param
    if axis == "exponent":
        return dist.exponent
    if axis == "T":
        return params.T_base
    return getattr(params, axis)


def _axis_errors(label: str, axis: str, dist_kind: str | None, factored: bool) -> list[str]:
    if axis == "mean" and dist_kind != "poisson":
        return [f"{label} 'mean' needs a poisson distribution"]
    if axis == "exponent" and dist_kind != "powerlaw":
        return [f"{label} 'exponent' needs a powerlaw distribution"]
    if axis in FACTORED_KEYS and not factored:
        return [f"{label} {axis!r} needs the factored model form"]
    if axis in ("T11", "T12", "T22") and factored:
        return [f"{label} {axis!r} needs the explicit model form"]
    return []


def _read_grid(r: _Reader, sec: str, key: str, axis: str, errors: list[str],
               default: tuple[float, ...] | None) -> tuple[float, ...]:
    text = r.str(sec, key)
    if text is None:
        if default is None:
            errors.append(f"{sec}.{key} is required")
            return ()
        return default
    try:
        grid = parse_grid(text)
    except ValueError as exc:
        errors.append(f"{sec}.{key}: {exc}")
        return ()
    arr = np.array(grid)
    if not np.all(np.isfinite(arr)):
        errors.append(f"{sec}.{key}: values must be finite")
    elif np.any(np.diff(arr) <= 0):
        errors.append(f"{sec}.{key}: values must be strictly increasing")
    elif axis in UNIT_AXES and (arr.min() < 0 or arr.max() > 1):
        errors.append(f"{sec}.{key}: {axis} must lie in [0,1]")
    elif axis == "mean" and arr.min() < 0:
        errors.append(f"{sec}.{key}: mean must be >= 0")
    return grid
