"""Sweep orchestration: analytic predictions and Monte Carlo ensembles per grid point."""
from __future__ import annotations

import csv
import math
from concurrent.futures import Executor, ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from . import analytic
from .config import ExperimentSpec
from .degree import DegreeDistribution
from .graph import MaskModelParams
from .simulate import EnsembleSummary, SimulationConfig, run_ensemble

PARAM_COLUMNS = ("kind", "axis", "value", "distribution", "mean", "exponent", "kmin", "kmax", "n",
                 "m", "T11", "T12", "T21", "T22", "T", "T_mask1", "T_mask2", "trials",
                 "master_seed", "patient_zero", "cutoff_floor", "cutoff_fraction",
                 "regenerate_network", "simple_graph", "undirected")
ANALYTIC_COLUMNS = ("R0", "P_ext_masked", "P_ext_unmasked", "emerge_masked", "emerge_unmasked",
                    "emerge_mixed", "q_ext_1", "q_ext_2", "q_inf_1", "q_inf_2", "S1", "S2", "S",
                    "S1_share", "S2_share", "ext_iterations", "ext_residual", "size_iterations",
                    "size_residual")
MUTATION_COLUMNS = ("mut_Q1", "mut_Q2", "mut_mu11", "mut_mu12", "mut_mu21", "mut_mu22",
                    "mut_S1", "mut_S2", "mut_total", "size_gap")
SIM_FIELDS = ("seed", "cutoff", "trials", "emerged", "emergence_freq", "emergence_se",
              "trials_p0_masked", "emergence_freq_p0_masked", "trials_p0_unmasked",
              "emergence_freq_p0_unmasked", "size_mean", "size_se", "size_masked", "size_unmasked",
              "masked_share")
POLICY_TAGS = {"random": 0, "masked": 1, "unmasked": 2}

Row = dict[str, object]


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    columns: list[str]
    rows: list[Row]
    csv_path: Path


def point_seed(master_seed: int, index: int, policy: str) -> int:
    """Master seed of the ensemble at grid point ``index`` for one patient-zero policy."""
    ss = np.random.SeedSequence([int(master_seed), int(index), POLICY_TAGS[policy]])
    return int(ss.generate_state(1, np.uint64)[0])


def at_point(dist: DegreeDistribution, params: MaskModelParams, factored: bool, axis: str,
             value: float) -> tuple[DegreeDistribution, MaskModelParams]:
    """Replace one parameter; factored transmissibilities are rebuilt from their factors."""
    if axis == "mean":
        return DegreeDistribution.poisson(value), params
    if axis == "exponent":
        return DegreeDistribution.powerlaw(value, dist.kmin, dist.kmax), params
    if factored and axis in ("m", "T", "T_mask1", "T_mask2"):
        f = {"m": params.m, "T": params.T_base, "T_mask1": params.T_mask1,
             "T_mask2": params.T_mask2, axis: value}
        custom_t21 = not math.isclose(params.T21, params.T_mask1 * params.T_base, abs_tol=1e-15)
        return dist, MaskModelParams.factored(f["m"], f["T"], f["T_mask1"], f["T_mask2"],
                                              T21=params.T21 if custom_t21 else None)
    return dist, replace(params, **{axis: value})


def find_threshold(spec: ExperimentSpec, axis: str, bracket: tuple[float, float], *,
                   base: tuple[DegreeDistribution, MaskModelParams] | None = None,
                   xtol: float = 1e-6) -> float:
    """Value of ``axis`` where R0 crosses 1, by bisection on ``R0 - 1``."""
    dist, params = base if base is not None else (spec.dist, spec.params)

    def excess(x: float) -> float:
        d, p = at_point(dist, params, spec.factored, axis, x)
        return analytic.r0(d, p) - 1.0

    lo, hi = bracket
    flo, fhi = excess(lo), excess(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise ValueError(f"bracket [{lo}, {hi}] on {axis} does not straddle R0 = 1 "
                         f"(R0 = {flo + 1:.6g} .. {fhi + 1:.6g})")
    return float(bisect(excess, lo, hi, xtol=xtol))


def _param_row(spec: ExperimentSpec, dist: DegreeDistribution, params: MaskModelParams,
               value: float) -> Row:
    blank = ""
    d = dist.describe()
    row: Row = {
        "kind": spec.kind, "axis": spec.axis, "value": value,
        "distribution": d["distribution"], "mean": dist.mean,
        "exponent": d.get("exponent", blank), "kmin": d.get("kmin", blank), "kmax": d.get("kmax", blank),
        "n": spec.n, "trials": spec.trials, "master_seed": spec.master_seed,
        "patient_zero": "all" if spec.kind == "T_sweep" else spec.patient_zero,
        "cutoff_floor": spec.cutoff_floor, "cutoff_fraction": spec.cutoff_fraction,
        "regenerate_network": spec.regenerate_network, "simple_graph": spec.simple_graph,
        "undirected": spec.undirected,
    }
    for k, v in params.as_dict().items():
        row[k] = blank if v is None else v
    return row


def _analytic_columns(spec: ExperimentSpec, dist: DegreeDistribution, params: MaskModelParams) -> Row:
    pred = analytic.predict(dist, params, tol=spec.tol, max_iter=spec.max_iter)
    row: Row = dict(pred.as_row())
    if spec.kind == "mutation_compare":
        mut = analytic.mutation_map(params)
        ms = analytic.mutation_epidemic_size(dist, mut, tol=spec.tol, max_iter=spec.max_iter)
        (m11, m12), (m21, m22) = mut.mu
        row.update(mut_Q1=mut.Q1, mut_Q2=mut.Q2, mut_mu11=m11, mut_mu12=m12, mut_mu21=m21,
                   mut_mu22=m22, mut_S1=ms.S1, mut_S2=ms.S2, mut_total=ms.total,
                   size_gap=ms.total - pred.S)
    return row


def _sim_config(spec: ExperimentSpec, params: MaskModelParams, seed: int, policy: str,
                trials: int | None = None) -> SimulationConfig:
    return SimulationConfig(
        params=params, trials=trials or spec.trials, cutoff_floor=spec.cutoff_floor,
        cutoff_fraction=spec.cutoff_fraction, patient_zero=policy,
        regenerate_network=spec.regenerate_network, master_seed=seed,
        simple_graph=spec.simple_graph, undirected=spec.undirected)


def _sim_columns(prefix: str, seed: int, s: EnsembleSummary) -> Row:
    vals = {"seed": seed, "cutoff": s.cutoff, "trials": s.trials, "emerged": s.emerged,
            "emergence_freq": s.emergence_freq, "emergence_se": s.emergence_se,
            "trials_p0_masked": s.trials_p0_masked,
            "emergence_freq_p0_masked": s.emergence_freq_p0_masked,
            "trials_p0_unmasked": s.trials_p0_unmasked,
            "emergence_freq_p0_unmasked": s.emergence_freq_p0_unmasked,
            "size_mean": s.size_mean, "size_se": s.size_se, "size_masked": s.size_masked_mean,
            "size_unmasked": s.size_unmasked_mean, "masked_share": s.masked_share_mean}
    return {f"{prefix}{k}": v for k, v in vals.items()}


def _policies(spec: ExperimentSpec) -> tuple[str, ...]:
    return ("random", "masked", "unmasked") if spec.kind == "T_sweep" else (spec.patient_zero,)


def _sim_prefix(spec: ExperimentSpec, policy: str) -> str:
    return f"sim_p0_{policy}_" if spec.kind == "T_sweep" else "sim_"


def columns_for(spec: ExperimentSpec) -> list[str]:
    cols = list(PARAM_COLUMNS)
    if spec.kind == "threshold":
        cols += ["threshold_axis", "critical_analytic"]
        if spec.trials > 0 and spec.scan_grid:
            cols += ["critical_empirical", "scan_cutoff"]
            cols += [f"scan_freq@{g!r}" for g in spec.scan_grid]
        return cols
    cols += ANALYTIC_COLUMNS
    if spec.kind == "mutation_compare":
        cols += MUTATION_COLUMNS
    if spec.trials > 0:
        for policy in _policies(spec):
            cols += [_sim_prefix(spec, policy) + f for f in SIM_FIELDS]
    return cols


def _threshold_row(spec: ExperimentSpec, index: int, dist: DegreeDistribution,
                   params: MaskModelParams, pool: Executor | None) -> Row:
    ax = spec.threshold_axis
    row: Row = {"threshold_axis": ax,
                "critical_analytic": find_threshold(spec, ax, spec.bracket, base=(dist, params))}
    if spec.trials > 0 and spec.scan_grid:
        # Empirical threshold: smallest scan value whose emergence frequency exceeds the cutoff.
        row["critical_empirical"] = math.nan
        row["scan_cutoff"] = spec.emergence_cutoff
        seed = point_seed(spec.master_seed, index, spec.patient_zero)
        for j, x in enumerate(spec.scan_grid):
            d, p = at_point(dist, params, spec.factored, ax, x)
            cfg = _sim_config(spec, p, point_seed(seed, j, spec.patient_zero), spec.patient_zero)
            freq = run_ensemble(cfg, d, spec.n, workers=spec.workers, executor=pool).emergence_freq
            row[f"scan_freq@{x!r}"] = freq
            if freq > spec.emergence_cutoff:
                row["critical_empirical"] = x
                break
    return row


def run_experiment(spec: ExperimentSpec, *, write: bool = True,
                   progress: Callable[[int, int], None] | None = None) -> ExperimentResult:
    """Evaluate every grid point in order and write one CSV row per point."""
    columns = columns_for(spec)
    rows: list[Row] = []
    parallel = spec.workers > 1 and spec.trials > 0
    with ProcessPoolExecutor(max_workers=spec.workers) if parallel else nullcontext() as pool:
        for i, value in enumerate(spec.grid):
            dist, params = at_point(spec.dist, spec.params, spec.factored, spec.axis, value)
            row = _param_row(spec, dist, params, value)
            if spec.kind == "threshold":
                row.update(_threshold_row(spec, i, dist, params, pool))
            else:
                row.update(_analytic_columns(spec, dist, params))
                if spec.trials > 0:
                    for policy in _policies(spec):
                        seed = point_seed(spec.master_seed, i, policy)
                        summary = run_ensemble(_sim_config(spec, params, seed, policy), dist,
                                               spec.n, workers=spec.workers, executor=pool)
                        row.update(_sim_columns(_sim_prefix(spec, policy), seed, summary))
            rows.append(row)
            if progress is not None:
                progress(i + 1, len(spec.grid))
    result = ExperimentResult(spec, columns, rows, spec.csv)
    if write:
        write_csv(result.csv_path, columns, rows)
    return result


def _cell(v: object) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path: str | Path, columns: list[str], rows: list[Row]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c, "")) for c in columns])
