"""Monte Carlo SIR outbreaks (heterogeneous bond percolation) on contact networks."""
from __future__ import annotations

import csv
import math
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .degree import DegreeDistribution, sampler_args
from .graph import MASKED, UNMASKED, ContactNetwork, MaskModelParams, build_network, type_counts

PATIENT_ZERO_POLICIES = {
    "random": _kernels.POLICY_RANDOM,
    "masked": _kernels.POLICY_MASKED,
    "unmasked": _kernels.POLICY_UNMASKED,
}
DEFAULT_CUTOFF = (100, 0.0025)
TRIAL_CSV_FIELDS = ("trial", "seed", "p0_type", "infected_masked", "infected_unmasked", "total",
                    "emerged", "n_masked", "n_unmasked")


def epidemic_cutoff(n: int, rule: tuple[int, float] = DEFAULT_CUTOFF) -> int:
    """Smallest outbreak counted as an epidemic: ``max(floor, ceil(fraction * n))``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    floor, frac = rule
    # round() guards against 0.0025 * 1e5 landing a hair above 250.
    return max(int(floor), math.ceil(round(frac * n, 9)))


@dataclass(frozen=True)
class OutbreakResult:
    patient_zero_type: int
    infected_masked: int
    infected_unmasked: int
    total_infected: int
    emerged: bool
    trial_seed: int
    patient_zero: int = -1
    n_masked: int = 0
    n_unmasked: int = 0
    infected: np.ndarray | None = field(default=None, repr=False, compare=False)


def run_outbreak(net: ContactNetwork, params: MaskModelParams, patient_zero: int | str,
                 rng_seed: int, *, cutoff: int | None = None, undirected: bool = False,
                 return_infected: bool = False) -> OutbreakResult:
    """Spread from one patient zero until no infected node remains.

    Every newly infected node makes one Bernoulli(T[type(u)][type(v)]) attempt
    along each incident edge whose other end is still susceptible, then
    recovers. ``patient_zero`` is a node index or one of ``"random"``,
    ``"masked"``, ``"unmasked"`` (forced types resample uniformly until the
    type matches).

    With ``undirected=True`` each edge carries one shared uniform coin and an
    attempt succeeds when the coin is below the directional transmissibility.
    """
    if isinstance(patient_zero, str):
        try:
            policy = PATIENT_ZERO_POLICIES[patient_zero]
        except KeyError:
            raise ValueError(f"unknown patient-zero policy {patient_zero!r}") from None
        node = 0
        n_masked, n_unmasked = type_counts(net)
        if (policy == _kernels.POLICY_MASKED and n_masked == 0) or (
                policy == _kernels.POLICY_UNMASKED and n_unmasked == 0):
            raise ValueError(f"no {patient_zero} node to use as patient zero")
    else:
        node = int(patient_zero)
        if not 0 <= node < net.n:
            raise IndexError(f"patient zero {node} out of range for n={net.n}")
        policy = _kernels.POLICY_NODE
    if cutoff is None:
        cutoff = epidemic_cutoff(net.n)
    p0, c1, c2, state = _kernels.outbreak(
        np.random.default_rng(rng_seed), net.offsets, net.neighbors, net.slot_edge, net.n_edges,
        net.node_type, params.matrix, policy, node, undirected)
    total = c1 + c2
    n_masked, n_unmasked = type_counts(net)
    return OutbreakResult(
        patient_zero_type=int(net.node_type[p0]), infected_masked=int(c1), infected_unmasked=int(c2),
        total_infected=int(total), emerged=total >= cutoff, trial_seed=int(rng_seed),
        patient_zero=int(p0), n_masked=n_masked, n_unmasked=n_unmasked,
        infected=np.flatnonzero(state) if return_infected else None)


@dataclass(frozen=True)
class SimulationConfig:
    params: MaskModelParams
    trials: int = 2000
    cutoff_floor: int = DEFAULT_CUTOFF[0]
    cutoff_fraction: float = DEFAULT_CUTOFF[1]
    patient_zero: str = "random"
    regenerate_network: bool = True
    master_seed: int = 0
    simple_graph: bool = False
    undirected: bool = False
    materialize: bool = False

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.cutoff_floor < 2:
            raise ValueError("cutoff floor must be >= 2")
        if not 0.0 < self.cutoff_fraction < 1.0:
            raise ValueError("cutoff fraction must lie in (0,1)")
        if self.patient_zero not in PATIENT_ZERO_POLICIES:
            raise ValueError(f"unknown patient-zero policy {self.patient_zero!r}")

    @property
    def cutoff_rule(self) -> tuple[int, float]:
        return (self.cutoff_floor, self.cutoff_fraction)


def trial_seed(master_seed: int, trial: int) -> int:
    """64-bit per-trial seed hashed from ``(master_seed, trial)``."""
    state = np.random.SeedSequence([int(master_seed), int(trial)]).generate_state(1, np.uint64)
    return int(state[0])


def _derived_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([int(seed), tag]).generate_state(1, np.uint64)[0])


def uses_lazy_engine(config: SimulationConfig) -> bool:
    """Fresh networks can be matched on demand unless a whole-graph feature is needed."""
    return config.regenerate_network and not (config.simple_graph or config.undirected
                                              or config.materialize)


def replay_trial(config: SimulationConfig, dist: DegreeDistribution, n: int, seed: int,
                 network: ContactNetwork | None = None) -> OutbreakResult:
    """Re-run a single trial from its recorded seed."""
    cutoff = epidemic_cutoff(n, config.cutoff_rule)
    if network is None and uses_lazy_engine(config):
        cdf, support = sampler_args(dist, n)
        p0, p0_type, c1, c2, n1 = _kernels.lazy_outbreak(
            np.random.default_rng(seed), cdf, support, n, float(config.params.m),
            config.params.matrix, PATIENT_ZERO_POLICIES[config.patient_zero])
        total = int(c1 + c2)
        return OutbreakResult(patient_zero_type=int(p0_type), infected_masked=int(c1),
                              infected_unmasked=int(c2), total_infected=total,
                              emerged=total >= cutoff, trial_seed=seed, patient_zero=int(p0),
                              n_masked=int(n1), n_unmasked=n - int(n1))
    if network is None:
        network = build_network(dist, n, config.params.m, seed, simple=config.simple_graph)
    result = run_outbreak(network, config.params, config.patient_zero, _derived_seed(seed, 1),
                          cutoff=cutoff, undirected=config.undirected)
    return replace(result, trial_seed=seed)


def _run_trials(config: SimulationConfig, dist: DegreeDistribution, n: int,
                start: int, stop: int) -> list[OutbreakResult]:
    network = None
    if not config.regenerate_network:
        network = build_network(dist, n, config.params.m, _derived_seed(config.master_seed, 0xFEED),
                                simple=config.simple_graph)
    return [replay_trial(config, dist, n, trial_seed(config.master_seed, t), network)
            for t in range(start, stop)]


@dataclass
class EnsembleSummary:
    """Aggregates over an ensemble; sizes are fractions of ``n`` conditioned on emergence."""

    n: int
    trials: int
    cutoff: int
    emerged: int
    emergence_freq: float
    emergence_se: float
    trials_p0_masked: int
    emerged_p0_masked: int
    emergence_freq_p0_masked: float
    trials_p0_unmasked: int
    emerged_p0_unmasked: int
    emergence_freq_p0_unmasked: float
    size_mean: float
    size_se: float
    size_masked_mean: float      # fraction of masked nodes infected
    size_unmasked_mean: float    # fraction of unmasked nodes infected
    masked_share_mean: float     # masked infections as a fraction of n
    mean_total_infected: float
    records: list[OutbreakResult] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict[str, float | int]:
        d = asdict(self)
        d.pop("records")
        return d


def summarize(records: Sequence[OutbreakResult], n: int, cutoff: int) -> EnsembleSummary:
    """Aggregate trial records in trial order.

    With no emerged trial the conditional sizes are reported as 0: no
    macroscopic outbreak was observed.
    """
    trials = len(records)
    em = [r for r in records if r.emerged]
    p = len(em) / trials if trials else float("nan")

    def freq(kind: int) -> tuple[int, int, float]:
        sub = [r for r in records if r.patient_zero_type == kind]
        k = sum(r.emerged for r in sub)
        return len(sub), k, (k / len(sub) if sub else float("nan"))

    tm, em_m, fm = freq(MASKED)
    tu, em_u, fu = freq(UNMASKED)
    if em:
        sizes = np.array([r.total_infected / n for r in em])
        size_mean = float(sizes.mean())
        size_se = float(sizes.std(ddof=1) / math.sqrt(len(sizes))) if len(sizes) > 1 else 0.0
        s1 = [r.infected_masked / r.n_masked for r in em if r.n_masked > 0]
        s2 = [r.infected_unmasked / r.n_unmasked for r in em if r.n_unmasked > 0]
        size_masked = float(np.mean(s1)) if s1 else 0.0
        size_unmasked = float(np.mean(s2)) if s2 else 0.0
        share = float(np.mean([r.infected_masked / n for r in em]))
    else:
        size_mean = size_se = size_masked = size_unmasked = share = 0.0
    return EnsembleSummary(
        n=n, trials=trials, cutoff=cutoff, emerged=len(em), emergence_freq=p,
        emergence_se=math.sqrt(p * (1 - p) / trials) if trials else float("nan"),
        trials_p0_masked=tm, emerged_p0_masked=em_m, emergence_freq_p0_masked=fm,
        trials_p0_unmasked=tu, emerged_p0_unmasked=em_u, emergence_freq_p0_unmasked=fu,
        size_mean=size_mean, size_se=size_se, size_masked_mean=size_masked,
        size_unmasked_mean=size_unmasked, masked_share_mean=share,
        mean_total_infected=float(np.mean([r.total_infected for r in records])) if trials else 0.0,
        records=list(records))


def _chunks(trials: int, workers: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, trials, workers + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_ensemble(config: SimulationConfig, dist: DegreeDistribution, n: int,
                 workers: int = 1, executor: Executor | None = None) -> EnsembleSummary:
    """Run ``config.trials`` independent outbreaks and aggregate them.

    Trial ``t`` uses ``trial_seed(master_seed, t)`` whatever the worker count,
    and records are aggregated in trial order, so results do not depend on
    ``workers``. Pass ``executor`` to reuse one process pool across calls.
    """
    n = int(n)
    workers = max(1, int(workers))
    if workers == 1 or config.trials < 2:
        records = _run_trials(config, dist, n, 0, config.trials)
    elif executor is not None:
        records = _map_chunks(executor, config, dist, n, workers)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = _map_chunks(pool, config, dist, n, workers)
    return summarize(records, n, epidemic_cutoff(n, config.cutoff_rule))


def _map_chunks(pool: Executor, config: SimulationConfig, dist: DegreeDistribution, n: int,
                workers: int) -> list[OutbreakResult]:
    chunks = _chunks(config.trials, workers)
    parts = pool.map(_run_trials, *zip(*[(config, dist, n, a, b) for a, b in chunks]))
    return [r for part in parts for r in part]


def write_trials_csv(records: Iterable[OutbreakResult], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRIAL_CSV_FIELDS)
        for i, r in enumerate(records):
            w.writerow((i, r.trial_seed, r.patient_zero_type, r.infected_masked, r.infected_unmasked,
                        r.total_infected, int(r.emerged), r.n_masked, r.n_unmasked))


def read_trials_csv(path: str | Path) -> list[OutbreakResult]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(OutbreakResult(
                patient_zero_type=int(row["p0_type"]), infected_masked=int(row["infected_masked"]),
                infected_unmasked=int(row["infected_unmasked"]), total_infected=int(row["total"]),
                emerged=bool(int(row["emerged"])), trial_seed=int(row["seed"]),
                n_masked=int(row.get("n_masked") or 0), n_unmasked=int(row.get("n_unmasked") or 0)))
    return out
