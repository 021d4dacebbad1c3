"""Acceptance criteria C1-C11 at their stated tolerances.

Each test records a PASS/FAIL line shown in the pytest terminal summary.
Run alone with ``pytest -m acceptance``; the full set takes about 20 minutes
on one core.
"""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from maskperc.analytic import (f_closed, f_literal, mutation_epidemic_size, mutation_map, predict)
from maskperc.config import validate_config
from maskperc.degree import DegreeDistribution
from maskperc.experiment import find_threshold, run_experiment
from maskperc.graph import ContactNetwork, MaskModelParams
from maskperc.simulate import SimulationConfig, run_ensemble, run_outbreak
from oracles import enumerate_outbreaks, newman_single_type, poisson_table

pytestmark = pytest.mark.acceptance

N = 100_000
FIG1 = MaskModelParams(0.45, 0.126, 0.18, 0.42, 0.6)
FIG1_CFG = "[model]\nm = 0.45\nT11 = 0.126\nT12 = 0.18\nT21 = 0.42\nT22 = 0.6\n"


def poisson(lam: float) -> DegreeDistribution:
    return DegreeDistribution.poisson(lam)


@pytest.fixture(scope="module")
def fig1_ensembles():
    """5,000-trial ensembles at n = 1e5 shared by the emergence and size criteria."""
    out = {}
    for i, lam in enumerate((2, 4, 6, 8, 10)):
        cfg = SimulationConfig(params=FIG1, trials=5000, master_seed=1000 + i)
        out[lam] = run_ensemble(cfg, poisson(lam), N)
    return out


def test_c1_f_closed_matches_triple_sum(record_criterion):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        m, t11, t12, t21, t22, q1, q2 = rng.random(7)
        p = MaskModelParams(m, t11, t12, t21, t22)
        for z in range(9):
            for typ in (1, 2):
                worst = max(worst, abs(f_closed(z, q1, q2, p, typ) - f_literal(z, q1, q2, p, typ)))
    ok = worst < 1e-12
    record_criterion("C1 f_closed vs literal triple sum", ok, f"max abs err {worst:.2e}")
    assert ok


def test_c2_mutation_mapping(record_criterion):
    mut = mutation_map(FIG1)
    rows = [abs(sum(r) - 1) for r in mut.mu]
    ok = (abs(mut.Q1 - 0.1557) < 1e-12 and abs(mut.Q2 - 0.519) < 1e-12 and max(rows) < 1e-12)
    record_criterion("C2 mutation mapping", ok,
                     f"Q1={mut.Q1:.6f} Q2={mut.Q2:.6f} row-sum err {max(rows):.1e}")
    assert ok


def test_c3_threshold_in_T(record_criterion):
    spec = validate_config("[network]\nmean = 5\n[model]\nm = 0.45\nT = 0.3\n"
                           "T_mask1 = 0.3\nT_mask2 = 0.7\n")
    t_star = find_threshold(spec, "T", (0.0, 1.0))
    freqs = {}
    for i, T in enumerate((0.28, 0.34)):
        p = MaskModelParams.factored(0.45, T, 0.3, 0.7)
        freqs[T] = run_ensemble(SimulationConfig(params=p, trials=2000, master_seed=300 + i),
                                poisson(5), N).emergence_freq
    ok = abs(t_star - 0.3103) <= 0.0005 and freqs[0.28] < 0.02 and freqs[0.34] > 0.10
    record_criterion("C3 threshold in T", ok,
                     f"T*={t_star:.5f} freq(0.28)={freqs[0.28]:.4f} freq(0.34)={freqs[0.34]:.4f}")
    assert ok


def test_c4_emergence_matches(fig1_ensembles, record_criterion):
    parts, ok = [], True
    for lam in (4, 6, 8, 10):
        theory = predict(poisson(lam), FIG1).emergence_mixed
        sim = fig1_ensembles[lam].emergence_freq
        ok &= abs(sim - theory) <= 0.02
        parts.append(f"{lam}:{sim:.4f}/{theory:.4f}")
    record_criterion("C4 emergence sim/theory", ok, " ".join(parts))
    assert ok


def test_c5_size_matches(fig1_ensembles, record_criterion):
    parts, ok = [], True
    for lam in (2, 4, 6, 8, 10):
        theory = predict(poisson(lam), FIG1).S
        sim = fig1_ensembles[lam].size_mean
        ok &= abs(sim - theory) <= 0.01
        parts.append(f"{lam}:{sim:.4f}/{theory:.4f}")
    record_criterion("C5 size sim/theory", ok, " ".join(parts))
    assert ok


def test_c6_mask_vs_mutation_divergence(record_criterion):
    mut = mutation_map(FIG1)

    def gap(lam: float) -> float:
        return mutation_epidemic_size(poisson(lam), mut).total - predict(poisson(lam), FIG1).S

    low = [abs(gap(lam)) for lam in np.arange(0, 2.51, 0.5)]
    g25, g10 = abs(gap(2.5)), abs(gap(10.0))
    ok = max(low) <= 0.01 and g10 >= 5 * g25
    record_criterion("C6 mask vs mutation size", ok,
                     f"max gap (mean<=2.5)={max(low):.2e} gap(2.5)={g25:.2e} gap(10)={g10:.4f}")
    assert ok


def test_c7_mask_sweep_shape(record_criterion):
    ms = np.round(np.arange(0, 1.0001, 0.05), 10)
    preds = [predict(poisson(5), replace(FIG1, m=float(m))) for m in ms]
    total = np.array([p.S for p in preds])
    unmasked = np.array([p.S2 * (1 - p.m) for p in preds])
    masked = np.array([p.S1 * p.m for p in preds])
    mono = bool(np.all(np.diff(total) <= 1e-12) and np.all(np.diff(unmasked) <= 1e-12))
    peak = float(ms[int(np.argmax(masked))])
    spots, sim_ok = [], True
    for i, m in enumerate((0.2, 0.45, 0.6)):
        p = replace(FIG1, m=m)
        pred = predict(poisson(5), p)
        s = run_ensemble(SimulationConfig(params=p, trials=500, master_seed=700 + i), poisson(5), N)
        sim_ok &= abs(s.size_mean - pred.S) <= 0.01 and abs(s.masked_share_mean - pred.S1 * m) <= 0.01
        spots.append(f"m={m}:{s.size_mean:.4f}/{pred.S:.4f}")
    ok = mono and abs(peak - 0.60) <= 0.05 + 1e-12 and sim_ok
    record_criterion("C7 mask-sweep shape", ok, f"monotone={mono} masked peak at m={peak} " + " ".join(spots))
    assert ok


def test_c8_critical_degree_curve(tmp_path, record_criterion):
    spec = validate_config("[experiment]\nkind = threshold\n[network]\nn = 5000\n" + FIG1_CFG
                           + "[sweep]\naxis = m\ngrid = 0:1:0.1\n[threshold]\naxis = mean\n"
                           "bracket = 0,50\nscan_grid = 0.5:12:0.5\nemergence_cutoff = 0.05\n"
                           "[sim]\ntrials = 1000\nmaster_seed = 8\n")
    rows = run_experiment(replace(spec, csv=tmp_path / "c8.csv")).rows
    crit = np.array([r["critical_analytic"] for r in rows])
    emp = np.array([r["critical_empirical"] for r in rows], float)
    mono = bool(np.all(np.diff(crit) > 0))
    worst = float(np.nanmax(np.abs(emp - crit))) if not np.any(np.isnan(emp)) else math.inf
    ok = mono and worst <= 0.5 + 1e-12
    record_criterion("C8 critical degree vs m", ok,
                     f"monotone={mono} max |empirical-analytic|={worst:.3f} (grid step 0.5)")
    assert ok


SMALL_GRAPHS = [
    (4, [(0, 1), (1, 2), (2, 3)], [1, 2, 1, 2]),
    (4, [(0, 1), (1, 2), (2, 0), (2, 3)], [2, 1, 2, 1]),
    (5, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2)], [1, 1, 2, 2, 1]),
    (6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)], [1, 2, 2, 1, 2, 1]),
    (6, [(0, 1), (0, 1), (1, 2), (2, 3), (3, 1), (3, 4), (4, 5), (5, 2), (2, 2), (4, 0)],
     [2, 1, 1, 2, 2, 1]),
]


def test_c9_small_graph_exhaustive(record_criterion):
    params = MaskModelParams(0.5, 0.15, 0.35, 0.5, 0.65)
    trials = 100_000
    worst_z, ok = 0.0, True
    for g, (n, edges, types) in enumerate(SMALL_GRAPHS):
        exact, _ = enumerate_outbreaks(n, edges, types, params.matrix, 0)
        net = ContactNetwork.from_edges(n, np.array(edges), np.array(types))
        counts = np.zeros(n)
        for s in range(trials):
            counts[run_outbreak(net, params, 0, rng_seed=(g << 32) + s, return_infected=True).infected] += 1
        freq = counts / trials
        exact = np.clip(exact, 0.0, 1.0)
        sd = np.sqrt(exact * (1 - exact) / trials)
        z = np.where(sd > 0, np.abs(freq - exact) / np.where(sd > 0, sd, 1), np.abs(freq - exact) * 1e12)
        worst_z = max(worst_z, float(z.max()))
        ok &= bool(np.all(z <= 3))
    record_criterion("C9 exhaustive small graphs", ok, f"worst |z|={worst_z:.2f} over 5 graphs")
    assert ok


def test_c10_single_type_reduction(record_criterion):
    cases = [(0.0, 5.0, MaskModelParams(0.0, 0.126, 0.18, 0.42, 0.6), 0.6, 2),
             (1.0, 16.0, MaskModelParams(1.0, 0.126, 0.18, 0.42, 0.6), 0.126, 1)]
    parts, ok = [], True
    for i, (m, lam, p, T, typ) in enumerate(cases):
        k, pk = poisson_table(lam)
        em_ref, s_ref = newman_single_type(k, pk, T)
        pred = predict(poisson(lam), p)
        em = pred.emergence[typ - 1]
        size = pred.S1 if typ == 1 else pred.S2
        analytic_err = max(abs(em - em_ref), abs(pred.emergence_mixed - em_ref), abs(size - s_ref),
                           abs(pred.S - s_ref))
        s = run_ensemble(SimulationConfig(params=p, trials=2000, master_seed=1010 + i), poisson(lam), N)
        z_em = abs(s.emergence_freq - em_ref) / s.emergence_se
        z_size = abs(s.size_mean - s_ref) / s.size_se
        ok &= analytic_err < 1e-9 and z_em <= 3 and z_size <= 3
        parts.append(f"m={m:g}: analytic err {analytic_err:.1e}, sim z(emergence)={z_em:.2f} "
                     f"z(size)={z_size:.2f}")
    record_criterion("C10 single-type reduction", ok, "; ".join(parts))
    assert ok


def test_c11_determinism_across_workers(tmp_path, record_criterion):
    spec = validate_config("[experiment]\nkind = emergence\n[network]\nn = 20000\n" + FIG1_CFG
                           + "[sweep]\ngrid = 3,5,8\n[sim]\ntrials = 64\nmaster_seed = 11\n")
    outs = []
    for w in (1, 2, 8):
        s = replace(spec, workers=w, csv=tmp_path / f"w{w}.csv")
        run_experiment(s)
        outs.append(s.csv.read_bytes())
    ok = outs[0] == outs[1] == outs[2]
    record_criterion("C11 byte-identical CSV (1/2/8 workers)", ok, f"{len(outs[0])} bytes")
    assert ok
