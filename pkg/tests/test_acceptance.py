"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import json
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from condpanel.cli import main
from condpanel.enumeration import (all_universe_blocks, enumerate_paths, partition_blocks,
                                   path_count, universe_blocks)
from condpanel.estimation import fit_cmle, profile
from condpanel.identification import Criterion, check_identification
from condpanel.io import panel_to_csv
from condpanel.likelihood import (CondLikContext, FeedbackKernel, cond_log_lik,
                                  conditional_closed_form, conditional_from_joint, hessian, score)
from condpanel.model import FeedbackSpec, Support, Theta, initial_conditions
from condpanel.simulation import DGPConfig, Normal, monte_carlo, simulate_panel
from condpanel.statistics import pinned_last_covariate

from conftest import (BINARY, SPEC1_A, SPEC1_B, SPEC2_T2_A, SPEC2_T2_B, SPEC2_T3_A, SPEC2_T3_B,
                      SPEC2_T3_C, random_dataset, record, simulated)

S1, S2 = FeedbackSpec.SPEC1, FeedbackSpec.SPEC2


def test_criterion_1_identification_table():
    start = time.perf_counter()
    mismatches = []
    for spec in (S1, S2):
        for T in range(1, 6):
            for k in (2, 3):
                expected = (T >= 3, False) if spec is S1 else (T >= 3, T >= 2)
                for crit in Criterion:
                    r = check_identification(T, Support.default(k), spec, crit)
                    if (r.rho_identified, r.beta_identified) != expected:
                        mismatches.append((spec.value, T, k, crit.value))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 60
    record(1, ok, f"40 cases, {len(mismatches)} mismatches, {elapsed:.1f}s (limit 60s)")
    assert ok, mismatches


def _block_with(blocks, path):
    return next(b for b in blocks if any(p == path for p, _ in b.members))


def test_criterion_2_worked_blocks():
    checks = []
    for spec, T, paths, component, want in [
        (S1, 3, (SPEC1_A, SPEC1_B), "t_rho", [1, 0]),
        (S2, 2, (SPEC2_T2_A, SPEC2_T2_B), "t_beta", [1, 0]),
        (S2, 3, (SPEC2_T3_A, SPEC2_T3_B, SPEC2_T3_C), "t_rho", [1, 0, 0]),
    ]:
        blocks = universe_blocks(T, BINARY, spec, paths[0].init)
        block = _block_with(blocks, paths[0])
        members = dict(block.members)
        same_block = all(p in members for p in paths)
        got = [getattr(members[p], component) for p in paths] if same_block else None
        checks.append(same_block and got == want)
    # the statistic the examples hold fixed
    m1 = dict(_block_with(universe_blocks(3, BINARY, S1, SPEC1_A.init), SPEC1_A).members)
    m3 = dict(_block_with(universe_blocks(3, BINARY, S2, SPEC2_T3_A.init), SPEC2_T3_A).members)
    checks.append(m1[SPEC1_A].t_beta == m1[SPEC1_B].t_beta == 2)
    checks.append(all(m3[p].t_beta == 1 for p in (SPEC2_T3_A, SPEC2_T3_B, SPEC2_T3_C)))
    ok = all(checks)
    record(2, ok, f"worked blocks found with exact statistics: {checks}")
    assert ok


def test_criterion_3_factorization_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(2026)
    pool = []
    for spec in (S1, S2):
        for T in range(1, 5):
            for k in (2, 3):
                support = Support.default(k)
                for init in initial_conditions(spec, support):
                    pool.extend((spec, support, b) for b in universe_blocks(T, support, spec, init)
                                if not b.degenerate)
    chosen = [pool[i] for i in rng.choice(len(pool), size=50, replace=False)]
    worst = 0.0
    for spec, support, block in chosen:
        for _ in range(10):
            theta = rng.uniform(-3, 3, 2)
            alpha = rng.normal(0, 2)
            G = FeedbackKernel.dirichlet(spec, support, rng, concentration=rng.uniform(0.3, 3, support.size))
            diff = conditional_from_joint(block, theta, alpha, G) - conditional_closed_form(block, theta)
            worst = max(worst, float(np.abs(diff).max()))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and elapsed < 120
    record(3, ok, f"50 blocks x 10 draws, max abs deviation {worst:.2e} (< 1e-12), {elapsed:.1f}s")
    assert ok


def test_criterion_4_spec1_beta_flatness():
    rng = np.random.default_rng(4)
    worst_grad = worst_range = 0.0
    for _ in range(100):
        T, k, N = int(rng.integers(1, 5)), int(rng.integers(2, 4)), int(rng.integers(1, 51))
        ds = random_dataset(rng, S1, T, k, N)
        ctx = CondLikContext.build(ds)
        for _ in range(10):
            theta = rng.uniform(-5, 5, 2)
            worst_grad = max(worst_grad, abs(float(score(theta, ds, ctx)[1])))
        curve = profile(ds, "beta", np.linspace(-5, 5, 11), ctx=ctx)
        vals = [v for _, v in curve]
        worst_range = max(worst_range, max(vals) - min(vals))
    ok = worst_grad < 1e-10 and worst_range < 1e-10
    record(4, ok, f"max |dl/dbeta| {worst_grad:.2e}, max profile range {worst_range:.2e} (< 1e-10)")
    assert ok


def test_criterion_5_score_and_hessian():
    rng = np.random.default_rng(5)
    worst_rel = worst_eig = -np.inf
    h = 1e-5
    for _ in range(1000):
        spec = S1 if rng.random() < 0.5 else S2
        T, k, N = int(rng.integers(1, 5)), int(rng.integers(2, 4)), int(rng.integers(1, 51))
        ds = random_dataset(rng, spec, T, k, N)
        ctx = CondLikContext.build(ds)
        theta = rng.uniform(-3, 3, 2)
        g = score(theta, ds, ctx)
        fd = np.array([(cond_log_lik(theta + h * e, ds, ctx) - cond_log_lik(theta - h * e, ds, ctx)) / (2 * h)
                       for e in np.eye(2)])
        # relative to the gradient scale, floored at 1 for flat samples
        worst_rel = max(worst_rel, float(np.abs(g - fd).max() / max(np.abs(g).max(), 1.0)))
        worst_eig = max(worst_eig, float(np.linalg.eigvalsh(hessian(theta, ds, ctx)).max()))
    ok = worst_rel < 1e-6 and worst_eig <= 1e-10
    record(5, ok, f"1000 draws, max score rel. error {worst_rel:.2e} (< 1e-6), "
                  f"max Hessian eigenvalue {worst_eig:.2e} (<= 1e-10)")
    assert ok


def test_criterion_6_optimizer_uniqueness():
    worst = 0.0
    n = 0
    seed = 0
    while n < 50:
        seed += 1
        ds = simulated(spec=2, T=3, N=300, seed=seed, theta=(0.5, 1.0))
        a = fit_cmle(ds, start=(0.0, 0.0))
        if a.free != ("rho", "beta") or a.at_boundary:
            continue
        b = fit_cmle(ds, start=(4.0, -4.0))
        worst = max(worst, max(abs(a.theta_hat[c] - b.theta_hat[c]) for c in ("rho", "beta")))
        n += 1
    ok = worst < 1e-8
    record(6, ok, f"50 informative Spec2 datasets, max start-point discrepancy {worst:.2e} (< 1e-8)")
    assert ok


@pytest.mark.slow
def test_criterion_7_monte_carlo_consistency():
    start = time.perf_counter()
    inits = initial_conditions(S2, BINARY)
    het = {inits[0]: Normal(-0.25, 1.0), inits[1]: Normal(0.25, 1.0)}
    mae = {"rho": [], "beta": []}
    coverage = within3 = None
    failures = 0
    for N in (500, 2000, 8000):
        cfg = DGPConfig(Theta(0.5, 1.0), S2, BINARY, 3, N, heterogeneity=het, seed=20261015)
        s = monte_carlo(cfg, 200)
        failures += s.n_failed
        for c in mae:
            mae[c].append(s.components[c]["median_abs_error"])
        if N == 8000:
            coverage = {c: s.components[c]["coverage_95"] for c in mae}
            within3 = {c: float(np.mean([abs(e["theta_hat"][c] - s.components[c]["truth"])
                                         <= 3 * e["std_err"][c] for e in s.estimates]))
                       for c in mae}
    elapsed = time.perf_counter() - start
    monotone = all(v[0] > v[1] > v[2] for v in mae.values())
    cover_ok = all(0.90 <= v <= 0.99 for v in coverage.values())
    ok = monotone and cover_ok and failures == 0 and elapsed < 600
    fmt = {c: [round(v, 4) for v in vals] for c, vals in mae.items()}
    record(7, ok, f"median abs error by N {fmt}, coverage@8000 {coverage}, "
                  f"within 3 SE {within3}, failures {failures}, {elapsed:.0f}s")
    assert ok
    assert all(v >= 0.95 for v in within3.values())


def test_criterion_8_partition_sanity():
    bad = []
    for spec in (S1, S2):
        for T in range(1, 6):
            for k in (2, 3):
                support = Support.default(k)
                expected = path_count(T, k, spec)
                assert expected == (2**T * k ** (T - 1) if spec is S1 else 2**T * k**T)
                for init, blocks in all_universe_blocks(T, support, spec).items():
                    if sum(b.size for b in blocks) != expected:
                        bad.append(("count", spec.value, T, k, init))
                    if spec is S1:
                        for b in blocks:
                            pin = pinned_last_covariate(init, b.stat)
                            if {p.full_x()[-1] for p, _ in b.members} != {pin} or \
                                    len({ts.t_beta for _, ts in b.members}) != 1:
                                bad.append(("pin", T, k, init, b.stat))
    ok = not bad
    record(8, ok, f"20 (spec, T, |X|) settings, {len(bad)} violations")
    assert ok, bad[:5]


def test_criterion_9_reproducibility(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("CONDPANEL_SEED", raising=False)
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
    cfg = {"theta0": {"rho": 0.5, "beta": 1.0}, "spec": 2, "support": [0, 1], "T": 3, "N": 300, "seed": 77}
    cfg_path = tmp_path / "dgp.json"
    cfg_path.write_text(json.dumps(cfg))
    data = tmp_path / "panel.csv"
    data.write_text(panel_to_csv(simulated(N=300, seed=5)))
    commands = {
        "identify": ["identify", "--spec", "1", "--T", "4", "--support", "0,1/2,1"],
        "fit": ["fit", "--data", str(data), "--spec", "2", "--support", "0,1"],
        "profile": ["profile", "--data", str(data), "--spec", "2", "--component", "beta", "--grid", "0:2:0.5"],
        "mc": ["mc", "--config", str(cfg_path), "--reps", "5"],
    }
    same = {}
    for name, argv in commands.items():
        outs = []
        for i in range(2):
            out = tmp_path / f"{name}{i}.json"
            assert main(argv + ["--out", str(out)]) == 0
            outs.append(out.read_bytes())
        same[name] = outs[0] == outs[1]
    sims = []
    for i in range(2):
        out = tmp_path / f"sim{i}.csv"
        assert main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
        sims.append(out.read_bytes())
    same["simulate"] = sims[0] == sims[1]
    cfg_obj = DGPConfig(Theta(0.5, 1.0), S2, BINARY, 3, 300, seed=77)
    same["simulate_api"] = simulate_panel(cfg_obj).individuals == simulate_panel(cfg_obj).individuals
    capsys.readouterr()
    ok = all(same.values())
    record(9, ok, f"byte-identical repeats: {same}")
    assert ok
