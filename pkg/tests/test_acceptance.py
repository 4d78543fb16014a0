"""Acceptance gate: every numbered criterion at its stated tolerance.

Each test prints one PASS line (pytest -s shows them); a failure of any
assertion fails the corresponding criterion.  Criteria with runtime budgets
assert the elapsed wall time as well.
"""

import time

import numpy as np
import pytest

from blockpool import verify
from blockpool.admm import (SolverConfig, drap_admm_run, drap_logistic_run,
                            dual_distributed_step, primal_distributed_logistic_run,
                            primal_distributed_run, primal_ls_step)
from blockpool.baselines import (direct_ls, logistic_gradient, logistic_hessian,
                                 logistic_value, newton_logistic, sigmoid)
from blockpool.cli import run_experiment
from blockpool.generators import (GenSpec, gen_equal_blocks, gen_paper_example,
                                  gen_pcg_construction, gen_random)
from blockpool.linalg import cholesky_factor, solve_factored
from blockpool.model import (Objective, absolute_loss, block_grams,
                             partition_rows, relative_al_ratio)
from blockpool.sharing import allocate_pool_to_one_center, assemble_round, build_pool
from blockpool.spectral import build_Md, build_Mp

SEED = 0


def _ok(name, detail=""):
    print(f"PASS {name}" + (f": {detail}" if detail else ""))


def test_criterion_01_printed_example_rates():
    t0 = time.perf_counter()
    radii = {}
    for which, want in (("scenario_one", 0.6661), ("scenario_two", 0.5264)):
        grams = block_grams(gen_paper_example(which))
        radii[which] = build_Mp(grams, 1.0).radius
        assert radii[which] == pytest.approx(want, abs=5e-4)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _ok("criterion 1 (printed-example rates)",
        f"radii {radii['scenario_one']:.4f}/{radii['scenario_two']:.4f} in {elapsed:.2f}s")


def test_criterion_02_theorem1_sweep():
    t0 = time.perf_counter()
    report = verify.run_thm1(seed=SEED, trials=500)
    elapsed = time.perf_counter() - t0
    assert report["pass"], report["violations"][:3]
    random_checks = [c for c in report["checks"] if "slack" in c]
    equality_checks = [c for c in report["checks"] if "equality_gap" in c]
    assert len(random_checks) == 4 * 500
    assert all(c["slack"] >= -1e-9 for c in random_checks)
    assert all(c["equality_gap"] <= 1e-8 for c in equality_checks)
    assert elapsed < 60.0
    _ok("criterion 2 (theorem-1 sweep)",
        f"{len(random_checks)} random + {len(equality_checks)} equality checks in {elapsed:.1f}s")


def test_criterion_03_theorem2_sweep():
    report = verify.run_thm2(seed=SEED, trials=500)
    assert report["pass"], report["violations"][:3]
    random_checks = [c for c in report["checks"] if "slack" in c]
    equality_checks = [c for c in report["checks"] if "equality_gap" in c]
    assert len(random_checks) == 500
    assert all(c["slack"] >= -1e-9 for c in random_checks)
    assert all(c["equality_gap"] <= 1e-8 for c in equality_checks)
    _ok("criterion 3 (theorem-2 sweep)", f"{len(report['checks'])} checks")


def test_criterion_04_two_dominant_construction():
    report = verify.run_prop1(seed=SEED, trials=25)
    assert report["pass"], report["violations"][:3]
    for c in report["checks"]:
        assert abs(c["radius"] - c["constructed"]) <= 1e-8
        assert c["radius"] <= c["loose"] + 1e-9
        assert c["constructed"] >= c["equal_block"] - 1e-12
    assert {c["b"] for c in report["checks"]} == {3, 4, 5}
    _ok("criterion 4 (two-dominant rates)", f"{len(report['checks'])} instances")


def test_criterion_05_gd_crossover():
    report = verify.run_prop2(seed=SEED, trials=200)
    assert report["pass"], report["violations"][:3]
    assert len(report["checks"]) == 200
    assert all(c["radius_admm"] < c["radius_gd"] for c in report["checks"])
    _ok("criterion 5 (ADMM beats GD outside the crossover band)",
        "200/200 sampled step sizes")


def test_criterion_06_primal_dual_equivalence():
    report = verify.run_prop5(seed=SEED, trials=100, trace_iters=50)
    assert report["pass"], report["violations"][:3]
    mats = [c for c in report["checks"] if "matrix_diff" in c]
    assert len(mats) == 100
    assert all(c["matrix_diff"] <= 1e-12 for c in mats)
    trace = [c for c in report["checks"] if "beta_trace_gap" in c][0]
    assert trace["beta_trace_gap"] <= 1e-8 and trace["iters"] == 50
    _ok("criterion 6 (primal/dual equivalence)",
        f"max matrix diff {max(c['matrix_diff'] for c in mats):.2e}, "
        f"trace gap {trace['beta_trace_gap']:.2e}")


def test_criterion_07_cyclic_and_rp_rates():
    rep_c = verify.run_cyclic(seed=SEED)
    assert rep_c["pass"], rep_c["violations"][:3]
    for c in rep_c["checks"]:
        assert abs(c["radius"] - c["root"]) <= 1e-6
        assert c["radius"] < c["distributed"]
    rep_rp = verify.run_rp(seed=SEED)
    assert rep_rp["pass"], rep_rp["violations"][:3]
    for c in rep_rp["checks"]:
        assert c["radius"] < c["distributed"]
    _ok("criterion 7 (cyclic root + permuted-order maps)",
        f"{len(rep_c['checks'])} cyclic, {len(rep_rp['checks'])} permuted-order cases")


def test_criterion_08_solver_vs_map_consistency():
    rng = np.random.default_rng(SEED)
    worst_primal = worst_dual = 0.0
    for trial in range(12):
        b = int(rng.integers(2, 5))
        p = int(rng.integers(1, 4))
        X = rng.standard_normal((b * (p + 3), p))
        y = X @ rng.standard_normal(p) + 0.1 * rng.standard_normal(X.shape[0])
        ds = partition_rows(X, y, b)
        rho = float(rng.uniform(0.3, 2.5))
        eye = np.eye(p)
        grams, rhs, solves_p, solves_d = [], [], [], []
        for i in range(b):
            Xi, yi = ds.block(i)
            g = Xi.T @ Xi
            grams.append(g)
            rhs.append(Xi.T @ yi)
            Lp = cholesky_factor(rho * eye + g)
            Ld = cholesky_factor(eye + rho * g)
            solves_p.append(lambda v, L=Lp: solve_factored(L, v))
            solves_d.append(lambda v, L=Ld: solve_factored(L, v))
        # primal: one step equals M_p xi + const
        beta = rng.standard_normal(p)
        lams = [rng.standard_normal(p) for _ in range(b)]
        lbar = sum(lams) / b
        lams = [l - lbar for l in lams]
        nb, nl, _ = primal_ls_step(solves_p, rhs, rho, beta, lams)
        xi = np.concatenate([rho * beta + l for l in lams])
        xi_next = np.concatenate([rho * nb + l for l in nl])
        mp = build_Mp(grams, rho).matrix
        const_p = np.concatenate([
            solve_factored(cholesky_factor(eye + grams[i] / rho), rhs[i])
            for i in range(b)])
        worst_primal = max(worst_primal,
                           float(np.abs(mp @ xi + const_p - xi_next).max()))
        # dual: one step equals M_d eta + const
        beta_d = rng.standard_normal(p)
        vs = [rng.standard_normal(p) for _ in range(b)]
        vbar = sum(vs) / b
        vs = [v - vbar for v in vs]
        nbd, nvs, mus = dual_distributed_step(solves_d, grams, rhs, rho, beta_d, vs)
        eta = np.concatenate([rho * vs[i] - beta_d for i in range(b)])
        eta_next = np.concatenate([rho * mus[i] - beta_d for i in range(b)])
        md = build_Md(grams, rho).matrix
        const_d = -rho * np.concatenate([
            solve_factored(cholesky_factor(eye + rho * grams[i]), rhs[i])
            for i in range(b)])
        worst_dual = max(worst_dual,
                         float(np.abs(md @ eta + const_d - eta_next).max()))
    assert worst_primal <= 1e-10
    assert worst_dual <= 1e-10
    _ok("criterion 8 (solver-vs-map action)",
        f"worst primal {worst_primal:.2e}, worst dual {worst_dual:.2e}")


def test_criterion_09_pcg_conditioning_and_ordering():
    report = verify.run_pcg_cond(seed=SEED, sample_rows=10_000, alpha_percent=5.0)
    assert report["pass"], report["violations"][:3]
    analytic = {c["check"]: c for c in report["checks"] if c["check"].startswith("analytic")}
    assert abs(analytic["analytic_kappa_h1"]["measured"] - 50.5) <= 1e-6
    assert abs(analytic["analytic_kappa_h2"]["measured"] - 2.0 / 1.01) <= 1e-6
    assert abs(analytic["analytic_kappa_local"]["measured"] - 25.5025) <= 1e-6
    sampled = [c for c in report["checks"] if c["check"] == "sampled_kappa"][0]
    assert sampled["kappa_global"] < sampled["kappa_local"]
    assert sampled["kappa_global"] <= 1.2
    ordering = [c for c in report["checks"] if c["check"] == "iteration_ordering"][0]
    assert ordering["global"] < ordering["local"] < ordering["identity"]
    _ok("criterion 9 (preconditioning)",
        f"kappas (50.5, 1.9802, 25.5025) hit; iters "
        f"{ordering['global']}<{ordering['local']}<{ordering['identity']}")


def test_criterion_10_data_sharing_benefit():
    t0 = time.perf_counter()
    ds = gen_equal_blocks(GenSpec(b=4, p=50, rows_per_block=500, seed=10))
    bstar = direct_ls(ds.X, ds.y)
    plan = build_pool(ds, 5.0, seed=10, drap_mode=True)
    cfg = SolverConfig(rho=1.0, max_iters=200, tol=0.0, record_trace=False)
    al_primal = absolute_loss(
        primal_distributed_run(ds, Objective(), cfg, beta_star=bstar).beta, bstar)
    al_drap = absolute_loss(
        drap_admm_run(ds, plan, cfg, beta_star=bstar).beta, bstar)
    assert al_drap * 10.0 < al_primal
    # one-center reallocation strictly lowers the worst-case radius
    grams = block_grams(ds, theorem_mode=True)
    shifted = allocate_pool_to_one_center(ds, plan, 0)
    grams_shifted = block_grams(shifted)
    r_before = build_Mp(grams, 1.0).radius
    r_after = build_Mp(grams_shifted, 1.0).radius
    assert r_after < r_before
    # same direction with a wide margin at a smaller large-step size
    rho2 = 3.0 * grams.qbar
    r_before2 = build_Mp(grams, rho2).radius
    r_after2 = build_Mp(grams_shifted, rho2).radius
    assert r_after2 < r_before2 - 1e-8
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _ok("criterion 10 (sharing benefit)",
        f"AL ratio {al_primal / al_drap:.1f}x; radius drop {r_before - r_after:.2e} "
        f"(and {r_before2 - r_after2:.2e} at rho=3*qbar) in {elapsed:.1f}s")


def _table3_instance(seed, n=500, p=20, b=4, scale=0.3, signal=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) * scale
    beta = rng.standard_normal(p)
    beta *= signal / np.sqrt(beta @ beta) / scale
    y = np.where(rng.random(n) < sigmoid(X @ beta), 1.0, -1.0)
    return partition_rows(X, y, b), beta


def test_criterion_11_logistic_properties():
    # (a) analytic gradient / Hessian against central finite differences
    rng = np.random.default_rng(SEED)
    X = rng.standard_normal((40, 5))
    y = np.where(rng.random(40) < 0.5, 1.0, -1.0)
    beta = rng.standard_normal(5)
    g = logistic_gradient(X, y, beta, 0.2)
    H = logistic_hessian(X, y, beta, 0.2)
    h = 1e-6
    for j in range(5):
        e = np.zeros(5)
        e[j] = h
        fd_g = (logistic_value(X, y, beta + e, 0.2)
                - logistic_value(X, y, beta - e, 0.2)) / (2 * h)
        assert abs(fd_g - g[j]) <= 1e-5 * max(1.0, abs(g[j]))
        fd_h = (logistic_gradient(X, y, beta + e, 0.2)
                - logistic_gradient(X, y, beta - e, 0.2)) / (2 * h)
        assert np.abs(fd_h - H[:, j]).max() <= 1e-4 * max(1.0, np.abs(H[:, j]).max())

    # (b) distributed and pool-reassembled logistic solvers reach the
    # centralized Newton optimum on n=500, p=20
    ds, _ = _table3_instance(SEED, scale=1.0, signal=1.5)
    bstar = newton_logistic(ds.X, ds.y)
    cfg = SolverConfig(rho=1.0, max_iters=6000, tol=1e-6, record_trace=False)
    al_dist = absolute_loss(
        primal_distributed_logistic_run(ds, cfg, beta_star=bstar).beta, bstar)
    plan = build_pool(ds, 5.0, seed=SEED)
    al_drap = absolute_loss(
        drap_logistic_run(ds, plan, cfg, beta_star=bstar).beta, bstar)
    assert al_dist <= 1e-4
    assert al_drap <= 1e-4

    # (c) 10-iteration relative-loss ordering versus Newton, averaged over
    # 20 seeded replicates of the synthetic setup
    r_primal, r_drap = [], []
    cfg10 = SolverConfig(rho=1.0, max_iters=10, record_trace=False)
    for seed in range(20):
        dsk, btrue = _table3_instance(seed)
        bn = newton_logistic(dsk.X, dsk.y, max_iters=10, strict=False)
        al_n = absolute_loss(bn, btrue)
        plan = build_pool(dsk, 5.0, seed=seed)
        r_primal.append(relative_al_ratio(
            absolute_loss(primal_distributed_logistic_run(dsk, cfg10).beta, btrue), al_n))
        r_drap.append(relative_al_ratio(
            absolute_loss(drap_logistic_run(dsk, plan, cfg10).beta, btrue), al_n))
    mean_primal = float(np.mean(r_primal))
    mean_drap = float(np.mean(r_drap))
    assert mean_drap < mean_primal
    assert mean_drap < 0.0
    _ok("criterion 11 (logistic properties)",
        f"ALs {al_dist:.1e}/{al_drap:.1e}; mean r_AL drap {mean_drap:+.3f} "
        f"< primal {mean_primal:+.3f}")


def test_criterion_12_determinism():
    # generators
    spec = GenSpec(b=3, p=4, rows_per_block=10, seed=5)
    a, b = gen_equal_blocks(spec), gen_equal_blocks(spec)
    assert a.X.tobytes() == b.X.tobytes() and a.y.tobytes() == b.y.tobytes()
    g1 = gen_random(spec, dist="uniform")
    g2 = gen_random(spec, dist="uniform")
    assert g1.X.tobytes() == g2.X.tobytes()
    c1 = gen_pcg_construction(0.2, 300, seed=3)
    c2 = gen_pcg_construction(0.2, 300, seed=3)
    assert c1.X.tobytes() == c2.X.tobytes()
    # sharing machinery
    ds = gen_random(GenSpec(b=4, p=3, rows_per_block=25, seed=1))
    p1, p2 = build_pool(ds, 10.0, seed=2), build_pool(ds, 10.0, seed=2)
    assert (p1.pool == p2.pool).all()
    a1, a2 = assemble_round(p1, 7, seed=2), assemble_round(p2, 7, seed=2)
    assert all((x == z).all() for x, z in zip(a1.assembled, a2.assembled))
    # randomized solvers
    cfg = SolverConfig(rho=1.0, max_iters=40, seed=9, record_trace=True)
    r1 = drap_admm_run(ds, p1, cfg)
    r2 = drap_admm_run(ds, p2, cfg)
    assert r1.beta.tobytes() == r2.beta.tobytes()
    assert r1.trace["beta_change"] == r2.trace["beta_change"]
    dsl, _ = _table3_instance(3, n=120, p=5)
    planl = build_pool(dsl, 5.0, seed=4)
    l1 = drap_logistic_run(dsl, planl, SolverConfig(rho=1.0, max_iters=25, seed=9,
                                                    record_trace=False))
    l2 = drap_logistic_run(dsl, planl, SolverConfig(rho=1.0, max_iters=25, seed=9,
                                                    record_trace=False))
    assert l1.beta.tobytes() == l2.beta.tobytes()
    # experiment reports modulo wall time
    import json
    cfg_exp = {
        "dataset": {"generator": "equal_blocks", "b": 3, "p": 4,
                    "rows_per_block": 10, "seed": 7},
        "b": 3, "seed": 1, "alpha_percent": 10.0,
        "stop": {"mode": "fixed_iters", "iterations": 20},
        "algorithms": [{"name": "primal_distributed"}, {"name": "drap"},
                       {"name": "rp"}],
    }
    rep1, _, _ = run_experiment(cfg_exp)
    rep2, _, _ = run_experiment(cfg_exp)
    rep1.pop("timings")
    rep2.pop("timings")
    assert json.dumps(rep1, sort_keys=True) == json.dumps(rep2, sort_keys=True)
    # verification sweeps
    v1 = verify.run_cyclic(seed=2)
    v2 = verify.run_cyclic(seed=2)
    assert json.dumps(v1, sort_keys=True) == json.dumps(v2, sort_keys=True)
    _ok("criterion 12 (determinism)", "all seeded surfaces byte-identical")
