"""Numeric verification sweeps for every closed-form rate result.

Each suite draws seeded random instances (or builds the named worst-case
structures), measures spectral radii with the dense eigensolver, and checks
them against the closed-form bounds with a fixed 1e-9 additive slack for
eigensolver round-off.  Suites return plain dicts (JSON-ready) with a
pass/fail flag, per-check records, and any violations.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import linalg, spectral
from .admm import dual_distributed_step, primal_ls_step
from .generators import GenSpec, gen_equal_blocks, gen_pcg_construction, gen_two_dominant
from .model import block_grams, partition_rows
from .pcg import (build_global_precond, build_identity_precond,
                  build_local_precond, pcg_run, precond_condition_report)
from .sharing import build_pool

SLACK = spectral.BOUND_SLACK          # 1e-9
EQUALITY_TOL = 1e-8

SUITES = ("thm1", "thm2", "prop1", "prop2", "prop5", "cyclic", "rp", "pcg_cond")


def _rng(seed, *tags):
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def _random_theorem_instance(rng, b, p, min_q1=1e-6, rows_extra=3):
    """Frobenius-normalized random instance with every block Gram SPD."""
    s = p + rows_extra
    for _ in range(200):
        X = rng.standard_normal((b * s, p))
        X = linalg.frobenius_normalize(X)
        y = rng.standard_normal(b * s)
        ds = partition_rows(X, y, b)
        grams = block_grams(ds)
        if grams.q1 > min_q1:
            return ds, grams
    raise RuntimeError("could not draw a well-conditioned instance")


def _report(suite, checks, violations, extra=None):
    out = {"suite": suite, "pass": not violations,
           "checks": checks, "violations": violations}
    if extra:
        out.update(extra)
    return out


def run_thm1(seed=0, trials=500):
    """Large-step bound b rho/(b rho + qmin): never exceeded on random
    theorem-mode instances; met with equality on equal-block data."""
    checks, violations = [], []
    for b in (2, 3, 4, 5):
        rng = _rng(seed, 1, b)
        for k in range(trials):
            p = int(rng.integers(1, 4))
            ds, grams = _random_theorem_instance(rng, b, p)
            rho = float(grams.qbar * rng.uniform(1.01, 5.0))
            radius = spectral.build_Mp(grams, rho).radius
            bound = spectral.bound_large_step(b, rho, grams.qmin)
            rec = {"b": b, "p": p, "rho": rho, "radius": radius, "bound": bound,
                   "slack": bound - radius}
            checks.append(rec)
            if radius > bound + SLACK:
                violations.append(rec)
    for b in (2, 3, 4, 5):
        for p in (1, 2, 3):
            ds = gen_equal_blocks(GenSpec(b=b, p=p, rows_per_block=p + 3, seed=seed + 17 * b + p))
            grams = block_grams(ds, theorem_mode=True)
            rho = 1.5 * grams.qbar
            radius = spectral.build_Mp(grams, rho).radius
            bound = spectral.bound_large_step(b, rho, grams.qmin)
            rec = {"b": b, "p": p, "rho": rho, "radius": radius, "bound": bound,
                   "equality_gap": abs(radius - bound)}
            checks.append(rec)
            if abs(radius - bound) > EQUALITY_TOL:
                violations.append(rec)
    return _report("thm1", checks, violations)


def run_thm2(seed=0, trials=500):
    """Two-center small-step bound qbar/(2 rho + qbar) plus its equality
    case at D_1 = D_2."""
    checks, violations = [], []
    rng = _rng(seed, 2)
    for k in range(trials):
        p = int(rng.integers(1, 4))
        ds, grams = _random_theorem_instance(rng, 2, p, min_q1=1e-4)
        rho = float(grams.q1 * rng.uniform(0.05, 0.95))
        radius = spectral.build_Mp(grams, rho).radius
        bound = spectral.bound_small_step_b2(rho, grams.qbar)
        rec = {"p": p, "rho": rho, "radius": radius, "bound": bound,
               "slack": bound - radius}
        checks.append(rec)
        if radius > bound + SLACK:
            violations.append(rec)
    for p in (1, 2, 3):
        ds = gen_equal_blocks(GenSpec(b=2, p=p, rows_per_block=p + 3, seed=seed + 31 * p))
        grams = block_grams(ds, theorem_mode=True)
        rho = 0.5 * grams.q1
        radius = spectral.build_Mp(grams, rho).radius
        bound = spectral.bound_small_step_b2(rho, grams.qbar)
        rec = {"p": p, "rho": rho, "radius": radius, "bound": bound,
               "equality_gap": abs(radius - bound)}
        checks.append(rec)
        if abs(radius - bound) > EQUALITY_TOL:
            violations.append(rec)
    return _report("thm2", checks, violations)


def run_prop1(seed=0, trials=25):
    """Two-dominant-block construction: measured radius equals the
    constructed rate, respects the loose bound, beats the equal-block rate."""
    checks, violations = [], []
    for b in (3, 4, 5):
        rng = _rng(seed, 3, b)
        for k in range(trials):
            p = int(rng.integers(1, 4))
            spec = GenSpec(b=b, p=p, rows_per_block=p + 3, seed=int(rng.integers(2 ** 31)))
            vals = spec.spectrum()
            qmin_t, qbar_t = float(vals.min()), float(vals.max())
            # the construction exhibits its rate only in the b*rho <= qmin
            # regime (the step size must stay below every block's smallest
            # eigenvalue, padding blocks included)
            rho = float(rng.uniform(0.2, 0.95) * qmin_t / b)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                ds = gen_two_dominant(spec, rho)
            grams = block_grams(ds, theorem_mode=True)
            radius = spectral.build_Mp(grams, rho).radius
            bounds = spectral.bounds_small_step_general(b, rho, qbar_t)
            rec = {"b": b, "p": p, "rho": rho, "radius": radius,
                   "constructed": bounds.constructed, "loose": bounds.loose,
                   "equal_block": bounds.equal_block}
            checks.append(rec)
            ok = (abs(radius - bounds.constructed) <= EQUALITY_TOL
                  and radius <= bounds.loose + SLACK
                  and bounds.constructed >= bounds.equal_block - 1e-12)
            if not ok:
                violations.append(rec)
    return _report("prop1", checks, violations)


def run_prop2(seed=0, trials=200):
    """Distributed ADMM beats gradient descent outside (s1, s2)."""
    checks, violations = [], []
    rng = _rng(seed, 4)
    done = 0
    while done < trials:
        b = int(rng.integers(2, 5))
        p = int(rng.integers(2, 4))
        ds, grams = _random_theorem_instance(rng, b, p, min_q1=1e-3)
        s1, s2 = spectral.gd_crossover(b, grams.qbar, grams.qmin, grams.q1)
        for _ in range(4):
            if done >= trials:
                break
            if rng.random() < 0.5 and s1 > 1e-9:
                rho = float(rng.uniform(0.01 * s1, 0.999 * s1))
                branch = "low"
            else:
                rho = float(rng.uniform(1.001 * s2, 3.0 * s2))
                branch = "high"
            r_admm = spectral.build_Mp(grams, rho).radius
            r_gd = spectral.build_Mgd(grams.global_gram, rho).radius
            rec = {"b": b, "p": p, "rho": rho, "branch": branch,
                   "radius_admm": r_admm, "radius_gd": r_gd}
            checks.append(rec)
            done += 1
            if not r_admm < r_gd:
                violations.append(rec)
    return _report("prop2", checks, violations)


def run_prop5(seed=0, trials=100, trace_iters=50):
    """Primal/dual equivalence: M_p(rho) == M_d(1/rho) elementwise, and the
    two solvers produce the same beta sequence from zero starts."""
    checks, violations = [], []
    rng = _rng(seed, 5)
    for k in range(trials):
        b = int(rng.integers(2, 5))
        p = int(rng.integers(1, 4))
        D = []
        for _ in range(b):
            A = rng.standard_normal((p + 2, p))
            D.append(A.T @ A / (p + 2))
        rho = float(rng.uniform(0.2, 3.0))
        mp = spectral.build_Mp(D, rho).matrix
        md = spectral.build_Md(D, 1.0 / rho).matrix
        diff = float(np.abs(mp - md).max())
        rec = {"b": b, "p": p, "rho": rho, "matrix_diff": diff}
        checks.append(rec)
        if diff > 1e-12:
            violations.append(rec)
    rng = _rng(seed, 55)
    X = rng.standard_normal((48, 4))
    X = linalg.frobenius_normalize(X)
    y = rng.standard_normal(48)
    ds = partition_rows(X, y, 3)
    gap = primal_dual_trace_gap(ds, rho_p=1.7, iters=trace_iters)
    rec = {"beta_trace_gap": gap, "iters": trace_iters}
    checks.append(rec)
    if gap > 1e-8:
        violations.append(rec)
    return _report("prop5", checks, violations)


def primal_dual_trace_gap(ds, rho_p, iters=50):
    """Max per-iteration gap between the primal beta sequence at step rho_p
    and the dual beta sequence at step 1/rho_p, both from zero starts."""
    grams, rhs, solves_p, solves_d = [], [], [], []
    eye = np.eye(ds.p)
    for i in range(ds.b):
        Xi, yi = ds.block(i)
        g = Xi.T @ Xi
        grams.append(g)
        rhs.append(Xi.T @ yi)
        Lp = linalg.cholesky_factor(rho_p * eye + g)
        Ld = linalg.cholesky_factor(eye + (1.0 / rho_p) * g)
        solves_p.append(lambda v, L=Lp: linalg.solve_factored(L, v))
        solves_d.append(lambda v, L=Ld: linalg.solve_factored(L, v))
    beta_p = np.zeros(ds.p)
    lams = [np.zeros(ds.p) for _ in range(ds.b)]
    beta_d = np.zeros(ds.p)
    vs = [np.zeros(ds.p) for _ in range(ds.b)]
    gap = 0.0
    for _ in range(iters):
        beta_p, lams, _ = primal_ls_step(solves_p, rhs, rho_p, beta_p, lams)
        beta_d, vs, _ = dual_distributed_step(solves_d, grams, rhs, 1.0 / rho_p,
                                              beta_d, vs)
        gap = max(gap, float(np.abs(beta_p - beta_d).max()))
    return gap


def run_cyclic(seed=0):
    """Equal-block cyclic rate: eigensolver radius matches the closed-form
    root and beats the distributed rate."""
    checks, violations = [], []
    for b in (2, 3, 4):
        for qmin in (0.3, 0.5, 0.8):
            for p in (1, 2):
                if p == 2 and 2 * qmin + 0.05 > 1.0:
                    continue
                vals = (qmin,) if p == 1 else (qmin, qmin + 0.05)
                spec = GenSpec(b=b, p=p, rows_per_block=p + 3,
                               seed=seed + 7 * b + p, target_spectrum=vals)
                ds = gen_equal_blocks(spec)
                grams = block_grams(ds, theorem_mode=True)
                radius = spectral.build_Mc(grams, 1.0).radius
                root = spectral.cyclic_rate_root(b, grams.qmin)
                dist = b / (b + grams.qmin)
                rec = {"b": b, "p": p, "qmin": grams.qmin, "radius": radius,
                       "root": root, "distributed": dist}
                checks.append(rec)
                if abs(radius - root) > 1e-6 or not radius < dist:
                    violations.append(rec)
    return _report("cyclic", checks, violations)


def run_rp(seed=0):
    """Expected order-permuted map: radius below the distributed rate and
    no worse than the worst single order."""
    checks, violations = [], []
    for b in (2, 3, 4):
        for qmin in (0.3, 0.5):
            spec = GenSpec(b=b, p=1, rows_per_block=4, seed=seed + b,
                           target_spectrum=(qmin,))
            ds = gen_equal_blocks(spec)
            grams = block_grams(ds, theorem_mode=True)
            mean_map = spectral.rp_expected_map(grams, 1.0)
            radius = mean_map.radius
            from itertools import permutations
            singles = [spectral.build_Mc(grams, 1.0, order).radius
                       for order in permutations(range(b))]
            dist = b / (b + grams.qmin)
            rec = {"b": b, "qmin": grams.qmin, "radius": radius,
                   "max_single": max(singles), "distributed": dist}
            checks.append(rec)
            if not radius < dist or radius > max(singles) + 1e-12:
                violations.append(rec)
    return _report("rp", checks, violations)


# ---------------------------------------------------------------------------
# PCG conditioning
# ---------------------------------------------------------------------------

def prop3_limit_matrices(epsilon):
    """Limiting block Grams diag(1, eps), diag(1, 1/eps) of the two-center
    construction, with the analytic condition numbers of H_1 A, H_2 A, and
    (H_1 + H_2) A."""
    a1 = np.diag([1.0, epsilon])
    a2 = np.diag([1.0, 1.0 / epsilon])
    analytic = {
        "kappa_h1": (1.0 + epsilon ** 2) / (2.0 * epsilon ** 2),
        "kappa_h2": 2.0 / (1.0 + epsilon ** 2),
        "kappa_local": (1.0 + epsilon ** 2) ** 2 / (4.0 * epsilon ** 2),
    }
    return a1, a2, analytic


def pcg_ordering_dataset(seed=0, rows_per_center=1000, p=500,
                         decay=0.75, boost=50.0, band=20):
    """Two-center dataset on which preconditioning quality separates.

    Center 1 is Gaussian, center 2 uniform with a +1 shift; features carry
    a shared power-law scale so plain CG is slow, and each center gets one
    disjoint band of strongly boosted features so the two block Grams
    disagree exactly where a small pooled sketch can see it.
    """
    rng = _rng(seed, 9)
    j = np.arange(1, p + 1, dtype=float)
    base = j ** (-decay)
    s1 = base.copy()
    s1[:band] *= boost
    s2 = base.copy()
    s2[band:2 * band] *= boost
    x1 = rng.standard_normal((rows_per_center, p)) * s1
    x2 = (rng.uniform(0.0, 1.0, (rows_per_center, p)) + 1.0) * s2
    X = linalg.frobenius_normalize(np.vstack([x1, x2]))
    y = rng.standard_normal(2 * rows_per_center)
    return partition_rows(X, y, 2)


def run_pcg_cond(seed=0, epsilon=0.1, sample_rows=10_000, alpha_percent=5.0,
                 with_ordering=True):
    """Preconditioning theory: analytic condition numbers of the limiting
    construction, sketch-vs-local conditioning on sampled data, and the
    iteration-count ordering global < local < identity."""
    checks, violations = [], []
    a1, a2, analytic = prop3_limit_matrices(epsilon)
    a_sum = a1 + a2
    h1, h2 = linalg.inverse_spd(a1), linalg.inverse_spd(a2)
    measured = {
        "kappa_h1": linalg.spd_condition_number(h1, a_sum),
        "kappa_h2": linalg.spd_condition_number(h2, a_sum),
        "kappa_local": linalg.spd_condition_number(h1 + h2, a_sum),
    }
    for key, want in analytic.items():
        rec = {"check": f"analytic_{key}", "measured": measured[key], "expected": want}
        checks.append(rec)
        if abs(measured[key] - want) > 1e-6:
            violations.append(rec)

    ds = gen_pcg_construction(epsilon, sample_rows, seed=seed)
    plan = build_pool(ds, alpha_percent, seed=seed)
    local = build_local_precond(ds)
    globl = build_global_precond(ds, plan)
    k_local = precond_condition_report(ds, local)
    k_glob = precond_condition_report(ds, globl)
    rec = {"check": "sampled_kappa", "kappa_local": k_local, "kappa_global": k_glob,
           "local_analytic": analytic["kappa_local"]}
    checks.append(rec)
    if not (k_glob < k_local and k_glob <= 1.2):
        violations.append(rec)

    if with_ordering:
        ds = pcg_ordering_dataset(seed)
        plan = build_pool(ds, alpha_percent, seed=seed)
        iters = {}
        for name, pre in (("identity", build_identity_precond(ds)),
                          ("local", build_local_precond(ds)),
                          ("global", build_global_precond(ds, plan))):
            _, trace = pcg_run(ds, pre, tol=1e-8, max_iters=6000)
            iters[name] = trace.iterations
        rec = {"check": "iteration_ordering", **iters}
        checks.append(rec)
        if not iters["global"] < iters["local"] < iters["identity"]:
            violations.append(rec)
    return _report("pcg_cond", checks, violations)


_RUNNERS = {
    "thm1": run_thm1,
    "thm2": run_thm2,
    "prop1": run_prop1,
    "prop2": run_prop2,
    "prop5": run_prop5,
    "cyclic": lambda seed=0, trials=None: run_cyclic(seed),
    "rp": lambda seed=0, trials=None: run_rp(seed),
    "pcg_cond": lambda seed=0, trials=None: run_pcg_cond(seed),
}


def verify_theory(suite, seed=0, trials=None):
    """Run one named verification sweep; returns its JSON-ready report."""
    if suite not in _RUNNERS:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    runner = _RUNNERS[suite]
    if trials is None:
        return runner(seed=seed)
    return runner(seed=seed, trials=trials)
