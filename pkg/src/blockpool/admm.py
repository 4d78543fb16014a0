"""The multi-block ADMM family for least squares / ridge and logistic
regression: primal distributed, dual distributed, dual cyclic, dual
order-permuted, double sweep, and the pool-reassembling DRAP variant.

All solvers start from zero variables unless given explicit overrides, and
all randomness is drawn from counter-derived streams so runs are
reproducible and schedule-independent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .baselines import (check_labels, logistic_gradient, logistic_hessian,
                        logistic_value, sigmoid)
from .errors import InnerNoConvergence, LineSearchFailure
from .sharing import SharingPlan, assemble_round


@dataclass(frozen=True)
class NewtonConfig:
    """Inner damped-Newton settings for per-center logistic subproblems."""

    tol: float = 1e-10
    max_steps: int = 50


@dataclass(frozen=True)
class SolverConfig:
    """Common solver knobs.

    rho          ADMM step size (rho_p for primal, rho_d for dual variants)
    max_iters    outer-iteration cap (the stopping rule tau)
    tol          stop early when the iterate change (or the absolute loss,
                 when an oracle is supplied) drops below tol; 0 disables
    seed         master seed for any per-round randomness
    record_trace store per-iteration AL / change / residual series
    permute_order  DRAP only: freshly permute the block update order each
                 round (disable to pin the ascending order)
    time_budget  stop at the first iteration boundary past this many
                 seconds (fixed-run-time experiment mode)
    inner        Newton settings for logistic subproblems
    """

    rho: float = 1.0
    max_iters: int = 100
    tol: float = 0.0
    seed: int = 0
    record_trace: bool = True
    permute_order: bool = True
    time_budget: float | None = None
    inner: NewtonConfig = field(default_factory=NewtonConfig)

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class SolverRun:
    """Result of one solver execution."""

    algorithm: str
    config: dict
    beta: np.ndarray
    iterations: int
    converged: bool
    trace: dict
    wall_time: float

    def to_json_dict(self):
        return {
            "algorithm": self.algorithm,
            "config": self.config,
            "beta": [float(v) for v in self.beta],
            "iterations": self.iterations,
            "converged": self.converged,
            "trace": {k: [float(v) for v in vs] for k, vs in self.trace.items()},
            "wall_time": self.wall_time,
        }


class _RunRecorder:
    """Shared stopping / tracing logic for the outer loops."""

    def __init__(self, ds, cfg, beta_star, ridge=0.0, logistic=False):
        self.cfg = cfg
        self.beta_star = None if beta_star is None else np.asarray(beta_star, float)
        self.trace = {"beta_change": []}
        if self.beta_star is not None:
            self.trace["al"] = []
        self.logistic = logistic
        self._res_ctx = None
        if cfg.record_trace:
            self.trace["residual"] = []
            if logistic:
                self._res_ctx = (ds.X, ds.y, ridge)
            else:
                gram = ds.X.T @ ds.X + ridge * np.eye(ds.p)
                rhs = ds.X.T @ ds.y
                scale = max(np.abs(rhs).max(), np.finfo(float).tiny)
                self._res_ctx = (gram, rhs, scale)
        self.iterations = 0
        self.converged = False
        self._t0 = time.perf_counter()

    def step(self, old_beta, new_beta):
        """Record one outer iteration; returns True when the run should stop."""
        self.iterations += 1
        change = float(np.sqrt(((new_beta - old_beta) ** 2).sum()))
        self.trace["beta_change"].append(change)
        al = None
        if self.beta_star is not None:
            al = float(np.sqrt(((new_beta - self.beta_star) ** 2).sum()))
            self.trace["al"].append(al)
        if self.cfg.record_trace:
            if self.logistic:
                X, y, ridge = self._res_ctx
                g = logistic_gradient(X, y, new_beta, ridge)
                self.trace["residual"].append(float(np.sqrt(g @ g)))
            else:
                gram, rhs, scale = self._res_ctx
                self.trace["residual"].append(
                    float(np.abs(gram @ new_beta - rhs).max() / scale))
        if self.cfg.tol > 0.0 and (change < self.cfg.tol
                                   or (al is not None and al < self.cfg.tol)):
            self.converged = True
            return True
        if (self.cfg.time_budget is not None
                and time.perf_counter() - self._t0 >= self.cfg.time_budget):
            return True
        return False

    def finish(self, algorithm, beta):
        return SolverRun(algorithm=algorithm,
                         config=_config_echo(self.cfg),
                         beta=beta,
                         iterations=self.iterations,
                         converged=self.converged,
                         trace=self.trace,
                         wall_time=time.perf_counter() - self._t0)


def _config_echo(cfg):
    return {"rho": cfg.rho, "max_iters": cfg.max_iters, "tol": cfg.tol,
            "seed": cfg.seed, "permute_order": cfg.permute_order}


def _ls_pieces(ds, ridge_share):
    """Per-center Grams (with ridge share), right-hand sides, and factors."""
    grams, rhs, solves = [], [], []
    eye = np.eye(ds.p)
    for i in range(ds.b):
        Xi, yi = ds.block(i)
        grams.append(Xi.T @ Xi + ridge_share * eye)
        rhs.append(Xi.T @ yi)
    return grams, rhs


def _round_rng(seed, round_index, tag):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tag), int(round_index)]))


# ---------------------------------------------------------------------------
# Primal distributed
# ---------------------------------------------------------------------------

def primal_ls_step(solves, rhs, rho, beta, lams):
    """One primal distributed iteration on cached factors.

    solves[i] maps a right-hand side to (rho I + D_i)^-1 rhs; rhs[i] is
    X_i^T y_i.  Returns (new_beta, new_lams, local_betas).
    """
    b = len(solves)
    locals_ = [solves[i](rho * beta - lams[i] + rhs[i]) for i in range(b)]
    new_beta = sum(locals_) / b + sum(lams) / (b * rho)
    new_lams = [lams[i] + rho * (locals_[i] - new_beta) for i in range(b)]
    return new_beta, new_lams, locals_


def primal_distributed_run(ds, objective, cfg, beta_star=None,
                           init_beta=None, init_lambdas=None):
    """Primal distributed ADMM: parallel per-center proximal solves, then
    consensus and dual averaging.

    Least squares / ridge use one cached Cholesky factor per center; the
    ridge penalty is split evenly across centers (alpha/b per block).
    """
    if objective.is_logistic:
        return primal_distributed_logistic_run(ds, cfg, beta_star=beta_star,
                                               alpha=objective.alpha,
                                               init_beta=init_beta,
                                               init_lambdas=init_lambdas)
    ridge_share = objective.alpha / ds.b
    grams, rhs = _ls_pieces(ds, ridge_share)
    eye = np.eye(ds.p)
    factors = [linalg.cholesky_factor(cfg.rho * eye + g) for g in grams]
    solves = [lambda v, L=L: linalg.solve_factored(L, v) for L in factors]
    beta = np.zeros(ds.p) if init_beta is None else np.asarray(init_beta, float).copy()
    lams = ([np.zeros(ds.p) for _ in range(ds.b)] if init_lambdas is None
            else [np.asarray(l, float).copy() for l in init_lambdas])
    rec = _RunRecorder(ds, cfg, beta_star, ridge=objective.alpha)
    for _ in range(cfg.max_iters):
        new_beta, lams, _ = primal_ls_step(solves, rhs, cfg.rho, beta, lams)
        stop = rec.step(beta, new_beta)
        beta = new_beta
        if stop:
            break
    return rec.finish("primal_distributed", beta)


# ---------------------------------------------------------------------------
# Dual distributed
# ---------------------------------------------------------------------------

def dual_distributed_step(solves, grams, rhs, rho_d, beta, vs):
    """One dual distributed iteration in mu-space on cached factors.

    solves[i] applies (I + rho_d D_i)^-1; grams[i] = D_i; rhs[i] = X_i^T y_i.
    Returns (new_beta, new_vs, mus).
    """
    b = len(solves)
    mus = [solves[i](rho_d * (grams[i] @ vs[i]) + grams[i] @ beta - rhs[i])
           for i in range(b)]
    mbar = sum(mus) / b
    new_vs = [mu - mbar for mu in mus]
    new_beta = beta - rho_d * mbar
    return new_beta, new_vs, mus


def dual_distributed_run(ds, cfg, beta_star=None, init_beta=None, init_v=None):
    """Dual distributed ADMM for least squares, run in the p-dimensional
    mu_i = X_i^T t_i coordinates (t is recovered only on demand)."""
    grams, rhs = _ls_pieces(ds, 0.0)
    eye = np.eye(ds.p)
    factors = [linalg.cholesky_factor(eye + cfg.rho * g) for g in grams]
    solves = [lambda v, L=L: linalg.solve_factored(L, v) for L in factors]
    beta = np.zeros(ds.p) if init_beta is None else np.asarray(init_beta, float).copy()
    vs = ([np.zeros(ds.p) for _ in range(ds.b)] if init_v is None
          else [np.asarray(v, float).copy() for v in init_v])
    rec = _RunRecorder(ds, cfg, beta_star)
    for _ in range(cfg.max_iters):
        new_beta, vs, _ = dual_distributed_step(solves, grams, rhs, cfg.rho, beta, vs)
        stop = rec.step(beta, new_beta)
        beta = new_beta
        if stop:
            break
    return rec.finish("dual_distributed", beta)


def dual_t_distributed(ds, beta_prev, vs_prev, mus_new, rho_d):
    """Materialize the row duals of one distributed-dual update:
    t_i = X_i (beta + rho_d v_i - rho_d mu_i) - y_i, which satisfies
    mu_i = X_i^T t_i to round-off."""
    t = np.empty(ds.n)
    for i in range(ds.b):
        Xi, yi = ds.block(i)
        w = beta_prev + rho_d * vs_prev[i] - rho_d * mus_new[i]
        t[ds.blocks[i]] = Xi @ w - yi
    return t


# ---------------------------------------------------------------------------
# Cyclic-family sweep engine
# ---------------------------------------------------------------------------

class _SweepEngine:
    """Gauss-Seidel dual sweeps over (possibly reassembled) row blocks.

    State is the row-level dual vector t (indexed by global row, so values
    travel with rows when the pool is reshuffled) plus the global estimator
    beta.  Each block update solves a p x p system in mu = X_B^T t_B.
    """

    def __init__(self, ds, rho):
        self.ds = ds
        self.rho = rho
        self.t = np.zeros(ds.n)
        self.eye = np.eye(ds.p)

    def set_t(self, t):
        self.t = np.asarray(t, float).copy()

    def sweep(self, row_blocks, grams, rhs, order, solves=None):
        """Sweep the given blocks in `order`; returns sum of block mus."""
        X, y, rho = self.ds.X, self.ds.y, self.rho
        mus = [X[rows].T @ self.t[rows] for rows in row_blocks]
        mu_total = sum(mus)
        for i in order:
            rows = row_blocks[i]
            w = self.beta - rho * (mu_total - mus[i])
            rhs_i = grams[i] @ w - rhs[i]
            if solves is not None:
                mu_new = solves[i](rhs_i)
            else:
                mu_new = linalg.cholesky_solve(self.eye + rho * grams[i], rhs_i)
            self.t[rows] = X[rows] @ (w - rho * mu_new) - y[rows]
            mu_total = mu_total + (mu_new - mus[i])
            mus[i] = mu_new
        return mu_total


def _run_sweep_solver(ds, cfg, beta_star, algorithm, orders, init_beta, init_t):
    """Shared driver for cyclic / permuted / double-sweep solvers on the
    static partition.  `orders(k)` yields the order(s) for iteration k;
    the beta update happens once after all sweeps of the iteration."""
    grams, rhs = _ls_pieces(ds, 0.0)
    eye = np.eye(ds.p)
    factors = [linalg.cholesky_factor(eye + cfg.rho * g) for g in grams]
    solves = [lambda v, L=L: linalg.solve_factored(L, v) for L in factors]
    engine = _SweepEngine(ds, cfg.rho)
    if init_t is not None:
        engine.set_t(init_t)
    engine.beta = np.zeros(ds.p) if init_beta is None else np.asarray(init_beta, float).copy()
    rec = _RunRecorder(ds, cfg, beta_star)
    for k in range(cfg.max_iters):
        mu_total = None
        for order in orders(k):
            mu_total = engine.sweep(ds.blocks, grams, rhs, order, solves)
        new_beta = engine.beta - cfg.rho * mu_total
        stop = rec.step(engine.beta, new_beta)
        engine.beta = new_beta
        if stop:
            break
    return rec.finish(algorithm, engine.beta)


def dual_cyclic_run(ds, cfg, order=None, beta_star=None, init_beta=None, init_t=None):
    """Dual cyclic ADMM: Gauss-Seidel mu-updates in a fixed center order
    (ascending by default), then the beta step."""
    fixed = tuple(range(ds.b)) if order is None else tuple(order)
    if sorted(fixed) != list(range(ds.b)):
        raise ValueError(f"order must be a permutation of 0..{ds.b - 1}")
    return _run_sweep_solver(ds, cfg, beta_star, "dual_cyclic",
                             lambda k: (fixed,), init_beta, init_t)


def dual_rp_run(ds, cfg, beta_star=None, init_beta=None, init_t=None):
    """Dual cyclic ADMM with a fresh seeded permutation of the update order
    at every outer iteration."""
    def orders(k):
        return (_round_rng(cfg.seed, k, 1).permutation(ds.b),)
    return _run_sweep_solver(ds, cfg, beta_star, "dual_rp", orders, init_beta, init_t)


def double_sweep_run(ds, cfg, beta_star=None, init_beta=None, init_t=None):
    """Symmetric (double-sweep) dual ADMM: forward sweep 0..b-1 then
    backward sweep b-1..0 per outer iteration, then one beta update."""
    fwd = tuple(range(ds.b))
    bwd = tuple(reversed(fwd))
    return _run_sweep_solver(ds, cfg, beta_star, "double_sweep",
                             lambda k: (fwd, bwd), init_beta, init_t)


def drap_admm_run(ds, plan, cfg, beta_star=None, init_beta=None, init_t=None):
    """DRAP ADMM: per round, pooled rows are permuted back to the centers
    and the block update order is permuted; each center sweeps with its
    retained rows plus the pool rows it received this round.

    The retained-row Gram of every center is precomputed once; only the
    pooled contribution is rebuilt per round.  Row duals are indexed by
    global row id, so each observation's dual travels with the row.
    """
    if not isinstance(plan, SharingPlan):
        raise TypeError("plan must be a SharingPlan")
    X, y = ds.X, ds.y
    local_grams = [X[l].T @ X[l] for l in plan.retained]
    local_rhs = [X[l].T @ y[l] for l in plan.retained]
    engine = _SweepEngine(ds, cfg.rho)
    if init_t is not None:
        engine.set_t(init_t)
    engine.beta = np.zeros(ds.p) if init_beta is None else np.asarray(init_beta, float).copy()
    rec = _RunRecorder(ds, cfg, beta_star)
    ascending = np.arange(ds.b)
    for k in range(cfg.max_iters):
        asm = assemble_round(plan, k, cfg.seed)
        order = asm.order if cfg.permute_order else ascending
        grams, rhs = [], []
        for i in range(ds.b):
            got = asm.assigned[i]
            if got.size:
                Xp = X[got]
                grams.append(local_grams[i] + Xp.T @ Xp)
                rhs.append(local_rhs[i] + Xp.T @ y[got])
            else:
                grams.append(local_grams[i])
                rhs.append(local_rhs[i])
        mu_total = engine.sweep(asm.assembled, grams, rhs, order)
        new_beta = engine.beta - cfg.rho * mu_total
        stop = rec.step(engine.beta, new_beta)
        engine.beta = new_beta
        if stop:
            break
    return rec.finish("drap_admm", engine.beta)


# ---------------------------------------------------------------------------
# Logistic variants
# ---------------------------------------------------------------------------

def _local_logistic_newton(Xi, yi, lam, beta, rho, ridge_share, start, inner):
    """Damped Newton on the center subproblem
    f_i(b) + lam.(b - beta) + rho/2 |b - beta|^2 + ridge_share/2 |b|^2."""
    b = start.copy()
    p = b.size
    eye = np.eye(p)

    def value(v):
        return (logistic_value(Xi, yi, v) + lam @ (v - beta)
                + 0.5 * rho * (v - beta) @ (v - beta) + 0.5 * ridge_share * v @ v)

    for _ in range(inner.max_steps):
        g = logistic_gradient(Xi, yi, b) + lam + rho * (b - beta) + ridge_share * b
        if np.sqrt(g @ g) <= inner.tol:
            return b
        H = logistic_hessian(Xi, yi, b) + (rho + ridge_share) * eye
        step = linalg.cholesky_solve(H, -g)
        f0 = value(b)
        slope = g @ step
        if -slope <= 1e-15 * (1.0 + abs(f0)):
            # predicted decrease below float resolution: plain Newton step
            b = b + step
            continue
        s = 1.0
        while s > 1e-14:
            cand = b + s * step
            if value(cand) <= f0 + 1e-4 * s * slope:
                break
            s *= 0.5
        b = b + s * step
    g = logistic_gradient(Xi, yi, b) + lam + rho * (b - beta) + ridge_share * b
    if np.sqrt(g @ g) <= inner.tol:
        return b
    raise InnerNoConvergence(
        f"inner Newton stalled at gradient norm {np.sqrt(g @ g):.3e}")


def primal_distributed_logistic_run(ds, cfg, beta_star=None, alpha=0.0,
                                    init_beta=None, init_lambdas=None):
    """Primal distributed ADMM for logistic regression: each center solves
    its regularized local subproblem by damped Newton, the outer loop is
    identical to the least-squares variant."""
    blocks = [ds.block(i) for i in range(ds.b)]
    for _, yi in blocks:
        check_labels(yi)
    ridge_share = alpha / ds.b
    beta = np.zeros(ds.p) if init_beta is None else np.asarray(init_beta, float).copy()
    lams = ([np.zeros(ds.p) for _ in range(ds.b)] if init_lambdas is None
            else [np.asarray(l, float).copy() for l in init_lambdas])
    locals_ = [beta.copy() for _ in range(ds.b)]
    rec = _RunRecorder(ds, cfg, beta_star, ridge=alpha, logistic=True)
    for _ in range(cfg.max_iters):
        for i, (Xi, yi) in enumerate(blocks):
            locals_[i] = _local_logistic_newton(Xi, yi, lams[i], beta, cfg.rho,
                                                ridge_share, locals_[i], cfg.inner)
        new_beta = sum(locals_) / ds.b + sum(lams) / (ds.b * cfg.rho)
        for i in range(ds.b):
            lams[i] = lams[i] + cfg.rho * (locals_[i] - new_beta)
        stop = rec.step(beta, new_beta)
        beta = new_beta
        if stop:
            break
    return rec.finish("primal_distributed_logistic", beta)


def _entropy_prox(xi, z, rho, tol=1e-12, newton_steps=60):
    """Elementwise minimizer over t in (0,1) of
    t log t + (1-t) log(1-t) - xi t + rho/2 (t - z)^2.

    Vectorized safeguarded Newton with a bisection fallback on
    (1e-12, 1 - 1e-12); the objective is strictly convex with boundary
    derivatives -inf / +inf, so the root always exists and is unique.
    """
    lo, hi = 1e-12, 1.0 - 1e-12
    t = np.clip(sigmoid(xi + rho * (z - 0.5)), 1e-9, 1 - 1e-9)

    def g(v):
        return np.log(v / (1.0 - v)) - xi + rho * (v - z)

    for _ in range(newton_steps):
        gv = g(t)
        step = gv / (1.0 / (t * (1.0 - t)) + rho)
        t = np.clip(t - step, lo, hi)
        if np.max(np.abs(step)) < tol:
            return t
    # bisection fallback for any stragglers
    bad = np.abs(g(t)) > 1e-9
    if bad.any():
        a = np.full(bad.sum(), lo)
        c = np.full(bad.sum(), hi)
        xib, zb = xi[bad], z[bad]
        ga = np.log(a / (1 - a)) - xib + rho * (a - zb)
        if (ga > 0).any():
            raise LineSearchFailure("entropy prox bracket lost at the lower end")
        for _ in range(200):
            mid = 0.5 * (a + c)
            gm = np.log(mid / (1 - mid)) - xib + rho * (mid - zb)
            takes = gm < 0
            a = np.where(takes, mid, a)
            c = np.where(takes, c, mid)
        t[bad] = 0.5 * (a + c)
    return t


def drap_logistic_run(ds, plan, cfg, beta_star=None):
    """DRAP ADMM on the entropy-form logistic dual.

    Variables: per-observation t in (0,1) and auxiliary z (both indexed by
    global row), with multipliers beta (for the aggregated constraint on z)
    and xi (for t = z).  The t step is a parallel one-dimensional search per
    observation; the z step sweeps the assembled blocks in the permuted
    order; multiplier signs are chosen so beta converges to the logistic
    regression coefficients.
    """
    if not isinstance(plan, SharingPlan):
        raise TypeError("plan must be a SharingPlan")
    y = check_labels(ds.y)
    Xs = ds.X * y[:, None]  # labels folded into the design matrix
    n, p = ds.n, ds.p
    rho = cfg.rho
    local_grams = [Xs[l].T @ Xs[l] for l in plan.retained]
    t = np.full(n, 0.5)
    z = np.zeros(n)
    beta = np.zeros(p)
    xi = np.zeros(n)
    eye = np.eye(p)
    rec = _RunRecorder(ds, cfg, beta_star, logistic=True)
    ascending = np.arange(ds.b)
    for k in range(cfg.max_iters):
        asm = assemble_round(plan, k, cfg.seed)
        order = asm.order if cfg.permute_order else ascending
        t = _entropy_prox(xi, z, rho)
        w = Xs.T @ z
        for i in order:
            rows = asm.assembled[i]
            Xb = Xs[rows]
            got = asm.assigned[i]
            gram = local_grams[i] + (Xs[got].T @ Xs[got] if got.size else 0.0)
            w_other = w - Xb.T @ z[rows]
            rhs = -(Xb @ beta + xi[rows]) / rho + t[rows] - Xb @ w_other
            nu = linalg.cholesky_solve(eye + gram, Xb.T @ rhs)
            z_new = rhs - Xb @ nu
            w = w_other + Xb.T @ z_new
            z[rows] = z_new
        new_beta = beta + rho * (Xs.T @ z)
        xi = xi - rho * (t - z)
        stop = rec.step(beta, new_beta)
        beta = new_beta
        if stop:
            break
    return rec.finish("drap_logistic", beta)
