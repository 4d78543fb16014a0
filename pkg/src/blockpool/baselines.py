"""Oracles and baselines: direct least squares, gradient descent,
centralized Newton for logistic regression."""

from __future__ import annotations

import time

import numpy as np

from . import linalg
from .errors import Divergence, NoConvergence, NotPositiveDefinite, SingularHessian

#: iterate-norm threshold treated as divergence
DIVERGENCE_NORM = 1e12

#: Armijo parameters for backtracking line searches
ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5


def sigmoid(u):
    """Numerically stable logistic function."""
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(u, dtype=float)))


def logistic_value(X, y, beta, alpha=0.0):
    """sum log(1 + exp(-y x beta)) + alpha/2 ||beta||^2."""
    u = (X @ beta) * y
    return float(np.logaddexp(0.0, -u).sum() + 0.5 * alpha * beta @ beta)


def logistic_gradient(X, y, beta, alpha=0.0):
    u = (X @ beta) * y
    s = sigmoid(-u)
    return -X.T @ (y * s) + alpha * beta


def logistic_hessian(X, y, beta, alpha=0.0):
    u = (X @ beta) * y
    s = sigmoid(-u)
    w = s * (1.0 - s)
    return X.T @ (X * w[:, None]) + alpha * np.eye(X.shape[1])


def check_labels(y):
    y = np.asarray(y, dtype=float)
    if not np.isin(y, (-1.0, 1.0)).all():
        raise ValueError("logistic labels must be in {-1, +1}")
    return y


def remap_01_labels(y):
    """Explicitly remap {0, 1} labels to {-1, +1} (never done silently)."""
    y = np.asarray(y, dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels are not in {0, 1}")
    return 2.0 * y - 1.0


def direct_ls(X, y, alpha=0.0):
    """Exact (ridge) least squares via Cholesky on the normal equations.

    Solves (X^T X + alpha I) beta = X^T y.

    Raises
    ------
    NotPositiveDefinite
        If the regularized Gram is not positive definite.
    """
    X = linalg.as_matrix(X, "X")
    gram = X.T @ X + alpha * np.eye(X.shape[1])
    return linalg.cholesky_solve(gram, X.T @ np.asarray(y, dtype=float))


def gradient_descent(ds, objective, rho=None, max_iters=1000, tol=0.0,
                     beta_star=None, backtracking=False, time_budget=None):
    """Full-gradient descent on the global objective.

    The gradient is assembled as the sum of per-center gradients (fixed
    ascending center order).  Fixed step ``rho`` or Armijo backtracking
    (c = 1e-4, shrink 0.5, initial step 1).

    Returns
    -------
    dict with beta, iterations, converged, trace (al / beta_change lists).

    Raises
    ------
    Divergence
        When the iterate norm exceeds 1e12.
    """
    if not backtracking and (rho is None or rho <= 0):
        raise ValueError("fixed-step mode needs rho > 0")
    p = ds.p
    beta = np.zeros(p)
    ridge = objective.alpha
    logistic = objective.is_logistic
    blocks = [ds.block(i) for i in range(ds.b)]
    if logistic:
        for _, yi in blocks:
            check_labels(yi)
    grams = None if logistic else [Xi.T @ Xi for Xi, _ in blocks]
    rhs = None if logistic else [Xi.T @ yi for Xi, yi in blocks]

    def value(bv):
        if logistic:
            loc = sum(logistic_value(Xi, yi, bv) for Xi, yi in blocks)
        else:
            loc = sum(0.5 * np.sum((Xi @ bv - yi) ** 2) for Xi, yi in blocks)
        return loc + 0.5 * ridge * bv @ bv

    def gradient(bv):
        if logistic:
            g = sum(logistic_gradient(Xi, yi, bv) for Xi, yi in blocks)
        else:
            g = sum(grams[i] @ bv - rhs[i] for i in range(ds.b))
        return g + ridge * bv

    trace = {"al": [], "beta_change": []}
    iterations = 0
    converged = False
    t0 = time.perf_counter()
    for k in range(max_iters):
        g = gradient(beta)
        if backtracking:
            f0 = value(beta)
            step = 1.0
            g2 = g @ g
            while step > 1e-16:
                cand = beta - step * g
                if value(cand) <= f0 - ARMIJO_C * step * g2:
                    break
                step *= ARMIJO_SHRINK
            new_beta = beta - step * g
        else:
            new_beta = beta - rho * g
        change = float(np.sqrt(((new_beta - beta) ** 2).sum()))
        beta = new_beta
        iterations = k + 1
        if np.sqrt(beta @ beta) > DIVERGENCE_NORM:
            raise Divergence(f"iterate norm exceeded {DIVERGENCE_NORM:g} at iteration {iterations}")
        trace["beta_change"].append(change)
        if beta_star is not None:
            trace["al"].append(float(np.sqrt(((beta - beta_star) ** 2).sum())))
        if tol > 0.0 and (change < tol or (beta_star is not None and trace["al"][-1] < tol)):
            converged = True
            break
        if time_budget is not None and time.perf_counter() - t0 >= time_budget:
            break
    return {"beta": beta, "iterations": iterations, "converged": converged,
            "trace": trace, "wall_time": time.perf_counter() - t0}


def newton_logistic(X, y, alpha=0.0, tol=1e-10, max_iters=100, return_trace=False,
                    strict=True):
    """Centralized damped Newton for (ridge-)logistic regression.

    Armijo backtracking on the Newton direction; stops at gradient norm
    <= tol.

    Raises
    ------
    SingularHessian
        If a Newton system is not positive definite.
    NoConvergence
        If the gradient norm stays above tol after max_iters steps.
    """
    X = linalg.as_matrix(X, "X")
    y = check_labels(y)
    beta = np.zeros(X.shape[1])
    trace = [beta.copy()]
    for _ in range(max_iters):
        g = logistic_gradient(X, y, beta, alpha)
        if np.sqrt(g @ g) <= tol:
            return (beta, trace) if return_trace else beta
        H = logistic_hessian(X, y, beta, alpha)
        try:
            step = linalg.cholesky_solve(H, -g)
        except NotPositiveDefinite as exc:
            raise SingularHessian(str(exc)) from exc
        f0 = logistic_value(X, y, beta, alpha)
        slope = g @ step
        if -slope <= 1e-15 * (1.0 + abs(f0)):
            # predicted decrease below float resolution: plain Newton step
            beta = beta + step
            trace.append(beta.copy())
            continue
        t = 1.0
        while t > 1e-14:
            cand = beta + t * step
            if logistic_value(X, y, cand, alpha) <= f0 + ARMIJO_C * t * slope:
                break
            t *= ARMIJO_SHRINK
        beta = beta + t * step
        trace.append(beta.copy())
    g = logistic_gradient(X, y, beta, alpha)
    if np.sqrt(g @ g) <= tol or not strict:
        return (beta, trace) if return_trace else beta
    raise NoConvergence(f"Newton gradient norm {np.sqrt(g @ g):.3e} > {tol:g} "
                        f"after {max_iters} iterations")
