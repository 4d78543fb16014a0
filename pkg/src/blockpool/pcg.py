"""Distributed conjugate gradient with pluggable block preconditioners.

Solves the normal equations sum_i X_i^T X_i beta = sum_i X_i^T y_i with the
per-center message pattern: each center supplies r^T H_i r, p^T D_i p,
D_i p, and H_i r; the coordinator aggregates (fixed ascending center order)
and broadcasts the scalars.  Preconditioners: none, per-center local
inverses, or local inverses sketched with the shared pool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (EmptyContribution, NotPositiveDefinite, SingularBlock,
                     Stagnation)

#: PCG stalls out after this many consecutive non-decreasing residuals
STAGNATION_WINDOW = 20


@dataclass(frozen=True)
class Preconditioner:
    """Per-center SPD matrices H_i; the aggregate H = sum H_i."""

    kind: str
    H_blocks: tuple

    @property
    def H(self):
        return sum(self.H_blocks)

    @property
    def b(self):
        return len(self.H_blocks)


@dataclass
class PcgTrace:
    """Per-iteration relative residuals ||b - A x_k|| / ||b||.

    With ``record_vectors`` the run also keeps the residual and search
    direction vectors (diagnostics; memory is n-independent since CG state
    lives in feature space).
    """

    residuals: list
    iterations: int
    converged: bool
    r_history: list | None = None
    p_history: list | None = None


def build_identity_precond(ds):
    """No preconditioning: H = I, split evenly across centers."""
    eye = np.eye(ds.p)
    return Preconditioner("identity", tuple(eye / ds.b for _ in range(ds.b)))


def build_local_precond(ds):
    """Local preconditioning H_i = (X_i^T X_i)^-1.

    Raises
    ------
    SingularBlock
        When some block Gram is not positive definite.
    """
    blocks = []
    for i in range(ds.b):
        Xi, _ = ds.block(i)
        try:
            blocks.append(linalg.inverse_spd(Xi.T @ Xi))
        except NotPositiveDefinite as exc:
            raise SingularBlock(f"center {i}: {exc}") from exc
    return Preconditioner("local", tuple(blocks))


def build_global_precond(ds, plan, variant="pooled"):
    """Pool-sketched preconditioning.

    ``pooled`` (default):  H_i = (1/b) [D_i + sum_{j != i} (s_j/|r_j|) G_rj]^-1
    where G_rj is the Gram of the rows center j contributed to the pool --
    the bracket is an unbiased estimate of the full Gram, so H = sum H_i
    approaches (X^T X)^-1 as the sketches concentrate (exactly at 100%
    sharing).  ``legacy`` keeps the 1/b on the local Gram inside the
    inverse instead, for comparison.

    Raises
    ------
    EmptyContribution
        When some other center contributed no pooled rows.
    """
    if variant not in ("pooled", "legacy"):
        raise ValueError(f"unknown variant {variant!r}")
    X = ds.X
    sizes = ds.sizes
    pool_grams, pool_counts = [], []
    for j in range(ds.b):
        rows = plan.contributed[j]
        pool_counts.append(rows.size)
        pool_grams.append(X[rows].T @ X[rows] if rows.size else None)
    blocks = []
    for i in range(ds.b):
        Xi, _ = ds.block(i)
        local = Xi.T @ Xi
        acc = local / ds.b if variant == "legacy" else local.copy()
        for j in range(ds.b):
            if j == i:
                continue
            if pool_counts[j] == 0:
                raise EmptyContribution(f"center {j} contributed no pooled rows")
            acc = acc + (sizes[j] / pool_counts[j]) * pool_grams[j]
        inv = linalg.inverse_spd(acc)
        blocks.append(inv if variant == "legacy" else inv / ds.b)
    return Preconditioner("global_sketch", tuple(blocks))


def pcg_run(ds, precond, tol=1e-8, max_iters=None, alpha=0.0,
            rhs_mode="normal_equations", record_vectors=False):
    """Preconditioned conjugate gradient on the aggregated normal equations.

    Per-center quantities are computed blockwise exactly as the message
    pattern prescribes; the conjugacy-restoring scalar uses the
    Fletcher-Reeves form t_k = (r_{k+1}^T H r_{k+1}) / (r_k^T H r_k).
    An optional ridge term alpha adds alpha/b I to every block Gram.

    Returns
    -------
    (beta, PcgTrace)

    Raises
    ------
    Stagnation
        If the residual fails to decrease for 20 consecutive iterations
        while still above tol.
    """
    if rhs_mode != "normal_equations":
        raise ValueError(f"unknown rhs_mode {rhs_mode!r}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = ds.p
    if max_iters is None:
        max_iters = 20 * p
    grams, rhs = [], []
    ridge_share = alpha / ds.b
    eye = np.eye(p)
    for i in range(ds.b):
        Xi, yi = ds.block(i)
        grams.append(Xi.T @ Xi + ridge_share * eye)
        rhs.append(Xi.T @ yi)
    H = precond.H_blocks
    beta = np.zeros(p)
    r = sum(rhs)                      # r_0 = b - A*0
    norm_b = float(np.sqrt(r @ r))
    if norm_b == 0.0:
        return beta, PcgTrace([0.0], 0, True)
    z_blocks = [Hi @ r for Hi in H]
    pk = sum(z_blocks)
    rz = float(sum(r @ zi for zi in z_blocks))
    residuals = []
    r_hist = [r.copy()] if record_vectors else None
    p_hist = [pk.copy()] if record_vectors else None
    prev = np.inf
    flat = 0
    for k in range(max_iters):
        rel = float(np.sqrt(r @ r)) / norm_b
        residuals.append(rel)
        if not np.isfinite(rel):
            raise Stagnation("residual became non-finite (preconditioner not SPD?)")
        if rel <= tol:
            return beta, PcgTrace(residuals, k, True, r_hist, p_hist)
        # a breakdown shows as a run of steps that never decrease; normal CG
        # plateaus still alternate small decreases in between
        if rel >= prev:
            flat += 1
            if flat >= STAGNATION_WINDOW:
                raise Stagnation(f"residual stuck at {rel:.3e} for {flat} iterations")
        else:
            flat = 0
        prev = rel
        ap_blocks = [g @ pk for g in grams]
        denom = float(sum(pk @ api for api in ap_blocks))
        if denom == 0.0 or rz == 0.0:
            raise Stagnation("conjugate-direction recurrence broke down "
                             "(zero curvature or H-weighted residual)")
        alpha_k = rz / denom
        beta = beta + alpha_k * pk
        r = r - alpha_k * sum(ap_blocks)
        z_blocks = [Hi @ r for Hi in H]
        rz_new = float(sum(r @ zi for zi in z_blocks))
        t_k = rz_new / rz
        pk = sum(z_blocks) + t_k * pk
        rz = rz_new
        if record_vectors:
            r_hist.append(r.copy())
            p_hist.append(pk.copy())
    residuals.append(float(np.sqrt(r @ r)) / norm_b)
    return beta, PcgTrace(residuals, max_iters, residuals[-1] <= tol, r_hist, p_hist)


def precond_condition_report(ds, precond):
    """Condition number of H A with H = sum H_i and A = sum X_i^T X_i."""
    grams = []
    for i in range(ds.b):
        Xi, _ = ds.block(i)
        grams.append(Xi.T @ Xi)
    return linalg.spd_condition_number(precond.H, sum(grams))
