"""Linear iteration maps of the solvers and the rate formulas they obey.

Builds the dense iteration matrices of distributed (primal and dual),
cyclic, and gradient-descent least-squares dynamics, the expected map of
the order-permuted cyclic variant, and evaluates the closed-form rate
bounds so they can be verified against measured spectral radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import linalg
from .errors import BlockCountTooLarge, OutOfRange
from .model import BlockGrams

#: additive slack absorbing eigensolver round-off in bound checks
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class IterationMap:
    """A solver's dense linear iteration matrix.

    kind is one of Mp, Mgd, Md, Mc, RpExpected.  Mp/Md act on a bp-vector,
    Mgd on a p-vector, Mc (the similarity-reduced cyclic form) and
    RpExpected on a (b+1)p-vector.
    """

    kind: str
    matrix: np.ndarray
    rho: float
    b: int
    p: int

    @property
    def radius(self):
        return linalg.spectral_radius(self.matrix)

    def spectrum(self):
        return linalg.eigenvalues_general(self.matrix)


@dataclass(frozen=True)
class RateReport:
    """Measured spectral radius against a closed-form bound."""

    measured_radius: float
    bound: float
    bound_kind: str

    @property
    def slack(self):
        return self.bound - self.measured_radius


def _gram_list(grams):
    if isinstance(grams, BlockGrams):
        return grams.D
    return [linalg.as_matrix(d, "D_i") for d in grams]


def _projection(b, p):
    return np.kron(np.full((b, b), 1.0 / b), np.eye(p))


def _block_diag(mats):
    p = mats[0].shape[0]
    out = np.zeros((len(mats) * p, len(mats) * p))
    for i, m in enumerate(mats):
        out[i * p:(i + 1) * p, i * p:(i + 1) * p] = m
    return out


def _block_resolvent(mats, scale):
    """Block diagonal of (I + scale * D_i)^-1 via per-block Cholesky."""
    p = mats[0].shape[0]
    eye = np.eye(p)
    return _block_diag([linalg.cholesky_solve(eye + scale * m, eye) for m in mats])


def build_Mp(grams, rho_p):
    """Iteration matrix of primal distributed ADMM on least squares:
    (I - P - (I + D/rho)^-1)(I - 2P) on the stacked state rho*beta_i + lambda_i."""
    if rho_p <= 0:
        raise ValueError("rho_p must be positive")
    D = _gram_list(grams)
    b, p = len(D), D[0].shape[0]
    P = _projection(b, p)
    Phi = _block_resolvent(D, 1.0 / rho_p)
    eye = np.eye(b * p)
    m = (eye - P - Phi) @ (eye - 2.0 * P)
    return IterationMap("Mp", m, float(rho_p), b, p)


def build_Mgd(global_gram, rho):
    """Gradient-descent map I - rho * X^T X."""
    g = linalg.as_matrix(global_gram, "gram")
    m = np.eye(g.shape[0]) - rho * g
    return IterationMap("Mgd", m, float(rho), 1, g.shape[0])


def build_Md(grams, rho_d):
    """Iteration matrix of dual distributed ADMM:
    (D + I/rho_d)^-1 D (I - 2P) + P on the stacked state rho_d*mu_i - beta."""
    if rho_d <= 0:
        raise ValueError("rho_d must be positive")
    D = _gram_list(grams)
    b, p = len(D), D[0].shape[0]
    P = _projection(b, p)
    eye = np.eye(b * p)
    # (D + I/rho_d)^-1 D = (I + rho_d D)^-1 rho_d D = I - (I + rho_d D)^-1
    res = _block_resolvent(D, rho_d)
    m = (eye - res) @ (eye - 2.0 * P) + P
    return IterationMap("Md", m, float(rho_d), b, p)


def _ordered_lower(D, order, rho_d):
    """Center-indexed lower block triangle: row c picks up D_c for every
    center updated no later than c under `order`."""
    b, p = len(D), D[0].shape[0]
    pos = np.empty(b, dtype=int)
    for k, c in enumerate(order):
        pos[c] = k
    L = np.zeros((b * p, b * p))
    for c in range(b):
        for c2 in range(b):
            if pos[c2] <= pos[c]:
                L[c * p:(c + 1) * p, c2 * p:(c2 + 1) * p] = D[c]
    return L


def _cyclic_parts(D, rho_d, order):
    b, p = len(D), D[0].shape[0]
    L = _ordered_lower(D, order, rho_d)
    Dblk = _block_diag(D)
    P = _projection(b, p)
    E = np.kron(np.ones((b, 1)), np.eye(p))
    inv = _solve_ordered(D, order, rho_d)
    A = np.block([[inv, np.zeros((b * p, p))],
                  [-rho_d * (E.T @ inv), np.eye(p)]])
    B = np.block([[rho_d * (L - b * (Dblk @ P)), Dblk @ E],
                  [np.zeros((p, b * p)), np.eye(p)]])
    return A, B


def _solve_ordered(D, order, rho_d):
    """Invert I + rho_d * L by block forward substitution along `order`.

    L is block lower triangular once rows and columns are read in update
    order, so row c of the inverse needs only the blocks of centers updated
    before c: (I + rho D_c) Z_c = rhs_c - rho D_c * sum_earlier Z_e.
    """
    b, p = len(D), D[0].shape[0]
    n = b * p
    eye_p = np.eye(p)
    out = np.zeros((n, n))
    rhs = np.eye(n)
    acc = np.zeros((p, n))
    for c in order:
        sl = slice(c * p, (c + 1) * p)
        out[sl] = linalg.cholesky_solve(eye_p + rho_d * D[c], rhs[sl] - rho_d * (D[c] @ acc))
        acc += out[sl]
    return out


def build_Mc(grams, rho_d, order=None):
    """Similarity-reduced cyclic iteration matrix M'_c, center-indexed.

    Same nonzero spectrum as the full (mu, beta) transition of one cyclic
    sweep in the given update order followed by the beta step.
    """
    if rho_d <= 0:
        raise ValueError("rho_d must be positive")
    D = _gram_list(grams)
    b, p = len(D), D[0].shape[0]
    order = _check_order(order, b)
    A, B = _cyclic_parts(D, rho_d, order)
    return IterationMap("Mc", B @ A, float(rho_d), b, p)


def cyclic_transition(grams, cs, rho_d, order=None):
    """Full affine one-sweep map on the stacked state [mu_1..mu_b; beta].

    Returns (M, const) with state' = M state + const, where cs[i] = X_i^T y_i.
    Used to cross-check the sweep solvers against explicit matrix action.
    """
    D = _gram_list(grams)
    b, p = len(D), D[0].shape[0]
    order = _check_order(order, b)
    A, B = _cyclic_parts(D, rho_d, order)
    c = np.concatenate([np.asarray(ci, dtype=float) for ci in cs] + [np.zeros(p)])
    return A @ B, -(A @ c)


def _check_order(order, b):
    if order is None:
        return tuple(range(b))
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(b)):
        raise ValueError(f"order must be a permutation of 0..{b - 1}, got {order!r}")
    return order


def rp_expected_map(grams, rho_d):
    """Arithmetic mean of the reduced cyclic map over all b! update orders.

    Raises
    ------
    BlockCountTooLarge
        When b > 6 (the b! enumeration would be excessive).
    """
    D = _gram_list(grams)
    b, p = len(D), D[0].shape[0]
    if b > 6:
        raise BlockCountTooLarge(f"b = {b} would need {math.factorial(b)} orders")
    total = None
    count = 0
    for order in permutations(range(b)):
        m = build_Mc(D, rho_d, order).matrix
        total = m if total is None else total + m
        count += 1
    return IterationMap("RpExpected", total / count, float(rho_d), b, p)


# ---------------------------------------------------------------------------
# Closed-form bounds
# ---------------------------------------------------------------------------

def bound_large_step(b, rho_p, qmin):
    """Large-step bound b rho / (b rho + qmin); tight at equal blocks."""
    return b * rho_p / (b * rho_p + qmin)


def bound_small_step_b2(rho_p, qbar):
    """Two-center small-step bound qbar / (2 rho + qbar); tight at D_1 = D_2."""
    return qbar / (2.0 * rho_p + qbar)


@dataclass(frozen=True)
class SmallStepBounds:
    loose: float         # qbar / (rho + qbar), any block count
    constructed: float   # rate achieved by the two-dominant construction
    equal_block: float   # rate of the equal-block structure, qbar / (b rho + qbar)


def bounds_small_step_general(b, rho_p, qbar):
    """Small-step rates for b centers (loose bound, achieved construction,
    equal-block rate)."""
    constructed = (qbar - (b - 2) * rho_p) / (2.0 * rho_p + qbar - (b - 2) * rho_p)
    return SmallStepBounds(loose=qbar / (rho_p + qbar),
                           constructed=constructed,
                           equal_block=qbar / (b * rho_p + qbar))


def gd_crossover(b, qbar, qmin, q1):
    """Step-size thresholds (s1, s2): distributed ADMM beats gradient
    descent for rho in (0, s1) and rho > s2."""
    s1 = min(1.0 / qmin - qbar, q1)
    s2 = (2.0 * b - qbar * qmin + math.sqrt(4.0 * b * b + (qbar * qmin) ** 2)) / (2.0 * b * qbar)
    return s1, s2


def _cyclic_rate_fn(x, b):
    return x / (1.0 - x) * (1.0 - ((2.0 * x - 1.0) / (x * x)) ** (1.0 / b))


def cyclic_rate_root(b, qmin, tol=1e-12):
    """Equal-block cyclic rate at unit step: the root of f(x) = qmin / b.

    f(x) = x/(1-x) * (1 - ((2x-1)/x^2)^(1/b)) is monotone decreasing from 1
    to 0 on (1/2, 1).  With equal blocks each block Gram has smallest
    eigenvalue qmin/b, which is the quantity the characteristic equation of
    the cyclic map runs on, so the dominant eigenvalue solves f(x) = qmin/b.
    Bisection to ``tol`` on [0.5 + 1e-9, 1 - 1e-9].

    Raises
    ------
    OutOfRange
        Unless qmin in (0, 1) and b in {2, 3, 4}.
    """
    if b not in (2, 3, 4):
        raise OutOfRange(f"closed-form root only for b in 2..4, got {b}")
    if not 0.0 < qmin < 1.0:
        raise OutOfRange(f"qmin must be in (0, 1), got {qmin!r}")
    target = qmin / b
    lo, hi = 0.5 + 1e-9, 1.0 - 1e-9
    flo = _cyclic_rate_fn(lo, b) - target
    fhi = _cyclic_rate_fn(hi, b) - target
    if flo < 0 or fhi > 0:
        raise OutOfRange("root not bracketed; qmin outside the valid regime")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _cyclic_rate_fn(mid, b) - target > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
