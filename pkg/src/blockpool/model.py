"""Datasets split across centers, block Gram matrices, objectives, metrics."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg
from .errors import LengthMismatch, SingularBlock, TooFewRows, ZeroBaseline

#: smallest block-Gram eigenvalue accepted in theorem mode
THEOREM_MODE_MIN_EIG = 1e-12


@dataclass(frozen=True)
class PartitionedDataset:
    """A global regression dataset (X, y) split into b center-local blocks.

    ``blocks[i]`` holds the ordered global row indices owned by center i
    (0-based).  Blocks are disjoint, nonempty, and cover every row.
    """

    X: np.ndarray
    y: np.ndarray
    blocks: tuple

    def __post_init__(self):
        x = linalg.as_matrix(self.X, "X")
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ValueError("y must be a vector with one entry per row of X")
        blocks = tuple(np.asarray(ix, dtype=np.intp) for ix in self.blocks)
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "blocks", blocks)
        n = x.shape[0]
        seen = np.zeros(n, dtype=bool)
        for ix in blocks:
            if ix.size == 0:
                raise ValueError("every block must be nonempty")
            if (ix < 0).any() or (ix >= n).any():
                raise ValueError("block index out of range")
            if seen[ix].any():
                raise ValueError("blocks must be disjoint")
            seen[ix] = True
        if not seen.all():
            raise ValueError("blocks must cover all rows")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def b(self):
        return len(self.blocks)

    @property
    def sizes(self):
        return tuple(ix.size for ix in self.blocks)

    def block(self, i):
        """(X_i, y_i) for center i."""
        ix = self.blocks[i]
        return self.X[ix], self.y[ix]

    def owners(self):
        """Array mapping each global row index to its owning center."""
        own = np.empty(self.n, dtype=np.intp)
        for i, ix in enumerate(self.blocks):
            own[ix] = i
        return own

    def with_blocks(self, blocks):
        return PartitionedDataset(self.X, self.y, tuple(blocks))


@dataclass(frozen=True)
class Objective:
    """Regression objective.

    kind:
        ``least_squares``  0.5 ||X b - y||^2
        ``ridge``          0.5 ||X b - y||^2 + 0.5 alpha ||b||^2
        ``logistic``       sum log(1 + exp(-y_j x_j b)), labels in {-1, +1}
    """

    kind: str = "least_squares"
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("least_squares", "ridge", "logistic"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.kind == "least_squares" and self.alpha != 0.0:
            object.__setattr__(self, "kind", "ridge")

    @property
    def is_logistic(self):
        return self.kind == "logistic"


@dataclass
class MetricReport:
    """Per-algorithm summary row of an experiment."""

    algorithm: str
    absolute_loss: float
    relative_residual: float
    iterations: int
    wall_time: float
    converged: bool = False


class BlockGrams:
    """Per-center Gram matrices D_i = X_i^T X_i with a lazy spectral summary.

    qbar / qmin are the largest / smallest eigenvalues of the global Gram
    sum(D_i); q1 = min_i lambda_min(D_i); q2 = max_i lambda_max(D_i).
    The summary is computed on first access (the large-p solver paths never
    need it).
    """

    def __init__(self, D):
        self.D = [linalg.as_matrix(d, "D_i") for d in D]
        if not self.D:
            raise ValueError("need at least one block")
        p = self.D[0].shape
        for d in self.D:
            if d.shape != p:
                raise ValueError("all D_i must share one shape")

    @property
    def b(self):
        return len(self.D)

    @property
    def p(self):
        return self.D[0].shape[0]

    @cached_property
    def global_gram(self):
        return sum(self.D)

    @cached_property
    def _block_extremes(self):
        lo, hi = [], []
        for d in self.D:
            ev = linalg.eigenvalues_symmetric(d)
            lo.append(ev[0])
            hi.append(ev[-1])
        return lo, hi

    @cached_property
    def qbar(self):
        return float(linalg.eigenvalues_symmetric(self.global_gram)[-1])

    @cached_property
    def qmin(self):
        return float(linalg.eigenvalues_symmetric(self.global_gram)[0])

    @cached_property
    def q1(self):
        return float(min(self._block_extremes[0]))

    @cached_property
    def q2(self):
        return float(max(self._block_extremes[1]))


def partition_rows(X, y, b, strategy="contiguous", seed=None):
    """Split rows of (X, y) into b blocks.

    strategy:
        ``contiguous``      b nearly equal consecutive chunks; the remainder
                            goes to the earlier blocks (sizes differ by <= 1)
        ``round_robin``     row i -> block i mod b
        ``seeded_shuffle``  seeded permutation, then contiguous

    Raises
    ------
    TooFewRows
        Unless n >= b >= 2.
    """
    X = linalg.as_matrix(X, "X")
    n = X.shape[0]
    if b < 2 or n < b:
        raise TooFewRows(f"need n >= b >= 2, got n={n}, b={b}")
    if strategy == "contiguous":
        order = np.arange(n)
    elif strategy == "round_robin":
        return PartitionedDataset(X, y, tuple(np.arange(i, n, b) for i in range(b)))
    elif strategy == "seeded_shuffle":
        order = np.random.default_rng(seed).permutation(n)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    base, extra = divmod(n, b)
    blocks, start = [], 0
    for i in range(b):
        size = base + (1 if i < extra else 0)
        blocks.append(np.sort(order[start:start + size]) if strategy == "seeded_shuffle"
                      else order[start:start + size])
        start += size
    return PartitionedDataset(X, y, tuple(blocks))


def block_grams(ds, theorem_mode=False):
    """Per-center Grams D_i = X_i^T X_i.

    With ``theorem_mode`` every block must satisfy lambda_min(D_i) > 1e-12
    (the rate theory needs X_i^T X_i strictly positive definite).

    Raises
    ------
    SingularBlock
        In theorem mode when some block Gram is numerically singular.
    """
    D = []
    for i in range(ds.b):
        Xi, _ = ds.block(i)
        D.append(Xi.T @ Xi)
    grams = BlockGrams(D)
    if theorem_mode and grams.q1 <= THEOREM_MODE_MIN_EIG:
        raise SingularBlock(f"theorem mode needs q1 > {THEOREM_MODE_MIN_EIG}, got {grams.q1!r}")
    return grams


def absolute_loss(beta_hat, beta_star):
    """AL = ||beta_star - beta_hat||_2."""
    a = np.asarray(beta_hat, dtype=float).ravel()
    b = np.asarray(beta_star, dtype=float).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths {a.shape[0]} vs {b.shape[0]}")
    return float(np.sqrt(((a - b) ** 2).sum()))


def relative_al_ratio(al_alg, al_newton):
    """r_AL = (AL_alg - AL_newton) / AL_newton for a positive baseline."""
    if al_newton <= 0.0:
        raise ZeroBaseline("baseline absolute loss must be positive")
    return (al_alg - al_newton) / al_newton
