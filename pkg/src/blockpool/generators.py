"""Seeded generators for the named block-data structures.

Worst-case equal-block data, the two-dominant-block construction, the two
printed 2-center example datasets, the two-center preconditioning stress
construction, and generic random data.  Rebuilding with the same spec yields
bit-identical output.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import BadEpsilon, InfeasibleParameters, InfeasibleSpectrum
from .model import PartitionedDataset

#: tolerance on "target spectrum sums to <= 1"
_SPECTRUM_SUM_TOL = 1e-9


@dataclass(frozen=True)
class GenSpec:
    """Parameters shared by the block-data generators.

    target_spectrum, when given, lists the p eigenvalues the global Gram
    X^T X should have; values must be positive, below 1, and sum to at most
    1 so the result is compatible with Frobenius-normalized rate theory.
    noise_sigma controls the synthetic response y = X beta_true + noise.
    """

    b: int
    p: int
    rows_per_block: int
    seed: int = 0
    target_spectrum: tuple | None = None
    noise_sigma: float = 0.05

    def __post_init__(self):
        if self.b < 2:
            raise ValueError("need b >= 2 centers")
        if self.p < 1:
            raise ValueError("need p >= 1 features")
        if self.target_spectrum is not None:
            object.__setattr__(self, "target_spectrum",
                               tuple(float(v) for v in self.target_spectrum))

    def spectrum(self):
        """Target eigenvalues of X^T X (default: narrow ramp summing to 0.9)."""
        if self.target_spectrum is None:
            ramp = np.linspace(0.85, 1.0, self.p)
            return ramp / ramp.sum() * 0.9
        vals = np.asarray(self.target_spectrum, dtype=float)
        if vals.shape != (self.p,):
            raise InfeasibleSpectrum(f"need {self.p} spectrum values, got {vals.shape}")
        if (vals <= 0).any() or (vals > 1).any():
            raise InfeasibleSpectrum("target spectrum values must lie in (0, 1]")
        if vals.sum() > 1.0 + _SPECTRUM_SUM_TOL:
            raise InfeasibleSpectrum(f"target spectrum sums to {vals.sum()!r} > 1")
        return vals


def _random_orthogonal(rng, n):
    """Haar-ish orthogonal matrix from QR of a Gaussian draw."""
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))


def _gram_factor(gram):
    """Upper-triangular R with R^T R = gram (Cholesky transpose)."""
    return linalg.cholesky_factor(gram).T


def _pad_rows(R, rows):
    out = np.zeros((rows, R.shape[1]))
    out[:R.shape[0]] = R
    return out


def _finish(spec, rng, block_mats):
    """Assemble a PartitionedDataset with synthetic responses."""
    X = np.vstack(block_mats)
    beta_true = rng.standard_normal(spec.p)
    y = X @ beta_true + spec.noise_sigma * rng.standard_normal(X.shape[0])
    s = spec.rows_per_block
    blocks = tuple(np.arange(i * s, (i + 1) * s) for i in range(spec.b))
    return PartitionedDataset(X, y, blocks)


def _blocks_from_grams(spec, rng, target_grams):
    """One block per target Gram: orthogonal row mix of a padded factor.

    Each block i satisfies X_i^T X_i = target_grams[i] exactly while the raw
    rows differ across blocks.
    """
    if spec.rows_per_block < spec.p:
        raise InfeasibleSpectrum(
            f"rows_per_block={spec.rows_per_block} < p={spec.p}: blocks would be singular")
    mats = []
    for g in target_grams:
        R = _pad_rows(_gram_factor(g), spec.rows_per_block)
        O = _random_orthogonal(rng, spec.rows_per_block)
        mats.append(O @ R)
    return mats


def gen_equal_blocks(spec):
    """Worst-case data for large-step distributed ADMM: D_i identical.

    The global Gram gets the target spectrum; every block Gram equals that
    Gram divided by b (to 1e-12), realised with different raw rows per block.
    """
    vals = spec.spectrum()
    rng = np.random.default_rng(spec.seed)
    Q = _random_orthogonal(rng, spec.p)
    gram = Q @ np.diag(vals) @ Q.T
    gram = 0.5 * (gram + gram.T)
    mats = _blocks_from_grams(spec, rng, [gram / spec.b] * spec.b)
    return _finish(spec, rng, mats)


def gen_two_dominant(spec, rho_p):
    """Two dominant blocks plus minimal-spectrum padding blocks.

    D_1 = D_2 = (X^T X - (b-2) rho_p I) / 2 and D_j = rho_p I for j >= 3.
    The padding blocks put lambda_min exactly at rho_p, the boundary of the
    small-step regime; run solvers with step sizes strictly below rho_p.
    """
    if spec.b < 3:
        raise InfeasibleParameters("construction needs b >= 3 (b = 2 is the equal-block case)")
    if rho_p <= 0:
        raise InfeasibleParameters("rho_p must be positive")
    vals = spec.spectrum()
    rng = np.random.default_rng(spec.seed)
    Q = _random_orthogonal(rng, spec.p)
    gram = Q @ np.diag(vals) @ Q.T
    gram = 0.5 * (gram + gram.T)
    qmin = float(vals.min())
    if qmin - (spec.b - 2) * rho_p <= 0:
        raise InfeasibleParameters(
            f"need qmin > (b-2) rho_p, got qmin={qmin!r}, (b-2)rho_p={(spec.b - 2) * rho_p!r}")
    dominant = 0.5 * (gram - (spec.b - 2) * rho_p * np.eye(spec.p))
    padding = rho_p * np.eye(spec.p)
    grams = [dominant, dominant] + [padding] * (spec.b - 2)
    warnings.warn("two-dominant construction has q1 == rho_p exactly; "
                  "use solver step sizes strictly below rho_p", stacklevel=2)
    mats = _blocks_from_grams(spec, rng, grams)
    return _finish(spec, rng, mats)


#: the two printed 2-center, 1-feature example datasets (Frobenius-normalized
#: entries as printed; both share the same global Gram)
_EXAMPLE_BLOCKS = {
    "scenario_one": ([0.7379, 0.0075], [0.6708, 0.0745]),
    "scenario_two": ([0.7379, 0.6708], [0.0075, 0.0745]),
}


def gen_paper_example(which):
    """One of the two printed 2-center example datasets.

    ``scenario_one`` has nearly equal block Grams (slow distributed ADMM,
    rate ~ 0.6661 at step 1); ``scenario_two`` redistributes the same rows
    into very unequal blocks (rate ~ 0.5264).  The response is the exact
    consistent y = X * 1 so the least-squares optimum is known.
    """
    if which not in _EXAMPLE_BLOCKS:
        raise ValueError(f"unknown example {which!r}; use scenario_one or scenario_two")
    c1, c2 = _EXAMPLE_BLOCKS[which]
    X = np.array(c1 + c2, dtype=float).reshape(4, 1)
    y = X @ np.ones(1)
    return PartitionedDataset(X, y, (np.arange(0, 2), np.arange(2, 4)))


def gen_pcg_construction(epsilon, s, seed=0):
    """Two-center preconditioning stress data.

    Rows are (1, xi)/sqrt(s); the second-feature noise has variance
    ``epsilon`` at center 1 and ``1/epsilon`` at center 2, so the block
    Grams converge to diag(1, epsilon) and diag(1, 1/epsilon) as s grows.
    At epsilon = 1 the two centers are statistically identical.
    """
    if not 0.0 < epsilon <= 1.0:
        raise BadEpsilon(f"epsilon must be in (0, 1], got {epsilon!r}")
    if s < 2:
        raise ValueError("need s >= 2 rows per center")
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(s)
    x1 = np.column_stack([np.full(s, scale),
                          np.sqrt(epsilon) * rng.standard_normal(s) * scale])
    x2 = np.column_stack([np.full(s, scale),
                          np.sqrt(1.0 / epsilon) * rng.standard_normal(s) * scale])
    X = np.vstack([x1, x2])
    y = rng.standard_normal(2 * s)
    return PartitionedDataset(X, y, (np.arange(0, s), np.arange(s, 2 * s)))


def gen_random(spec, dist="gaussian", offset=0.0, normalize=False):
    """Seeded random data, one of ``gaussian``, ``uniform``, ``shifted``.

    ``shifted`` adds ``offset`` to every Gaussian entry.  With ``normalize``
    the stacked matrix is divided by its Frobenius norm before the response
    is generated (theorem-mode scaling).
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.b * spec.rows_per_block
    if dist == "gaussian":
        X = rng.standard_normal((n, spec.p))
    elif dist == "uniform":
        X = rng.uniform(0.0, 1.0, (n, spec.p))
    elif dist == "shifted":
        X = rng.standard_normal((n, spec.p)) + offset
    else:
        raise ValueError(f"unknown dist {dist!r}")
    if normalize:
        X = linalg.frobenius_normalize(X)
    beta_true = rng.standard_normal(spec.p)
    y = X @ beta_true + spec.noise_sigma * rng.standard_normal(n)
    s = spec.rows_per_block
    blocks = tuple(np.arange(i * s, (i + 1) * s) for i in range(spec.b))
    return PartitionedDataset(X, y, blocks)
