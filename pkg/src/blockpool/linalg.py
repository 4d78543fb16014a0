"""Self-contained dense real linear algebra.

Cholesky factorization and SPD solves, eigenvalues of general square
matrices via Hessenberg reduction plus Wilkinson-shifted QR iteration,
spectral radius, and condition numbers of preconditioned SPD pairs.

Everything operates on plain float64 ``numpy.ndarray`` values; no routine
here calls into ``numpy.linalg``.  All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotPositiveDefinite, ZeroMatrix

#: relative symmetry tolerance for SPD inputs
SYMMETRY_RTOL = 1e-12

#: subdiagonal deflation tolerance of the QR iteration
QR_DEFLATION_TOL = 1e-12

#: QR sweeps allowed per matrix = QR_SWEEP_FACTOR * dimension
QR_SWEEP_FACTOR = 100


def as_matrix(a, name="matrix"):
    """Validate and return `a` as a 2-D float64 array with finite entries."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _require_square(m, name="matrix"):
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")


def _require_symmetric(m, name="matrix"):
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric within {SYMMETRY_RTOL} relative")


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a square matrix together with their max modulus."""

    values: np.ndarray  # complex, length = matrix dimension
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))


# ---------------------------------------------------------------------------
# Cholesky
# ---------------------------------------------------------------------------

def cholesky_factor(a, check_symmetric=True):
    """Lower-triangular L with A = L L^T.

    Parameters
    ----------
    a : (n, n) array_like
        Symmetric positive definite matrix.
    check_symmetric : bool
        Verify symmetry to :data:`SYMMETRY_RTOL` relative before factoring.

    Raises
    ------
    NotPositiveDefinite
        When a pivot <= 0 is encountered.
    """
    a = as_matrix(a, "A")
    _require_square(a, "A")
    if check_symmetric:
        _require_symmetric(a, "A")
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if not d > 0.0:
            raise NotPositiveDefinite(f"pivot {d!r} at index {j}")
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def solve_factored(L, b):
    """Solve A x = b given L from :func:`cholesky_factor` (A = L L^T)."""
    b = np.asarray(b, dtype=float)
    vec = b.ndim == 1
    y = b.reshape(-1, 1).copy() if vec else b.copy()
    n = L.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"rhs has {y.shape[0]} rows, expected {n}")
    for i in range(n):            # L y = b
        if i:
            y[i] -= L[i, :i] @ y[:i]
        y[i] /= L[i, i]
    for i in range(n - 1, -1, -1):  # L^T x = y
        if i + 1 < n:
            y[i] -= L[i + 1:, i] @ y[i + 1:]
        y[i] /= L[i, i]
    return y[:, 0] if vec else y


def cholesky_solve(a, b):
    """Solve A X = B for SPD A by Cholesky factorization.

    Raises
    ------
    NotPositiveDefinite
        If A is not positive definite (non-positive pivot).
    """
    return solve_factored(cholesky_factor(a), b)


def inverse_spd(a):
    """Inverse of an SPD matrix via Cholesky."""
    a = as_matrix(a, "A")
    return cholesky_solve(a, np.eye(a.shape[0]))


# ---------------------------------------------------------------------------
# Eigenvalues: Hessenberg + shifted QR
# ---------------------------------------------------------------------------

def hessenberg(a):
    """Reduce a real square matrix to upper Hessenberg form by Householder
    similarity transforms (eigenvalues preserved)."""
    h = as_matrix(a, "M").copy()
    _require_square(h, "M")
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        norm_x = np.sqrt(x @ x)
        if norm_x == 0.0:
            continue
        v = x.copy()
        v[0] += norm_x if v[0] >= 0 else -norm_x
        v2 = v @ v
        if v2 == 0.0:
            continue
        w = 2.0 * v / v2
        # similarity: (I - w v^T) H (I - v w^T) restricted to the live block
        h[k + 1:, k:] -= np.outer(w, v @ h[k + 1:, k:])
        h[:, k + 1:] -= np.outer(h[:, k + 1:] @ v, w)
        h[k + 2:, k] = 0.0
    return h


def _eig2x2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]] (complex scalars allowed)."""
    tr = a + d
    half = 0.5 * (a - d)
    disc = np.emath.sqrt(complex(half * half + b * c))
    lam1 = 0.5 * tr + disc
    lam2 = 0.5 * tr - disc
    # refine the smaller root from the determinant for accuracy
    det = a * d - b * c
    if abs(lam1) > abs(lam2) and lam1 != 0:
        lam2 = det / lam1
    elif lam2 != 0:
        lam1 = det / lam2
    return complex(lam1), complex(lam2)


def _qr_sweep(h, lo, hi, shift):
    """One explicit shifted QR step on the active window h[lo:hi, lo:hi].

    The window is upper Hessenberg; Givens rotations annihilate the
    subdiagonal of (H - shift I), then RQ + shift I restores Hessenberg form.
    """
    m = hi - lo
    idx = np.arange(lo, hi)
    h[idx, idx] -= shift
    cs = np.empty(m - 1, dtype=complex)
    sn = np.empty(m - 1, dtype=complex)
    for k in range(lo, hi - 1):
        a = h[k, k]
        b = h[k + 1, k]
        r = np.hypot(abs(a), abs(b))
        if r == 0.0:
            c, s = 1.0 + 0j, 0.0 + 0j
        else:
            c, s = a / r, b / r
        cs[k - lo], sn[k - lo] = c, s
        row_a = h[k, k:hi].copy()
        row_b = h[k + 1, k:hi]
        h[k, k:hi] = np.conj(c) * row_a + np.conj(s) * row_b
        h[k + 1, k:hi] = -s * row_a + c * row_b
        h[k + 1, k] = 0.0
    for k in range(lo, hi - 1):
        c, s = cs[k - lo], sn[k - lo]
        top = min(k + 2, hi)
        col_a = h[lo:top, k].copy()
        col_b = h[lo:top, k + 1]
        h[lo:top, k] = c * col_a + s * col_b
        h[lo:top, k + 1] = -np.conj(s) * col_a + np.conj(c) * col_b
    h[idx, idx] += shift


def eigenvalues_general(m, tol=QR_DEFLATION_TOL):
    """All eigenvalues of a real square matrix.

    Hessenberg reduction followed by Wilkinson-shifted QR iteration with
    deflation (run in complex arithmetic so conjugate pairs fall out
    naturally).  1x1 and 2x2 trailing blocks are resolved in closed form.

    Parameters
    ----------
    m : (n, n) array_like
    tol : float
        Relative subdiagonal deflation threshold.

    Returns
    -------
    Spectrum

    Raises
    ------
    NoConvergence
        After ``100 * n`` QR sweeps without full deflation.
    """
    a = as_matrix(m, "M")
    _require_square(a, "M")
    n = a.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if n == 1:
        val = complex(a[0, 0])
        return Spectrum(np.array([val]), abs(val))

    h = hessenberg(a).astype(complex)
    values = []
    hi = n
    sweeps = 0
    stall = 0
    cap = QR_SWEEP_FACTOR * n
    while hi > 0:
        if hi == 1:
            values.append(complex(h[0, 0]))
            hi = 0
            break
        # zero negligible subdiagonals in the live region
        for k in range(1, hi):
            if abs(h[k, k - 1]) <= tol * (abs(h[k - 1, k - 1]) + abs(h[k, k])):
                h[k, k - 1] = 0.0
        if h[hi - 1, hi - 2] == 0.0:
            values.append(complex(h[hi - 1, hi - 1]))
            hi -= 1
            stall = 0
            continue
        # locate the unreduced block [lo, hi)
        lo = hi - 1
        while lo > 0 and h[lo, lo - 1] != 0.0:
            lo -= 1
        if lo == hi - 2:
            lam1, lam2 = _eig2x2(h[lo, lo], h[lo, lo + 1], h[lo + 1, lo], h[lo + 1, lo + 1])
            values.extend([lam1, lam2])
            hi -= 2
            stall = 0
            continue
        mu1, mu2 = _eig2x2(h[hi - 2, hi - 2], h[hi - 2, hi - 1],
                           h[hi - 1, hi - 2], h[hi - 1, hi - 1])
        corner = h[hi - 1, hi - 1]
        shift = mu1 if abs(mu1 - corner) <= abs(mu2 - corner) else mu2
        if stall and stall % 16 == 0:
            # exceptional shift to break symmetric stagnation cycles
            shift = corner + 0.75 * abs(h[hi - 1, hi - 2])
        _qr_sweep(h, lo, hi, shift)
        sweeps += 1
        stall += 1
        if sweeps > cap:
            raise NoConvergence(f"QR iteration exceeded {cap} sweeps on a {n}x{n} matrix")
    vals = np.array(values, dtype=complex)
    return Spectrum(vals, float(np.abs(vals).max()))


def spectral_radius(m):
    """Max eigenvalue modulus of a square matrix."""
    return eigenvalues_general(m).radius


def eigenvalues_symmetric(a):
    """Real eigenvalues of a symmetric matrix, ascending.

    Thin wrapper over :func:`eigenvalues_general`; imaginary round-off is
    discarded (inputs must be symmetric, where the spectrum is real).
    """
    a = as_matrix(a, "A")
    _require_square(a, "A")
    _require_symmetric(a, "A")
    return np.sort(eigenvalues_general(a).values.real)


# ---------------------------------------------------------------------------
# Condition numbers and normalization
# ---------------------------------------------------------------------------

def spd_condition_number(h, a):
    """Condition number lambda_max/lambda_min of H A for SPD H and A.

    H A is similar to the symmetric L^T A L where H = L L^T, so its
    eigenvalues are real and positive; the computation stays in real
    symmetric arithmetic.

    Raises
    ------
    NotPositiveDefinite
        If H is not SPD, or H A turns out to have non-positive eigenvalues
        (i.e. A was not positive definite).
    """
    h = as_matrix(h, "H")
    a = as_matrix(a, "A")
    _require_square(h, "H")
    _require_square(a, "A")
    _require_symmetric(a, "A")
    L = cholesky_factor(h)
    s = L.T @ a @ L
    s = 0.5 * (s + s.T)  # absorb round-off asymmetry
    ev = eigenvalues_symmetric(s)
    if ev[0] <= 0.0:
        raise NotPositiveDefinite(f"H A has non-positive eigenvalue {ev[0]!r}")
    return float(ev[-1] / ev[0])


def frobenius_norm(x):
    x = as_matrix(x, "X")
    return float(np.sqrt((x * x).sum()))


def frobenius_normalize(x):
    """X / ||X||_F.  After normalization the eigenvalues of X^T X sum to 1.

    Raises
    ------
    ZeroMatrix
        If X is zero.
    """
    x = as_matrix(x, "X")
    nrm = frobenius_norm(x)
    if nrm == 0.0:
        raise ZeroMatrix("cannot normalize the zero matrix")
    return x / nrm
