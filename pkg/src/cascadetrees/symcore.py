"""Dense symmetric-matrix primitives.

Matrices are plain float64 numpy arrays. Functions never modify their inputs
and never add regularization jitter; a factorization that fails raises
:class:`NotPositiveDefinite`.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    NotSquare,
    NotSymmetric,
    NotUnitDiagonal,
)

SYMMETRY_TOL = 1e-12
DIAGONAL_TOL = 1e-10


@dataclass(frozen=True)
class Permutation:
    """Vertex ordering.

    ``order[k]`` is the original node placed at position ``k``. The matrix
    form P satisfies ``(P @ m @ P.T)[k, l] == m[order[k], order[l]]``.
    """

    order: tuple

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"not a permutation of 0..{len(order) - 1}: {order}")
        object.__setattr__(self, "order", order)

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(n)))

    def __len__(self):
        return len(self.order)

    @property
    def position(self):
        """Inverse map: ``position[node]`` is where ``node`` lands."""
        pos = np.empty(len(self.order), dtype=int)
        pos[list(self.order)] = np.arange(len(self.order))
        return pos

    def inverse(self):
        return Permutation(tuple(self.position))

    def matrix(self):
        n = len(self.order)
        p = np.zeros((n, n))
        p[np.arange(n), list(self.order)] = 1.0
        return p

    def is_identity(self):
        return self.order == tuple(range(len(self.order)))


def _as_square(m):
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {m.shape}")
    return m


def _frozen(m):
    m.setflags(write=False)
    return m


def validate_corr(m):
    """Check that ``m`` is a correlation matrix and return a symmetrized copy.

    The returned array is read-only.
    """
    m = _as_square(m)
    if not np.all(np.isfinite(m)):
        raise NotSymmetric("matrix contains non-finite entries")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise NotSymmetric(f"max |m - m^T| = {asym:.3e} exceeds {SYMMETRY_TOL:g}")
    m = 0.5 * (m + m.T)
    diag_err = np.abs(np.diag(m) - 1.0)
    if diag_err.size and diag_err.max() > DIAGONAL_TOL:
        k = int(np.argmax(diag_err))
        raise NotUnitDiagonal(f"diagonal entry {k} is {m[k, k]!r}, expected 1")
    cholesky_lower(m)
    return _frozen(m)


def cholesky_lower(m):
    """Lower-triangular ``L`` with ``L @ L.T == m``.

    Backed by LAPACK ``potrf`` so the first failing pivot can be reported.
    """
    m = _as_square(m)
    if m.shape[0] == 0:
        return m.copy()
    c, info = lapack.dpotrf(m, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefinite(
            f"matrix is not positive definite (pivot {info - 1} <= 0)", pivot=info - 1
        )
    if info < 0:
        raise ValueError(f"potrf: illegal argument {-info}")
    return c


def cholesky_upper(m):
    """Upper-triangular ``U`` with ``U @ U.T == m``.

    Computed by reversing the index order, taking the lower factor and
    reversing back.
    """
    m = _as_square(m)
    rev = m[::-1, ::-1]
    try:
        low = cholesky_lower(rev)
    except NotPositiveDefinite as exc:
        n = m.shape[0]
        raise NotPositiveDefinite(str(exc), pivot=n - 1 - exc.pivot) from None
    return np.ascontiguousarray(low[::-1, ::-1])


def _eigh_spd(m):
    m = _as_square(m)
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    if w.size and w[0] <= 0:
        raise NotPositiveDefinite(
            f"matrix is not positive definite (min eigenvalue {w[0]:.3e})"
        )
    return w, v


def symmetric_sqrt(m):
    """Symmetric ``S`` with ``S @ S == m`` via eigendecomposition."""
    w, v = _eigh_spd(m)
    s = (v * np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def symmetric_inv_sqrt(m):
    """Inverse of :func:`symmetric_sqrt`, from the same eigendecomposition."""
    w, v = _eigh_spd(m)
    s = (v / np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def logdet(m):
    """log|m| as ``2 * sum(log(diag(cholesky(m))))``."""
    low = cholesky_lower(m)
    return 2.0 * float(np.sum(np.log(np.diag(low))))


def kl_gauss(p, q):
    """KL divergence D(N(0, p) || N(0, q)) in nats.

    Evaluates ``0.5 * (tr(p q^-1) - n - log|p q^-1|)`` through the
    eigenvalues ``lam`` of the whitened matrix ``Lq^-1 p Lq^-T`` as
    ``0.5 * sum(lam - 1 - log(lam))``; every term is non-negative, so the
    result does not suffer from cancellation when p is close to q.
    """
    p = _as_square(p)
    q = _as_square(q)
    if p.shape != q.shape:
        raise DimensionMismatch(f"shapes differ: {p.shape} vs {q.shape}")
    if p.shape[0] == 0:
        return 0.0
    cholesky_lower(p)
    lq = cholesky_lower(q)
    half = solve_triangular(lq, p, lower=True)
    white = solve_triangular(lq, half.T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (white + white.T))
    if lam[0] <= 0:
        raise NotPositiveDefinite("whitened matrix lost positive definiteness")
    x = lam - 1.0
    terms = x - np.log1p(x)
    return float(0.5 * np.sum(np.maximum(terms, 0.0)))


def permute_spd(m, perm):
    """Return ``P @ m @ P.T`` for the permutation ``perm``."""
    m = _as_square(m)
    if len(perm) != m.shape[0]:
        raise DimensionMismatch(
            f"permutation of length {len(perm)} for a {m.shape[0]}x{m.shape[0]} matrix"
        )
    idx = np.asarray(perm.order)
    return m[np.ix_(idx, idx)]


def unpermute(m, perm):
    """Inverse of :func:`permute_spd`: return ``P.T @ m @ P``."""
    return permute_spd(m, perm.inverse())


def max_abs_diff(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def frobenius_rel(a, b):
    """``||a - b||_F / max(||b||_F, 1)``."""
    b = np.asarray(b)
    return float(np.linalg.norm(np.asarray(a) - b) / max(np.linalg.norm(b), 1.0))
