"""Matrix CSV I/O, sample correlations and seeded synthetic instances."""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve

from . import symcore
from .errors import NotPositiveDefinite, ParseError

RNG_NAME = f"numpy.random.PCG64 (numpy {np.__version__})"


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a random sparse-precision correlation matrix."""

    n: int
    density: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 0 <= self.density <= 1:
            raise ValueError(f"density must lie in [0, 1], got {self.density}")

    @classmethod
    def parse(cls, text):
        """Parse ``"n,density,seed"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected n,density,seed; got {text!r}")
        return cls(int(parts[0]), float(parts[1]), int(parts[2]))


def normalize_cov(m):
    """Rescale a covariance to a correlation: ``D^-1/2 M D^-1/2``."""
    m = np.asarray(m, dtype=float)
    sd = np.sqrt(np.diag(m))
    r = m / np.outer(sd, sd)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    return r


def _parse_rows(path):
    rows = []
    with open(path, newline="") as fh:
        for r, line in enumerate(csv.reader(fh), start=1):
            if not line or all(not tok.strip() for tok in line):
                continue
            row = []
            for c, tok in enumerate(line, start=1):
                try:
                    val = float(tok)
                except ValueError:
                    raise ParseError(
                        f"{path}: bad number {tok!r} at row {r}, column {c}", r, c
                    ) from None
                if not math.isfinite(val):
                    raise ParseError(f"{path}: non-finite value at row {r}, column {c}", r, c)
                row.append(val)
            rows.append(row)
    if not rows:
        raise ParseError(f"{path}: empty matrix file", 1, 1)
    width = len(rows[0])
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ParseError(
                f"{path}: row {r} has {len(row)} values, expected {width}",
                r,
                min(len(row), width) + 1,
            )
    if len(rows) != width:
        raise ParseError(
            f"{path}: {len(rows)} rows but {width} columns", len(rows), width
        )
    return np.array(rows, dtype=float)


def read_raw(path):
    """Parse a headerless CSV matrix without validating it."""
    return _parse_rows(path)


def read_matrix(path, normalize=False):
    """Read a correlation matrix from a headerless CSV file.

    With ``normalize=True`` a covariance is rescaled to unit diagonal first;
    otherwise a non-unit diagonal is rejected.
    """
    m = _parse_rows(path)
    if normalize:
        if np.any(np.diag(m) <= 0):
            raise NotPositiveDefinite(f"{path}: non-positive variance on the diagonal")
        m = normalize_cov(m)
    return symcore.validate_corr(m)


def write_matrix(m, path):
    """Write ``m`` as headerless CSV with 17 significant digits."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with open(path, "w", newline="") as fh:
        for row in m:
            fh.write(",".join(format(float(v), ".17g") for v in row))
            fh.write("\n")


def write_trace(kl_trace, path):
    with open(path, "w", newline="") as fh:
        fh.write("stage,kl_nats\n")
        for i, kl in kl_trace:
            fh.write(f"{int(i)},{format(float(kl), '.17g')}\n")


def read_trace(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [(int(row["stage"]), float(row["kl_nats"])) for row in reader]


def sparsity_dump(m, path):
    """Write ``|m^-1|`` entrywise, for plotting the precision sparsity."""
    low = symcore.cholesky_lower(m)
    inv = cho_solve((low, True), np.eye(low.shape[0]))
    write_matrix(np.abs(0.5 * (inv + inv.T)), path)


def empirical_correlation(samples):
    """Sample correlation of an ``m x n`` table (columns are variables).

    Uses the unbiased ``m - 1`` covariance and rejects rank-deficient
    estimates rather than repairing them.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"need an m x n table with m >= 2, got shape {x.shape}")
    cov = np.cov(x, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    if np.any(np.diag(cov) <= 0):
        k = int(np.argmin(np.diag(cov)))
        raise NotPositiveDefinite(f"column {k} has zero variance", pivot=k)
    # exact collinearity can survive a Cholesky as a roundoff-sized pivot
    rank = np.linalg.matrix_rank(x - x.mean(axis=0))
    if rank < x.shape[1]:
        raise NotPositiveDefinite(
            f"sample covariance has rank {rank} < {x.shape[1]} columns"
        )
    return symcore.validate_corr(normalize_cov(cov))


def generate_synthetic(spec):
    """Random correlation matrix whose precision has about ``density`` edges.

    Off-diagonal precision entries are present with probability ``density``
    and uniform on [-1, 1]; each diagonal entry is the row's absolute sum
    plus one, so the precision is strictly diagonally dominant. The
    covariance is its inverse, normalized to unit diagonal.
    """
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    iu, ju = np.triu_indices(n, k=1)
    present = rng.random(iu.size) < spec.density
    values = rng.uniform(-1.0, 1.0, size=iu.size) * present
    prec = np.zeros((n, n))
    prec[iu, ju] = values
    prec[ju, iu] = values
    np.fill_diagonal(prec, np.abs(prec).sum(axis=1) + 1.0)
    low = symcore.cholesky_lower(prec)
    cov = cho_solve((low, True), np.eye(n))
    return symcore.validate_corr(normalize_cov(cov))


def precision_density(m, tol=1e-9):
    """Fraction of off-diagonal pairs with ``|m^-1| > tol``."""
    n = np.asarray(m).shape[0]
    inv = np.linalg.inv(m)
    iu, ju = np.triu_indices(n, k=1)
    return float(np.mean(np.abs(inv[iu, ju]) > tol))


def ensure_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
