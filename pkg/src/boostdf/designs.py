"""Design matrices, random design samplers, and dense hat operators.

All randomness in the package flows through :func:`generator`, which wraps
numpy's PCG64 bit generator behind ``SeedSequence`` hashing so that derived
streams (per replicate, per purpose) never collide. The algorithm identifier
is exported as :data:`RNG_ALGORITHM` and recorded in experiment manifests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RNG_ALGORITHM = "numpy.random.PCG64(SeedSequence)"


def generator(seed) -> np.random.Generator:
    """Return a fresh PCG64 generator for ``seed`` (an int or tuple of ints)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class DesignMatrix:
    """Fixed n-by-p covariate matrix with cached centered columns and norms.

    Columns whose values are all identical are flagged constant: their
    centered values and squared norms are set to exact zero and they are
    excluded from componentwise selection (``eligible``). The intercept is
    handled by the fitting routines, never as a design column.

    Instances are immutable after construction and safe to share across
    threads.
    """

    __slots__ = ("values", "col_means", "centered", "centered_col_sq_norms", "eligible")

    def __init__(self, values) -> None:
        values = np.array(values, dtype=float, order="C")
        if values.ndim != 2:
            raise ValueError("design must be a 2-d array")
        n, p = values.shape
        if n < 2 or p < 1:
            raise ValueError(f"design needs n >= 2 and p >= 1, got {n}x{p}")
        if not np.all(np.isfinite(values)):
            raise ValueError("design contains non-finite entries")
        col_means = values.mean(axis=0)
        centered = values - col_means
        constant = np.ptp(values, axis=0) == 0
        # exact zeros for constant columns, not mean-rounding residue
        centered[:, constant] = 0.0
        sq_norms = np.einsum("ij,ij->j", centered, centered)
        sq_norms[constant] = 0.0
        self.values = _freeze(values)
        self.col_means = _freeze(col_means)
        self.centered = _freeze(centered)
        self.centered_col_sq_norms = _freeze(sq_norms)
        self.eligible = _freeze(~constant)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def __repr__(self) -> str:
        return f"DesignMatrix(n={self.n}, p={self.p}, eligible={int(self.eligible.sum())})"


def as_design(X) -> DesignMatrix:
    """Coerce an array-like (or pass through a DesignMatrix) to a DesignMatrix."""
    if isinstance(X, DesignMatrix):
        return X
    return DesignMatrix(X)


@dataclass(frozen=True)
class ARDesignSpec:
    """Zero-mean Gaussian design with Cov(x^(i), x^(j)) = rho^|i-j|."""

    n: int
    p: int
    rho: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not abs(self.rho) < 1:
            raise ValueError(f"|rho| must be < 1, got {self.rho}")


@dataclass(frozen=True)
class UniformDesignSpec:
    """Design with i.i.d. U[0, 1] entries."""

    n: int
    p: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")


def sample_ar_design(spec: ARDesignSpec) -> DesignMatrix:
    """Sample rows i.i.d. from the AR(1)-correlated Gaussian design.

    Columns are built by the stationary recursion x^(1) = e_1,
    x^(j) = rho * x^(j-1) + sqrt(1 - rho^2) * e_j with e_j i.i.d. standard
    normal, which realises the rho^|i-j| covariance exactly in O(np).
    Deterministic given ``spec.seed``.
    """
    rng = generator(spec.seed)
    e = rng.standard_normal((spec.n, spec.p))
    x = np.empty_like(e)
    x[:, 0] = e[:, 0]
    scale = math.sqrt(1.0 - spec.rho**2)
    for j in range(1, spec.p):
        x[:, j] = spec.rho * x[:, j - 1] + scale * e[:, j]
    return DesignMatrix(x)


def sample_uniform_design(spec: UniformDesignSpec) -> DesignMatrix:
    """Sample i.i.d. U[0, 1] entries; deterministic given ``spec.seed``."""
    rng = generator(spec.seed)
    return DesignMatrix(rng.random((spec.n, spec.p)))


@dataclass(frozen=True)
class HatOperator:
    """Dense square matrix mapping observed responses to fitted values."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"hat matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("hat matrix contains non-finite entries")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def apply(self, y) -> np.ndarray:
        return self.matrix @ np.asarray(y, dtype=float)


def trace(hat: HatOperator | np.ndarray) -> float:
    """Sum of diagonal entries of a hat operator (or raw square matrix)."""
    if isinstance(hat, HatOperator):
        return hat.trace
    m = np.asarray(hat)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"trace needs a square matrix, got shape {m.shape}")
    return float(np.trace(m))
