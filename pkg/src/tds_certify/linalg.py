"""Dense real matrix kernel: eigenvalues, exponentials, Kronecker algebra.

Everything here operates on plain 2-D float ndarrays. All functions are
pure; nothing is cached or mutated.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class SymEig:
    """Eigenvalues of a symmetric matrix, sorted ascending."""

    eigenvalues: np.ndarray

    @property
    def min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max(self) -> float:
        return float(self.eigenvalues[-1])


def as_matrix(m) -> np.ndarray:
    """Coerce to a 2-D float array; scalars and vectors get promoted."""
    a = np.asarray(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def vec(m) -> np.ndarray:
    """Stack the columns of m into one vector (column-major)."""
    return as_matrix(m).flatten(order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.size != rows * cols:
        raise ValueError(f"cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def expm(m) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring Pade, via scipy)."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError("expm requires a square matrix")
    return scipy.linalg.expm(a)


def sym_eig(m) -> SymEig:
    """Eigenvalues of (m + m^T)/2, ascending.

    Input must be symmetric within 1e-10 * ||m||; it is symmetrized
    before solving so floating-point asymmetry cannot flip definiteness
    decisions.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError("sym_eig requires a square matrix")
    scale = norm2(a)
    if norm2(a - a.T) > 1e-10 * max(scale, 1.0):
        raise ValueError("matrix is not symmetric within tolerance")
    sym = 0.5 * (a + a.T)
    return SymEig(np.linalg.eigvalsh(sym))


def eig_extremes(m) -> tuple[float, float]:
    """(min, max) eigenvalue of the symmetrized matrix, no symmetry check.

    Used on matrices that are symmetric by construction, where round-off
    asymmetry is expected and harmless.
    """
    w = np.linalg.eigvalsh(0.5 * (as_matrix(m) + as_matrix(m).T))
    return float(w[0]), float(w[-1])


def norm2(m) -> float:
    """Spectral norm, the largest singular value."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hsym(m) -> np.ndarray:
    """m + m^T."""
    a = as_matrix(m)
    return a + a.T
