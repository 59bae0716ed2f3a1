"""Time-delay system ``x'(t) = A x(t) + Ad x(t - h)`` with the delay
matrix factored as Ad = B C, ||C|| = 1, and the built-in benchmark
systems used throughout the test-suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .linalg import as_matrix, norm2


class DelayFreeSystemError(ValueError):
    """Raised when Ad == 0: the factorization needs rank >= 1, callers
    should fall back to delay-free analysis."""


@dataclass(frozen=True)
class TdsSystem:
    A: np.ndarray
    Ad: np.ndarray
    B: np.ndarray
    C: np.ndarray
    h: float
    nx: int
    nz: int

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("delay h must be positive")
        res = norm2(self.B @ self.C - self.Ad)
        if res > 1e-10 * max(1.0, norm2(self.Ad)):
            raise ValueError(f"factorization residual too large: {res:.3e}")
        if abs(norm2(self.C) - 1.0) > 1e-10:
            raise ValueError("C must have unit spectral norm")

    def with_delay(self, h: float) -> TdsSystem:
        return replace(self, h=float(h))


def factor_delay_matrix(Ad, rank_tol: float = 1e-10):
    """SVD factorization Ad = B C with orthonormal-row C (so ||C|| = 1
    holds by construction) and B carrying the singular values.

    Returns (B, C, nz) where nz is the numerical rank.
    """
    Ad = as_matrix(Ad)
    if Ad.shape[0] != Ad.shape[1]:
        raise ValueError("Ad must be square")
    U, s, Vt = np.linalg.svd(Ad)
    if s.size == 0 or s[0] == 0.0:
        raise DelayFreeSystemError("Ad is zero: no delayed coupling to factor")
    nz = int(np.sum(s > rank_tol * s[0]))
    if nz == 0:
        raise DelayFreeSystemError("Ad has numerical rank zero")
    B = U[:, :nz] * s[:nz]
    C = Vt[:nz, :]
    return B, C, nz


def make_system(A, Ad, h: float, rank_tol: float = 1e-10) -> TdsSystem:
    A = as_matrix(A)
    Ad = as_matrix(Ad)
    if A.shape != Ad.shape or A.shape[0] != A.shape[1]:
        raise ValueError("A and Ad must be square matrices of equal size")
    B, C, nz = factor_delay_matrix(Ad, rank_tol)
    return TdsSystem(A=A, Ad=Ad, B=B, C=C, h=float(h), nx=A.shape[0], nz=nz)


def builtin_example(example_id: int, h: float, lam: float | None = None) -> TdsSystem:
    """The three benchmark systems.

    1: scalar x' = x - 2 x(t-h)                     (boundary atan(sqrt 3)/sqrt 3)
    2: 2-state, A = 0, Ad = [[-1, 0.2], [-0.1, 0]]  (boundary 1.603)
    3: 4-state oscillator chain with coupling lam in the delayed channel
    """
    if example_id == 1:
        return make_system([[1.0]], [[-2.0]], h)
    if example_id == 2:
        return make_system(np.zeros((2, 2)), [[-1.0, 0.2], [-0.1, 0.0]], h)
    if example_id == 3:
        if lam is None:
            raise ValueError("example 3 requires the coupling parameter lam")
        A = np.array([
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [-10.0 - lam, 10.0, 0.0, 0.0],
            [5.0, -15.0, 0.0, -0.25],
        ])
        Ad = np.zeros((4, 4))
        Ad[2, 0] = lam
        return make_system(A, Ad, h)
    raise ValueError(f"unknown example id {example_id}")


def system_from_dict(data: dict) -> TdsSystem:
    """Build a system from the JSON schema
    {"A": [[...]], "Ad": [[...]], "h": real, "rank_tol": optional}."""
    try:
        A = data["A"]
        Ad = data["Ad"]
        h = float(data["h"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"system JSON must provide A, Ad and h: {exc}") from exc
    rank_tol = float(data.get("rank_tol", 1e-10))
    return make_system(A, Ad, h, rank_tol)


def load_system(path: str) -> TdsSystem:
    with open(path) as f:
        return system_from_dict(json.load(f))
