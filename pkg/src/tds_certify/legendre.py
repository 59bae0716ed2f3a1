"""Shifted Legendre polynomials on [0, 1] and the structural matrices
built from them: block evaluation stacks, the diagonal weight matrix of
the orthogonality relation, the lower-triangular differentiation matrix,
Gauss quadrature, and projections of functions on [-h, 0].

Polynomial values come from the three-term (Bonnet) recursion; the
binomial-sum definition cancels catastrophically for large degree and is
used only as a low-order test oracle.
"""

from dataclasses import dataclass

import numpy as np


def _check_unit(theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("theta must lie in [0, 1]")
    return t


def legendre_all(n: int, theta) -> np.ndarray:
    """Values of the first n shifted Legendre polynomials at theta.

    Returns an array of shape (n,) + shape(theta); row k holds the degree-k
    polynomial.
    """
    t = _check_unit(theta)
    x = 2.0 * t - 1.0
    out = np.zeros((n,) + t.shape)
    out[0] = 1.0
    if n > 1:
        out[1] = x
    for k in range(1, n - 1):
        out[k + 1] = ((2 * k + 1) * x * out[k] - k * out[k - 1]) / (k + 1)
    return out


def legendre_all_deriv(n: int, theta) -> np.ndarray:
    """Derivatives of the first n shifted Legendre polynomials at theta.

    Differentiates the Bonnet recursion directly, so values hold to
    near machine precision (finite differences would not).
    """
    t = _check_unit(theta)
    x = 2.0 * t - 1.0
    vals = np.zeros((n,) + t.shape)
    ders = np.zeros((n,) + t.shape)
    vals[0] = 1.0
    if n > 1:
        vals[1] = x
        ders[1] = 2.0
    for k in range(1, n - 1):
        vals[k + 1] = ((2 * k + 1) * x * vals[k] - k * vals[k - 1]) / (k + 1)
        ders[k + 1] = ((2 * k + 1) * (2.0 * vals[k] + x * ders[k]) - k * ders[k - 1]) / (k + 1)
    return ders


def legendre_eval(k: int, theta):
    """Shifted Legendre polynomial of degree k at theta in [0, 1]."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    return legendre_all(k + 1, theta)[k]


def legendre_deriv(k: int, theta):
    """Derivative of the degree-k shifted Legendre polynomial."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    return legendre_all_deriv(k + 1, theta)[k]


@dataclass(frozen=True)
class LegendreBasis:
    """First n shifted Legendre polynomials, block-expanded by identity
    blocks of size `block` (the state dimension they multiply)."""

    n: int
    block: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("basis order must be >= 1")
        if self.block < 1:
            raise ValueError("block dimension must be >= 1")

    @property
    def dim(self) -> int:
        return self.n * self.block


def ell_vector(basis: LegendreBasis, theta: float) -> np.ndarray:
    """Stacked block column [l_0(theta) I; ...; l_{n-1}(theta) I],
    shape (n*block, block)."""
    vals = legendre_all(basis.n, float(theta))
    return np.kron(vals.reshape(-1, 1), np.eye(basis.block))


def ell_vector_deriv(basis: LegendreBasis, theta: float) -> np.ndarray:
    ders = legendre_all_deriv(basis.n, float(theta))
    return np.kron(ders.reshape(-1, 1), np.eye(basis.block))


def gram_inverse(basis: LegendreBasis) -> np.ndarray:
    """Diagonal matrix with block (p, p) = (2p - 1) I; its inverse is the
    Gram matrix of the basis on [0, 1]."""
    d = np.repeat([2.0 * p - 1.0 for p in range(1, basis.n + 1)], basis.block)
    return np.diag(d)


def differentiation_matrix(basis: LegendreBasis) -> np.ndarray:
    """Expansion of derivatives in the basis itself.

    Entry (p, q) = (2q - 1)(1 - (-1)^(p+q)) for p >= q, zero otherwise,
    expanded by identity blocks; row p gives the coefficients of
    l'_{p-1} on l_0 .. l_{n-1}.
    """
    n = basis.n
    L = np.zeros((n, n))
    for p in range(1, n + 1):
        for q in range(1, p + 1):
            L[p - 1, q - 1] = (2.0 * q - 1.0) * (1.0 - (-1.0) ** (p + q))
    return np.kron(L, np.eye(basis.block))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes/weights on [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def points(self) -> int:
        return self.nodes.size


def gauss_rule(points: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1], exact for degree <= 2*points - 1."""
    if points < 1:
        raise ValueError("need at least one quadrature point")
    x, w = np.polynomial.legendre.leggauss(points)
    return QuadratureRule(nodes=(x + 1.0) / 2.0, weights=w / 2.0)


def default_rule(n: int) -> QuadratureRule:
    """Default projection rule: enough points for every polynomial
    integrand used at basis order n, with margin."""
    return gauss_rule(max(32, n + 2))


def bessel_projection(z, basis: LegendreBasis, h: float, rule: QuadratureRule) -> np.ndarray:
    """Projection coefficients int_{-h}^0 ell_n((theta+h)/h) z(theta) dtheta.

    `z` is a callable on [-h, 0] returning a vector of length `basis.block`
    (or a matrix with that many rows).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    vals = legendre_all(basis.n, rule.nodes)      # (n, q)
    probe = np.atleast_1d(np.asarray(z(-h * (1.0 - rule.nodes[0])), dtype=float))
    zcols = 1 if probe.ndim == 1 else probe.shape[1]
    out = np.zeros((basis.dim, zcols))
    for i, (s, w) in enumerate(zip(rule.nodes, rule.weights)):
        zv = np.asarray(z(h * (s - 1.0)), dtype=float).reshape(basis.block, zcols)
        out += h * w * np.kron(vals[:, i].reshape(-1, 1), zv)
    return out.ravel() if zcols == 1 else out


def bessel_gap(z, s_matrix: np.ndarray, basis: LegendreBasis, h: float,
               dense_rule: QuadratureRule, proj_rule: QuadratureRule) -> float:
    """int z^T S z - (1/h) zeta^T (I_n x S) zeta, the slack of the
    Bessel-Legendre inequality (nonnegative for S > 0)."""
    zeta = bessel_projection(z, basis, h, proj_rule)
    gram = gram_inverse(basis)
    quad = 0.0
    for s, w in zip(dense_rule.nodes, dense_rule.weights):
        zv = np.asarray(z(h * (s - 1.0)), dtype=float).ravel()
        quad += h * w * float(zv @ s_matrix @ zv)
    lower = float(zeta @ (gram @ np.kron(np.eye(basis.n), s_matrix)) @ zeta) / h
    return quad - lower
