"""Minimal semidefinite-feasibility backend layer.

A problem is a list of affine matrix-valued constraints
``F0 + sum_i x_i F_i >> 0`` in a shared vector of scalar unknowns,
plus a linear objective. The concrete solver backend hands this to an
interior-point conic solver (cvxpy/Clarabel by default); the eigen-check
backend cannot solve but evaluates the constraint margins of an
externally supplied point, which is all certificate verification needs.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np


@dataclass
class MatrixConstraint:
    """F0 + sum_i x_i F_i >> 0 (PSD). coeffs maps variable index -> F_i."""

    F0: np.ndarray
    coeffs: dict[int, np.ndarray] = field(default_factory=dict)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        M = self.F0.copy()
        for i, Fi in self.coeffs.items():
            M += x[i] * Fi
        return 0.5 * (M + M.T)

    def min_eig(self, x: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(self.evaluate(x))[0])


@dataclass
class SdpProblem:
    n_vars: int
    objective: np.ndarray                      # maximize objective @ x
    psd_constraints: list[MatrixConstraint]
    # scalar inequalities a @ x <= b
    lin_A: np.ndarray | None = None
    lin_b: np.ndarray | None = None


@dataclass
class SdpResult:
    status: str                                # optimal | inaccurate | failed
    x: np.ndarray | None
    objective_value: float | None

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "inaccurate") and self.x is not None


class BackendUnavailableError(RuntimeError):
    pass


class SdpBackend(ABC):
    """Solves or checks affine PSD feasibility problems."""

    name = "abstract"

    @abstractmethod
    def solve(self, problem: SdpProblem) -> SdpResult:
        ...

    def check(self, problem: SdpProblem, x: np.ndarray) -> float:
        """Smallest constraint margin of a candidate point (eigenvalue
        checks only, no solver)."""
        return min(c.min_eig(x) for c in problem.psd_constraints)


class CvxpyBackend(SdpBackend):
    """Interior-point conic solve via cvxpy. Default solver is Clarabel,
    which handles PSD cones natively."""

    def __init__(self, solver: str = "CLARABEL", **solver_options):
        self.name = f"cvxpy/{solver}"
        self.solver = solver
        self.solver_options = solver_options

    def solve(self, problem: SdpProblem) -> SdpResult:
        import cvxpy as cp

        x = cp.Variable(problem.n_vars)
        cons = []
        for c in problem.psd_constraints:
            expr = cp.Constant(c.F0)
            for i, Fi in c.coeffs.items():
                expr = expr + x[i] * cp.Constant(Fi)
            m = c.F0.shape[0]
            if m == 1:
                cons.append(expr[0, 0] >= 0)
            else:
                cons.append(cp.symmetric_wrap(expr) >> 0)
        if problem.lin_A is not None:
            cons.append(problem.lin_A @ x <= problem.lin_b)
        prob = cp.Problem(cp.Maximize(problem.objective @ x), cons)
        try:
            prob.solve(solver=self.solver, **self.solver_options)
        except cp.error.SolverError as exc:
            return SdpResult(status=f"failed: {exc}", x=None, objective_value=None)
        if prob.status == "optimal":
            status = "optimal"
        elif prob.status == "optimal_inaccurate":
            status = "inaccurate"
        else:
            return SdpResult(status=f"failed: {prob.status}", x=None, objective_value=None)
        return SdpResult(status=status, x=np.asarray(x.value, dtype=float),
                         objective_value=float(prob.value))


class EigenCheckBackend(SdpBackend):
    """Verification-only backend: refuses to solve, checks margins."""

    name = "eigen-check"

    def solve(self, problem: SdpProblem) -> SdpResult:
        raise BackendUnavailableError(
            "eigen-check backend cannot search for certificates; "
            "use it only to verify externally supplied ones")


def default_backend() -> SdpBackend:
    return CvxpyBackend()


def backend_by_name(name: str) -> SdpBackend:
    key = name.lower()
    if key in ("clarabel", "default"):
        return CvxpyBackend("CLARABEL")
    if key == "scs":
        return CvxpyBackend("SCS")
    if key == "cvxopt":
        return CvxpyBackend("CVXOPT")
    if key == "eigen-check":
        return EigenCheckBackend()
    raise ValueError(f"unknown backend '{name}'")
