"""Assembly and feasibility of the hierarchical stability conditions.

At order n the unknowns are (P, R, S) with P symmetric of size
nx + n*nz and R, S positive definite of size nz. Feasibility of

    Phi_plus(P, S) > 0    and    Phi_minus(P, R, S) < 0

certifies exponential stability. The numerical verdict is obtained by
maximizing the joint definiteness margin t, which is well-posed once the
variables are confined to a bounded set.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .legendre import LegendreBasis, differentiation_matrix, gram_inverse
from .linalg import eig_extremes, hsym
from .model import TdsSystem
from .sdp import MatrixConstraint, SdpBackend, SdpProblem, default_backend

DEFINITENESS_TOL = 1e-7


@dataclass(frozen=True)
class LmiBlocks:
    """Constant matrices of the order-n conditions for one system."""

    sys: TdsSystem
    order: int
    An: np.ndarray          # (nx + n nz) square
    Bn: np.ndarray          # (nx + n nz) x nz
    gram: np.ndarray        # diag blocks (2p - 1) I_nz
    ell0: np.ndarray        # alternating-sign identity stack
    ell1: np.ndarray        # identity stack

    @property
    def dim(self) -> int:
        return self.sys.nx + self.order * self.sys.nz


@dataclass(frozen=True)
class Certificate:
    P: np.ndarray
    R: np.ndarray
    S: np.ndarray
    order: int
    provenance: str         # "solver" | "converse"

    def to_dict(self) -> dict:
        return {"n": self.order, "P": self.P.tolist(), "R": self.R.tolist(),
                "S": self.S.tolist(), "provenance": self.provenance}

    @staticmethod
    def from_dict(data: dict) -> "Certificate":
        return Certificate(P=np.asarray(data["P"], dtype=float),
                           R=np.asarray(data["R"], dtype=float),
                           S=np.asarray(data["S"], dtype=float),
                           order=int(data["n"]),
                           provenance=str(data.get("provenance", "solver")))


@dataclass(frozen=True)
class FeasibilityReport:
    order: int
    verdict: str            # "feasible" | "infeasible" | "indeterminate"
    margin: float | None
    certificate: Certificate | None
    backend_status: str

    @property
    def feasible(self) -> bool:
        return self.verdict == "feasible"

    def to_dict(self) -> dict:
        return {"n": self.order, "verdict": self.verdict, "margin": self.margin,
                "backend_status": self.backend_status}


def assemble_blocks(sys: TdsSystem, n: int) -> LmiBlocks:
    if n < 1:
        raise ValueError("order must be >= 1")
    nx, nz, h = sys.nx, sys.nz, sys.h
    basis = LegendreBasis(n, nz)
    Ln = differentiation_matrix(basis)
    ell1 = np.vstack([np.eye(nz)] * n)
    ell0 = np.vstack([(-1.0) ** k * np.eye(nz) for k in range(n)])
    An = np.block([[sys.A, np.zeros((nx, n * nz))],
                   [ell1 @ sys.C, -(1.0 / h) * Ln]])
    Bn = np.vstack([sys.B, -ell0])
    return LmiBlocks(sys=sys, order=n, An=An, Bn=Bn,
                     gram=gram_inverse(basis), ell0=ell0, ell1=ell1)


def phi_plus(blocks: LmiBlocks, P: np.ndarray, S: np.ndarray, h: float) -> np.ndarray:
    nx, nz, n = blocks.sys.nx, blocks.sys.nz, blocks.order
    dim = blocks.dim
    if P.shape != (dim, dim) or S.shape != (nz, nz):
        raise ValueError("dimension mismatch in phi_plus")
    out = P.copy()
    out[nx:, nx:] += (1.0 / h) * blocks.gram @ np.kron(np.eye(n), S)
    return 0.5 * (out + out.T)


def psi_rs(blocks: LmiBlocks, R: np.ndarray, S: np.ndarray) -> np.ndarray:
    sys = blocks.sys
    nx, nz, n, h = sys.nx, sys.nz, blocks.order, sys.h
    top = sys.C.T @ (h * R + S) @ sys.C
    bottom = -(1.0 / h) * blocks.gram @ np.kron(np.eye(n), R)
    out = np.zeros((blocks.dim, blocks.dim))
    out[:nx, :nx] = top
    out[nx:, nx:] = bottom
    return out


def phi_minus(blocks: LmiBlocks, P: np.ndarray, R: np.ndarray, S: np.ndarray) -> np.ndarray:
    sys = blocks.sys
    nz = sys.nz
    dim = blocks.dim
    if P.shape != (dim, dim) or R.shape != (nz, nz) or S.shape != (nz, nz):
        raise ValueError("dimension mismatch in phi_minus")
    corner = P @ blocks.Bn
    out = np.block([[hsym(P @ blocks.An) + psi_rs(blocks, R, S), corner],
                    [corner.T, -S]])
    return 0.5 * (out + out.T)


def _sym_basis(dim: int):
    """Basis E_k of the symmetric dim x dim matrices (svec ordering)."""
    mats = []
    for i in range(dim):
        for j in range(i, dim):
            E = np.zeros((dim, dim))
            E[i, j] = 1.0
            E[j, i] = 1.0
            mats.append(E)
    return mats


def margin_problem(sys: TdsSystem, n: int, scale_bound: float | None = None) -> tuple[SdpProblem, dict]:
    """Margin maximization as an affine-PSD problem.

    Variables: svec(P), svec(R), svec(S), t. Constraints:
    Phi+ - tI >= 0, -Phi- - tI >= 0, R - tI >= 0, S - tI >= 0,
    trace(P) + trace(R) + trace(S) <= scale_bound, P + scale_bound I >= 0.
    The last constraint bounds the variable set (the trace cap alone
    leaves escape directions with trace(P) -> -inf at some orders).
    """
    blocks = assemble_blocks(sys, n)
    nx, nz, h = sys.nx, sys.nz, sys.h
    dim = blocks.dim
    if scale_bound is None:
        scale_bound = float(dim + 2 * nz)

    P_basis = _sym_basis(dim)
    RS_basis = _sym_basis(nz)
    nP, nRS = len(P_basis), len(RS_basis)
    n_vars = nP + 2 * nRS + 1
    it = n_vars - 1                                   # index of t

    zP = np.zeros((dim, dim))
    zRS = np.zeros((nz, nz))
    big = dim + nz

    c_plus = MatrixConstraint(F0=zP.copy())
    c_minus = MatrixConstraint(F0=np.zeros((big, big)))
    c_R = MatrixConstraint(F0=zRS.copy())
    c_S = MatrixConstraint(F0=zRS.copy())
    c_Pbound = MatrixConstraint(F0=scale_bound * np.eye(dim))

    for k, E in enumerate(P_basis):
        c_plus.coeffs[k] = E
        corner = E @ blocks.Bn
        c_minus.coeffs[k] = -np.block([[hsym(E @ blocks.An), corner],
                                       [corner.T, zRS]])
        c_Pbound.coeffs[k] = E
    for k, E in enumerate(RS_basis):
        iR = nP + k
        iS = nP + nRS + k
        c_R.coeffs[iR] = E
        c_S.coeffs[iS] = E
        # R enters Phi- through Psi; S through Psi and the -S corner
        psiR = np.zeros((big, big))
        psiR[:nx, :nx] = h * sys.C.T @ E @ sys.C
        psiR[nx:dim, nx:dim] = -(1.0 / h) * blocks.gram @ np.kron(np.eye(n), E)
        c_minus.coeffs[iR] = -psiR
        psiS = np.zeros((big, big))
        psiS[:nx, :nx] = sys.C.T @ E @ sys.C
        psiS[dim:, dim:] = -E
        c_minus.coeffs[iS] = -psiS
        phiS = np.zeros((dim, dim))
        phiS[nx:, nx:] = (1.0 / h) * blocks.gram @ np.kron(np.eye(n), E)
        c_plus.coeffs[iS] = c_plus.coeffs.get(iS, np.zeros((dim, dim))) + phiS

    c_plus.coeffs[it] = -np.eye(dim)
    c_minus.coeffs[it] = -np.eye(big)
    c_R.coeffs[it] = -np.eye(nz)
    c_S.coeffs[it] = -np.eye(nz)

    # trace(P) + trace(R) + trace(S) <= scale_bound
    a = np.zeros(n_vars)
    for k, E in enumerate(P_basis):
        a[k] = np.trace(E)
    for k, E in enumerate(RS_basis):
        a[nP + k] = np.trace(E)
        a[nP + nRS + k] = np.trace(E)
    objective = np.zeros(n_vars)
    objective[it] = 1.0

    problem = SdpProblem(n_vars=n_vars,
                         objective=objective,
                         psd_constraints=[c_plus, c_minus, c_R, c_S, c_Pbound],
                         lin_A=a.reshape(1, -1),
                         lin_b=np.array([scale_bound]))
    meta = {"blocks": blocks, "P_basis": P_basis, "RS_basis": RS_basis}
    return problem, meta


def _unpack(meta: dict, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    P_basis, RS_basis = meta["P_basis"], meta["RS_basis"]
    dim = P_basis[0].shape[0]
    nz = RS_basis[0].shape[0]
    nP, nRS = len(P_basis), len(RS_basis)
    P = np.zeros((dim, dim))
    idx = 0
    for i in range(dim):
        for j in range(i, dim):
            P[i, j] = x[idx]
            P[j, i] = x[idx]
            idx += 1
    R = np.zeros((nz, nz))
    S = np.zeros((nz, nz))
    for i in range(nz):
        for j in range(i, nz):
            R[i, j] = R[j, i] = x[idx]
            idx += 1
    for i in range(nz):
        for j in range(i, nz):
            S[i, j] = S[j, i] = x[idx]
            idx += 1
    return P, R, S


def solve_feasibility(sys: TdsSystem, n: int, backend: SdpBackend | None = None,
                      definiteness_tol: float = DEFINITENESS_TOL) -> FeasibilityReport:
    """Maximize the joint definiteness margin at order n and convert the
    optimum into a three-valued verdict."""
    backend = backend or default_backend()
    problem, meta = margin_problem(sys, n)
    result = backend.solve(problem)
    if not result.ok:
        return FeasibilityReport(order=n, verdict="indeterminate", margin=None,
                                 certificate=None, backend_status=result.status)
    P, R, S = _unpack(meta, result.x)
    t = float(result.objective_value)
    cert = Certificate(P=P, R=R, S=S, order=n, provenance="solver")
    verdict = "feasible" if t > definiteness_tol else "infeasible"
    return FeasibilityReport(order=n, verdict=verdict, margin=t,
                             certificate=cert if verdict == "feasible" else None,
                             backend_status=f"{backend.name}: {result.status}")


def verify_certificate(sys: TdsSystem, cert: Certificate,
                       definiteness_tol: float = DEFINITENESS_TOL) -> FeasibilityReport:
    """Eigenvalue-only check of a given (P, R, S); no solver involved."""
    blocks = assemble_blocks(sys, cert.order)
    margins = [
        eig_extremes(phi_plus(blocks, cert.P, cert.S, sys.h))[0],
        -eig_extremes(phi_minus(blocks, cert.P, cert.R, cert.S))[1],
        eig_extremes(cert.R)[0],
        eig_extremes(cert.S)[0],
    ]
    margin = float(min(margins))
    verdict = "feasible" if margin > definiteness_tol else "infeasible"
    return FeasibilityReport(order=cert.order, verdict=verdict, margin=margin,
                             certificate=cert, backend_status="eigen-check")


def max_delay(sys: TdsSystem, n: int, h_lo: float, h_hi: float,
              tol: float = 1e-4, backend: SdpBackend | None = None) -> float:
    """Largest delay in [h_lo, h_hi] at which order n is feasible,
    located by bisection.

    Assumes feasibility is monotone in h inside the bracket, which holds
    empirically on the benchmark systems but is not guaranteed in
    general; use a grid scan when in doubt.
    """
    backend = backend or default_backend()
    lo_report = solve_feasibility(sys.with_delay(h_lo), n, backend)
    if not lo_report.feasible:
        raise ValueError(f"order {n} infeasible at the lower bracket h={h_lo}")
    lo, hi = h_lo, h_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if solve_feasibility(sys.with_delay(mid), n, backend).feasible:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class SweepCell:
    lam: float
    h: float
    order: int
    verdict: str
    margin: float | None


def _sweep_workers() -> int:
    try:
        return max(1, int(os.environ.get("TDS_CERTIFY_THREADS", "1")))
    except ValueError:
        return 1


def region_sweep(lams, hs, n: int, backend: SdpBackend | None = None,
                 make_system=None) -> list[SweepCell]:
    """Feasibility verdict per (lam, h) grid cell at order n.

    Cells are evaluated independently (optionally in parallel, capped by
    TDS_CERTIFY_THREADS) and returned in grid order regardless of
    completion order. Per-cell failures become 'indeterminate'.
    """
    from .model import builtin_example

    backend = backend or default_backend()
    if make_system is None:
        make_system = lambda lam, h: builtin_example(3, h=h, lam=lam)
    grid = [(i, lam, h) for i, (lam, h) in
            enumerate((lam, h) for lam in lams for h in hs)]

    def run(item):
        i, lam, h = item
        try:
            rep = solve_feasibility(make_system(lam, h), n, backend)
            return i, SweepCell(lam, h, n, rep.verdict, rep.margin)
        except Exception as exc:                     # per-cell errors recorded
            return i, SweepCell(lam, h, n, "indeterminate", None)

    out: list[SweepCell | None] = [None] * len(grid)
    workers = _sweep_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, cell in pool.map(run, grid):
                out[i] = cell
    else:
        for item in grid:
            i, cell = run(item)
            out[i] = cell
    return out                                       # grid order: lam-major


def sweep_to_csv(cells: list[SweepCell]) -> str:
    lines = ["lambda,h,n,verdict,margin"]
    for c in cells:
        m = "" if c.margin is None else f"{c.margin:.12g}"
        lines.append(f"{c.lam:.12g},{c.h:.12g},{c.order},{c.verdict},{m}")
    return "\n".join(lines) + "\n"
