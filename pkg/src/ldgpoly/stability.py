"""Smallest eigenvalues of the discrete second variation.

The Hessian is the Jacobian restricted to free degrees of freedom.  Its
smallest eigenvalue is computed with scipy's LOBPCG using a block of four
vectors, preconditioned by a sparse factorisation of the positive definite
surrogate ``K + lambda^2 a^2 M`` (stiffness plus scaled mass).  The
standard and mass-weighted eigenproblems share the signs of their
eigenvalues, so either one decides stability.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, lobpcg, splu

from .fem import PField, assemble_residual, discretization, free_block
from .tensor import DEFAULT_CONSTANTS, MaterialConstants

DENSE_LIMIT = 1200


class EigenSolverError(RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass
class EigenResult:
    mu_min: float
    eigvec: np.ndarray
    residual: float
    iterations: int
    eigenvalues: np.ndarray  # the ``block`` smallest, ascending
    vectors: np.ndarray | None = None  # matching Ritz vectors as columns


def dense_smallest(A, k: int = 4) -> EigenResult:
    """Dense symmetric eigensolve; the oracle for small systems."""
    M = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    v = V[:, 0]
    res = float(np.linalg.norm(M @ v - w[0] * v))
    return EigenResult(float(w[0]), v, res, 0, w[:k].copy(), V[:, :k].copy())


def _factor_preconditioner(P):
    lu = splu(sp.csc_matrix(P))
    n = P.shape[0]
    return LinearOperator((n, n), matvec=lu.solve, matmat=lu.solve, dtype=float)


def smallest_eigenvalue(
    A,
    tol: float = 1e-8,
    block: int = 4,
    seed: int = 0,
    preconditioner=None,
    max_iter: int = 2000,
    dense_limit: int = 0,
) -> EigenResult:
    """Smallest eigenvalue of a symmetric matrix by block LOBPCG.

    ``preconditioner`` may be a symmetric positive definite sparse matrix
    (it is factorised) or a ready ``LinearOperator``.  Systems with at most
    ``dense_limit`` rows are solved densely.  The result carries the
    residual ``|A v - mu v| / |v|``; :class:`EigenSolverError` is raised
    with the best estimate when it exceeds ``tol``.
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if n <= max(dense_limit, 3 * block + 1):
        return dense_smallest(A, block)
    M = preconditioner
    if M is not None and sp.issparse(M):
        M = _factor_preconditioner(M)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, block))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        w, V, hist = lobpcg(A, X, M=M, tol=0.1 * tol, maxiter=max_iter, largest=False, retResidualNormsHistory=True)
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    # one Rayleigh-Ritz clean-up in the converged block
    AV = A @ V
    H = V.T @ AV
    G = V.T @ V
    w, C = eigh(0.5 * (H + H.T), 0.5 * (G + G.T))
    V = V @ C
    v = V[:, 0] / np.linalg.norm(V[:, 0])
    mu = float(v @ (A @ v))
    res = float(np.linalg.norm(A @ v - mu * v))
    result = EigenResult(mu, v, res, len(hist), np.asarray(w, dtype=float), V / np.linalg.norm(V, axis=0))
    if res > tol:
        raise EigenSolverError(f"LOBPCG stalled: residual {res:.3e} > {tol:.1e} (mu ~ {mu:.6e})", best=result)
    return result


def hessian(pf: PField, lambda_sq: float, constants: MaterialConstants = DEFAULT_CONSTANTS):
    """Free-dof Jacobian and its positive definite preconditioner."""
    d = discretization(pf.mesh)
    A = free_block(pf, lambda_sq, constants)
    K = sp.kron(d.stiffness, sp.eye(2))
    Mm = sp.kron(d.mass, sp.eye(2))
    f = d.free_dofs
    T = (K + (max(lambda_sq, 0.0) * constants.bulk_radius_sq + 1e-12) * Mm).tocsr()[f][:, f]
    return A, T


def field_eigen(
    pf: PField,
    lambda_sq: float | None = None,
    constants: MaterialConstants = DEFAULT_CONSTANTS,
    tol: float = 1e-8,
    seed: int = 0,
    block: int = 4,
) -> EigenResult:
    lam = pf.lambda_sq if lambda_sq is None else lambda_sq
    A, T = hessian(pf, lam, constants)
    try:
        return smallest_eigenvalue(A, tol=tol, seed=seed, block=block, preconditioner=T, dense_limit=DENSE_LIMIT)
    except EigenSolverError:
        # retry from the returned block with a relaxed budget before giving up
        return smallest_eigenvalue(
            A, tol=tol, seed=seed + 1, block=block + 2, preconditioner=T, max_iter=6000, dense_limit=DENSE_LIMIT
        )


@dataclass
class Stability:
    stable: bool
    index: int
    eigen: EigenResult

    def __str__(self):
        if self.stable:
            return "stable"
        return f"unstable(index>={self.index})"


def classify_stability(
    pf: PField,
    lambda_sq: float | None = None,
    margin: float = 0.0,
    constants: MaterialConstants = DEFAULT_CONSTANTS,
    residual_tol: float = 1e-9,
    seed: int = 0,
) -> Stability:
    """Stable iff the smallest Hessian eigenvalue exceeds ``margin``.

    The index estimate counts negative eigenvalues among the four smallest.
    Fields whose residual exceeds ``residual_tol`` are rejected.
    """
    lam = pf.lambda_sq if lambda_sq is None else lambda_sq
    r = assemble_residual(pf, lam, constants)
    rmax = float(np.abs(r).max())
    if rmax > residual_tol:
        raise ValueError(f"field is not a converged critical point (residual {rmax:.3e})")
    eig = field_eigen(pf, lam, constants, seed=seed)
    index = int(np.sum(eig.eigenvalues < -abs(margin)))
    return Stability(eig.mu_min > margin, index, eig)
