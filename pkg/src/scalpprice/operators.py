"""Operator matrices, the symmetric-definite eigenproblem, Rayleigh variations
and the polynomial -> density-matrix map."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import Basis

GUARD_RTOL = 1e-12


class GramIndefiniteError(np.linalg.LinAlgError):
    """The metric matrix is not positive definite even after shrinking."""

    def __init__(self, min_eigenvalue: float):
        super().__init__(f"metric matrix is not positive definite "
                         f"(smallest eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and B-orthonormal eigenvectors (columns).

    Vectors have the full input length; rows beyond ``n_eff`` are zero when the
    conditioning guard dropped high-order basis functions.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    n_eff: int

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def lowest(self) -> np.ndarray:
        return self.vectors[:, 0]

    @property
    def highest(self) -> np.ndarray:
        return self.vectors[:, -1]

    def is_flat(self) -> bool:
        lam = self.eigenvalues
        return bool(lam[-1] - lam[0] < 1e-9 * (1 + abs(lam[-1])))


@dataclass(frozen=True)
class DensityMatrix:
    """rho(x, y) = sum_i weights[i] psi_i(x) psi_i(y); ``states`` are columns."""

    weights: np.ndarray
    states: np.ndarray


def effective_dimension(B, rtol: float = GUARD_RTOL) -> int:
    """Largest leading block of B whose equilibrated form is safely definite.

    The diagonal scaling makes the test independent of how the basis functions
    are normalised, so a monomial Gram matrix is not penalised for the factorial
    growth of its diagonal.
    """
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    min_eig = np.nan
    while n >= 1:
        d = np.diag(B)[:n]
        if np.all(d > 0):
            s = 1.0 / np.sqrt(d)
            eig = np.linalg.eigvalsh(B[:n, :n] * s[:, None] * s[None, :])
            min_eig = eig[0]
            if eig[0] >= rtol * eig.sum() / n:
                return n
        else:
            min_eig = float(np.min(d))
        n -= 1
    raise GramIndefiniteError(float(min_eig))


def orient(vectors, q0=None) -> np.ndarray:
    """Flip columns so psi(x0) >= 0; ties go to first nonzero coefficient > 0."""
    V = np.array(vectors, dtype=float)
    if q0 is not None:
        at = np.asarray(q0, dtype=float)[: V.shape[0]] @ V
        scale = np.abs(V).sum(axis=0) * np.abs(q0[: V.shape[0]]).max() + 1e-300
    else:
        at = np.zeros(V.shape[1])
        scale = np.ones(V.shape[1])
    tie = np.abs(at) <= 1e-13 * scale
    idx = np.argmax(np.abs(V) > 1e-14 * np.abs(V).max(axis=0, keepdims=True), axis=0)
    first = V[idx, np.arange(V.shape[1])]
    sign = np.where(tie, np.sign(first), np.sign(at))
    sign[sign == 0] = 1.0
    return V * sign[None, :]


def solve_gev(A, B, q0=None, guard: bool = True) -> Spectrum:
    """Solve A a = lambda B a with B symmetric positive definite."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    n_eff = effective_dimension(B) if guard else n
    A_e = 0.5 * (A[:n_eff, :n_eff] + A[:n_eff, :n_eff].T)
    B_e = 0.5 * (B[:n_eff, :n_eff] + B[:n_eff, :n_eff].T)
    try:
        lam, V = scipy.linalg.eigh(A_e, B_e)
    except np.linalg.LinAlgError as exc:
        raise GramIndefiniteError(float(np.linalg.eigvalsh(B_e)[0])) from exc
    V = orient(V, None if q0 is None else np.asarray(q0)[:n_eff])
    full = np.zeros((n, n_eff))
    full[:n_eff] = V
    return Spectrum(lam, full, n_eff)


def rayleigh_variations(psi, dpsi, A, B) -> tuple[float, float, float]:
    """Zeroth, first and second variation of <psi|A|psi>/<psi|B|psi>."""
    psi = np.asarray(psi, dtype=float)
    dpsi = np.asarray(dpsi, dtype=float)
    norm = float(psi @ B @ psi)
    if not norm > 0:
        raise ValueError("state has zero norm")
    d0 = float(psi @ A @ psi) / norm
    d1 = 2.0 * (float(psi @ A @ dpsi) / norm - d0 * float(psi @ B @ dpsi) / norm)
    d2 = (float(dpsi @ A @ dpsi) / norm - d0 * float(dpsi @ B @ dpsi) / norm
          - 2.0 * float(psi @ B @ dpsi) / norm * d1)
    return d0, d1, d2


def poly_to_density(basis: Basis, P, G=None) -> DensityMatrix:
    """Density matrix whose diagonal rho(x, x) equals the polynomial P.

    The representation is not unique beyond n = 2; the returned one has the
    smallest Frobenius norm in G-orthonormal coordinates, which makes the map
    linear and independent of the basis used to express it.
    """
    n = basis.n
    P = np.asarray(P, dtype=float)
    if P.shape[-1] > basis.N and np.any(P[basis.N:] != 0):
        from .basis import DegreeOverflowError
        raise DegreeOverflowError("polynomial degree exceeds 2n-2")
    P = np.pad(P[: basis.N], (0, max(0, basis.N - len(P))))
    G = basis.G if G is None else np.asarray(G, dtype=float)
    L = np.linalg.cholesky(G)
    W = scipy.linalg.solve_triangular(L, np.eye(n), lower=True).T  # W^T G W = 1
    # constraint map from orthonormal-coordinate matrices to polynomial coefficients
    Tn = basis.T[:n, :n, :]
    M = np.einsum("ja,kb,jkm->mab", W, W, Tn).reshape(basis.N, n * n)
    sol = np.linalg.lstsq(M, P, rcond=None)[0].reshape(n, n)
    sol = 0.5 * (sol + sol.T)
    w, U = np.linalg.eigh(sol)
    return DensityMatrix(w, W @ U)


def density_diagonal(basis: Basis, rho: DensityMatrix, x) -> np.ndarray:
    vals = basis.values(x, basis.n) @ rho.states
    return (vals ** 2) @ rho.weights


def split_density_sign(rho: DensityMatrix) -> tuple[DensityMatrix, DensityMatrix]:
    pos = rho.weights > 0
    neg = rho.weights < 0
    return (DensityMatrix(rho.weights[pos], rho.states[:, pos]),
            DensityMatrix(rho.weights[neg], rho.states[:, neg]))


def density_average(rho: DensityMatrix, F) -> float:
    """sum_i w_i <psi_i|F|psi_i>."""
    if rho.weights.size == 0:
        return 0.0
    F = np.asarray(F, dtype=float)
    S = rho.states[: F.shape[0]]
    return float(np.einsum("i,ji,jk,ki->", rho.weights, S, F, S))
