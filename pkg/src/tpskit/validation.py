"""Input validation helpers shared by every module.

All checks use the max-abs norm. Each ``check_*`` function returns a
``complex128`` array (a copy only when a conversion is needed) or raises.
"""
from __future__ import annotations

import numpy as np

#: Tolerance for structural predicates (Hermiticity, unitarity, normalization).
STRUCT_TOL = 1e-10
#: Tolerance for reconstruction checks.
RECON_TOL = 1e-9
#: Largest supported total Hilbert-space dimension.
MAX_DIM = 4096


class NotHermitianError(ValueError):
    """Raised when an operator that must be Hermitian is not."""


class DimensionError(ValueError):
    """Raised on incompatible or unsupported dimensions."""


def max_abs(a) -> float:
    """Max-abs norm of an array (0.0 for empty input)."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {M.shape}")
    return M


def check_square(M, name: str = "matrix") -> np.ndarray:
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if M.shape[0] > MAX_DIM:
        raise DimensionError(f"{name} dimension {M.shape[0]} exceeds the supported maximum {MAX_DIM}")
    return M


def is_hermitian(M, tol: float = STRUCT_TOL) -> bool:
    M = np.asarray(M)
    return M.ndim == 2 and M.shape[0] == M.shape[1] and max_abs(M - M.conj().T) <= tol


def is_unitary(M, tol: float = STRUCT_TOL) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return max_abs(M.conj().T @ M - np.eye(M.shape[0])) <= tol


def check_hermitian(M, tol: float = STRUCT_TOL, name: str = "operator") -> np.ndarray:
    M = check_square(M, name)
    dev = max_abs(M - M.conj().T)
    if dev > tol:
        raise NotHermitianError(f"{name} is not Hermitian (max |M - M^dag| = {dev:.3e})")
    return M


def check_unitary(M, tol: float = STRUCT_TOL, name: str = "operator") -> np.ndarray:
    M = check_square(M, name)
    dev = max_abs(M.conj().T @ M - np.eye(M.shape[0]))
    if dev > tol:
        raise ValueError(f"{name} is not unitary (max |U^dag U - I| = {dev:.3e})")
    return M


def check_state(psi, dim: int | None = None, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate a normalized state vector, optionally of a given dimension."""
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.ndim == 2 and 1 in psi.shape:
        psi = psi.reshape(-1)
    if psi.ndim != 1:
        raise DimensionError(f"state vector must be 1-dimensional, got shape {psi.shape}")
    if dim is not None and psi.shape[0] != dim:
        raise DimensionError(f"state has dimension {psi.shape[0]}, expected {dim}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state vector is not normalized (norm = {norm:.12g})")
    return psi


def check_density(rho, dim: int | None = None, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    rho = check_hermitian(rho, tol, "density matrix")
    if dim is not None and rho.shape[0] != dim:
        raise DimensionError(f"density matrix has dimension {rho.shape[0]}, expected {dim}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace is {tr.real:.12g}, expected 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


def check_cut(cut, total_dim: int | None = None) -> tuple[int, int]:
    """Validate a bipartition ``(d, D)`` against an optional total dimension."""
    try:
        d, D = (int(c) for c in cut)
    except (TypeError, ValueError):
        raise DimensionError(f"cut must be a pair of positive integers, got {cut!r}") from None
    if d < 1 or D < 1:
        raise DimensionError(f"cut dimensions must be positive, got {(d, D)}")
    if total_dim is not None and d * D != total_dim:
        raise DimensionError(f"cut {d}x{D} does not match dimension {total_dim}")
    return d, D


def as_density(state) -> np.ndarray:
    """Return a density matrix for either a state vector or a density matrix."""
    a = np.asarray(state, dtype=np.complex128)
    if a.ndim == 1:
        return np.outer(a, a.conj())
    return a
