"""Dense complex linear algebra on finite-dimensional Hilbert spaces.

Factor ordering follows the usual Kronecker convention: the leftmost factor
carries the most significant index, so site 1 is the leading qubit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import prod
from os import PathLike
from typing import Sequence

import numpy as np

from .validation import (
    MAX_DIM,
    DimensionError,
    check_hermitian,
    check_square,
)

__all__ = [
    "HilbertSpace",
    "tensor_compose",
    "eig_hermitian",
    "svd",
    "unitary_exponential",
    "save_array",
    "load_array",
    "format_array",
    "parse_array",
]


@dataclass(frozen=True)
class HilbertSpace:
    """An ordered tensor product of finite factors.

    Parameters
    ----------
    factor_dims : sequence of int
        Local dimensions, each at least 2.
    """

    factor_dims: tuple[int, ...]
    total_dim: int = field(init=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims:
            raise DimensionError("a Hilbert space needs at least one factor")
        if any(d < 2 for d in dims):
            raise DimensionError(f"every factor dimension must be >= 2, got {dims}")
        total = prod(dims)
        if total > MAX_DIM:
            raise DimensionError(f"total dimension {total} exceeds the supported maximum {MAX_DIM}")
        object.__setattr__(self, "factor_dims", dims)
        object.__setattr__(self, "total_dim", total)

    @classmethod
    def qubits(cls, n: int) -> "HilbertSpace":
        return cls((2,) * n)

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)


def tensor_compose(factors: Sequence) -> np.ndarray:
    """Kronecker product of square matrices, leftmost factor most significant."""
    if len(factors) == 0:
        raise ValueError("tensor_compose needs at least one factor")
    mats = [check_square(f, f"factor {i}") for i, f in enumerate(factors)]
    total = prod(m.shape[0] for m in mats)
    if total > MAX_DIM:
        raise DimensionError(f"composed dimension {total} exceeds the supported maximum {MAX_DIM}")
    return reduce(np.kron, mats)


def eig_hermitian(M, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Real, ascending.
    eigenvectors : ndarray, shape (n, n)
        Unitary; column ``k`` pairs with ``eigenvalues[k]``.
    """
    M = check_hermitian(M, tol)
    # symmetrize so roundoff in the input cannot leak into the spectrum
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return w, V


def svd(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full singular value decomposition ``M = U @ diag(s) @ V^dag``.

    Note that the third return value is ``V`` itself, not ``V^dag``.
    Singular values are descending and nonnegative.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise DimensionError(f"svd expects a matrix, got shape {M.shape}")
    U, s, Vh = np.linalg.svd(M, full_matrices=True)
    return U, s, Vh.conj().T


def unitary_exponential(H, tau: float) -> np.ndarray:
    """Return ``exp(i * H * tau)`` for Hermitian ``H``, built from its eigenbasis."""
    w, V = eig_hermitian(H)
    return (V * np.exp(1j * w * tau)) @ V.conj().T


# -- plain-text persistence -------------------------------------------------
#
# Header line: "<ndim> <rows> <cols>" with ndim 1 for a state vector (cols == 1)
# and 2 for a matrix. Then one "re im" pair per entry, row-major, printed with
# 17 significant digits so that the decimal round trip is bit exact.


def format_array(a) -> str:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 1:
        ndim, rows, cols = 1, a.shape[0], 1
    elif a.ndim == 2:
        ndim, (rows, cols) = 2, a.shape
    else:
        raise DimensionError(f"only vectors and matrices can be saved, got shape {a.shape}")
    lines = [f"{ndim} {rows} {cols}"]
    lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in a.reshape(-1))
    return "\n".join(lines) + "\n"


def parse_array(text: str) -> np.ndarray:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty array file")
    try:
        ndim, rows, cols = (int(t) for t in lines[0].split())
    except ValueError:
        raise ValueError(f"line 1: malformed header {lines[0]!r}, expected 'ndim rows cols'") from None
    if ndim not in (1, 2) or rows < 1 or cols < 1 or (ndim == 1 and cols != 1):
        raise ValueError(f"line 1: invalid header {lines[0]!r}")
    body = lines[1:]
    if len(body) != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, found {len(body)}")
    data = np.empty(rows * cols, dtype=np.complex128)
    for k, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"entry {k}: expected 're im', got {ln!r}")
        data[k] = complex(float(parts[0]), float(parts[1]))
    return data if ndim == 1 else data.reshape(rows, cols)


def save_array(path: str | PathLike, a) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_array(a))


def load_array(path: str | PathLike) -> np.ndarray:
    with open(path, encoding="ascii") as fh:
        return parse_array(fh.read())
