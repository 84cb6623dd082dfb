"""Tensor product structures: equivalence up to local unitaries and subsystem
permutations, commuting observable algebras, and Hamiltonian locality in a frame.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from math import prod
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import HilbertSpace, svd, tensor_compose
from .pauli import locality_weight, pauli_decompose
from .validation import DimensionError, check_square, check_unitary, max_abs

__all__ = [
    "Tps",
    "reshuffle",
    "operator_schmidt_values",
    "operator_schmidt_rank",
    "LocalProduct",
    "is_local_product",
    "permutation_matrix",
    "Equivalence",
    "tps_equivalent",
    "commuting_subalgebras",
    "conjugate_hamiltonian",
]

#: Default relative tolerance on operator Schmidt values.
RANK_TOL = 1e-8
#: Largest factor count for which subsystem permutations are enumerated.
MAX_PERMUTATION_FACTORS = 8


@dataclass(frozen=True, init=False, eq=False)
class Tps:
    """A tensor product structure, represented by one global unitary ``T``.

    ``T`` maps the global Hilbert space onto the product of ``space``'s
    factors; any ``(U_1 x ... x U_N) @ T`` represents the same class.
    """

    space: HilbertSpace
    T: np.ndarray = field(repr=False)

    def __init__(self, space, T=None, tol: float = 1e-10):
        if not isinstance(space, HilbertSpace):
            space = HilbertSpace(tuple(space))
        T = np.eye(space.total_dim, dtype=np.complex128) if T is None else check_unitary(T, tol, "T")
        if T.shape[0] != space.total_dim:
            raise DimensionError(f"T has dimension {T.shape[0]}, space has {space.total_dim}")
        T = T.copy()
        T.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "T", T)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.factor_dims

    def apply(self, state) -> np.ndarray:
        """Image of a state vector, or ``T rho T^dag`` for a density matrix."""
        a = np.asarray(state, dtype=np.complex128)
        if a.ndim == 1:
            return self.T @ a
        return self.T @ a @ self.T.conj().T

    def conjugate(self, op) -> np.ndarray:
        return self.T @ np.asarray(op) @ self.T.conj().T


def reshuffle(U, dA: int, dB: int) -> np.ndarray:
    """Realignment ``R[(i,k),(j,l)] = U[(i,j),(k,l)]`` across a ``dA x dB`` cut."""
    U = check_square(U)
    if U.shape[0] != dA * dB:
        raise DimensionError(f"dimension {U.shape[0]} does not factor as {dA}x{dB}")
    return U.reshape(dA, dB, dA, dB).transpose(0, 2, 1, 3).reshape(dA * dA, dB * dB)


def operator_schmidt_values(U, dA: int, dB: int) -> np.ndarray:
    return np.linalg.svd(reshuffle(U, dA, dB), compute_uv=False)


def operator_schmidt_rank(U, cut: tuple[int, int], tol: float = RANK_TOL) -> int:
    """Number of operator Schmidt values above ``tol`` relative to the largest."""
    s = operator_schmidt_values(U, *cut)
    if s[0] == 0:
        return 0
    return int(np.sum(s / s[0] > tol))


class LocalProduct(NamedTuple):
    """Result of :func:`is_local_product`.

    When ``is_product`` holds, ``phase * tensor_compose(factors)``
    reproduces the input.
    """

    is_product: bool
    factors: list | None
    phase: complex


def _canonical_phase(A: np.ndarray) -> tuple[np.ndarray, complex]:
    """Rotate ``A`` so its largest-magnitude entry is real positive."""
    flat = A.reshape(-1)
    k = int(np.argmax(np.abs(flat)))
    ph = flat[k] / abs(flat[k])
    return A / ph, ph


def is_local_product(U, dims: Sequence[int], tol: float = RANK_TOL, recon_tol: float = 1e-8) -> LocalProduct:
    """Test whether ``U`` factors as ``U_1 x ... x U_N`` over ``dims``.

    Factors are peeled off from the left: at each step the remaining operator
    must have operator Schmidt rank one across its leading factor. Recovered
    factors are scaled to Frobenius norm ``sqrt(d)`` and phase-fixed so their
    largest entry is real positive; the leftover global phase is returned.
    """
    U = check_square(U)
    dims = [int(d) for d in dims]
    if prod(dims) != U.shape[0]:
        raise DimensionError(f"dims {dims} do not match dimension {U.shape[0]}")
    if len(dims) < 2:
        A, ph = _canonical_phase(U)
        return LocalProduct(True, [A], ph)

    factors = []
    rest = U
    for d in dims[:-1]:
        D = rest.shape[0] // d
        R = reshuffle(rest, d, D)
        Ul, s, V = svd(R)
        if s[0] == 0 or (s.size > 1 and s[1] / s[0] > tol):
            return LocalProduct(False, None, 0j)
        # R = s0 * vec(A) vec(B)^T
        A = Ul[:, 0].reshape(d, d)
        B = (s[0] * V[:, 0].conj()).reshape(D, D)
        nA = np.linalg.norm(A)
        A = A * (np.sqrt(d) / nA)
        B = B * (nA / np.sqrt(d))
        A, phA = _canonical_phase(A)
        B = B * phA
        factors.append(A)
        rest = B
    nB = np.linalg.norm(rest)
    dl = dims[-1]
    last, phB = _canonical_phase(rest * (np.sqrt(dl) / nB))
    scale = phB * nB / np.sqrt(dl)
    factors.append(last)
    if max_abs(scale * tensor_compose(factors) - U) > recon_tol:
        return LocalProduct(False, None, 0j)
    return LocalProduct(True, factors, complex(scale))


def permutation_matrix(perm: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Unitary that moves factor ``perm[i]`` of ``dims`` into position ``i``.

    Acting on ``|a_0> x |a_1> x ...`` it yields ``|a_perm[0]> x |a_perm[1]> x ...``,
    an operator from the product over ``dims`` to the product over
    ``[dims[p] for p in perm]``.
    """
    dims = [int(d) for d in dims]
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {n} factors")
    total = prod(dims)
    idx = np.arange(total).reshape(dims)
    # entry (new multi-index) holds the old flat index
    src = idx.transpose(perm).reshape(-1)
    P = np.zeros((total, total))
    P[np.arange(total), src] = 1.0
    return P


class Equivalence(NamedTuple):
    equivalent: bool
    permutation: tuple[int, ...] | None
    factors: list | None
    reason: str


def _candidate_permutations(src_dims: tuple[int, ...], dst_dims: tuple[int, ...]):
    """Permutations ``p`` with ``src_dims[p[i]] == dst_dims[i]``, identity first."""
    n = len(src_dims)
    for p in permutations(range(n)):
        if all(src_dims[p[i]] == dst_dims[i] for i in range(n)):
            yield p


def tps_equivalent(T1: Tps, T2: Tps, tol: float = RANK_TOL) -> Equivalence:
    """Decide whether two TPS representatives lie in the same class.

    ``T1 T2^dag`` must become a product of local unitaries after some
    reordering of subsystems; only factors of equal dimension are exchanged.
    On success the permutation ``p`` and the local factors ``U_i`` satisfy
    ``P_p T1 T2^dag = phase * (U_1 x ... x U_N)``.
    """
    d1, d2 = T1.dims, T2.dims
    if T1.space.total_dim != T2.space.total_dim:
        return Equivalence(False, None, None, f"total dimensions differ ({T1.space.total_dim} vs {T2.space.total_dim})")
    if sorted(d1) != sorted(d2):
        return Equivalence(False, None, None, f"factor dimension multisets differ ({d1} vs {d2})")
    if len(d1) > MAX_PERMUTATION_FACTORS:
        raise DimensionError(f"permutation search is capped at {MAX_PERMUTATION_FACTORS} factors, got {len(d1)}")
    M = T1.T @ T2.T.conj().T  # from the T2 product space to the T1 product space
    tried = 0
    for p in _candidate_permutations(d1, d2):
        tried += 1
        P = permutation_matrix(p, d1)
        res = is_local_product(P @ M, d2, tol)
        if res.is_product:
            return Equivalence(True, tuple(p), res.factors, "local product after subsystem permutation")
    return Equivalence(False, None, None, f"not a local product under any of {tried} subsystem permutations")


def commuting_subalgebras(gens_A: Sequence, gens_B: Sequence, tol: float = 1e-10) -> tuple[bool, float]:
    """Whether every generator of ``A`` commutes with every generator of ``B``.

    Returns the verdict and the largest commutator entry seen.
    """
    worst = 0.0
    for a in gens_A:
        a = check_square(a)
        for b in gens_B:
            b = check_square(b)
            if a.shape != b.shape:
                raise DimensionError(f"generator shapes differ: {a.shape} vs {b.shape}")
            worst = max(worst, max_abs(a @ b - b @ a))
    return worst < tol, worst


def conjugate_hamiltonian(T: Tps, H, threshold: float = 1e-12) -> tuple[np.ndarray, int | None]:
    """Hamiltonian ``T H T^dag`` in the frame ``T`` and its Pauli locality.

    The locality is ``None`` when some factor is not a qubit.
    """
    H = check_square(H)
    if H.shape[0] != T.space.total_dim:
        raise DimensionError(f"H has dimension {H.shape[0]}, TPS has {T.space.total_dim}")
    Hc = T.conjugate(H)
    Hc = 0.5 * (Hc + Hc.conj().T)
    if any(d != 2 for d in T.dims):
        return Hc, None
    k, _ = locality_weight(pauli_decompose(Hc, len(T.dims), threshold=threshold), threshold)
    return Hc, k
