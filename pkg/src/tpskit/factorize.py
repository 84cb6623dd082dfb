"""Bipartite structure of pure states: Schmidt decomposition, entanglement
measures, product-inducing frames and apparatus alignment."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import HilbertSpace, eig_hermitian, unitary_exponential
from .pauli import (
    PauliString,
    pauli_decompose,
    pauli_matrix,
    strings_up_to_weight,
)
from .tps import Tps
from .validation import (
    DimensionError,
    as_density,
    check_cut,
    check_hermitian,
    check_state,
)

__all__ = [
    "SchmidtDecomposition",
    "schmidt",
    "entanglement_entropy",
    "partial_trace",
    "partial_transpose",
    "negativity",
    "gram_schmidt_complete",
    "construct_product_tps",
    "excess_locality",
    "SearchResult",
    "search_product_tps",
    "Alignment",
    "alignment_unitary",
]

#: Schmidt weights below this are treated as zero.
SCHMIDT_CUTOFF = 1e-12


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``psi = sum_n sqrt(p[n]) * kron(u[:, n], v[:, n])`` across a ``d x D`` cut."""

    cut: tuple[int, int]
    p: np.ndarray
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return int(self.p.size)

    def reconstruct(self) -> np.ndarray:
        d, D = self.cut
        out = np.zeros(d * D, dtype=np.complex128)
        for n in range(self.rank):
            out += np.sqrt(self.p[n]) * np.kron(self.u[:, n], self.v[:, n])
        return out

    def entropy(self) -> float:
        p = self.p
        return float(max(0.0, -np.sum(p * np.log(p))))


def _amplitudes(state, cut) -> tuple[np.ndarray, int, int]:
    psi = check_state(state)
    d, D = check_cut(cut, psi.shape[0])
    return psi.reshape(d, D), d, D


def schmidt(state, cut: tuple[int, int]) -> SchmidtDecomposition:
    """Schmidt decomposition of a normalized pure state across ``cut = (d, D)``.

    Weights come out descending; those below ``1e-12`` are dropped together
    with their basis vectors.
    """
    C, d, D = _amplitudes(state, cut)
    U, s, Vh = np.linalg.svd(C, full_matrices=False)
    p = s**2
    keep = p >= SCHMIDT_CUTOFF
    return SchmidtDecomposition((d, D), p[keep], U[:, keep], Vh[keep].T)


def _entropy_from_amplitudes(C: np.ndarray) -> float:
    p = np.linalg.svd(C, compute_uv=False) ** 2
    p = p[p >= SCHMIDT_CUTOFF]
    return float(max(0.0, -np.sum(p * np.log(p))))


def entanglement_entropy(state, cut: tuple[int, int]) -> float:
    """Von Neumann entropy (natural log) of either side of a pure bipartite state."""
    C, _, _ = _amplitudes(state, cut)
    return _entropy_from_amplitudes(C)


def partial_trace(rho, cut: tuple[int, int], keep: int = 0) -> np.ndarray:
    """Reduced density matrix of side ``keep`` (0 for the ``d`` side, 1 for ``D``).

    Accepts a state vector or a density matrix.
    """
    rho = as_density(rho)
    d, D = check_cut(cut, rho.shape[0])
    t = rho.reshape(d, D, d, D)
    if keep == 0:
        return np.einsum("ijkj->ik", t)
    if keep == 1:
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 0 or 1, got {keep}")


def partial_transpose(rho, cut: tuple[int, int]) -> np.ndarray:
    """Transpose the second (``D``) factor of a bipartite operator."""
    rho = as_density(rho)
    d, D = check_cut(cut, rho.shape[0])
    return rho.reshape(d, D, d, D).transpose(0, 3, 2, 1).reshape(d * D, d * D)


def negativity(rho, cut: tuple[int, int]) -> float:
    """Negativity ``(||rho^{T_B}||_1 - 1) / 2``; zero for separable states."""
    pt = partial_transpose(rho, cut)
    lam = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float(max(0.0, (np.sum(np.abs(lam)) - 1.0) / 2.0))


def gram_schmidt_complete(vectors: Sequence, dim: int | None = None, overlap_tol: float = 1e-8) -> np.ndarray:
    """Complete orthonormal vectors to a basis of ``C^dim``.

    The given vectors become the leading columns (they must already be
    orthonormal). Standard basis vectors are then tried in index order and
    skipped when their overlap with the current span exceeds
    ``1 - overlap_tol``.
    """
    cols = [np.asarray(v, dtype=np.complex128).reshape(-1) for v in vectors]
    if dim is None:
        if not cols:
            raise ValueError("dim is required when no vectors are given")
        dim = cols[0].shape[0]
    basis = np.zeros((dim, dim), dtype=np.complex128)
    for k, v in enumerate(cols):
        basis[:, k] = v
    m = len(cols)
    for i in range(dim):
        if m == dim:
            break
        e = np.zeros(dim, dtype=np.complex128)
        e[i] = 1.0
        Q = basis[:, :m]
        overlap = np.linalg.norm(Q.conj().T @ e)
        if overlap > 1.0 - overlap_tol:
            continue
        r = e - Q @ (Q.conj().T @ e)
        r -= Q @ (Q.conj().T @ r)  # second pass restores orthogonality
        basis[:, m] = r / np.linalg.norm(r)
        m += 1
    if m != dim:
        raise ValueError(f"could only complete {m} of {dim} basis vectors")
    return basis


def construct_product_tps(state, cut: tuple[int, int], dims: Sequence[int] | None = None) -> Tps:
    """A frame in which ``state`` becomes the product basis state ``|0...0>``.

    ``T`` is the inverse of a Gram-Schmidt completion of ``{state}``, so
    ``T @ state = e_0`` up to rounding. ``dims`` optionally refines the
    factor structure recorded on the returned TPS (its product must match).
    """
    psi = check_state(state)
    d, D = check_cut(cut, psi.shape[0])
    basis = gram_schmidt_complete([psi])
    space = HilbertSpace(tuple(dims) if dims is not None else (d, D))
    if space.total_dim != psi.shape[0]:
        raise DimensionError(f"dims {space.factor_dims} do not match state dimension {psi.shape[0]}")
    return Tps(space, basis.conj().T)


def excess_locality(H, n_sites: int, k: int) -> float:
    """Squared Pauli weight of ``H`` carried by strings of weight above ``k``."""
    coeffs = pauli_decompose(H, n_sites, threshold=0.0)
    return float(sum(c * c for ps, c in coeffs.items() if ps.weight > k))


@dataclass
class SearchResult:
    """Outcome of :func:`search_product_tps`."""

    tps: Tps
    generator: np.ndarray
    basis: list[PauliString]
    objective: float
    entropy: float
    excess: float
    converged: bool
    objective_trace: list[float]
    n_evals: int
    iterations: int

    def generator_matrix(self) -> np.ndarray:
        return sum(t * pauli_matrix(ps) for t, ps in zip(self.generator, self.basis))


def _n_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if 2**n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two; the generator basis needs qubits")
    return n


def search_product_tps(
    state,
    cut: tuple[int, int],
    H=None,
    lam: float = 0.0,
    budget: int = 5000,
    tol: float = 1e-6,
    seed: int | None = 0,
    init_generator: np.ndarray | None = None,
    max_weight: int = 2,
    locality_target: int | None = None,
    jitter: float = 0.1,
    fd_step: float = 1e-6,
) -> SearchResult:
    """Descend on ``entropy(e^{iA} psi) + lam * excess_locality(e^{iA} H e^{-iA})``.

    ``A`` ranges over real combinations of Pauli strings of weight
    ``<= max_weight``. Gradients are central finite differences; a trial
    step is accepted only if it lowers the objective, otherwise the step is
    halved. The search stops once the entropy drops below ``tol`` (when
    ``lam == 0``), the step underflows, or ``budget`` objective evaluations
    are spent. Starting points that are not already converged receive a
    seeded Gaussian perturbation of scale ``jitter``, which breaks the
    symmetry of stationary starting points such as maximally entangled states.

    Parameters
    ----------
    state : array_like
        Normalized pure state on ``2**n`` amplitudes.
    cut : (int, int)
        Bipartition whose entanglement is minimized.
    H : array_like, optional
        Hamiltonian whose locality is penalized; required when ``lam > 0``.
    lam : float
        Weight of the locality penalty.
    locality_target : int, optional
        Pauli weight above which terms count as excess; defaults to the
        locality of ``H`` itself.
    """
    psi = check_state(state)
    d, D = check_cut(cut, psi.shape[0])
    n = _n_qubits(psi.shape[0])
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam > 0:
        if H is None:
            raise ValueError("a Hamiltonian is required when lam > 0")
        H = check_hermitian(H)
        if locality_target is None:
            locality_target = max((ps.weight for ps in pauli_decompose(H, n)), default=0)

    basis = strings_up_to_weight(n, max_weight, include_identity=False)
    mats = np.array([pauli_matrix(ps) for ps in basis])
    rng = np.random.default_rng(seed)
    n_evals = 0

    def parts(theta):
        nonlocal n_evals
        n_evals += 1
        U = unitary_exponential(np.tensordot(theta, mats, axes=1), 1.0)
        S = _entropy_from_amplitudes((U @ psi).reshape(d, D))
        ex = 0.0
        if lam > 0:
            ex = excess_locality(U @ H @ U.conj().T, n, locality_target)
        return S + lam * ex, S, ex

    theta = np.zeros(len(basis)) if init_generator is None else np.array(init_generator, dtype=float)
    if theta.shape != (len(basis),):
        raise ValueError(f"init_generator must have length {len(basis)}")

    f, S, ex = parts(theta)
    best = (f, S, ex, theta.copy())
    trace = [f]
    iterations = 0

    def done(S_now):
        return lam == 0 and S_now < tol

    if not done(S) and jitter > 0 and n_evals < budget:
        theta = theta + rng.normal(scale=jitter, size=theta.shape)
        f, S, ex = parts(theta)
        if f < best[0]:
            best = (f, S, ex, theta.copy())
        trace.append(best[0])
    # continue from the better of the two starting points
    theta = best[3].copy()
    f, S, ex = best[0], best[1], best[2]

    step = 0.5
    K = len(basis)
    while not done(S) and n_evals + 2 * K + 1 <= budget and step > 1e-14:
        iterations += 1
        grad = np.empty(K)
        for k in range(K):
            e = np.zeros(K)
            e[k] = fd_step
            grad[k] = (parts(theta + e)[0] - parts(theta - e)[0]) / (2 * fd_step)
        gnorm = np.linalg.norm(grad)
        if gnorm < 1e-12:
            # stationary point: kick off it with a seeded perturbation
            theta = theta + rng.normal(scale=max(jitter, 0.1), size=K)
            f, S, ex = parts(theta)
            continue
        # line search on this gradient: halve until improvement or budget
        while n_evals < budget and step > 1e-14:
            trial = theta - step * grad / gnorm
            ft, St, ext = parts(trial)
            if ft < f:
                theta, f, S, ex = trial, ft, St, ext
                step *= 2.0
                break
            step *= 0.5
        if f < best[0]:
            best = (f, S, ex, theta.copy())
        trace.append(best[0])

    f, S, ex, theta = best
    U = unitary_exponential(np.tensordot(theta, mats, axes=1), 1.0)
    return SearchResult(
        tps=Tps(HilbertSpace((2,) * n), U),
        generator=theta,
        basis=basis,
        objective=float(f),
        entropy=float(S),
        excess=float(ex),
        converged=bool(S < tol),
        objective_trace=[float(t) for t in trace],
        n_evals=n_evals,
        iterations=iterations,
    )


class Alignment(NamedTuple):
    """Local unitary sending the apparatus state onto eigenvector ``index``."""

    unitary: np.ndarray
    index: int
    eigenvalue: float
    tie: bool
    probabilities: np.ndarray


def alignment_unitary(
    local_state,
    O_app,
    policy: str = "max-overlap",
    seed: int | None = None,
    tie_tol: float = 1e-9,
) -> Alignment:
    """Rotate a local apparatus state onto an eigenvector of ``O_app``.

    Eigenvectors are indexed by ascending eigenvalue. ``policy`` selects the
    index: ``"max-overlap"`` takes the largest ``|<o_n|a>|`` (lowest index on
    ties, reported through ``tie``); ``"born-random"`` samples ``n`` with
    probability ``|<o_n|a>|**2`` and requires a seed. The unitary maps
    ``a`` onto ``o_n`` rephased to match ``a``, so it is the identity when
    ``a`` already is that eigenvector.
    """
    a = check_state(local_state)
    O_app = check_hermitian(O_app, name="O_app")
    if O_app.shape[0] != a.shape[0]:
        raise DimensionError(f"O_app is {O_app.shape[0]}-dimensional, state is {a.shape[0]}-dimensional")
    w, V = eig_hermitian(O_app)
    amps = V.conj().T @ a
    probs = np.abs(amps) ** 2
    mags = np.abs(amps)
    if policy == "max-overlap":
        n = int(np.argmax(mags))
    elif policy == "born-random":
        if seed is None:
            raise ValueError("the born-random policy needs an explicit seed")
        rng = np.random.default_rng(seed)
        n = int(rng.choice(len(w), p=probs / probs.sum()))
    else:
        raise ValueError(f"unknown policy {policy!r}; use 'max-overlap' or 'born-random'")
    # another outcome was equally likely
    tie = bool(np.sum(np.abs(mags - mags[n]) <= tie_tol) > 1)

    target = V[:, n]
    if mags[n] > 0:
        target = target * (amps[n] / mags[n])
    src = gram_schmidt_complete([a])
    dst = gram_schmidt_complete([target])
    U = dst @ src.conj().T
    return Alignment(U, n, float(w[n]), tie, probs)
