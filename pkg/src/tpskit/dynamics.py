"""Unitary evolution, global invariants, single-outcome measurement and the
mass-superposition entanglement scenarios."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .factorize import (
    alignment_unitary,
    entanglement_entropy,
    negativity,
    schmidt,
    search_product_tps,
)
from .linalg import eig_hermitian, unitary_exponential
from .tps import Tps
from .validation import (
    DimensionError,
    as_density,
    check_cut,
    check_density,
    check_hermitian,
    check_state,
)

__all__ = [
    "G_NEWTON",
    "HBAR",
    "EvolutionSpec",
    "evolve",
    "global_invariant",
    "ConvexDecomposition",
    "convex_decomposition",
    "NotFactorizedError",
    "MeasurementRecord",
    "single_outcome_measure",
    "TrajectoryPoint",
    "tps_entropy_trajectory",
    "GieParams",
    "phase_condition",
    "gie_bipartite_state",
    "mediator_states",
    "gie_tripartite_state",
]

G_NEWTON = 6.674e-11  # m^3 kg^-1 s^-2
HBAR = 1.0546e-34  # J s


@dataclass(frozen=True)
class EvolutionSpec:
    """Hamiltonian, initial state (vector or density matrix) and parameter grid.

    ``schrodinger=False`` evolves with ``U = exp(+i H tau)`` on the left;
    ``True`` flips to the textbook ``exp(-i H tau)``.
    """

    H: np.ndarray = field(repr=False)
    rho0: np.ndarray = field(repr=False)
    tau_grid: tuple[float, ...] = (0.0,)
    schrodinger: bool = False

    def __post_init__(self):
        H = check_hermitian(self.H, name="H")
        rho0 = np.asarray(self.rho0, dtype=np.complex128)
        if rho0.ndim == 1:
            rho0 = check_state(rho0, H.shape[0])
        else:
            rho0 = check_density(rho0, H.shape[0])
        grid = tuple(float(t) for t in self.tau_grid)
        if not grid:
            raise ValueError("tau_grid must not be empty")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ValueError("tau_grid must be ascending")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "rho0", rho0)
        object.__setattr__(self, "tau_grid", grid)

    @property
    def is_pure_vector(self) -> bool:
        return self.rho0.ndim == 1

    def propagator(self, tau: float) -> np.ndarray:
        return unitary_exponential(self.H, -tau if self.schrodinger else tau)


def evolve(spec: EvolutionSpec, tau: float) -> np.ndarray:
    """State at ``tau``: ``U psi`` for vectors, ``U rho U^dag`` for density matrices."""
    U = spec.propagator(tau)
    if spec.is_pure_vector:
        return U @ spec.rho0
    return U @ spec.rho0 @ U.conj().T


def global_invariant(rho, O) -> float:
    """``tr(rho O)`` for a density matrix or ``<psi|O|psi>`` for a vector."""
    O = check_hermitian(O, name="O")
    a = np.asarray(rho, dtype=np.complex128)
    if a.shape[0] != O.shape[0]:
        raise DimensionError(f"state dimension {a.shape[0]} does not match observable {O.shape[0]}")
    if a.ndim == 1:
        return float(np.real(np.vdot(a, O @ a)))
    return float(np.real(np.trace(a @ O)))


class ConvexDecomposition(NamedTuple):
    value: float
    terms: list[tuple[float, float]]  # (p_n, <u_n|O|u_n>)

    @property
    def recombined(self) -> float:
        return float(sum(p * v for p, v in self.terms))


def convex_decomposition(state, O_app, cut: tuple[int, int]) -> ConvexDecomposition:
    """Split ``<O_app x 1>`` into Schmidt-weighted local expectation values."""
    psi = check_state(state)
    d, D = check_cut(cut, psi.shape[0])
    O_app = check_hermitian(O_app, name="O_app")
    if O_app.shape[0] != d:
        raise DimensionError(f"O_app is {O_app.shape[0]}-dimensional, apparatus factor is {d}")
    sd = schmidt(psi, (d, D))
    terms = [
        (float(p), float(np.real(np.vdot(u, O_app @ u))))
        for p, u in zip(sd.p, sd.u.T)
    ]
    value = global_invariant(psi, np.kron(O_app, np.eye(D)))
    return ConvexDecomposition(value, terms)


class NotFactorizedError(ValueError):
    """The state does not factorize across the cut in the supplied frame."""

    def __init__(self, entropy: float, tol: float):
        super().__init__(f"state is not a product across the cut in this frame (entropy {entropy:.3e} >= {tol:.1e})")
        self.entropy = entropy
        self.tol = tol


@dataclass
class MeasurementRecord:
    """Outcome of :func:`single_outcome_measure`.

    ``residual`` is ``|<psi'|O_app x 1|psi'> - value|`` for the fully
    transformed state ``psi' = (U_align x 1) T psi``.
    """

    index: int
    value: float
    residual: float
    U_align: np.ndarray = field(repr=False)
    entropy: float
    tie: bool
    degenerate: bool
    probabilities: list[float]
    state: np.ndarray = field(repr=False)


def single_outcome_measure(
    state,
    T_M: Tps,
    O_app,
    cut: tuple[int, int],
    policy: str = "max-overlap",
    seed: int | None = None,
    entropy_tol: float = 1e-8,
) -> MeasurementRecord:
    """Obtain one apparatus outcome by a frame change plus a local alignment.

    The frame ``T_M`` must leave the state a product across ``cut``;
    otherwise :class:`NotFactorizedError` is raised carrying the measured
    entropy. The apparatus factor is then rotated onto an eigenvector of
    ``O_app`` chosen by ``policy`` (see :func:`alignment_unitary`).
    """
    psi = check_state(state)
    d, D = check_cut(cut, psi.shape[0])
    O_app = check_hermitian(O_app, name="O_app")
    if O_app.shape[0] != d:
        raise DimensionError(f"O_app is {O_app.shape[0]}-dimensional, apparatus factor is {d}")
    if T_M.space.total_dim != psi.shape[0]:
        raise DimensionError(f"TPS acts on dimension {T_M.space.total_dim}, state has {psi.shape[0]}")

    psi_t = T_M.apply(psi)
    S = entanglement_entropy(psi_t, (d, D))
    if S >= entropy_tol:
        raise NotFactorizedError(S, entropy_tol)
    local = schmidt(psi_t, (d, D)).u[:, 0]
    al = alignment_unitary(local, O_app, policy=policy, seed=seed)
    psi_f = np.kron(al.unitary, np.eye(D)) @ psi_t
    v = global_invariant(psi_f, np.kron(O_app, np.eye(D)))
    w = eig_hermitian(O_app)[0]
    degenerate = bool(np.any(np.diff(w) < 1e-9))
    return MeasurementRecord(
        index=al.index,
        value=al.eigenvalue,
        residual=abs(v - al.eigenvalue),
        U_align=al.unitary,
        entropy=S,
        tie=al.tie,
        degenerate=degenerate,
        probabilities=[float(p) for p in al.probabilities],
        state=psi_f,
    )


class TrajectoryPoint(NamedTuple):
    tau: float
    entropy_before: float
    entropy_after: float
    converged: bool
    n_evals: int
    generator_step: float  # distance to the previous grid point's generator


def tps_entropy_trajectory(
    spec: EvolutionSpec,
    cut: tuple[int, int],
    lam: float = 0.0,
    budget_per_step: int = 5000,
    tol: float = 1e-6,
    seed: int = 0,
    H_penalty=None,
) -> tuple[list[TrajectoryPoint], list[np.ndarray]]:
    """Track a product-inducing frame along the evolution.

    At each grid point the evolved state is searched for a frame that makes
    it a product across ``cut``, warm-started from the previous generator.
    This probes whether such frames can be followed continuously; it is a
    diagnostic, not a law for how frames evolve.

    Returns the per-point records and the generator found at each point.
    """
    if not spec.is_pure_vector:
        raise ValueError("the trajectory needs a pure initial state vector")
    d, D = check_cut(cut, spec.rho0.shape[0])
    H_pen = spec.H if H_penalty is None else H_penalty
    points, generators = [], []
    prev = None
    for k, tau in enumerate(spec.tau_grid):
        psi = evolve(spec, tau)
        before = entanglement_entropy(psi, (d, D))
        res = search_product_tps(
            psi,
            (d, D),
            H=H_pen if lam > 0 else None,
            lam=lam,
            budget=budget_per_step,
            tol=tol,
            seed=seed + k,
            init_generator=prev,
            jitter=0.1 if prev is None else 0.0,
        )
        step = 0.0 if prev is None else float(np.linalg.norm(res.generator - prev))
        points.append(TrajectoryPoint(tau, before, res.entropy, res.converged, res.n_evals, step))
        generators.append(res.generator)
        prev = res.generator
    return points, generators


# -- mass-superposition scenarios ------------------------------------------

BRANCHES = ("LL", "LR", "RL", "RR")


@dataclass(frozen=True)
class GieParams:
    """Branch phases ``(phi_LL, phi_LR, phi_RL, phi_RR)`` in radians."""

    phi_LL: float
    phi_LR: float
    phi_RL: float
    phi_RR: float

    @classmethod
    def from_phases(cls, phases: Sequence[float]) -> "GieParams":
        if len(phases) != 4:
            raise ValueError("exactly four phases are needed (LL, LR, RL, RR)")
        return cls(*(float(p) for p in phases))

    @classmethod
    def from_physical(cls, m1: float, m2: float, t_f: float, separations: Sequence[float]) -> "GieParams":
        """Newtonian phases ``G m1 m2 t_f / (hbar d_AB)`` from branch separations in metres."""
        if len(separations) != 4:
            raise ValueError("exactly four separations are needed (LL, LR, RL, RR)")
        if any(s <= 0 for s in separations):
            raise ValueError(f"separations must be strictly positive, got {list(separations)}")
        k = G_NEWTON * m1 * m2 * t_f / HBAR
        return cls(*(k / float(s) for s in separations))

    @property
    def phases(self) -> np.ndarray:
        return np.array([self.phi_LL, self.phi_LR, self.phi_RL, self.phi_RR])

    @property
    def phase_mismatch(self) -> float:
        """``phi_LL + phi_RR - phi_LR - phi_RL`` wrapped into ``(-pi, pi]``."""
        delta = self.phi_LL + self.phi_RR - self.phi_LR - self.phi_RL
        return float(np.pi - np.mod(np.pi - delta, 2 * np.pi))


def phase_condition(params: GieParams, tol: float = 1e-9) -> bool:
    """Whether ``phi_LL + phi_RR == phi_LR + phi_RL (mod 2 pi)`` within ``tol``."""
    return abs(params.phase_mismatch) <= tol


class GieState(NamedTuple):
    state: np.ndarray
    negativity: float


def gie_bipartite_state(params: GieParams) -> GieState:
    """Two-mass state ``(1/2) sum_AB exp(i phi_AB) |A>|B>`` and its negativity."""
    psi = 0.5 * np.exp(1j * params.phases)
    return GieState(psi, negativity(psi, (2, 2)))


def mediator_states(overlap: float = 0.0) -> np.ndarray:
    """Four unit vectors in ``C^4`` with pairwise inner product ``overlap``.

    Columns are indexed by branch. ``overlap=0`` gives the standard basis,
    ``overlap=1`` four copies of one state.
    """
    if not 0.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {overlap}")
    gram = (1.0 - overlap) * np.eye(4) + overlap * np.ones((4, 4))
    w, V = np.linalg.eigh(gram)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def _mass_state(rho: np.ndarray) -> np.ndarray:
    """Trace the 4-dim mediator out of a mass1 x mediator x mass2 operator."""
    return np.einsum("ambcmd->abcd", rho.reshape(2, 4, 2, 2, 4, 2)).reshape(4, 4)


class TripartiteState(NamedTuple):
    state: np.ndarray  # vector (quantum) or density matrix (classical)
    mass_state: np.ndarray
    negativity: float


def gie_tripartite_state(params: GieParams, mediator: str = "quantum", overlap: float = 0.0) -> TripartiteState:
    """Masses coupled only through a 4-level mediator, ordered mass1 x mediator x mass2.

    Branch ``AB`` carries ``exp(i phi_AB) |A> |gamma_AB> |B>``. With a
    ``"quantum"`` mediator the joint state stays coherent and
    ``overlap`` sets ``<gamma_AB|gamma_A'B'>``. A ``"classical"`` mediator
    has perfectly distinguishable configurations and is dephased in that
    basis, so ``overlap`` must be 0. The reported negativity is between the
    two masses after tracing out the mediator.
    """
    if mediator not in ("quantum", "classical"):
        raise ValueError(f"mediator must be 'quantum' or 'classical', got {mediator!r}")
    if mediator == "classical" and overlap != 0.0:
        raise ValueError("a classical mediator has orthogonal configurations; overlap must be 0")
    gam = mediator_states(overlap)
    psi = np.zeros(16, dtype=np.complex128)
    for k, phase in enumerate(params.phases):
        a, b = divmod(k, 2)
        psi += 0.5 * np.exp(1j * phase) * np.kron(np.kron(np.eye(2)[a], gam[:, k]), np.eye(2)[b])
    rho = np.outer(psi, psi.conj())
    if mediator == "classical":
        out = np.zeros_like(rho)
        for k in range(4):
            P = np.kron(np.kron(np.eye(2), np.diag(np.eye(4)[k])), np.eye(2))
            out += P @ rho @ P
        rho = out
        state = rho
    else:
        state = psi
    mass = _mass_state(rho)
    return TripartiteState(state, mass, negativity(mass, (2, 2)))
