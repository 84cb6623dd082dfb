"""Tensor-product-structure toolkit for finite-dimensional quantum systems."""
from .duality import DualityMap, conjugation_witness, map_hamiltonian, mu_model, sigma_model, verify_duality
from .dynamics import (
    EvolutionSpec,
    GieParams,
    convex_decomposition,
    evolve,
    gie_bipartite_state,
    gie_tripartite_state,
    global_invariant,
    single_outcome_measure,
    tps_entropy_trajectory,
)
from .factorize import (
    alignment_unitary,
    construct_product_tps,
    entanglement_entropy,
    negativity,
    schmidt,
    search_product_tps,
)
from .linalg import HilbertSpace, eig_hermitian, load_array, save_array, svd, tensor_compose, unitary_exponential
from .pauli import HamiltonianSpec, PauliString, build_hamiltonian, pauli_decompose
from .tps import Tps, is_local_product, operator_schmidt_rank, tps_equivalent

__version__ = "0.1.0"

__all__ = [
    "DualityMap", "conjugation_witness", "map_hamiltonian", "mu_model", "sigma_model", "verify_duality",
    "EvolutionSpec", "GieParams", "convex_decomposition", "evolve", "gie_bipartite_state",
    "gie_tripartite_state", "global_invariant", "single_outcome_measure", "tps_entropy_trajectory",
    "alignment_unitary", "construct_product_tps", "entanglement_entropy", "negativity", "schmidt",
    "search_product_tps", "HilbertSpace", "eig_hermitian", "load_array", "save_array", "svd",
    "tensor_compose", "unitary_exponential", "HamiltonianSpec", "PauliString", "build_hamiltonian",
    "pauli_decompose", "Tps", "is_local_product", "operator_schmidt_rank", "tps_equivalent",
]
