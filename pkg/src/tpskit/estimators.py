"""scikit-learn compatible wrappers.

``ProductTpsSearch`` learns a frame in which a pure state factorizes and then
applies it to further states; ``PauliDecomposer`` maps Hermitian operators to
Pauli coefficient vectors and back. Both follow the ``fit``/``transform``
protocol and get ``get_params``/``set_params`` from ``BaseEstimator``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from .factorize import search_product_tps
from .pauli import HamiltonianSpec, all_pauli_strings, build_hamiltonian, pauli_decompose
from .validation import check_state

__all__ = ["ProductTpsSearch", "PauliDecomposer"]


class ProductTpsSearch(BaseEstimator, TransformerMixin):
    """Find a frame ``T = exp(iA)`` in which a pure state is a product across ``cut``.

    Parameters
    ----------
    cut : tuple of int
        Bipartition ``(d, D)``.
    lam : float
        Weight of the locality penalty on ``hamiltonian``.
    hamiltonian : array_like, optional
        Operator whose Pauli locality is penalized in the new frame.
    budget : int
        Maximum number of objective evaluations.
    tol : float
        Entropy below which the search stops.
    seed : int
        Seed for the symmetry-breaking perturbation.

    Attributes
    ----------
    tps_ : Tps
    generator_ : ndarray
    objective_trace_ : list of float
    entropy_ : float
    converged_ : bool
    """

    def __init__(self, cut=(2, 2), lam=0.0, hamiltonian=None, budget=5000, tol=1e-6, seed=0):
        self.cut = cut
        self.lam = lam
        self.hamiltonian = hamiltonian
        self.budget = budget
        self.tol = tol
        self.seed = seed

    def fit(self, X, y=None):
        psi = check_state(X)
        res = search_product_tps(
            psi,
            tuple(self.cut),
            H=self.hamiltonian,
            lam=self.lam,
            budget=self.budget,
            tol=self.tol,
            seed=self.seed,
        )
        self.result_ = res
        self.tps_ = res.tps
        self.generator_ = res.generator
        self.objective_trace_ = res.objective_trace
        self.entropy_ = res.entropy
        self.converged_ = res.converged
        return self

    def transform(self, X):
        """Apply the learned frame to one state (1-d) or a batch of states (rows)."""
        check_is_fitted(self, "tps_")
        X = np.asarray(X, dtype=np.complex128)
        if X.ndim == 1:
            return self.tps_.T @ X
        return X @ self.tps_.T.T

    def inverse_transform(self, X):
        check_is_fitted(self, "tps_")
        X = np.asarray(X, dtype=np.complex128)
        Tinv = self.tps_.T.conj().T
        if X.ndim == 1:
            return Tinv @ X
        return X @ Tinv.T


class PauliDecomposer(BaseEstimator, TransformerMixin):
    """Map Hermitian ``2**n x 2**n`` operators to real Pauli coefficient vectors.

    Columns follow :func:`tpskit.pauli.all_pauli_strings` order. ``fit`` only
    records the number of sites from the first sample.
    """

    def __init__(self, threshold=1e-12):
        self.threshold = threshold

    def fit(self, X, y=None):
        X = self._as_batch(X)
        dim = X.shape[1]
        n = dim.bit_length() - 1
        if 2**n != dim:
            raise ValueError(f"operator dimension {dim} is not a power of two")
        self.n_sites_ = n
        self.strings_ = all_pauli_strings(n)
        return self

    def transform(self, X):
        if not hasattr(self, "strings_"):
            raise NotFittedError("PauliDecomposer is not fitted yet")
        X = self._as_batch(X)
        index = {ps: k for k, ps in enumerate(self.strings_)}
        out = np.zeros((X.shape[0], len(self.strings_)))
        for i, M in enumerate(X):
            for ps, c in pauli_decompose(M, self.n_sites_, threshold=self.threshold).items():
                out[i, index[ps]] = c
        return out

    def inverse_transform(self, C):
        check_is_fitted(self, "strings_")
        C = np.atleast_2d(np.asarray(C, dtype=float))
        return np.array([
            build_hamiltonian(HamiltonianSpec(self.n_sites_, tuple(zip(row, self.strings_))))
            for row in C
        ])

    @staticmethod
    def _as_batch(X):
        X = np.asarray(X, dtype=np.complex128)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3 or X.shape[1] != X.shape[2]:
            raise ValueError(f"expected square operators, got shape {X.shape}")
        return X
