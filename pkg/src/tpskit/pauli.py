"""Pauli strings, Hamiltonians built from term lists, and the Pauli-basis expansion.

Site ``1`` is the leftmost letter of a word and the most significant qubit.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import tensor_compose
from .validation import DimensionError, check_hermitian

__all__ = [
    "PAULI_MATRICES",
    "PauliString",
    "HamiltonianSpec",
    "pauli_matrix",
    "build_hamiltonian",
    "pauli_decompose",
    "locality_weight",
    "all_pauli_strings",
    "strings_up_to_weight",
    "parse_terms",
    "format_terms",
]

PAULI_MATRICES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

# single-site products: (a, b) -> (phase, letter) with a.b = phase * letter
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

# (x bit, z bit) encoding of each letter; Y = i X Z
_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_LETTER = {v: k for k, v in _XZ.items()}

#: Pauli strings up to this many sites are decomposed by exhaustive enumeration.
FULL_DECOMPOSITION_MAX_SITES = 6


@dataclass(frozen=True, order=True)
class PauliString:
    """A word over ``{I, X, Y, Z}``, one letter per site."""

    letters: str

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters:
            raise ValueError("a Pauli string needs at least one site")
        bad = set(letters) - set("IXYZ")
        if bad:
            raise ValueError(f"invalid Pauli letter(s) {sorted(bad)} in {self.letters!r}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def identity(cls, n_sites: int) -> "PauliString":
        return cls("I" * n_sites)

    @classmethod
    def from_sites(cls, n_sites: int, ops: Mapping[int, str]) -> "PauliString":
        """Build a string from a ``{site: letter}`` map with 1-based sites."""
        word = ["I"] * n_sites
        for site, letter in ops.items():
            if not 1 <= site <= n_sites:
                raise ValueError(f"site {site} outside 1..{n_sites}")
            word[site - 1] = letter
        return cls("".join(word))

    @property
    def n_sites(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        """1-based sites carrying a non-identity letter."""
        return tuple(i + 1 for i, c in enumerate(self.letters) if c != "I")

    def masks(self) -> tuple[int, int]:
        """Bit masks ``(x, z)`` with site 1 in the most significant bit."""
        x = z = 0
        for c in self.letters:
            xb, zb = _XZ[c]
            x = (x << 1) | xb
            z = (z << 1) | zb
        return x, z

    def multiply(self, other: "PauliString") -> tuple[complex, "PauliString"]:
        """Return ``(phase, P)`` with ``self @ other == phase * P``."""
        if other.n_sites != self.n_sites:
            raise DimensionError(f"cannot multiply strings on {self.n_sites} and {other.n_sites} sites")
        phase: complex = 1
        out = []
        for a, b in zip(self.letters, other.letters):
            ph, c = _PRODUCT[a, b]
            phase *= ph
            out.append(c)
        return phase, PauliString("".join(out))

    def commutes_with(self, other: "PauliString") -> bool:
        clashes = sum(a != "I" and b != "I" and a != b for a, b in zip(self.letters, other.letters))
        return clashes % 2 == 0

    def to_matrix(self) -> np.ndarray:
        return pauli_matrix(self)

    def __str__(self) -> str:
        return self.letters


def _as_pauli(ps) -> PauliString:
    return ps if isinstance(ps, PauliString) else PauliString(str(ps))


@dataclass(frozen=True)
class HamiltonianSpec:
    """Weighted sum of Pauli strings on a fixed number of sites.

    Duplicate strings are allowed; :meth:`simplify` merges them.
    """

    n_sites: int
    terms: tuple[tuple[float, PauliString], ...] = ()

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        terms = []
        for coeff, ps in self.terms:
            ps = _as_pauli(ps)
            if ps.n_sites != self.n_sites:
                raise DimensionError(f"term {ps} acts on {ps.n_sites} sites, expected {self.n_sites}")
            c = complex(coeff)
            if abs(c.imag) > 0:
                raise ValueError(f"coefficient of {ps} must be real, got {coeff!r}")
            terms.append((float(c.real), ps))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, str | PauliString]]) -> "HamiltonianSpec":
        terms = [(c, _as_pauli(p)) for c, p in terms]
        if not terms:
            raise ValueError("cannot infer n_sites from an empty term list")
        return cls(terms[0][1].n_sites, tuple(terms))

    def simplify(self, threshold: float = 0.0) -> "HamiltonianSpec":
        """Merge repeated strings, keeping first-appearance order.

        Terms whose merged coefficient has magnitude ``<= threshold`` are
        dropped. With the default threshold only exact zeros vanish.
        """
        merged: dict[PauliString, float] = {}
        for c, ps in self.terms:
            merged[ps] = merged.get(ps, 0.0) + c
        kept = tuple((c, ps) for ps, c in merged.items() if abs(c) > threshold)
        return HamiltonianSpec(self.n_sites, kept)

    def locality(self, threshold: float = 1e-12) -> int:
        """Largest weight among terms with ``|coefficient| > threshold``."""
        return max((ps.weight for c, ps in self.terms if abs(c) > threshold), default=0)

    def as_dict(self) -> dict[PauliString, float]:
        return {ps: c for c, ps in self.simplify().terms}

    def to_matrix(self) -> np.ndarray:
        return build_hamiltonian(self)

    def __len__(self) -> int:
        return len(self.terms)


def pauli_matrix(ps: PauliString | str) -> np.ndarray:
    """Dense matrix of a Pauli string as a Kronecker product in site order."""
    ps = _as_pauli(ps)
    if ps.n_sites > 12:
        raise DimensionError(f"{ps.n_sites} sites exceeds the dense limit of 12")
    return tensor_compose([PAULI_MATRICES[c] for c in ps.letters])


def _scatter_pauli(out: np.ndarray, coeff: complex, ps: PauliString) -> None:
    """Add ``coeff * ps`` into ``out`` using the bit-mask action of the string."""
    n = ps.n_sites
    x, z = ps.masks()
    j = np.arange(2**n)
    sign = 1 - 2 * (_popcount(j & z) & 1)
    phase = 1j ** (_popcount(np.array(x & z)) % 4)
    # P|j> = phase * (-1)^{j.z} |j ^ x>
    out[j ^ x, j] += coeff * phase * sign


def _popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    count = np.zeros_like(a)
    while np.any(a):
        count += a & 1
        a = a >> 1
    return count


def build_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    """Dense matrix ``sum_k c_k P_k`` of a Hamiltonian spec."""
    if spec.n_sites > 12:
        raise DimensionError(f"{spec.n_sites} sites exceeds the dense limit of 12")
    dim = 2**spec.n_sites
    H = np.zeros((dim, dim), dtype=np.complex128)
    for c, ps in spec.terms:
        if ps.n_sites != spec.n_sites:
            raise DimensionError(f"term {ps} does not act on {spec.n_sites} sites")
        _scatter_pauli(H, c, ps)
    return H


def all_pauli_strings(n_sites: int) -> list[PauliString]:
    return [PauliString("".join(w)) for w in product("IXYZ", repeat=n_sites)]


def strings_up_to_weight(n_sites: int, max_weight: int, include_identity: bool = True) -> list[PauliString]:
    """All strings of weight ``<= max_weight``, ordered by weight then sites."""
    out = [PauliString.identity(n_sites)] if include_identity else []
    for w in range(1, max_weight + 1):
        for sites in combinations(range(1, n_sites + 1), w):
            for letters in product("XYZ", repeat=w):
                out.append(PauliString.from_sites(n_sites, dict(zip(sites, letters))))
    return out


def _walsh_hadamard(v: np.ndarray, n: int) -> np.ndarray:
    """Unnormalized transform ``out[z] = sum_j (-1)^{popcount(j & z)} v[j]``."""
    t = v.reshape((2,) * n)
    for axis in range(n):
        a = np.take(t, 0, axis=axis)
        b = np.take(t, 1, axis=axis)
        t = np.stack([a + b, a - b], axis=axis)
    return t.reshape(-1)


def _trace_with(M: np.ndarray, ps: PauliString) -> complex:
    x, z = ps.masks()
    j = np.arange(M.shape[0])
    sign = 1 - 2 * (_popcount(j & z) & 1)
    phase = 1j ** (bin(x & z).count("1") % 4)
    return complex(phase * np.sum(M[j, j ^ x] * sign))


def pauli_decompose(
    M,
    n_sites: int,
    threshold: float = 1e-12,
    ansatz: Sequence[PauliString | str] | None = None,
) -> dict[PauliString, float]:
    """Expand a Hermitian operator in the Pauli basis.

    Coefficients are ``tr(M P) / 2**n``; those with magnitude ``<= threshold``
    are dropped. Up to six sites every string is enumerated. Beyond that only
    the strings in ``ansatz`` are evaluated (default: weight <= 2), so the
    result is exact only if ``M`` lies in their span.

    Returns
    -------
    dict
        ``PauliString -> float`` in lexicographic ``IXYZ`` order.
    """
    M = check_hermitian(M)
    dim = M.shape[0]
    if dim != 2**n_sites:
        raise DimensionError(f"matrix dimension {dim} is not 2**{n_sites}")
    norm = 2.0**n_sites
    coeffs: dict[PauliString, float] = {}

    if ansatz is None and n_sites <= FULL_DECOMPOSITION_MAX_SITES:
        j = np.arange(dim)
        table = np.empty((dim, dim), dtype=np.complex128)  # [x, z]
        for x in range(dim):
            table[x] = _walsh_hadamard(M[j, j ^ x], n_sites)
        xs, zs = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
        table *= 1j ** (_popcount(xs & zs) % 4)
        table /= norm
        for x, z in zip(*np.nonzero(np.abs(table) > threshold)):
            letters = "".join(
                _LETTER[(int(x) >> (n_sites - 1 - k)) & 1, (int(z) >> (n_sites - 1 - k)) & 1]
                for k in range(n_sites)
            )
            coeffs[PauliString(letters)] = float(table[x, z].real)
    else:
        if ansatz is None:
            ansatz = strings_up_to_weight(n_sites, 2)
        for ps in map(_as_pauli, ansatz):
            if ps.n_sites != n_sites:
                raise DimensionError(f"ansatz string {ps} does not act on {n_sites} sites")
            c = _trace_with(M, ps).real / norm
            if abs(c) > threshold:
                coeffs[ps] = c
    return dict(sorted(coeffs.items(), key=lambda kv: ["IXYZ".index(ch) for ch in kv[0].letters]))


def locality_weight(
    coeffs: Mapping[PauliString, float], threshold: float = 1e-12
) -> tuple[int, set[tuple[int, int]]]:
    """Locality ``k`` and the interaction graph of a Pauli expansion.

    Edges join every pair of (1-based) sites that appear together in a
    surviving term of weight at least two.
    """
    k = 0
    edges: set[tuple[int, int]] = set()
    for ps, c in coeffs.items():
        if abs(c) <= threshold:
            continue
        ps = _as_pauli(ps)
        k = max(k, ps.weight)
        edges.update(combinations(ps.support, 2))
    return k, edges


def parse_terms(text: str) -> HamiltonianSpec:
    """Parse ``coefficient LETTERS`` lines; ``#`` starts a comment."""
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'coefficient LETTERS', got {raw.strip()!r}")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
        try:
            ps = PauliString(parts[1])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if terms and ps.n_sites != terms[0][1].n_sites:
            raise ValueError(f"line {lineno}: {ps} has {ps.n_sites} sites, expected {terms[0][1].n_sites}")
        terms.append((coeff, ps))
    if not terms:
        raise ValueError("term list is empty")
    return HamiltonianSpec.from_terms(terms)


def format_terms(spec: HamiltonianSpec) -> str:
    return "".join(f"{c:.17g} {ps.letters}\n" for c, ps in spec.terms)
