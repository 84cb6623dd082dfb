"""Scenario files: a strict, versioned JSON description of a run.

Example::

    {
      "format": 1,
      "name": "bell-measurement",
      "system": {"terms": ["1.0 XX"]},
      "state": {"preset": "bell"},
      "cut": [2, 2],
      "observables": {"app": ["1.0 Z"]},
      "run": {"apparatus": "app", "tps": "construct", "policy": "max-overlap"}
    }

Relative file paths are resolved against the scenario's directory. Unknown
fields are rejected.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .duality import map_hamiltonian, mu_model, sigma_model
from .linalg import load_array
from .pauli import HamiltonianSpec, build_hamiltonian, parse_terms
from .validation import check_hermitian, check_state

__all__ = ["ScenarioError", "Scenario", "load_scenario", "ResolvedScenario"]


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario; the message names the line or field."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSystem(_Strict):
    model: Literal["sigma", "mu", "mapped-mu"]
    J: float
    h: float
    n_sites: int = Field(4, ge=2, le=12)
    field_axis: Literal["x", "z"] = "z"


class TermSystem(_Strict):
    terms: list[str] = Field(min_length=1)


class MatrixSystem(_Strict):
    matrix_file: str


class StateSpec(_Strict):
    preset: Optional[Literal["zeros", "plus", "bell", "ghz", "random"]] = None
    file: Optional[str] = None
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.preset is None) == (self.file is None):
            raise ValueError("give exactly one of 'preset' or 'file'")
        return self


class TauGrid(_Strict):
    start: float = 0.0
    stop: float
    num: int = Field(ge=1)


class RunParams(_Strict):
    tau: Optional[Union[TauGrid, list[float]]] = None
    lam: float = Field(0.0, ge=0.0)
    budget: int = Field(5000, ge=1)
    seed: Optional[int] = None
    tol: float = Field(1e-6, gt=0.0)
    policy: Literal["max-overlap", "born-random"] = "max-overlap"
    apparatus: Optional[str] = None
    tps: Union[Literal["construct", "search", "identity"], str] = "construct"
    schrodinger: bool = False


class Scenario(_Strict):
    format: Literal[1]
    name: str
    system: Union[ModelSystem, TermSystem, MatrixSystem]
    state: Optional[StateSpec] = None
    cut: Optional[list[int]] = Field(None, min_length=2, max_length=2)
    observables: dict[str, list[str]] = {}
    run: RunParams = RunParams()


class ResolvedScenario:
    """A validated scenario with its matrices materialized."""

    def __init__(self, sc: Scenario, base: Path, seed_override: int | None = None):
        self.raw = sc
        self.base = base
        self.seed = seed_override if seed_override is not None else sc.run.seed
        self.H = self._hamiltonian(sc.system)
        dim = self.H.shape[0]
        self.dim = dim
        self.cut = tuple(sc.cut) if sc.cut is not None else None
        if self.cut is not None and self.cut[0] * self.cut[1] != dim:
            raise ScenarioError(f"field 'cut': {self.cut[0]}x{self.cut[1]} does not match system dimension {dim}")
        self.state = self._state(sc.state, dim) if sc.state is not None else None
        self.observables = {}
        for name, lines in sc.observables.items():
            try:
                spec = parse_terms("\n".join(lines))
            except ValueError as exc:
                raise ScenarioError(f"field 'observables.{name}': {exc}") from None
            self.observables[name] = build_hamiltonian(spec)
        app = sc.run.apparatus
        if app is not None:
            if app not in self.observables:
                raise ScenarioError(f"field 'run.apparatus': unknown observable {app!r}")
            if self.cut is None:
                raise ScenarioError("field 'cut': required when an apparatus observable is given")
            if self.observables[app].shape[0] != self.cut[0]:
                raise ScenarioError(
                    f"field 'observables.{app}': dimension {self.observables[app].shape[0]} "
                    f"does not match apparatus factor {self.cut[0]}"
                )

    @property
    def name(self) -> str:
        return self.raw.name

    @property
    def run(self) -> RunParams:
        return self.raw.run

    def tau_grid(self) -> list[float]:
        tau = self.raw.run.tau
        if tau is None:
            raise ScenarioError("field 'run.tau': required for this command")
        if isinstance(tau, TauGrid):
            return [float(t) for t in np.linspace(tau.start, tau.stop, tau.num)]
        return [float(t) for t in tau]

    def path(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base / p

    def _hamiltonian(self, system) -> np.ndarray:
        if isinstance(system, ModelSystem):
            if system.model == "sigma":
                spec = sigma_model(system.J, system.h, system.n_sites, system.field_axis)
            elif system.model == "mu":
                spec = mu_model(system.J, system.h, system.n_sites)
            else:
                spec = map_hamiltonian(mu_model(system.J, system.h, system.n_sites))
            return build_hamiltonian(spec)
        if isinstance(system, TermSystem):
            try:
                spec: HamiltonianSpec = parse_terms("\n".join(system.terms))
            except ValueError as exc:
                raise ScenarioError(f"field 'system.terms': {exc}") from None
            return build_hamiltonian(spec)
        try:
            H = load_array(self.path(system.matrix_file))
            return check_hermitian(H, name="system matrix")
        except (OSError, ValueError) as exc:
            raise ScenarioError(f"field 'system.matrix_file': {exc}") from None

    def _state(self, st: StateSpec, dim: int) -> np.ndarray:
        if st.file is not None:
            try:
                return check_state(load_array(self.path(st.file)), dim)
            except (OSError, ValueError) as exc:
                raise ScenarioError(f"field 'state.file': {exc}") from None
        psi = np.zeros(dim, dtype=np.complex128)
        if st.preset == "zeros":
            psi[0] = 1.0
        elif st.preset == "plus":
            psi[:] = 1.0 / np.sqrt(dim)
        elif st.preset in ("bell", "ghz"):
            psi[0] = psi[-1] = 1.0 / np.sqrt(2.0)
        else:  # random
            seed = st.seed if st.seed is not None else self.seed
            if seed is None:
                raise ScenarioError("field 'state.seed': a seed is required for the random preset")
            rng = np.random.default_rng(seed)
            psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            psi /= np.linalg.norm(psi)
        return psi


def _format_validation(exc: ValidationError) -> str:
    msgs = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        msgs.append(f"field '{loc}': {err['msg']}")
    return "; ".join(msgs)


def load_scenario(path, seed_override: int | None = None) -> ResolvedScenario:
    """Parse, validate and materialize a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        sc = Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(f"{path}: {_format_validation(exc)}") from None
    return ResolvedScenario(sc, path.parent, seed_override)
