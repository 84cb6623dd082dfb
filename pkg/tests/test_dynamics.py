import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import expm_oracle, random_hermitian, random_state, random_unitary
from tpskit.dynamics import (
    G_NEWTON,
    HBAR,
    EvolutionSpec,
    GieParams,
    NotFactorizedError,
    convex_decomposition,
    evolve,
    gie_bipartite_state,
    gie_tripartite_state,
    global_invariant,
    mediator_states,
    phase_condition,
    single_outcome_measure,
    tps_entropy_trajectory,
)
from tpskit.factorize import construct_product_tps, negativity
from tpskit.tps import Tps

XX = np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]]).astype(complex)
Z = np.diag([1.0, -1.0])
phase = st.floats(-10, 10, allow_nan=False)


def binary_entropy(p):
    return -sum(x * np.log(x) for x in (p, 1 - p) if x > 0)


def test_spec_validation(rng):
    H = random_hermitian(4, rng)
    with pytest.raises(ValueError):
        EvolutionSpec(H, random_state(4, rng), ())
    with pytest.raises(ValueError):
        EvolutionSpec(H, random_state(4, rng), (1.0, 0.0))
    with pytest.raises(ValueError):
        EvolutionSpec(H, random_state(8, rng))
    with pytest.raises(ValueError):
        EvolutionSpec(H + 1j * np.eye(4), random_state(4, rng))


def test_sign_convention(rng):
    H = random_hermitian(4, rng)
    psi = random_state(4, rng)
    out = evolve(EvolutionSpec(H, psi), 0.3)
    np.testing.assert_allclose(out, expm_oracle(0.3j * H) @ psi, atol=1e-10)
    out = evolve(EvolutionSpec(H, psi, schrodinger=True), 0.3)
    np.testing.assert_allclose(out, expm_oracle(-0.3j * H) @ psi, atol=1e-10)


def test_vector_and_density_agree(rng):
    H = random_hermitian(8, rng)
    psi = random_state(8, rng)
    a = evolve(EvolutionSpec(H, psi), 1.1)
    b = evolve(EvolutionSpec(H, np.outer(psi, psi.conj())), 1.1)
    np.testing.assert_allclose(np.outer(a, a.conj()), b, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_group_law(seed, t1, t2):
    rng = np.random.default_rng(seed)
    spec = EvolutionSpec(random_hermitian(8, rng), random_state(8, rng))
    assert np.abs(spec.propagator(t1 + t2) - spec.propagator(t1) @ spec.propagator(t2)).max() < 1e-9


def test_global_invariant_is_frame_independent(rng):
    for _ in range(20):
        rho = np.outer(*(2 * [random_state(8, rng)]))
        rho = rho / np.trace(rho)
        O = random_hermitian(8, rng)
        T = random_unitary(8, rng)
        a = global_invariant(rho, O)
        b = global_invariant(T @ rho @ T.conj().T, T @ O @ T.conj().T)
        assert abs(a - b) < 1e-10


@pytest.mark.parametrize("cut", [(2, 8), (4, 4), (2, 2)])
def test_convex_decomposition_identity(rng, cut):
    for _ in range(20):
        psi = random_state(cut[0] * cut[1], rng)
        O = random_hermitian(cut[0], rng)
        dec = convex_decomposition(psi, O, cut)
        assert abs(dec.recombined - dec.value) < 1e-9
        assert abs(sum(p for p, _ in dec.terms) - 1) < 1e-12
        ref = np.real(np.vdot(psi, np.kron(O, np.eye(cut[1])) @ psi))
        assert abs(dec.value - ref) < 1e-12


def test_measure_product_state():
    psi = np.kron([0, 1.0], [1.0, 0])
    rec = single_outcome_measure(psi, Tps((2, 2)), Z, (2, 2))
    assert rec.value == -1.0 and rec.index == 0
    assert rec.residual < 1e-10 and not rec.degenerate


def test_measure_bell_with_constructed_frame():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rec = single_outcome_measure(bell, construct_product_tps(bell, (2, 2)), Z, (2, 2))
    assert rec.residual < 1e-9 and rec.value in (-1.0, 1.0)


def test_measure_refuses_entangled_frame():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    with pytest.raises(NotFactorizedError) as info:
        single_outcome_measure(bell, Tps((2, 2)), Z, (2, 2))
    assert info.value.entropy == pytest.approx(np.log(2))


def test_measure_flags_degeneracy(rng):
    psi = random_state(8, rng)
    rec = single_outcome_measure(psi, construct_product_tps(psi, (4, 2)), np.diag([1.0, 1, -1, 2]), (4, 2))
    assert rec.degenerate and rec.residual < 1e-9


def test_measure_born_random_needs_seed(rng):
    psi = random_state(4, rng)
    T = construct_product_tps(psi, (2, 2))
    with pytest.raises(ValueError):
        single_outcome_measure(psi, T, Z, (2, 2), policy="born-random")
    a = single_outcome_measure(psi, T, Z, (2, 2), policy="born-random", seed=4)
    assert a.residual < 1e-9


def test_trajectory_trivial_when_commuting():
    psi = np.array([1.0, 0, 0, 0])
    spec = EvolutionSpec(np.diag([1.0, 2, 3, 4]), psi, tuple(np.linspace(0, 2, 5)))
    points, _ = tps_entropy_trajectory(spec, (2, 2))
    for p in points:
        assert p.entropy_before < 1e-12 and p.converged and p.n_evals <= 1


def test_trajectory_xx_matches_closed_form():
    taus = np.linspace(0, 1.5, 7)
    spec = EvolutionSpec(XX, np.array([1.0, 0, 0, 0]), tuple(taus))
    points, _ = tps_entropy_trajectory(spec, (2, 2), seed=2)
    for p, t in zip(points, taus):
        assert abs(p.entropy_before - binary_entropy(np.cos(t) ** 2)) < 1e-10
        assert p.converged and p.entropy_after < 1e-6


def test_trajectory_warm_start_steps_shrink_with_refinement():
    steps = []
    for n in (6, 11, 21):
        spec = EvolutionSpec(XX, np.array([1.0, 0, 0, 0]), tuple(np.linspace(0.1, 0.6, n)))
        points, _ = tps_entropy_trajectory(spec, (2, 2), seed=0)
        steps.append(max(p.generator_step for p in points[1:]))
    assert steps[0] > steps[1] > steps[2]


def test_gie_known_value():
    g = gie_bipartite_state(GieParams.from_phases([np.pi / 2, 0, 0, 0]))
    assert g.negativity == pytest.approx(0.5 * np.sin(np.pi / 4), abs=1e-12)
    assert gie_bipartite_state(GieParams.from_phases([0.3] * 4)).negativity < 1e-12


@settings(max_examples=100, deadline=None)
@given(phase, phase, phase, phase, phase)
def test_gie_properties(a, b, c, d, shift):
    p = GieParams.from_phases([a, b, c, d])
    g = gie_bipartite_state(p)
    # closed form and invariance under a common shift
    assert abs(g.negativity - 0.5 * abs(np.sin(p.phase_mismatch / 2))) < 1e-12
    shifted = gie_bipartite_state(GieParams.from_phases([a + shift, b + shift, c + shift, d + shift]))
    assert abs(shifted.negativity - g.negativity) < 1e-12
    # product iff the amplitude matrix is rank one
    det = abs(np.linalg.det(g.state.reshape(2, 2)))
    assert abs(det - g.negativity) < 1e-12


def test_physical_phases():
    p = GieParams.from_physical(1e-14, 2e-14, 3.0, [1e-4, 2e-4, 3e-4, 4e-4])
    k = G_NEWTON * 2e-28 * 3.0 / HBAR
    np.testing.assert_allclose(p.phases, [k / 1e-4, k / 2e-4, k / 3e-4, k / 4e-4])
    with pytest.raises(ValueError):
        GieParams.from_physical(1, 1, 1, [1, 0, 1, 1])
    with pytest.raises(ValueError):
        GieParams.from_phases([1, 2, 3])


def test_phase_condition_wraps():
    assert phase_condition(GieParams.from_phases([2 * np.pi, 0, 0, 0]))
    assert not phase_condition(GieParams.from_phases([1e-6, 0, 0, 0]))


@pytest.mark.parametrize("c", [0.0, 0.3, 0.9, 1.0])
def test_mediator_gram(c):
    g = mediator_states(c)
    np.testing.assert_allclose(g.conj().T @ g, (1 - c) * np.eye(4) + c * np.ones((4, 4)), atol=1e-12)


def test_mediator_overlap_range():
    with pytest.raises(ValueError):
        mediator_states(1.5)


@settings(max_examples=30, deadline=None)
@given(phase, phase, phase, phase)
def test_tripartite_limits(a, b, c, d):
    p = GieParams.from_phases([a, b, c, d])
    assert gie_tripartite_state(p, "classical").negativity < 1e-10
    assert gie_tripartite_state(p, "quantum", 0.0).negativity < 1e-10
    same = gie_tripartite_state(p, "quantum", 1.0)
    assert abs(same.negativity - gie_bipartite_state(p).negativity) < 1e-9


def test_tripartite_mass_state_is_normalized():
    t = gie_tripartite_state(GieParams.from_phases([1, 0, 0, 0]), "quantum", 0.5)
    assert abs(np.trace(t.mass_state) - 1) < 1e-12
    assert t.negativity == pytest.approx(negativity(t.mass_state, (2, 2)))


def test_tripartite_errors():
    p = GieParams.from_phases([0, 0, 0, 0])
    with pytest.raises(ValueError):
        gie_tripartite_state(p, "semi")
    with pytest.raises(ValueError):
        gie_tripartite_state(p, "classical", 0.5)
