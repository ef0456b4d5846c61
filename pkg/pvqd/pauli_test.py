"""Pauli sums, model builders and the exact reference evolution"""
import numpy as np
import pytest

from pvqd import pauli
from pvqd.exceptions import (InvalidSizeError, CapacityError, InvalidGateError,
                             NumericInputError, NonHermitianError)
from pvqd.statevec import StateVector, expectation
from pvqd.pauli import (PauliSum, PauliTerm, build_tfim, build_xyz,
                        parse_pauli_text, format_pauli_sum, dense_matrix,
                        exact_evolve, infidelity, tfim_observables,
                        xyz_observables, propagator_for,
                        MAX_CACHED_PROPAGATORS)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2)


def test_term_counts():
    assert build_tfim(8, -0.25, -1.0).num_terms == 15
    assert build_tfim(10, -0.25, -1.0).num_terms == 19
    assert build_xyz(10, 1.0, 0.8, 0.6).num_terms == 27
    assert build_tfim(8, -0.25, -1.0, periodic=True).num_terms == 16
    assert build_tfim(4, 0.0, -1.0).num_terms == 4


def test_tfim_signs_and_order():
    ps = build_tfim(3, -0.25, -1.0)
    assert [t.label for t in ps.terms] == ['Z0*Z1', 'Z1*Z2', 'X0', 'X1', 'X2']
    np.testing.assert_allclose(ps.coefficients, [0.25, 0.25, 1.0, 1.0, 1.0])


def test_too_small():
    with pytest.raises(InvalidSizeError):
        build_tfim(1, 1.0, 1.0)
    with pytest.raises(InvalidSizeError):
        build_xyz(1, 1.0, 1.0, 1.0)


def test_term_validation():
    with pytest.raises(InvalidGateError):
        PauliTerm(1.0, ())
    with pytest.raises(NumericInputError):
        PauliTerm(float('inf'), ((0, 'Z'),))
    with pytest.raises(InvalidGateError):
        PauliSum(2, (PauliTerm(1.0, ((2, 'X'),)),))


def test_text_format():
    text = "# two qubits\n0.5 Z0*Z1\n-1.0 X1  # field\n"
    ps = parse_pauli_text(text)
    assert ps.num_qubits == 2
    assert [t.label for t in ps.terms] == ['Z0*Z1', 'X1']
    assert parse_pauli_text(format_pauli_sum(ps)) == ps


def test_dense_matches_kron():
    ps = build_tfim(2, -0.25, -1.0)
    # qubit 0 is the rightmost Kronecker factor
    ref = 0.25 * np.kron(Z, Z) + np.kron(I2, X) + np.kron(X, I2)
    dense = dense_matrix(ps)
    np.testing.assert_allclose(dense.entries, ref, atol=1e-14)
    assert dense.hermiticity_error() == 0.0


def test_dense_guard():
    with pytest.raises(CapacityError):
        dense_matrix(build_tfim(15, 1.0, 1.0))


def test_exact_evolution_conserves_energy_and_norm():
    ps = build_xyz(5, 1.0, 0.8, 0.6)
    psi0 = StateVector.product_state(5, (1, 3))
    e0 = expectation(psi0, ps)
    for t in (0.5, 2.0, 5.0):
        psi = exact_evolve(ps, psi0, t)
        assert abs(psi.norm() - 1.0) < 1e-12
        assert abs(expectation(psi, ps) - e0) < 1e-10


def test_exact_evolution_single_spin():
    # H = -h X, <Z>(t) = cos(2 h t)
    ps = PauliSum.from_labels(1, [(-1.0, 'X0')])
    psi = exact_evolve(ps, StateVector.zero_state(1), 0.3)
    z = expectation(psi, PauliSum.from_labels(1, [(1.0, 'Z0')]))
    assert abs(z - np.cos(0.6)) < 1e-12


def test_infidelity():
    a = StateVector.zero_state(2)
    assert infidelity(a, a) == 0.0
    assert infidelity(a, StateVector.basis_state(2, 3)) == 1.0


def test_observables_and_cache():
    ps = build_tfim(4, -0.25, -1.0)
    assert list(tfim_observables(ps)) == ['energy', 'sigma_x', 'sigma_z']
    assert list(xyz_observables(build_xyz(4, 1, 1, 1))) == ['energy', 'z0', 'z0z1']
    assert propagator_for(ps) is propagator_for(build_tfim(4, -0.25, -1.0))
    assert propagator_for(ps).ground_energy < 0


def test_complex_coefficients():
    with pytest.raises(NonHermitianError):
        PauliTerm(1j, ((0, 'Z'),))
    with pytest.raises(NonHermitianError):
        PauliTerm(np.complex128(0.5 + 0.1j), ((0, 'X'),))
    term = PauliTerm(2 + 0j, ((0, 'Z'),))
    assert term.coefficient == 2.0 and isinstance(term.coefficient, float)


def test_dense_is_linear():
    a = build_tfim(3, -0.25, -1.0)
    b = build_xyz(3, 1.0, 0.8, 0.6)
    np.testing.assert_allclose(dense_matrix(a + b).entries,
                               dense_matrix(a).entries + dense_matrix(b).entries,
                               atol=1e-12)
    np.testing.assert_allclose(dense_matrix(a.scaled(-2.5)).entries,
                               -2.5 * dense_matrix(a).entries, atol=1e-12)


def test_known_energies():
    plus = StateVector.from_amplitudes(np.ones(16), normalize=True)
    assert abs(expectation(plus, build_tfim(4, -0.25, -1.0)) - 4.0) < 1e-12
    # 0.25 Z0 Z1 + X0 + X1 couples |00>+|11> to |01>+|10> with strength 2
    ground = propagator_for(build_tfim(2, -0.25, -1.0)).ground_energy
    assert abs(ground + np.sqrt(4.0625)) < 1e-12
    assert abs(ground + 2.0156) < 1e-4


def test_evolution_composes_in_time():
    ps = build_xyz(4, 1.0, 0.8, 0.6)
    psi0 = StateVector.product_state(4, (0, 2))
    stepped = exact_evolve(ps, exact_evolve(ps, psi0, 0.3), 0.45)
    direct = exact_evolve(ps, psi0, 0.75)
    np.testing.assert_allclose(stepped.amplitudes, direct.amplitudes, atol=1e-10)


def test_propagator_cache_is_bounded():
    for k in range(MAX_CACHED_PROPAGATORS + 2):
        propagator_for(build_tfim(2, 0.1 * (k + 1), -1.0))
    assert pauli._factorize.cache_info().currsize <= MAX_CACHED_PROPAGATORS
    ps = build_tfim(2, 0.7, -1.0)
    assert propagator_for(ps) is propagator_for(ps)
