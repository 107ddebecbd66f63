import numpy as np
import pytest

from bosonval.errors import ConvergenceError, DimensionError, ModeConfigError, UnitarityError
from bosonval.interferometer import (
    Circuit,
    Coupler,
    Interferometer,
    Phase,
    compose,
    haar_unitary,
    permutation_unitary,
    random_phase_network,
    reck_decompose,
    submatrix,
    unitarity_residual,
)


def test_interferometer_rejects_non_unitary():
    with pytest.raises(UnitarityError):
        Interferometer(np.array([[1, 0], [0, 2]]))
    with pytest.raises(DimensionError):
        Interferometer(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        Interferometer(np.array([[np.nan]]))


def test_matrix_is_read_only():
    u = haar_unitary(3, 0)
    with pytest.raises(ValueError):
        u.matrix[0, 0] = 1


def test_haar_m1_is_a_phase():
    u = haar_unitary(1, 42)
    assert abs(abs(u.matrix[0, 0]) - 1) < 1e-15


@pytest.mark.parametrize("seed", range(10))
def test_haar_unitarity(seed):
    assert unitarity_residual(haar_unitary(6, seed).matrix) <= 1e-12


def test_haar_deterministic():
    a, b = haar_unitary(5, 123), haar_unitary(5, 123)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, haar_unitary(5, 124).matrix)


def test_haar_guard():
    with pytest.raises(DimensionError):
        haar_unitary(0, 1)


def test_haar_second_moment():
    # E|U00|^2 = 1/m for the Haar measure
    vals = [abs(haar_unitary(4, (9, k)).matrix[0, 0]) ** 2 for k in range(20000)]
    assert np.mean(vals) == pytest.approx(0.25, abs=0.01)


def test_haar_fourth_moment():
    # E|U00|^4 = 2/(m(m+1)); phase-uncorrected QR fails this
    vals = [abs(haar_unitary(3, (10, k)).matrix[0, 0]) ** 4 for k in range(20000)]
    assert np.mean(vals) == pytest.approx(2 / 12, abs=0.01)


def test_submatrix_examples():
    eye = Interferometer(np.eye(3))
    np.testing.assert_array_equal(submatrix(eye, (0, 1), (0, 1)), np.eye(2))
    np.testing.assert_array_equal(submatrix(eye, (0, 1), (1, 2)), [[0, 0], [1, 0]])
    with pytest.raises(ModeConfigError):
        submatrix(eye, (0, 3), (0, 1))


def test_submatrix_indexing_on_haar():
    u = haar_unitary(7, 2)
    s, t = (2, 3, 4), (0, 1, 2)
    a = submatrix(u, s, t)
    for i in range(3):
        for j in range(3):
            assert a[i, j] == u.matrix[s[i], t[j]]


def test_compose_empty_and_coupler(coupler50):
    np.testing.assert_array_equal(compose(Circuit(3)).matrix, np.eye(3))
    r = 1 / np.sqrt(2)
    np.testing.assert_allclose(coupler50.matrix, [[r, 1j * r], [1j * r, r]], atol=1e-15)


def test_compose_order_is_traversal_order():
    # phase then coupler: U = P @ B (rows are inputs)
    c = Circuit(2, (Phase(0, np.pi / 2), Coupler(0, 0.5)))
    b = Coupler(0, 0.5).block()
    np.testing.assert_allclose(compose(c).matrix, np.diag([1j, 1]) @ b, atol=1e-15)


def test_circuit_validation():
    with pytest.raises(ModeConfigError):
        Circuit(2, (Coupler(1, 0.5),))
    with pytest.raises(ValueError):
        Circuit(2, (Coupler(0, 1.5),))
    with pytest.raises(ValueError):
        Circuit(2, (Phase(0, 7.0),))


def test_random_phase_network_zero_phases_is_one_coupler(coupler50):
    c = random_phase_network(2, 1, seed=0, zero_phases=True)
    assert c.couplers() == [Coupler(0, 0.5)]
    np.testing.assert_allclose(compose(c).matrix, coupler50.matrix, atol=1e-15)


@pytest.mark.parametrize("m,layers,seed", [(2, 1, 0), (5, 3, 1), (7, 8, 2), (9, 9, 3)])
def test_random_phase_network_unitary_and_deterministic(m, layers, seed):
    c = random_phase_network(m, layers, seed)
    assert compose(c).residual() <= 1e-10
    assert c == random_phase_network(m, layers, seed)
    assert all(el.tau == 0.5 for el in c.couplers())


def test_reck_identity_and_diagonal():
    c = reck_decompose(Interferometer(np.eye(4)))
    assert np.max(np.abs(compose(c).matrix - np.eye(4))) <= 1e-12
    d = np.diag(np.exp(1j * np.array([0.3, 1.1, 2.0])))
    c = reck_decompose(Interferometer(d))
    assert c.couplers() == []
    assert np.max(np.abs(compose(c).matrix - d)) <= 1e-12


def test_reck_roundtrip_haar():
    for m in range(3, 9):
        for k in range(17):
            u = haar_unitary(m, (m, k))
            c = reck_decompose(u)
            assert len(c.couplers()) <= m * (m - 1) // 2
            assert np.max(np.abs(compose(c).matrix - u.matrix)) <= 1e-10


def test_reck_of_permutation_and_network():
    for u in (permutation_unitary([2, 0, 3, 1]), compose(random_phase_network(6, 6, 4))):
        assert np.max(np.abs(compose(reck_decompose(u)).matrix - u.matrix)) <= 1e-10


def test_reck_flags_non_unitary_input():
    u = haar_unitary(4, 0)
    # slightly non-unitary but within the load tolerance
    bent = Interferometer(u.matrix * (1 + 4e-9), tol=1e-8)
    with pytest.raises(ConvergenceError):
        reck_decompose(bent, tol=1e-12)
