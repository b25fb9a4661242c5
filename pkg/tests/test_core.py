import numpy as np
import pytest
from numpy.testing import assert_allclose

from nmrdeco import core
from nmrdeco.core import (
    IX,
    IY,
    IZ,
    Cnot,
    DensityMatrix,
    InvariantError,
    Kind,
    PhaseEvolution,
    Rotation,
)

from _oracle import SX, SY, SZ, cnot_down, op_on, ptrace_loops, pulse, random_state


def test_spin_operators_match_pauli_halves():
    assert_allclose(IX, SX)
    assert_allclose(IY, SY)
    assert_allclose(IZ, SZ)


def test_angular_momentum_algebra():
    for a, b, c in [(IX, IY, IZ), (IY, IZ, IX), (IZ, IX, IY)]:
        assert_allclose(a @ b - b @ a, 1j * c, atol=1e-15)
    for op in (IX, IY, IZ):
        assert_allclose(np.linalg.eigvalsh(op), [-0.5, 0.5])
        assert abs(np.trace(op)) == 0


def test_spin_count():
    assert core.spin_count(2) == 1
    assert core.spin_count(1024) == 10
    with pytest.raises(ValueError):
        core.spin_count(6)
    with pytest.raises(ValueError):
        core.spin_count(1)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_embed_matches_explicit_kron(n):
    rng = np.random.default_rng(n)
    op = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    for k in range(1, n + 1):
        assert_allclose(core.embed(op, k, n), op_on(op, k, n))


def test_embed_rejects_bad_input():
    with pytest.raises(ValueError):
        core.embed(IX, 0, 2)
    with pytest.raises(ValueError):
        core.embed(IX, 3, 2)
    with pytest.raises(ValueError):
        core.embed(np.eye(4), 1, 2)


@pytest.mark.parametrize("sign", [-1, 1])
@pytest.mark.parametrize("axis", ["x", "y"])
def test_rotation_matches_matrix_exponential(axis, sign):
    for angle in (0.0, 0.3, np.pi / 2, np.pi, 4.0):
        for targets in ([1], [3], [1, 2], [1, 2, 3]):
            assert_allclose(
                core.rotation(angle, axis, targets, 3, sign), pulse(angle, axis, targets, 3, sign), atol=1e-13
            )


def test_rotation_default_sign_is_negative():
    assert_allclose(core.spin_rotation(0.7, "x"), pulse(0.7, "x", [1], 1, -1), atol=1e-14)


def test_rotation_rejects_unknown_axis_and_targets():
    with pytest.raises(ValueError):
        core.spin_rotation(1.0, "z")
    with pytest.raises(ValueError):
        core.rotation(1.0, "x", [], 2)
    with pytest.raises(ValueError):
        core.rotation(1.0, "x", [4], 2)


def test_diagonal_propagator():
    e = np.array([1.0, -2.0, 3.5, 0.0])
    assert_allclose(core.diagonal_propagator(e, 0.2), np.diag(np.exp(-1j * e * 0.2)))
    assert_allclose(core.diagonal_propagator(e, 0.2, sign=1), np.diag(np.exp(1j * e * 0.2)))
    with pytest.raises(ValueError):
        core.diagonal_phases(e, -1.0)
    with pytest.raises(ValueError):
        core.diagonal_phases(np.ones(3), 1.0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cnot_matches_explicit_construction(n):
    for c in range(1, n + 1):
        for t in range(1, n + 1):
            if c != t:
                assert_allclose(core.cnot(c, t, n), cnot_down(c, t, n))
    with pytest.raises(ValueError):
        core.cnot(1, 1, n)


def test_cnot_flips_target_only_when_control_down():
    # |down up> -> |down down>, |up up> unchanged
    u = core.cnot(1, 2, 2)
    assert_allclose(u @ np.array([0, 0, 1, 0]), [0, 0, 0, 1])
    assert_allclose(u @ np.array([1, 0, 0, 0]), [1, 0, 0, 0])


def test_density_matrix_checks():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(3) / 3)
    dev = DensityMatrix(np.diag([1.0, -1.0]), Kind.DEVIATION)
    assert dev.trace() == 0
    bad = DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvariantError):
        bad.validate()


def test_density_matrix_is_read_only():
    rho = DensityMatrix(np.eye(4) / 4)
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1


def test_from_state_and_purity():
    rho = DensityMatrix.from_state([1, 1j])
    assert_allclose(rho.mat, [[0.5, -0.5j], [0.5j, 0.5]])
    assert rho.purity() == pytest.approx(1.0)
    assert core.maximally_mixed(3).purity() == pytest.approx(1 / 8)


def test_deviation_is_traceless():
    rho = DensityMatrix(random_state(np.random.default_rng(1), 2))
    dev = rho.deviation()
    assert abs(np.trace(dev)) < 1e-15
    assert_allclose(dev + np.eye(4) / 4, rho.mat)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_partial_trace_matches_loops(n):
    rng = np.random.default_rng(10 + n)
    rho = DensityMatrix(random_state(rng, n))
    for keep in ([1], [n], [1, n], list(range(2, n + 1))):
        red = core.partial_trace(rho, keep)
        assert_allclose(red.mat, ptrace_loops(rho.mat, keep, n), atol=1e-14)
        assert red.trace() == pytest.approx(1.0)


def test_partial_trace_of_product_returns_factor():
    a = random_state(np.random.default_rng(2), 1)
    b = random_state(np.random.default_rng(3), 2)
    rho = core.kron_states(DensityMatrix(a), DensityMatrix(b))
    assert_allclose(core.partial_trace(rho, [1]).mat, a, atol=1e-14)
    assert_allclose(core.partial_trace(rho, [2, 3]).mat, b, atol=1e-14)


def test_partial_trace_keeps_all_is_identity():
    rho = DensityMatrix(random_state(np.random.default_rng(4), 2))
    assert core.partial_trace(rho, [2, 1]) is rho


def test_conjugate_requires_unitary():
    rho = core.maximally_mixed(1)
    with pytest.raises(ValueError):
        core.conjugate(rho, np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        core.conjugate(rho, np.eye(4))


def test_structured_propagators_match_dense():
    rng = np.random.default_rng(5)
    n = 3
    rho = DensityMatrix(random_state(rng, n))
    props = [
        Rotation(0.4, "x", (1, 3), n),
        PhaseEvolution(rng.normal(size=8) * 100, 0.01, sign=1),
        Cnot(2, 3, n),
        Rotation(1.3, "y", (2,), n, sign=1),
    ]
    dense = core.conjugate(rho, core.total_unitary(props, n))
    assert_allclose(core.evolve(rho, props).mat, dense.mat, atol=1e-13)
    for p in props:
        assert core.is_unitary(p.matrix())


def test_kron_states_propagates_deviation_kind():
    dev = DensityMatrix(np.diag([0.5, -0.5]), Kind.DEVIATION)
    assert core.kron_states(core.maximally_mixed(1), dev).kind is Kind.DEVIATION
    assert core.kron_states(core.maximally_mixed(1), core.maximally_mixed(1)).kind is Kind.TRUE_STATE
