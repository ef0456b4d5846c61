"""Projection loss, masked gradient and optimizers"""
import numpy as np
import pytest

from pvqd.exceptions import InvalidMaskError, InvalidConfigError
from pvqd.statevec import StateVector
from pvqd.pauli import build_tfim, build_xyz, PauliSum
from pvqd.circuits import build_blocked_ansatz, trotter_step_circuit, ParamVector
from pvqd.variational import (LossContext, BlockMask, OptimizerConfig,
                              pvqd_loss, loss_gradient, minimize, spsa_minimize,
                              optimize, SPSA)


def context(ps, n, dt, theta=None, seed=0):
    ansatz = build_blocked_ansatz(ps, n)
    if theta is None:
        theta = np.random.default_rng(seed).uniform(-0.5, 0.5, ansatz.num_parameters)
    return LossContext(ansatz, theta, trotter_step_circuit(ps, dt, 2), dt,
                       StateVector.zero_state(ps.num_qubits))


def finite_difference(ctx, d_theta, slots, eps=1e-5):
    grad = np.zeros(d_theta.size)
    for j in slots:
        e = np.zeros(d_theta.size)
        e[j] = eps
        grad[j] = (pvqd_loss(ctx, d_theta + e) - pvqd_loss(ctx, d_theta - e)) / (2 * eps)
    return grad


@pytest.mark.parametrize('ps', [build_tfim(4, -0.25, -1.0), build_xyz(4, 1.0, 0.8, 0.6)])
def test_gradient_matches_finite_differences(ps):
    rng = np.random.default_rng(11)
    n = 3
    for trial in range(25):
        ctx = context(ps, n, 0.1, seed=trial)
        d_theta = rng.uniform(-0.05, 0.05, ctx.num_parameters)
        blocks = tuple(sorted(rng.choice(n, size=rng.integers(1, n + 1), replace=False)))
        mask = BlockMask(blocks, n, ctx.ansatz.block_size)
        analytic = loss_gradient(ctx, d_theta, mask).values
        numeric = finite_difference(ctx, d_theta, mask.slots)
        assert np.max(np.abs(analytic - numeric)) < 1e-6
        off = np.setdiff1d(np.arange(ctx.num_parameters), mask.slots)
        assert np.all(analytic[off] == 0.0)


def test_loss_bounds():
    ps = build_tfim(3, -0.25, -1.0)
    ctx = context(ps, 2, 0.05)
    for seed in range(5):
        d = np.random.default_rng(seed).uniform(-1, 1, ctx.num_parameters)
        loss = pvqd_loss(ctx, d)
        assert 0.0 <= loss <= 1.0 / 0.05 ** 2


def test_commuting_hamiltonian_has_zero_loss_at_trotter_angles():
    # all terms commute, so one block reproduces the target exactly
    ps = PauliSum.from_labels(3, [(0.3, 'Z0*Z1'), (-0.7, 'Z1*Z2'), (0.2, 'Z0')])
    ansatz = build_blocked_ansatz(ps, 1)
    psi0 = StateVector.from_amplitudes(np.ones(8), normalize=True)
    ctx = LossContext(ansatz, np.zeros(3), trotter_step_circuit(ps, 0.1, 4), 0.1, psi0)
    d = 2 * 0.1 * ps.coefficients
    assert pvqd_loss(ctx, d) < 1e-12


def test_mask_validation():
    with pytest.raises(InvalidMaskError):
        BlockMask((), 2, 3)
    with pytest.raises(InvalidMaskError):
        BlockMask((2,), 2, 3)
    m = BlockMask((1, 0), 3, 4)
    assert m.active_blocks == (0, 1)
    assert m.num_parameters == 8
    assert list(m.slots) == list(range(8))


def test_minimize_single_x_term():
    # H = X0: the optimum is d_theta = 2 dt
    ps = PauliSum.from_labels(1, [(1.0, 'X0')])
    ctx = LossContext(build_blocked_ansatz(ps, 1), np.zeros(1),
                      trotter_step_circuit(ps, 0.1, 1), 0.1, StateVector.zero_state(1))
    mask = BlockMask((0,), 1, 1)
    res = minimize(ctx, mask, ParamVector(np.zeros(1), 1), OptimizerConfig())
    assert res.final_loss < 1e-9
    assert abs(res.d_theta_star.values[0] - 0.2) < 1e-4
    assert res.iterations >= 1
    assert res.loss_evaluations >= res.iterations


def test_minimize_keeps_masked_out_slots():
    ps = build_tfim(4, -0.25, -1.0)
    ctx = context(ps, 2, 0.05)
    mask = BlockMask((1,), 2, ctx.ansatz.block_size)
    res = minimize(ctx, mask, ctx.ansatz.zero_parameters(), OptimizerConfig())
    assert np.all(res.d_theta_star.block(0) == 0.0)
    assert res.final_loss <= pvqd_loss(ctx, np.zeros(ctx.num_parameters))


def test_minimize_stops_at_start_when_already_converged():
    ps = build_tfim(2, -0.25, -1.0)
    ctx = context(ps, 1, 0.1, theta=np.zeros(3))
    res = minimize(ctx, BlockMask((0,), 1, 3), np.zeros(3),
                   OptimizerConfig(loss_tolerance=1e3))
    assert res.iterations == 0
    assert res.converged


def test_spsa_is_seeded_and_descends():
    ps = PauliSum.from_labels(1, [(1.0, 'X0')])
    ctx = LossContext(build_blocked_ansatz(ps, 1), np.zeros(1),
                      trotter_step_circuit(ps, 0.1, 1), 0.1, StateVector.zero_state(1))
    mask = BlockMask((0,), 1, 1)
    cfg = OptimizerConfig(mode=SPSA, max_iterations=300, spsa_a=0.05, rng_seed=5,
                          loss_tolerance=1e-3)
    a = spsa_minimize(ctx, mask, np.zeros(1), cfg)
    b = optimize(ctx, mask, np.zeros(1), cfg)
    assert a.final_loss == b.final_loss
    np.testing.assert_array_equal(a.d_theta_star.values, b.d_theta_star.values)
    assert a.final_loss < 1e-3
    assert a.gradient_evaluations == 0


def test_loss_trace_never_increases():
    ps = build_xyz(4, 1.0, 0.8, 0.6)
    ctx = context(ps, 2, 0.05, seed=3)
    mask = BlockMask((0, 1), 2, ctx.ansatz.block_size)
    res = minimize(ctx, mask, ctx.ansatz.zero_parameters(),
                   OptimizerConfig(loss_tolerance=1e-12))
    trace = np.array(res.loss_trace)
    assert trace.size >= 2
    assert np.all(np.diff(trace) <= 1e-12 * trace[:-1])
    assert res.final_loss <= trace[0]


def test_spsa_converges_for_most_seeds():
    ps = PauliSum.from_labels(1, [(1.0, 'X0')])
    ctx = LossContext(build_blocked_ansatz(ps, 1), np.zeros(1),
                      trotter_step_circuit(ps, 0.1, 1), 0.1, StateVector.zero_state(1))
    mask = BlockMask((0,), 1, 1)
    finals = [spsa_minimize(ctx, mask, np.zeros(1),
                            OptimizerConfig(mode=SPSA, max_iterations=200, spsa_a=0.05,
                                            rng_seed=s, loss_tolerance=1e-3)).final_loss
              for s in range(20)]
    assert np.median(finals) < 1e-3


def test_optimizer_config_validation():
    with pytest.raises(InvalidConfigError):
        OptimizerConfig(mode='adam')
    with pytest.raises(InvalidConfigError):
        OptimizerConfig(max_iterations=0)
    with pytest.raises(InvalidConfigError):
        spsa_minimize(None, None, None, OptimizerConfig(mode=SPSA))
