"""
Projection loss, its block-masked gradient, and the two optimizers

    L(dtheta) = (1 - |<phi|psi(theta + dtheta)>|^2) / dt^2

with |phi> the Trotterized step applied to |psi(theta)>. The gradient is
computed in adjoint mode: one forward sweep, then one backward sweep that
stops at the earliest active gate.
"""
from dataclasses import dataclass, field
from functools import cached_property
import logging
import math
import numpy as np
from scipy.optimize import minimize as scipy_minimize

from pvqd.exceptions import (InvalidConfigError, InvalidMaskError,
                             NumericFailureError, ShapeError)
from pvqd.circuits import ParamVector, as_values
from pvqd.statevec import apply_word, rotate

logger = logging.getLogger(__name__)

QUASI_NEWTON = 'gradient-quasi-newton'
SPSA = 'spsa'
OPTIMIZER_MODES = (QUASI_NEWTON, SPSA)


@dataclass
class LossContext(object):
    """
    Everything the projection loss of one time step depends on; read-only
    while an optimization runs
    """
    ansatz: object
    theta: np.ndarray
    target_step: object
    dt: float
    initial_state: object
    # |phi> carried over between passes of the same time step
    target: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.theta = np.array(as_values(self.theta), dtype=np.float64)
        if not self.dt > 0:
            raise InvalidConfigError("time step must be positive, got %r" % (self.dt,))
        if self.target_step.num_parameters:
            raise InvalidConfigError("target step circuit must be fixed-angle")
        if self.theta.size != self.ansatz.num_parameters:
            raise ShapeError("theta has %d entries, ansatz takes %d"
                             % (self.theta.size, self.ansatz.num_parameters))

    @cached_property
    def target_amplitudes(self):
        """|phi> = Trotter step applied to |psi(theta)>"""
        if self.target is not None:
            return self.target
        amps = self.initial_state.amplitudes.copy()
        self.ansatz.circuit.apply_amplitudes(amps, self.theta)
        return self.target_step.apply_amplitudes(amps)

    @property
    def num_parameters(self):
        return self.theta.size

    def shifted(self, d_theta):
        values = as_values(d_theta)
        if values.size != self.theta.size:
            raise ShapeError("d_theta has %d entries, expected %d"
                             % (values.size, self.theta.size))
        return self.theta + values

    def prepare(self, values):
        amps = self.initial_state.amplitudes.copy()
        return self.ansatz.circuit.apply_amplitudes(amps, values)


@dataclass(frozen=True)
class BlockMask(object):
    """
    ansatz blocks whose parameters are free in one optimization
    """
    active_blocks: tuple
    num_blocks: int
    block_size: int

    def __post_init__(self):
        blocks = tuple(sorted(set(int(b) for b in self.active_blocks)))
        if not blocks:
            raise InvalidMaskError("block mask is empty")
        if blocks[0] < 0 or blocks[-1] >= self.num_blocks:
            raise InvalidMaskError("blocks %s outside 0..%d"
                                   % (blocks, self.num_blocks - 1))
        object.__setattr__(self, 'active_blocks', blocks)

    @classmethod
    def full(cls, ansatz):
        return cls(tuple(range(ansatz.num_blocks)), ansatz.num_blocks,
                   ansatz.block_size)

    @classmethod
    def of(cls, ansatz, blocks):
        return cls(tuple(blocks), ansatz.num_blocks, ansatz.block_size)

    @cached_property
    def slots(self):
        return np.concatenate([np.arange(b * self.block_size, (b + 1) * self.block_size)
                               for b in self.active_blocks])

    @property
    def width(self):
        return len(self.active_blocks)

    @property
    def num_parameters(self):
        return self.width * self.block_size


@dataclass
class OptimizerConfig(object):
    """
    Per-step optimizer settings. SPSA gains follow a_k = a/(k+1+A)^alpha,
    c_k = c/(k+1)^gamma; `spsa_a` None means calibrate a so the first step
    has magnitude `spsa_first_step`.
    """
    mode: str = QUASI_NEWTON
    max_iterations: int = 500
    gradient_tolerance: float = 1e-8
    loss_tolerance: float = 1e-9
    ftol: float = 2.220446049250313e-09
    spsa_a: float = None
    spsa_c: float = 0.01
    spsa_A: float = 10.0
    spsa_alpha: float = 0.602
    spsa_gamma: float = 0.101
    spsa_first_step: float = 0.01
    spsa_calibration_samples: int = 5
    rng_seed: int = None

    def __post_init__(self):
        if self.mode not in OPTIMIZER_MODES:
            raise InvalidConfigError("optimizer mode %r not in %s"
                                     % (self.mode, OPTIMIZER_MODES))
        if self.max_iterations < 1:
            raise InvalidConfigError("max_iterations must be >= 1")
        for name in ('gradient_tolerance', 'loss_tolerance', 'ftol', 'spsa_c',
                     'spsa_first_step'):
            if not getattr(self, name) > 0:
                raise InvalidConfigError("%s must be positive" % name)
        if self.spsa_a is not None and not self.spsa_a > 0:
            raise InvalidConfigError("spsa_a must be positive")


@dataclass
class OptimizeResult(object):
    """outcome of one masked optimization; d_theta_star is zero off the mask"""
    d_theta_star: ParamVector
    final_loss: float
    iterations: int
    loss_evaluations: int
    gradient_evaluations: int
    converged: bool = True
    budget_exhausted: bool = False
    loss_trace: tuple = field(default=(), repr=False)


def _loss_from_overlap(overlap, dt):
    return max(0.0, 1.0 - abs(overlap) ** 2) / (dt * dt)


def pvqd_loss(ctx, d_theta):
    """(1 - |<phi|psi(theta + d_theta)>|^2) / dt^2"""
    psi = ctx.prepare(ctx.shifted(d_theta))
    return _loss_from_overlap(np.vdot(ctx.target_amplitudes, psi), ctx.dt)


def loss_and_gradient(ctx, d_theta, mask):
    """
    loss and its gradient in the masked slots (exact zeros elsewhere)
    """
    values = ctx.shifted(d_theta)
    if not isinstance(mask, BlockMask):
        raise InvalidMaskError("expected a BlockMask, got %r" % (mask,))
    if mask.num_blocks * mask.block_size != values.size:
        raise ShapeError("mask covers %d slots, parameters have %d"
                         % (mask.num_blocks * mask.block_size, values.size))
    actions = ctx.ansatz.circuit.actions
    active = np.zeros(values.size, dtype=bool)
    active[mask.slots] = True

    psi = ctx.prepare(values)
    lam = ctx.target_amplitudes.copy()
    overlap = np.vdot(lam, psi)
    grad = np.zeros(values.size)

    first = min(i for i, (_, _, slot) in enumerate(actions)
                if slot is not None and active[slot])
    for i in range(len(actions) - 1, first - 1, -1):
        action, angle, slot = actions[i]
        if slot is not None:
            angle = values[slot]
            if active[slot]:
                # d/dx exp(-i x P/2) = (-i/2) P exp(-i x P/2)
                d_overlap = -0.5j * np.vdot(lam, apply_word(psi, action))
                grad[slot] += -2.0 * (np.conj(overlap) * d_overlap).real
        if i > first and angle != 0.0:
            rotate(psi, action, -angle)
            rotate(lam, action, -angle)
    dt2 = ctx.dt * ctx.dt
    return _loss_from_overlap(overlap, ctx.dt), grad / dt2


def loss_gradient(ctx, d_theta, mask):
    """masked gradient of pvqd_loss with respect to d_theta"""
    _, grad = loss_and_gradient(ctx, d_theta, mask)
    return ParamVector(grad, ctx.ansatz.block_size)


def _expand(mask, num_parameters, x):
    full = np.zeros(num_parameters)
    full[mask.slots] = x
    return full


def _checked(loss):
    if not math.isfinite(loss):
        raise NumericFailureError("projection loss became %r" % (loss,))
    return loss


def minimize(ctx, mask, d_theta_0, cfg):
    """
    L-BFGS-B over the masked slots of d_theta. Stops on loss_tolerance,
    gradient_tolerance (projected infinity norm) or the iteration budget.
    """
    if cfg.mode != QUASI_NEWTON:
        raise InvalidConfigError("minimize needs mode %r, got %r"
                                 % (QUASI_NEWTON, cfg.mode))
    l = ctx.num_parameters
    x0 = as_values(d_theta_0)[mask.slots].copy()
    counts = {'loss': 0, 'grad': 0}

    def fun(x):
        loss, grad = loss_and_gradient(ctx, _expand(mask, l, x), mask)
        counts['loss'] += 1
        counts['grad'] += 1
        return _checked(loss), grad[mask.slots]

    loss0, grad0 = fun(x0)
    trace = [loss0]
    if loss0 <= cfg.loss_tolerance or np.max(np.abs(grad0)) <= cfg.gradient_tolerance:
        return OptimizeResult(ParamVector(_expand(mask, l, x0), ctx.ansatz.block_size),
                              loss0, 0, counts['loss'], counts['grad'],
                              True, False, tuple(trace))

    def callback(intermediate_result):
        trace.append(float(intermediate_result.fun))
        if intermediate_result.fun <= cfg.loss_tolerance:
            raise StopIteration

    res = scipy_minimize(fun, x0, jac=True, method='L-BFGS-B', callback=callback,
                         options={'maxiter': cfg.max_iterations,
                                  'maxfun': 20 * cfg.max_iterations,
                                  'gtol': cfg.gradient_tolerance,
                                  'ftol': cfg.ftol})
    x = np.asarray(res.x, dtype=np.float64)
    final = _checked(pvqd_loss(ctx, _expand(mask, l, x)))
    counts['loss'] += 1
    if final > trace[0]:
        # line search never accepts an uphill point; keep the start
        x, final = x0, trace[0]
    iterations = min(int(res.nit), cfg.max_iterations)
    exhausted = iterations >= cfg.max_iterations and final > cfg.loss_tolerance
    converged = final <= cfg.loss_tolerance or bool(res.success)
    return OptimizeResult(ParamVector(_expand(mask, l, x), ctx.ansatz.block_size),
                          final, iterations, counts['loss'], counts['grad'],
                          converged, exhausted, tuple(trace))


def _spsa_gain_a(f, x, cfg, rng, counts):
    """a such that the expected first step has size spsa_first_step"""
    if cfg.spsa_a is not None:
        return cfg.spsa_a
    c0 = cfg.spsa_c
    magnitude = 0.0
    for _ in range(cfg.spsa_calibration_samples):
        delta = 2 * rng.integers(0, 2, size=x.size) - 1
        magnitude += abs(f(x + c0 * delta) - f(x - c0 * delta)) / (2 * c0)
        counts['loss'] += 2
    magnitude /= max(cfg.spsa_calibration_samples, 1)
    scale = (1 + cfg.spsa_A) ** cfg.spsa_alpha
    if magnitude == 0.0:
        return cfg.spsa_first_step * scale
    return cfg.spsa_first_step * scale / magnitude


def spsa_minimize(ctx, mask, d_theta_0, cfg):
    """
    Simultaneous-perturbation stochastic approximation on the masked slots;
    two loss evaluations per iteration, deterministic for a given rng_seed
    """
    if cfg.mode != SPSA:
        raise InvalidConfigError("spsa_minimize needs mode %r, got %r"
                                 % (SPSA, cfg.mode))
    if cfg.rng_seed is None:
        raise InvalidConfigError("SPSA needs an rng_seed")
    rng = np.random.default_rng(cfg.rng_seed)
    l = ctx.num_parameters
    x = as_values(d_theta_0)[mask.slots].copy()
    counts = {'loss': 0}

    def f(x):
        return _checked(pvqd_loss(ctx, _expand(mask, l, x)))

    a = _spsa_gain_a(f, x, cfg, rng, counts)
    trace = []
    iterations = 0
    for k in range(cfg.max_iterations):
        ak = a / (k + 1 + cfg.spsa_A) ** cfg.spsa_alpha
        ck = cfg.spsa_c / (k + 1) ** cfg.spsa_gamma
        delta = 2 * rng.integers(0, 2, size=x.size) - 1
        f_plus = f(x + ck * delta)
        f_minus = f(x - ck * delta)
        counts['loss'] += 2
        # 1/delta_i == delta_i for +-1 perturbations
        x = x - ak * (f_plus - f_minus) / (2 * ck) * delta
        iterations = k + 1
        trace.append(0.5 * (f_plus + f_minus))
        if max(f_plus, f_minus) <= cfg.loss_tolerance:
            break
    final = f(x)
    counts['loss'] += 1
    converged = final <= cfg.loss_tolerance
    return OptimizeResult(ParamVector(_expand(mask, l, x), ctx.ansatz.block_size),
                          final, iterations, counts['loss'], 0, converged,
                          not converged and iterations >= cfg.max_iterations,
                          tuple(trace))


def optimize(ctx, mask, d_theta_0, cfg):
    """dispatch on cfg.mode"""
    if cfg.mode == SPSA:
        return spsa_minimize(ctx, mask, d_theta_0, cfg)
    return minimize(ctx, mask, d_theta_0, cfg)
