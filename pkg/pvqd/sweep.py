"""
Block selection for each time step

full        every block, i.e. standard PVQD
sequential  one block per step, 0, 1, ..., n-1, 0, ...
random      one uniformly drawn block per step
fidelity    stay on the current block(s) while they still pay off, then move
            on: the pointer advances once the step loss reaches the
            threshold or stops decreasing; optionally widen the window
            (Sweep^n) after K consecutive misses
"""
from dataclasses import dataclass, field, replace
import math
import numpy as np

from pvqd.exceptions import InvalidConfigError
from pvqd.circuits import ParamVector, as_values
from pvqd.variational import BlockMask

FULL = 'full'
SEQUENTIAL = 'sequential'
RANDOM = 'random'
FIDELITY = 'fidelity'
POLICY_KINDS = (FULL, SEQUENTIAL, RANDOM, FIDELITY)


@dataclass(frozen=True)
class SweepPolicy(object):
    """
    Block-selection strategy. `escalation_window` (K) None disables Sweep^n;
    `warm_start_zeta` 0 disables warm starting.

    `stall_ratio` r: the fidelity pointer also advances when the step loss
    is >= r times the previous step's loss, i.e. the current block no longer
    improves on it. None keeps the pure threshold rule.
    """
    kind: str = FULL
    loss_threshold: float = 1e-7
    stall_ratio: float = 1.0
    rng_seed: int = None
    escalation_window: int = None
    max_simultaneous_blocks: int = 2
    warm_start_zeta: float = 0.0
    warm_start_use_increment: bool = False
    fidelity_reset_each_step: bool = False
    random_init_scale: float = 0.0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidConfigError("sweep kind %r not in %s" % (self.kind, POLICY_KINDS))
        if self.kind == FIDELITY and not self.loss_threshold > 0:
            raise InvalidConfigError("fidelity sweep needs a positive loss threshold")
        if self.stall_ratio is not None and not self.stall_ratio > 0:
            raise InvalidConfigError("stall_ratio must be positive or None")
        if self.escalation_window is not None and self.escalation_window < 1:
            raise InvalidConfigError("escalation window must be >= 1")
        if self.max_simultaneous_blocks < 1:
            raise InvalidConfigError("max_simultaneous_blocks must be >= 1")
        if not math.isfinite(self.warm_start_zeta):
            raise InvalidConfigError("warm_start_zeta must be finite")
        if not self.random_init_scale >= 0:
            raise InvalidConfigError("random_init_scale must be >= 0")
        if self.random_init_scale > 0 and self.warm_start_zeta != 0:
            raise InvalidConfigError("random initialization and warm starting "
                                     "are mutually exclusive")

    @property
    def escalates(self):
        return self.kind == FIDELITY and self.escalation_window is not None


@dataclass
class SweepState(object):
    """
    Mutable selection state owned by one run.

    For the sequential kind `current_block` is the next block to visit; for
    the fidelity kind it is the first block of the current window.
    """
    current_block: int = 0
    active_width: int = 1
    stagnation_counter: int = 0
    last_loss: float = None
    last_d_theta_star: np.ndarray = field(default=None, repr=False)
    last_blocks: tuple = ()
    passes: int = 0
    rng: np.random.Generator = field(default=None, repr=False)

    @property
    def last_block(self):
        return self.last_blocks[0] if self.last_blocks else None


def initial_sweep_state(policy, n):
    if policy.escalates and policy.max_simultaneous_blocks > n:
        raise InvalidConfigError("max_simultaneous_blocks %d exceeds %d blocks"
                                 % (policy.max_simultaneous_blocks, n))
    return SweepState(rng=np.random.default_rng(policy.rng_seed))


def _window(state, n):
    return tuple((state.current_block + j) % n for j in range(state.active_width))


def select_mask(policy, state, prev_result, n, block_size=1):
    """
    Mask for the coming step and the updated state. `prev_result` is the
    previous step's OptimizeResult (None on the first step).
    """
    state = replace(state, passes=0)
    if policy.kind == FULL:
        blocks = tuple(range(n))
    elif policy.kind == SEQUENTIAL:
        blocks = (state.current_block % n,)
        state.current_block = (state.current_block + 1) % n
    elif policy.kind == RANDOM:
        b = int(state.rng.integers(n))
        blocks = (b,)
        state.current_block = b
    else:
        if prev_result is not None:
            loss = prev_result.final_loss
            hit = loss <= policy.loss_threshold
            stalled = (policy.stall_ratio is not None and state.last_loss is not None
                       and loss >= policy.stall_ratio * state.last_loss)
            state.last_loss = loss
            if policy.escalates:
                if hit:
                    state.stagnation_counter = 0
                else:
                    state.stagnation_counter += 1
                    if state.stagnation_counter >= policy.escalation_window:
                        state.active_width = min(state.active_width + 1,
                                                 policy.max_simultaneous_blocks)
                        state.stagnation_counter = 0
            if (hit or stalled) and not policy.fidelity_reset_each_step:
                state.current_block = (state.current_block + 1) % n
        if policy.fidelity_reset_each_step:
            state.current_block = 0
        state.active_width = min(state.active_width, n)
        blocks = _window(state, n)
    return BlockMask(blocks, n, block_size), state


def next_window(policy, state, result, n, block_size=1):
    """
    Within-step continuation of the reset fidelity sweep: move to the next
    window while the loss stays above threshold, at most n passes per step.
    Returns (mask, state) or None when the step is finished.
    """
    if policy.kind != FIDELITY or not policy.fidelity_reset_each_step:
        return None
    if result.final_loss <= policy.loss_threshold or state.passes >= n:
        return None
    state = replace(state, current_block=(state.current_block + 1) % n)
    return BlockMask(_window(state, n), n, block_size), state


def commit_step(state, mask, result):
    """remember what was optimized, for warm starting and the next pass"""
    return replace(state, last_blocks=mask.active_blocks,
                   last_d_theta_star=as_values(result.d_theta_star).copy(),
                   passes=state.passes + 1)


def warm_start_initial(policy, state, theta, new_mask):
    """
    Initial dtheta_0 for the coming optimization.

    Each newly selected block j starts from zeta * theta*_i, theta*_i being
    the post-update parameters of the previously optimized block i (or its
    increment dtheta*_i with warm_start_use_increment). Zero when zeta is 0
    or the block set did not change.
    """
    values = as_values(theta)
    size = new_mask.block_size
    out = np.zeros(values.size)
    if policy.random_init_scale > 0:
        s = policy.random_init_scale
        out[new_mask.slots] = state.rng.uniform(-s, s, size=new_mask.slots.size)
        return ParamVector(out, size)
    zeta = policy.warm_start_zeta
    previous = tuple(state.last_blocks)
    if zeta == 0 or not previous or set(previous) == set(new_mask.active_blocks):
        return ParamVector(out, size)
    if policy.warm_start_use_increment:
        source = state.last_d_theta_star
    else:
        source = values
    fresh = [b for b in new_mask.active_blocks if b not in previous]
    for k, j in enumerate(fresh):
        i = previous[k % len(previous)]
        out[j * size:(j + 1) * size] = zeta * source[i * size:(i + 1) * size]
    return ParamVector(out, size)
