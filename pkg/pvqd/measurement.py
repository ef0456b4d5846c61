"""
Shot-sampled observable estimation with gate and readout noise

Gate noise uses the trajectory method: after every ansatz gate a random
non-identity Pauli is inserted on the gate support with the gate's
depolarizing probability. One trajectory serves one batch of shots.
"""
from dataclasses import dataclass
import itertools
import math
import numpy as np

from pvqd.exceptions import InvalidNoiseError, InvalidConfigError
from pvqd.circuits import as_values, evaluate
from pvqd.statevec import PauliRotationGate, apply_pauli, apply_pauli_rotation

# basis changes mapping the letter's +1 eigenstate onto |0>
_BASIS_ROTATIONS = {
    'X': ('Y', -0.5 * math.pi),
    'Y': ('X', 0.5 * math.pi),
}


@dataclass(frozen=True)
class NoiseSpec(object):
    """per-gate depolarizing and per-qubit readout flip probabilities"""
    depolarizing_1q: float = 0.0
    depolarizing_2q: float = 0.0
    readout_flip: float = 0.0
    shots_per_trajectory: int = 64

    def __post_init__(self):
        for name in ('depolarizing_1q', 'depolarizing_2q', 'readout_flip'):
            p = getattr(self, name)
            if not (0.0 <= p < 1.0):
                raise InvalidNoiseError("%s = %r outside [0, 1)" % (name, p))
        if self.shots_per_trajectory < 1:
            raise InvalidNoiseError("shots_per_trajectory must be >= 1")

    @property
    def gate_noise(self):
        return self.depolarizing_1q > 0 or self.depolarizing_2q > 0


def _error_words(width):
    """all non-identity Pauli strings on `width` qubits"""
    return [w for w in itertools.product('IXYZ', repeat=width)
            if any(p != 'I' for p in w)]


def noisy_trajectory(ansatz, theta, initial_state, noise, rng):
    """one stochastic run of the ansatz with Pauli errors inserted"""
    values = as_values(theta)
    state = initial_state.copy()
    words = {}
    for gate in ansatz.circuit.gates:
        angle = values[gate.parameter_slot] if gate.parameterized else gate.angle
        apply_pauli_rotation(state, gate, angle)
        width = len(gate.support)
        p = noise.depolarizing_1q if width == 1 else noise.depolarizing_2q
        if p > 0 and rng.random() < p:
            if width not in words:
                words[width] = _error_words(width)
            choice = words[width][rng.integers(len(words[width]))]
            apply_pauli(state, [(q, l) for q, l in zip(gate.support, choice) if l != 'I'])
    return state


def sample_trajectories(ansatz, theta, initial_state, noise, shots, rng):
    """
    (state, shots) batches covering `shots` in total; without gate noise a
    single noiseless batch
    """
    if shots < 1:
        raise InvalidConfigError("shots must be >= 1, got %r" % (shots,))
    if not noise.gate_noise:
        return [(evaluate(ansatz, theta, initial_state), int(shots))]
    batches = []
    remaining = int(shots)
    while remaining > 0:
        batch = min(noise.shots_per_trajectory, remaining)
        batches.append((noisy_trajectory(ansatz, theta, initial_state, noise, rng), batch))
        remaining -= batch
    return batches


def _term_outcomes(state, term, shots, readout_flip, rng):
    """+-1 eigenvalue samples of one Pauli word"""
    rotated = state.copy()
    for qubit, letter in term.word:
        if letter in _BASIS_ROTATIONS:
            axis, angle = _BASIS_ROTATIONS[letter]
            apply_pauli_rotation(rotated, PauliRotationGate(axis, (qubit,), angle))
    probs = rotated.probabilities()
    probs /= probs.sum()
    samples = rng.choice(probs.size, size=shots, p=probs)
    support = np.array(term.support, dtype=np.int64)
    bits = (samples[:, None] >> support[None, :]) & 1
    if readout_flip > 0:
        bits ^= (rng.random(bits.shape) < readout_flip).astype(bits.dtype)
    return 1 - 2 * (bits.sum(axis=1) % 2)


def measure_observable_shots(state, obs, shots, noise, rng, trajectories=None):
    """
    Estimate <obs> from `shots` samples per Pauli term.

    Returns (estimate, std_error) with std_error combining the terms'
    sample standard deviations over sqrt(shots). `trajectories` (from
    sample_trajectories) replaces `state` and is required when `noise`
    carries gate noise.
    """
    if not isinstance(noise, NoiseSpec):
        raise InvalidNoiseError("expected a NoiseSpec, got %r" % (noise,))
    if int(shots) != shots or shots < 1:
        raise InvalidConfigError("shots must be >= 1, got %r" % (shots,))
    if trajectories is None:
        if noise.gate_noise:
            raise InvalidNoiseError("gate noise is sampled per trajectory; pass "
                                    "the batches from sample_trajectories")
        trajectories = [(state, int(shots))]
    estimate = 0.0
    variance = 0.0
    for term in obs.terms:
        outcomes = np.concatenate([
            _term_outcomes(traj, term, batch, noise.readout_flip, rng)
            for traj, batch in trajectories])
        count = outcomes.size
        estimate += term.coefficient * outcomes.mean()
        if count > 1:
            variance += term.coefficient ** 2 * outcomes.var(ddof=1) / count
    return float(estimate), float(math.sqrt(variance))
