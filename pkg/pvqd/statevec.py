"""
Dense statevector and in-place Pauli-rotation kernels

Conventions
-----------
- qubit 0 is the least significant bit of the amplitude index
- a rotation of angle a about the Pauli word P is exp(-i (a/2) P)
- hbar = 1, amplitudes are complex128
"""
from dataclasses import dataclass, field
from functools import lru_cache
import math
import numpy as np

from pvqd.exceptions import (InvalidGateError, NumericInputError, ShapeError,
                             NonHermitianError)

PAULI_LETTERS = ('X', 'Y', 'Z')
# imaginary residue tolerated on an expectation value before it is dropped
IMAG_RESIDUE = 1e-10


@dataclass
class StateVector(object):
    """
    2^N complex amplitudes of an N qubit register
    """
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ShapeError("%d qubits need %d amplitudes, got shape %s"
                             % (self.num_qubits, 1 << self.num_qubits,
                                self.amplitudes.shape))

    @classmethod
    def zero_state(cls, num_qubits):
        return cls.basis_state(num_qubits, 0)

    @classmethod
    def basis_state(cls, num_qubits, index):
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def product_state(cls, num_qubits, flips=()):
        """
        computational basis state with the qubits in `flips` set to |1>
        """
        index = 0
        for q in flips:
            if not 0 <= q < num_qubits:
                raise InvalidGateError("qubit %d outside a %d qubit register"
                                       % (q, num_qubits))
            index |= 1 << q
        return cls.basis_state(num_qubits, index)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize=False):
        amps = np.array(amplitudes, dtype=np.complex128)
        num_qubits = int(amps.size).bit_length() - 1
        if amps.ndim != 1 or (1 << num_qubits) != amps.size:
            raise ShapeError("amplitude count %d is not a power of two"
                             % amps.size)
        if normalize:
            amps /= np.linalg.norm(amps)
        return cls(num_qubits, amps)

    def copy(self):
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    @property
    def dimension(self):
        return 1 << self.num_qubits


@dataclass(frozen=True)
class PauliRotationGate(object):
    """
    exp(-i (angle/2) P) with P a Pauli word on `support`

    Exactly one of `angle` (fixed gate) and `parameter_slot` (index into a
    parameter vector) is set.
    """
    pauli: str
    support: tuple
    angle: float = None
    parameter_slot: int = None

    def __post_init__(self):
        object.__setattr__(self, 'support', tuple(int(q) for q in self.support))
        if len(self.pauli) != len(self.support) or not self.support:
            raise InvalidGateError("word %r does not match support %s"
                                   % (self.pauli, self.support))
        if any(p not in PAULI_LETTERS for p in self.pauli):
            raise InvalidGateError("unknown Pauli letter in %r" % self.pauli)
        if len(set(self.support)) != len(self.support) or min(self.support) < 0:
            raise InvalidGateError("support %s must be distinct non-negative "
                                   "qubits" % (self.support,))
        if (self.angle is None) == (self.parameter_slot is None):
            raise InvalidGateError("a gate is either fixed-angle or "
                                   "parameterized")

    @property
    def parameterized(self):
        return self.parameter_slot is not None

    @property
    def word(self):
        return tuple(zip(self.support, self.pauli))

    def masks(self):
        return pauli_masks(self.word)


def pauli_masks(word):
    """
    (x mask, z mask, number of Y letters) of a word given as (qubit, letter)
    pairs; Y sets both masks
    """
    xmask = zmask = ny = 0
    for qubit, letter in word:
        bit = 1 << qubit
        if letter in ('X', 'Y'):
            xmask |= bit
        if letter in ('Z', 'Y'):
            zmask |= bit
        if letter == 'Y':
            ny += 1
    return xmask, zmask, ny


@lru_cache(maxsize=4096)
def pauli_action(num_qubits, xmask, zmask, ny):
    """
    (source index, phase) such that (P psi)[c] = phase[c] * psi[source[c]]

    P|b> = i^ny (-1)^popcount(b & z) |b ^ x>, so source[c] = c ^ x.
    """
    index = np.arange(1 << num_qubits, dtype=np.int64)
    source = index ^ xmask
    parity = np.zeros(index.size, dtype=np.int64)
    q = 0
    z = zmask
    while z:
        if z & 1:
            parity ^= (source >> q) & 1
        z >>= 1
        q += 1
    phase = (1j ** ny) * (1 - 2 * parity).astype(np.complex128)
    source.flags.writeable = False
    phase.flags.writeable = False
    return source, phase


def _check_support(num_qubits, support):
    if max(support) >= num_qubits:
        raise InvalidGateError("support %s invalid for %d qubits"
                               % (tuple(support), num_qubits))


def _check_angle(angle):
    if not math.isfinite(angle):
        raise NumericInputError("non-finite rotation angle %r" % (angle,))


def rotate(amplitudes, action, angle):
    """
    in-place exp(-i (angle/2) P) on a raw amplitude array
    """
    source, phase = action
    half = 0.5 * angle
    rotated = math.cos(half) * amplitudes - 1j * math.sin(half) * (phase * amplitudes[source])
    amplitudes[:] = rotated
    return amplitudes


def apply_word(amplitudes, action):
    """
    P psi as a new array
    """
    source, phase = action
    return phase * amplitudes[source]


def apply_pauli_rotation(state, gate, angle=None):
    """
    Apply exp(-i (angle/2) P) to `state` in place and return it.
    `angle` defaults to the gate's fixed angle.
    """
    if angle is None:
        if gate.angle is None:
            raise InvalidGateError("parameterized gate needs an explicit angle")
        angle = gate.angle
    angle = float(angle)
    _check_angle(angle)
    _check_support(state.num_qubits, gate.support)
    if angle == 0.0:
        return state
    rotate(state.amplitudes, pauli_action(state.num_qubits, *gate.masks()), angle)
    return state


def apply_pauli(state, word):
    """
    Apply a bare Pauli word (sequence of (qubit, letter)) to `state` in place
    """
    word = tuple(word)
    if not word:
        return state
    _check_support(state.num_qubits, [q for q, _ in word])
    action = pauli_action(state.num_qubits, *pauli_masks(word))
    state.amplitudes[:] = apply_word(state.amplitudes, action)
    return state


def inner_product(a, b):
    """<a|b>, conjugating a"""
    if a.num_qubits != b.num_qubits:
        raise ShapeError("inner product of %d and %d qubit states"
                         % (a.num_qubits, b.num_qubits))
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def word_expectation(state, word):
    """<state|P|state> of one Pauli word, complex"""
    if not word:
        return complex(np.vdot(state.amplitudes, state.amplitudes))
    action = pauli_action(state.num_qubits, *pauli_masks(word))
    return complex(np.vdot(state.amplitudes, apply_word(state.amplitudes, action)))


def expectation(state, observable):
    """
    <state|O|state> for a PauliSum observable; real by construction, since
    PauliTerm rejects complex coefficients
    """
    if observable.num_qubits > state.num_qubits:
        raise ShapeError("%d qubit observable on a %d qubit state"
                         % (observable.num_qubits, state.num_qubits))
    total = 0j
    for term in observable.terms:
        _check_support(state.num_qubits, [q for q, _ in term.word])
        total += term.coefficient * word_expectation(state, term.word)
    if abs(total.imag) > IMAG_RESIDUE:
        raise NonHermitianError("expectation has imaginary part %g"
                                % total.imag)
    return float(total.real)
