"""
Trotter step circuits and the blocked parameterized ansatz

The ansatz block is one first-order Trotter sub-step with every angle
promoted to a free parameter (one parameter per Hamiltonian term, in term
order). Repeating the block n times gives U(theta_1) ... U(theta_n).
"""
from dataclasses import dataclass, field
from functools import cached_property
import math
import numpy as np

from pvqd.exceptions import (InvalidConfigError, InvalidGateError,
                             NumericInputError, ShapeError)
from pvqd.statevec import PauliRotationGate, pauli_action, rotate


@dataclass
class ParamVector(object):
    """
    l rotation parameters split into blocks of `block_size`
    """
    values: np.ndarray
    block_size: int

    def __post_init__(self):
        self.values = np.array(self.values, dtype=np.float64).reshape(-1)
        if self.block_size < 1 or self.values.size % self.block_size:
            raise ShapeError("%d parameters do not split into blocks of %d"
                             % (self.values.size, self.block_size))
        if not np.all(np.isfinite(self.values)):
            raise NumericInputError("non-finite parameter")

    @classmethod
    def zeros(cls, num_parameters, block_size):
        return cls(np.zeros(num_parameters), block_size)

    @property
    def num_blocks(self):
        return self.values.size // self.block_size

    def block(self, k):
        return self.values[k * self.block_size:(k + 1) * self.block_size]

    def __len__(self):
        return self.values.size

    def __add__(self, other):
        return ParamVector(self.values + as_values(other), self.block_size)


def as_values(theta):
    """raw float array of a ParamVector or array-like"""
    if isinstance(theta, ParamVector):
        return theta.values
    return np.asarray(theta, dtype=np.float64).reshape(-1)


@dataclass(frozen=True)
class Circuit(object):
    """
    ordered Pauli-rotation gates; parameter slots, if any, cover 0..l-1
    """
    num_qubits: int
    gates: tuple = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'gates', tuple(self.gates))
        for g in self.gates:
            if max(g.support) >= self.num_qubits:
                raise InvalidGateError("gate on %s outside %d qubits"
                                       % (g.support, self.num_qubits))
        slots = set(g.parameter_slot for g in self.gates if g.parameterized)
        if slots != set(range(len(slots))):
            raise InvalidGateError("parameter slots %s are not contiguous from 0"
                                   % sorted(slots))

    @cached_property
    def num_parameters(self):
        return len(set(g.parameter_slot for g in self.gates if g.parameterized))

    @cached_property
    def actions(self):
        """(pauli action, fixed angle, slot) per gate, for the raw kernels"""
        return tuple((pauli_action(self.num_qubits, *g.masks()), g.angle,
                      g.parameter_slot) for g in self.gates)

    def apply_amplitudes(self, amplitudes, params=None):
        for action, angle, slot in self.actions:
            if slot is not None:
                angle = params[slot]
            if angle != 0.0:
                rotate(amplitudes, action, angle)
        return amplitudes

    def apply(self, state, params=None):
        """in place on `state`; `params` resolves parameterized gates"""
        if state.num_qubits != self.num_qubits:
            raise ShapeError("%d qubit circuit on a %d qubit state"
                             % (self.num_qubits, state.num_qubits))
        if self.num_parameters:
            params = as_values(params)
            if params.size != self.num_parameters:
                raise ShapeError("circuit takes %d parameters, got %d"
                                 % (self.num_parameters, params.size))
        self.apply_amplitudes(state.amplitudes, params)
        return state

    def __len__(self):
        return len(self.gates)


@dataclass(frozen=True)
class BlockedAnsatz(object):
    """
    `num_blocks` structurally identical copies of `template`; block k owns
    slots [k*block_size, (k+1)*block_size)
    """
    template: Circuit
    num_blocks: int

    def __post_init__(self):
        if self.num_blocks < 1:
            raise InvalidConfigError("ansatz needs at least one block, got %d"
                                     % self.num_blocks)
        if self.template.num_parameters < 1:
            raise InvalidConfigError("ansatz template has no free parameters")

    @property
    def num_qubits(self):
        return self.template.num_qubits

    @property
    def block_size(self):
        return self.template.num_parameters

    @property
    def num_parameters(self):
        return self.num_blocks * self.block_size

    def block_slots(self, k):
        return range(k * self.block_size, (k + 1) * self.block_size)

    @cached_property
    def circuit(self):
        """the whole ansatz as one flat Circuit"""
        gates = []
        for k in range(self.num_blocks):
            offset = k * self.block_size
            for g in self.template.gates:
                if g.parameterized:
                    g = PauliRotationGate(g.pauli, g.support,
                                          parameter_slot=g.parameter_slot + offset)
                gates.append(g)
        return Circuit(self.num_qubits, gates)

    def zero_parameters(self):
        return ParamVector.zeros(self.num_parameters, self.block_size)


def trotter_step_circuit(ps, dt, p):
    """
    (prod_k exp(-i c_k P_k dt/p))^p as fixed rotations of angle 2 c_k dt/p
    """
    if int(p) != p or p < 1:
        raise InvalidConfigError("Trotter step count must be >= 1, got %r" % (p,))
    if not math.isfinite(dt):
        raise NumericInputError("non-finite time step %r" % (dt,))
    p = int(p)
    gates = []
    for _ in range(p):
        for term in ps.terms:
            gates.append(PauliRotationGate(term.letters, term.support,
                                           angle=2.0 * term.coefficient * dt / p))
    return Circuit(ps.num_qubits, gates)


def trotter_angles(ps, dt, p=1):
    """per-sub-step angles that turn one ansatz block into a Trotter sub-step"""
    return np.array([2.0 * term.coefficient * dt / p for term in ps.terms])


def build_blocked_ansatz(ps, n):
    """n parameterized Trotter sub-steps, one parameter per term"""
    if int(n) != n or n < 1:
        raise InvalidConfigError("ansatz needs n >= 1 blocks, got %r" % (n,))
    template = Circuit(ps.num_qubits, [
        PauliRotationGate(term.letters, term.support, parameter_slot=k)
        for k, term in enumerate(ps.terms)])
    return BlockedAnsatz(template, int(n))


def evaluate(ansatz, theta, input_state):
    """
    U(theta_1) ... U(theta_n) applied to a copy of `input_state`
    """
    values = as_values(theta)
    if values.size != ansatz.num_parameters:
        raise ShapeError("ansatz takes %d parameters, got %d"
                         % (ansatz.num_parameters, values.size))
    if not np.all(np.isfinite(values)):
        raise NumericInputError("non-finite parameter")
    return ansatz.circuit.apply(input_state.copy(), values)
