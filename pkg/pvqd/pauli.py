"""
Pauli-sum Hamiltonians and observables, the spin-chain models, and the
exact time evolution used as the reference for every infidelity
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import lru_cache
import math
import re
import threading
import numpy as np

from pvqd.exceptions import (InvalidGateError, NumericInputError,
                             InvalidSizeError, InvalidConfigError,
                             CapacityError, ShapeError, NonHermitianError)
from pvqd.statevec import (StateVector, PAULI_LETTERS, pauli_action,
                           pauli_masks, inner_product)

# memory guard for dense realizations: 2^14 x 2^14 complex128 is 4 GiB
MAX_DENSE_QUBITS = 14

_LETTER_RE = re.compile(r'^([XYZ])(\d+)$')


@dataclass(frozen=True)
class PauliTerm(object):
    """
    coefficient * (tensor product of the letters in `word`)

    `word` is a tuple of (qubit, letter) pairs sorted by qubit.
    """
    coefficient: float
    word: tuple

    def __post_init__(self):
        word = tuple(sorted((int(q), str(p)) for q, p in self.word))
        if not word:
            raise InvalidGateError("identity-only words are not allowed")
        qubits = [q for q, _ in word]
        if len(set(qubits)) != len(qubits) or qubits[0] < 0:
            raise InvalidGateError("repeated or negative qubit in %s" % (word,))
        if any(p not in PAULI_LETTERS for _, p in word):
            raise InvalidGateError("unknown Pauli letter in %s" % (word,))
        coeff = self.coefficient
        if np.iscomplexobj(coeff):
            if coeff.imag != 0:
                raise NonHermitianError("complex coefficient %r on %s" % (coeff, word))
            coeff = coeff.real
        coeff = float(coeff)
        if not math.isfinite(coeff):
            raise NumericInputError("non-finite coefficient on %s" % (word,))
        object.__setattr__(self, 'word', word)
        object.__setattr__(self, 'coefficient', coeff)

    @property
    def label(self):
        return '*'.join('%s%d' % (p, q) for q, p in self.word)

    @property
    def support(self):
        return tuple(q for q, _ in self.word)

    @property
    def letters(self):
        return ''.join(p for _, p in self.word)


@dataclass(frozen=True)
class PauliSum(object):
    """
    Weighted sum of Pauli words on `num_qubits` qubits, terms kept in
    construction order (which fixes the Trotter ordering)
    """
    num_qubits: int
    terms: tuple

    def __post_init__(self):
        terms = tuple(t if isinstance(t, PauliTerm) else PauliTerm(*t)
                      for t in self.terms)
        if not terms:
            raise InvalidConfigError("a Pauli sum needs at least one term")
        for t in terms:
            if t.support[-1] >= self.num_qubits:
                raise InvalidGateError("term %s outside %d qubits"
                                       % (t.label, self.num_qubits))
        object.__setattr__(self, 'terms', terms)

    @classmethod
    def from_labels(cls, num_qubits, pairs):
        """PauliSum.from_labels(2, [(-1.0, 'Z0*Z1'), (0.5, 'X0')])"""
        return cls(num_qubits, tuple(PauliTerm(c, parse_word(w)) for c, w in pairs))

    @property
    def num_terms(self):
        return len(self.terms)

    @property
    def coefficients(self):
        return np.array([t.coefficient for t in self.terms])

    def __len__(self):
        return len(self.terms)

    def __add__(self, other):
        return PauliSum(max(self.num_qubits, other.num_qubits),
                        self.terms + other.terms)

    def scaled(self, factor):
        return PauliSum(self.num_qubits,
                        tuple(PauliTerm(factor * t.coefficient, t.word)
                              for t in self.terms))

    def __str__(self):
        return format_pauli_sum(self)


@dataclass
class DenseOperator(object):
    """explicit 2^N x 2^N matrix of a PauliSum"""
    dimension: int
    entries: np.ndarray = field(repr=False)

    def hermiticity_error(self):
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def apply(self, state):
        return StateVector(state.num_qubits, self.entries @ state.amplitudes)


def parse_word(text):
    """'Z0*Z1' -> ((0, 'Z'), (1, 'Z'))"""
    word = []
    for token in text.strip().split('*'):
        match = _LETTER_RE.match(token.strip())
        if match is None:
            raise InvalidGateError("cannot parse Pauli factor %r in %r"
                                   % (token, text))
        word.append((int(match.group(2)), match.group(1)))
    return tuple(word)


def parse_pauli_text(text, num_qubits=None):
    """
    Read the one-term-per-line format `<coeff> <word>`, `#` comments.
    `num_qubits` defaults to one past the largest qubit index.
    """
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidGateError("line %d: expected '<coeff> <word>', got %r"
                                   % (lineno, raw))
        try:
            coeff = float(parts[0])
        except ValueError:
            raise NumericInputError("line %d: bad coefficient %r"
                                    % (lineno, parts[0]))
        pairs.append(PauliTerm(coeff, parse_word(parts[1])))
    if not pairs:
        raise InvalidConfigError("no terms in Pauli sum text")
    width = max(t.support[-1] for t in pairs) + 1
    if num_qubits is None:
        num_qubits = width
    return PauliSum(num_qubits, tuple(pairs))


def load_pauli_sum(path, num_qubits=None):
    with open(path) as f:
        return parse_pauli_text(f.read(), num_qubits)


def format_pauli_sum(ps):
    return '\n'.join('%r %s' % (t.coefficient, t.label) for t in ps.terms) + '\n'


def _bonds(N, periodic):
    bonds = [(i, i + 1) for i in range(N - 1)]
    if periodic:
        bonds.append((N - 1, 0))
    return bonds


def build_tfim(N, J, h, periodic=False):
    """
    -J sum Z_i Z_{i+1} - h sum X_i; couplings first, then fields.
    Zero-weight terms are left out.
    """
    if N < 2:
        raise InvalidSizeError("transverse-field Ising chain needs N >= 2, got %d" % N)
    terms = []
    if J != 0:
        terms.extend(PauliTerm(-J, ((i, 'Z'), (j, 'Z'))) for i, j in _bonds(N, periodic))
    if h != 0:
        terms.extend(PauliTerm(-h, ((i, 'X'),)) for i in range(N))
    return PauliSum(N, tuple(terms))


def build_xyz(N, Jx, Jy, Jz, periodic=False):
    """
    sum_i Jx X_iX_{i+1} + Jy Y_iY_{i+1} + Jz Z_iZ_{i+1}, interleaved by bond
    """
    if N < 2:
        raise InvalidSizeError("XYZ chain needs N >= 2, got %d" % N)
    terms = []
    for i, j in _bonds(N, periodic):
        for coupling, letter in ((Jx, 'X'), (Jy, 'Y'), (Jz, 'Z')):
            if coupling != 0:
                terms.append(PauliTerm(coupling, ((i, letter), (j, letter))))
    return PauliSum(N, tuple(terms))


def magnetization(N, letter):
    """sum_i P_i for P in {X, Y, Z}"""
    return PauliSum(N, tuple(PauliTerm(1.0, ((i, letter),)) for i in range(N)))


def word_observable(N, label):
    return PauliSum.from_labels(N, [(1.0, label)])


def tfim_observables(ps):
    N = ps.num_qubits
    return OrderedDict([('energy', ps),
                        ('sigma_x', magnetization(N, 'X')),
                        ('sigma_z', magnetization(N, 'Z'))])


def xyz_observables(ps):
    N = ps.num_qubits
    return OrderedDict([('energy', ps),
                        ('z0', word_observable(N, 'Z0')),
                        ('z0z1', word_observable(N, 'Z0*Z1'))])


def dense_matrix(ps):
    """
    sum_k c_k P_k as an explicit matrix; built column-permutation-wise
    rather than through Kronecker products
    """
    N = ps.num_qubits
    if N > MAX_DENSE_QUBITS:
        raise CapacityError("dense matrix of %d qubits exceeds the %d qubit "
                            "guard" % (N, MAX_DENSE_QUBITS))
    dim = 1 << N
    entries = np.zeros((dim, dim), dtype=np.complex128)
    rows = np.arange(dim)
    for term in ps.terms:
        source, phase = pauli_action(N, *pauli_masks(term.word))
        entries[rows, source] += term.coefficient * phase
    return DenseOperator(dim, entries)


class ExactPropagator(object):
    """
    e^{-iHt} through one eigendecomposition of H, reused for every t
    """
    def __init__(self, ps):
        self.hamiltonian = ps
        self.num_qubits = ps.num_qubits
        dense = dense_matrix(ps)
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(dense.entries)

    def to_eigenbasis(self, state):
        return self.eigenvectors.conj().T @ state.amplitudes

    def evolve_coefficients(self, coefficients, t):
        """state with eigenbasis coefficients `coefficients`, evolved to t"""
        amps = self.eigenvectors @ (np.exp(-1j * self.eigenvalues * t) * coefficients)
        return StateVector(self.num_qubits, amps)

    def evolve(self, state, t):
        if state.num_qubits != self.num_qubits:
            raise ShapeError("%d qubit state under a %d qubit Hamiltonian"
                             % (state.num_qubits, self.num_qubits))
        if not math.isfinite(t):
            raise NumericInputError("non-finite evolution time %r" % (t,))
        return self.evolve_coefficients(self.to_eigenbasis(state), t)

    @property
    def ground_energy(self):
        return float(self.eigenvalues[0])


# a 12 qubit eigenbasis is 256 MiB
MAX_CACHED_PROPAGATORS = 4

_propagator_lock = threading.Lock()


@lru_cache(maxsize=MAX_CACHED_PROPAGATORS)
def _factorize(ps):
    return ExactPropagator(ps)


def propagator_for(ps):
    """
    cached ExactPropagator, least recently used evicted first; the lock
    keeps concurrent runs from factorizing the same Hamiltonian twice
    """
    with _propagator_lock:
        return _factorize(ps)


def exact_evolve(ps, state, t):
    """e^{-iHt}|state>"""
    return propagator_for(ps).evolve(state, t)


def infidelity(a, b):
    """1 - |<a|b>|^2 clamped to [0, 1]"""
    overlap = abs(inner_product(a, b)) ** 2
    return min(1.0, max(0.0, 1.0 - overlap))
