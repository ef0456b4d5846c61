"""
Experiment files

An experiment is a JSON object: flat model and time-stepping keys plus nested
`policy`, `optimizer` and `measurement` objects. The same dicts are returned
by the preset functions in subs.py.
"""
from collections import OrderedDict
from dataclasses import dataclass, field, replace
import json
import math
import os

from pvqd.exceptions import ConfigError, PVQDError
from pvqd.pauli import (build_tfim, build_xyz, load_pauli_sum, tfim_observables,
                        xyz_observables)
from pvqd.sweep import SweepPolicy, POLICY_KINDS
from pvqd.variational import OptimizerConfig, OPTIMIZER_MODES
from pvqd.measurement import NoiseSpec
from pvqd.engine import EvolutionConfig, MeasurementConfig, EXACT, SHOTS

MODELS = ('tfim', 'xyz', 'custom')

# key: (type check, default); a default of `_REQUIRED` must be given
_REQUIRED = object()
_INT = 'int'
_FLOAT = 'float'
_BOOL = 'bool'
_STR = 'str'
_OPT_INT = 'optional int'
_OPT_FLOAT = 'optional float'
_OPT_STR = 'optional str'
_INT_LIST = 'list of int'

TOP_KEYS = {
    'name': (_STR, 'experiment'),
    'model': (_STR, _REQUIRED),
    'num_qubits': (_OPT_INT, None),
    'J': (_FLOAT, -0.25),
    'h': (_FLOAT, -1.0),
    'Jx': (_FLOAT, 1.0),
    'Jy': (_FLOAT, 0.8),
    'Jz': (_FLOAT, 0.6),
    'periodic': (_BOOL, False),
    'hamiltonian_file': (_OPT_STR, None),
    'initial_flips': (_INT_LIST, []),
    'dt': (_FLOAT, _REQUIRED),
    'num_steps': (_INT, _REQUIRED),
    'trotter_steps': (_INT, 8),
    'ansatz_blocks': (_INT, _REQUIRED),
    'num_runs': (_INT, 1),
    'seed': (_INT, 0),
}

POLICY_KEYS = {
    'kind': (_STR, 'full'),
    'loss_threshold': (_FLOAT, 1e-7),
    'stall_ratio': (_OPT_FLOAT, 1.0),
    'seed': (_OPT_INT, None),
    'escalation_window': (_OPT_INT, None),
    'max_simultaneous_blocks': (_INT, 2),
    'warm_start_zeta': (_FLOAT, 0.0),
    'warm_start_use_increment': (_BOOL, False),
    'fidelity_reset_each_step': (_BOOL, False),
    'random_init_scale': (_FLOAT, 0.0),
}

OPTIMIZER_KEYS = {
    'mode': (_STR, 'gradient-quasi-newton'),
    'max_iterations': (_INT, 500),
    'gradient_tolerance': (_FLOAT, 1e-8),
    'loss_tolerance': (_FLOAT, 1e-9),
    'ftol': (_FLOAT, 2.220446049250313e-09),
    'spsa_a': (_OPT_FLOAT, None),
    'spsa_c': (_FLOAT, 0.01),
    'spsa_A': (_FLOAT, 10.0),
    'spsa_alpha': (_FLOAT, 0.602),
    'spsa_gamma': (_FLOAT, 0.101),
    'spsa_calibration_samples': (_INT, 5),
    'seed': (_OPT_INT, None),
}

MEASUREMENT_KEYS = {
    'kind': (_STR, EXACT),
    'shots': (_OPT_INT, None),
    'depolarizing_1q': (_FLOAT, 0.0),
    'depolarizing_2q': (_FLOAT, 0.0),
    'readout_flip': (_FLOAT, 0.0),
    'shots_per_trajectory': (_INT, 64),
}

NESTED = {
    'policy': POLICY_KEYS,
    'optimizer': OPTIMIZER_KEYS,
    'measurement': MEASUREMENT_KEYS,
}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _check(key, kind, value):
    """value coerced to `kind`, or ConfigError naming `key`"""
    if kind.startswith('optional '):
        if value is None:
            return None
        kind = kind[len('optional '):]
    if kind == _INT:
        if not _is_int(value):
            raise ConfigError(key, "expected an integer, got %r" % (value,))
        return value
    if kind == _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, "expected a number, got %r" % (value,))
        if not math.isfinite(value):
            raise ConfigError(key, "must be finite")
        return float(value)
    if kind == _BOOL:
        if not isinstance(value, bool):
            raise ConfigError(key, "expected true or false, got %r" % (value,))
        return value
    if kind == _STR:
        if not isinstance(value, str):
            raise ConfigError(key, "expected a string, got %r" % (value,))
        return value
    if kind == _INT_LIST:
        if not isinstance(value, list) or not all(_is_int(v) for v in value):
            raise ConfigError(key, "expected a list of integers, got %r" % (value,))
        return list(value)
    raise AssertionError(kind)


def _read_section(data, keys, prefix=''):
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip('.') or '<root>', "expected a JSON object")
    allowed = set(keys) if prefix else set(keys) | set(NESTED)
    for key in data:
        if key not in allowed:
            raise ConfigError(prefix + key, "unknown key")
    out = {}
    for key, (kind, default) in keys.items():
        if key in data:
            out[key] = _check(prefix + key, kind, data[key])
        elif default is _REQUIRED:
            raise ConfigError(prefix + key, "missing required key")
        else:
            out[key] = list(default) if isinstance(default, list) else default
    return out


@dataclass
class ExperimentSpec(object):
    """
    A validated experiment: the model, the time grid and everything needed
    to build one EvolutionConfig per run
    """
    name: str
    model: str
    num_qubits: int
    dt: float
    num_steps: int
    ansatz_blocks: int
    J: float = -0.25
    h: float = -1.0
    Jx: float = 1.0
    Jy: float = 0.8
    Jz: float = 0.6
    periodic: bool = False
    hamiltonian_file: str = None
    initial_flips: tuple = ()
    trotter_steps: int = 8
    num_runs: int = 1
    seed: int = 0
    policy: SweepPolicy = SweepPolicy()
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    measurement: MeasurementConfig = MeasurementConfig()
    source: dict = field(default=None, repr=False, compare=False)

    def hamiltonian(self):
        if self.model == 'tfim':
            return build_tfim(self.num_qubits, self.J, self.h, self.periodic)
        if self.model == 'xyz':
            return build_xyz(self.num_qubits, self.Jx, self.Jy, self.Jz, self.periodic)
        return load_pauli_sum(self.hamiltonian_file, self.num_qubits)

    def observables(self):
        ps = self.hamiltonian()
        if self.model == 'tfim':
            return tfim_observables(ps)
        if self.model == 'xyz':
            return xyz_observables(ps)
        return OrderedDict([('energy', ps)])

    def model_key(self):
        """what two experiments must share to be compared side by side"""
        return (self.model, self.num_qubits, self.J, self.h, self.Jx, self.Jy,
                self.Jz, self.periodic, self.hamiltonian_file,
                tuple(self.initial_flips), self.dt, self.num_steps,
                self.trotter_steps, self.measurement)

    def evolution_config(self, run_index=0):
        """EvolutionConfig of run `run_index`, seeded with seed + run_index"""
        return EvolutionConfig(hamiltonian=self.hamiltonian(),
                               ansatz_blocks=self.ansatz_blocks,
                               dt=self.dt, num_steps=self.num_steps,
                               trotter_steps=self.trotter_steps,
                               policy=self.policy, optimizer=self.optimizer,
                               observables=self.observables(),
                               measurement=self.measurement,
                               run_seed=self.seed + run_index,
                               initial_flips=self.initial_flips,
                               name='%s/run_%d' % (self.name, run_index))


def _build(key, cls, **kwargs):
    try:
        return cls(**kwargs)
    except PVQDError as e:
        raise ConfigError(key, str(e))


def spec_from_dict(data, name=None, base_dir='.'):
    """
    Validate an experiment dict; `name` overrides the dict's own name and
    relative Hamiltonian files are resolved against `base_dir`
    """
    if not data:
        raise ConfigError('<root>', "empty experiment")
    top = _read_section(data, TOP_KEYS)
    nested = dict((k, _read_section(data.get(k, {}), keys, k + '.'))
                  for k, keys in NESTED.items())

    if top['model'] not in MODELS:
        raise ConfigError('model', "%r not in %s" % (top['model'], MODELS))
    if top['model'] == 'custom':
        if top['hamiltonian_file'] is None:
            raise ConfigError('hamiltonian_file', "required for the custom model")
        path = top['hamiltonian_file']
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.exists(path):
            raise ConfigError('hamiltonian_file', "%s does not exist" % path)
        top['hamiltonian_file'] = path
    elif top['num_qubits'] is None:
        raise ConfigError('num_qubits', "missing required key")
    if top['num_qubits'] is not None and top['num_qubits'] < 2:
        raise ConfigError('num_qubits', "needs at least 2 qubits")
    for key in ('num_steps', 'trotter_steps', 'ansatz_blocks', 'num_runs'):
        if top[key] < 1:
            raise ConfigError(key, "must be >= 1")
    if not top['dt'] > 0:
        raise ConfigError('dt', "must be positive")
    if top['seed'] < 0:
        raise ConfigError('seed', "must be >= 0")
    n = top['num_qubits']
    for q in top['initial_flips']:
        if q < 0 or (n is not None and q >= n):
            raise ConfigError('initial_flips', "qubit %d outside the register" % q)

    p = nested['policy']
    if p['kind'] not in POLICY_KINDS:
        raise ConfigError('policy.kind', "%r not in %s" % (p['kind'], POLICY_KINDS))
    policy = _build('policy', SweepPolicy,
                    kind=p['kind'], loss_threshold=p['loss_threshold'],
                    stall_ratio=p['stall_ratio'],
                    rng_seed=p['seed'], escalation_window=p['escalation_window'],
                    max_simultaneous_blocks=p['max_simultaneous_blocks'],
                    warm_start_zeta=p['warm_start_zeta'],
                    warm_start_use_increment=p['warm_start_use_increment'],
                    fidelity_reset_each_step=p['fidelity_reset_each_step'],
                    random_init_scale=p['random_init_scale'])
    if policy.escalates and policy.max_simultaneous_blocks > top['ansatz_blocks']:
        raise ConfigError('policy.max_simultaneous_blocks',
                          "exceeds ansatz_blocks = %d" % top['ansatz_blocks'])

    o = nested['optimizer']
    if o['mode'] not in OPTIMIZER_MODES:
        raise ConfigError('optimizer.mode', "%r not in %s" % (o['mode'], OPTIMIZER_MODES))
    optimizer = _build('optimizer', OptimizerConfig,
                       mode=o['mode'], max_iterations=o['max_iterations'],
                       gradient_tolerance=o['gradient_tolerance'],
                       loss_tolerance=o['loss_tolerance'], ftol=o['ftol'],
                       spsa_a=o['spsa_a'], spsa_c=o['spsa_c'], spsa_A=o['spsa_A'],
                       spsa_alpha=o['spsa_alpha'], spsa_gamma=o['spsa_gamma'],
                       spsa_calibration_samples=o['spsa_calibration_samples'],
                       rng_seed=o['seed'])

    m = nested['measurement']
    if m['kind'] not in (EXACT, SHOTS):
        raise ConfigError('measurement.kind', "%r not in %s" % (m['kind'], (EXACT, SHOTS)))
    if m['kind'] == SHOTS and (m['shots'] is None or m['shots'] < 1):
        raise ConfigError('measurement.shots', "shot measurement needs shots >= 1")
    noise = _build('measurement', NoiseSpec,
                   depolarizing_1q=m['depolarizing_1q'],
                   depolarizing_2q=m['depolarizing_2q'],
                   readout_flip=m['readout_flip'],
                   shots_per_trajectory=m['shots_per_trajectory'])
    measurement = MeasurementConfig(m['kind'], m['shots'], noise)

    spec = ExperimentSpec(name=name or top['name'], model=top['model'],
                          num_qubits=n, dt=top['dt'], num_steps=top['num_steps'],
                          ansatz_blocks=top['ansatz_blocks'], J=top['J'], h=top['h'],
                          Jx=top['Jx'], Jy=top['Jy'], Jz=top['Jz'],
                          periodic=top['periodic'],
                          hamiltonian_file=top['hamiltonian_file'],
                          initial_flips=tuple(top['initial_flips']),
                          trotter_steps=top['trotter_steps'],
                          num_runs=top['num_runs'], seed=top['seed'],
                          policy=policy, optimizer=optimizer,
                          measurement=measurement, source=data)
    if spec.model == 'custom':
        try:
            ps = spec.hamiltonian()
        except PVQDError as e:
            raise ConfigError('hamiltonian_file', str(e))
        if n is None:
            spec = replace(spec, num_qubits=ps.num_qubits)
        for q in spec.initial_flips:
            if q >= spec.num_qubits:
                raise ConfigError('initial_flips', "qubit %d outside the register" % q)
    return spec


def parse_config(path):
    """read and validate an experiment JSON file"""
    if not os.path.exists(path):
        raise ConfigError('<file>', "%s does not exist" % path)
    with open(path) as f:
        text = f.read()
    if not text.strip():
        raise ConfigError('<file>', "%s is empty" % path)
    try:
        data = json.loads(text)
    except ValueError as e:
        raise ConfigError('<file>', "%s is not valid JSON: %s" % (path, e))
    if not isinstance(data, dict):
        raise ConfigError('<root>', "expected a JSON object")
    return spec_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
