"""
Experiment presets

Each get_*_subs() returns a plain experiment dict (see config.py). The
dicts can be dumped to JSON with `pvqd presets dump <name>`.
"""
from collections import OrderedDict
import copy


def _ising(N, dt, num_steps, blocks, policy, **extra):
    subs = {
        'model': 'tfim',
        'num_qubits': N,
        'J': -0.25,
        'h': -1.0,
        'dt': dt,
        'num_steps': num_steps,
        'trotter_steps': 8,
        'ansatz_blocks': blocks,
        'num_runs': 10,
        'seed': 1234,
        'policy': policy,
    }
    subs.update(extra)
    return subs


def _xyz(N, dt, num_steps, blocks, policy, **extra):
    subs = {
        'model': 'xyz',
        'num_qubits': N,
        'Jx': 1.0,
        'Jy': 0.8,
        'Jz': 0.6,
        'dt': dt,
        'num_steps': num_steps,
        'trotter_steps': 8,
        'ansatz_blocks': blocks,
        'num_runs': 10,
        'seed': 1234,
        'policy': policy,
    }
    subs.update(extra)
    return subs


def _full():
    return {'kind': 'full'}


def _fidelity(threshold=1e-7, **extra):
    policy = {'kind': 'fidelity', 'loss_threshold': threshold}
    policy.update(extra)
    return policy


#-----------------------------------------------------------
# Ising, 8 qubits, dt = 0.01
def get_ising8_pvqd1_subs():
    """
    standard PVQD, one block
    """
    return _ising(8, 0.01, 100, 1, _full())


def get_ising8_pvqd2_subs():
    """
    standard PVQD, two blocks
    """
    return _ising(8, 0.01, 100, 2, _full())


def get_ising8_fs2_subs():
    """
    fidelity sweep over two blocks
    """
    return _ising(8, 0.01, 100, 2, _fidelity())


def get_ising8_seq2_subs():
    return _ising(8, 0.01, 100, 2, {'kind': 'sequential'})


def get_ising8_rand2_subs():
    return _ising(8, 0.01, 100, 2, {'kind': 'random'})


#-----------------------------------------------------------
# Ising, 10 qubits, dt = 0.03
def get_ising10_pvqd1_subs():
    return _ising(10, 0.03, 100, 1, _full())


def get_ising10_pvqd2_subs():
    return _ising(10, 0.03, 100, 2, _full())


def get_ising10_pvqd4_subs():
    return _ising(10, 0.03, 100, 4, _full())


def get_ising10_fs2_subs():
    return _ising(10, 0.03, 100, 2, _fidelity())


def get_ising10_fs4_subs():
    return _ising(10, 0.03, 100, 4, _fidelity())


#-----------------------------------------------------------
# Heisenberg XYZ, 10 qubits, dt = 0.03
def get_xyz10_pvqd1_subs():
    return _xyz(10, 0.03, 100, 1, _full())


def get_xyz10_pvqd2_subs():
    return _xyz(10, 0.03, 100, 2, _full())


def get_xyz10_pvqd4_subs():
    return _xyz(10, 0.03, 100, 4, _full())


def get_xyz10_fs2_subs():
    return _xyz(10, 0.03, 100, 2, _fidelity())


def get_xyz10_fs4_subs():
    return _xyz(10, 0.03, 100, 4, _fidelity())


def get_xyz12_sweep2_subs():
    """
    fidelity sweep that widens to two simultaneous blocks after thirty
    consecutive steps above threshold, i.e. once single blocks have run out
    of headroom
    """
    return _xyz(12, 0.05, 80, 2, _fidelity(escalation_window=30,
                                          max_simultaneous_blocks=2))


#-----------------------------------------------------------
# warm starting, dt = 0.05
def get_ising4_warm_subs(zeta=-0.05):
    return _ising(4, 0.05, 40, 2, _fidelity(warm_start_zeta=zeta))


def get_ising8_warm_subs(zeta=-0.05):
    return _ising(8, 0.05, 40, 2, _fidelity(warm_start_zeta=zeta))


def get_xyz8_warm_subs(zeta=-0.05):
    return _xyz(8, 0.05, 40, 2, _fidelity(warm_start_zeta=zeta))


def get_ising4_cold_subs():
    """
    reference for the warm start presets
    """
    return get_ising4_warm_subs(zeta=0.0)


#-----------------------------------------------------------
# noisy settings: SPSA and sampled observables
def _noisy_measurement(shots=4096):
    return {
        'kind': 'shots',
        'shots': shots,
        'depolarizing_1q': 1e-3,
        'depolarizing_2q': 1e-2,
        'readout_flip': 0.0,
    }


def _spsa():
    return {'mode': 'spsa', 'max_iterations': 200, 'spsa_a': 0.05,
            'loss_tolerance': 1e-4}


def get_ising4_noisy_pvqd2_subs():
    return _ising(4, 0.03, 30, 2, _full(), optimizer=_spsa(),
                  measurement=_noisy_measurement())


def get_ising4_noisy_fs2_subs():
    return _ising(4, 0.03, 30, 2, _fidelity(1e-4), optimizer=_spsa(),
                  measurement=_noisy_measurement())


def get_ising8_noisy_pvqd2_subs():
    return _ising(8, 0.03, 30, 2, _full(), optimizer=_spsa(),
                  measurement=_noisy_measurement())


def get_ising8_noisy_fs2_subs():
    return _ising(8, 0.03, 30, 2, _fidelity(1e-4), optimizer=_spsa(),
                  measurement=_noisy_measurement())


#-----------------------------------------------------------
# iteration and wall time accounting, dt = 0.05
def get_ising4_timing_subs():
    return _ising(4, 0.05, 40, 2, _fidelity())


def get_ising8_timing_subs():
    return _ising(8, 0.05, 40, 2, _fidelity())


def get_tfim2_golden_subs():
    """
    two qubit chain small enough to pin the CSV layout
    """
    return _ising(2, 0.1, 3, 2, _fidelity(1e-6), num_runs=1, seed=7)


PRESETS = OrderedDict([
    ('ising8_pvqd1', get_ising8_pvqd1_subs),
    ('ising8_pvqd2', get_ising8_pvqd2_subs),
    ('ising8_fs2', get_ising8_fs2_subs),
    ('ising8_seq2', get_ising8_seq2_subs),
    ('ising8_rand2', get_ising8_rand2_subs),
    ('ising10_pvqd1', get_ising10_pvqd1_subs),
    ('ising10_pvqd2', get_ising10_pvqd2_subs),
    ('ising10_pvqd4', get_ising10_pvqd4_subs),
    ('ising10_fs2', get_ising10_fs2_subs),
    ('ising10_fs4', get_ising10_fs4_subs),
    ('xyz10_pvqd1', get_xyz10_pvqd1_subs),
    ('xyz10_pvqd2', get_xyz10_pvqd2_subs),
    ('xyz10_pvqd4', get_xyz10_pvqd4_subs),
    ('xyz10_fs2', get_xyz10_fs2_subs),
    ('xyz10_fs4', get_xyz10_fs4_subs),
    ('xyz12_sweep2', get_xyz12_sweep2_subs),
    ('ising4_warm', get_ising4_warm_subs),
    ('ising4_cold', get_ising4_cold_subs),
    ('ising8_warm', get_ising8_warm_subs),
    ('xyz8_warm', get_xyz8_warm_subs),
    ('ising4_noisy_pvqd2', get_ising4_noisy_pvqd2_subs),
    ('ising4_noisy_fs2', get_ising4_noisy_fs2_subs),
    ('ising8_noisy_pvqd2', get_ising8_noisy_pvqd2_subs),
    ('ising8_noisy_fs2', get_ising8_noisy_fs2_subs),
    ('ising4_timing', get_ising4_timing_subs),
    ('ising8_timing', get_ising8_timing_subs),
    ('tfim2_golden', get_tfim2_golden_subs),
])


def get_preset(name):
    """a fresh copy of preset `name`, with its name filled in"""
    if name not in PRESETS:
        raise KeyError("unknown preset %r; choose from %s" % (name, ', '.join(PRESETS)))
    subs = copy.deepcopy(PRESETS[name]())
    subs['name'] = name
    return subs
