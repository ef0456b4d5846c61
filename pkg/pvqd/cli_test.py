"""Experiment runner, CSV layout and the command line"""
import csv
import json
from dataclasses import replace
import pytest

from pvqd import cli, engine
from pvqd.cli import main, run_experiment, compare_policies
from pvqd.config import spec_from_dict
from pvqd.exceptions import ComparisonError, EvolutionError, NumericFailureError
from pvqd.subs import get_preset

GOLDEN_COLUMNS = ['step', 't', 'energy_sim', 'energy_exact', 'sigma_x_sim',
                  'sigma_x_exact', 'sigma_z_sim', 'sigma_z_exact', 'loss',
                  'infidelity', 'iterations', 'loss_evals', 'grad_evals',
                  'active_blocks', 'active_width', 'optimized_params']


def golden(**changes):
    return replace(spec_from_dict(get_preset('tfim2_golden')), **changes)


def read_csv(path):
    with open(path) as f:
        return list(csv.reader(f))


def test_golden_schema(tmp_path):
    report = run_experiment(golden(), str(tmp_path))
    rows = read_csv(tmp_path / 'tfim2_golden' / 'run_0.csv')
    assert rows[0] == GOLDEN_COLUMNS
    assert [r[0] for r in rows[1:]] == ['1', '2', '3']
    for r in rows[1:]:
        assert r[-1] == '3'
        assert r[-2] == '1'
        float(r[GOLDEN_COLUMNS.index('infidelity')])
    timing = read_csv(tmp_path / 'tfim2_golden' / 'run_0_timing.csv')
    assert timing[0] == ['step', 'wall_ms'] and len(timing) == 4

    # a single run is its own aggregate
    assert report.num_runs == 1
    assert all(v == 0.0 for v in report.stds['energy_sim'])
    energy = [float(r[2]) for r in rows[1:]]
    assert report.means['energy_sim'] == energy
    agg = read_csv(tmp_path / 'tfim2_golden' / 'aggregate.csv')
    assert agg[0][:4] == ['step', 't', 'energy_sim_mean', 'energy_sim_std']
    assert 'active_blocks_mean' not in agg[0]
    with open(tmp_path / 'tfim2_golden' / 'aggregate.json') as f:
        assert json.load(f)['num_runs'] == 1


def test_reruns_are_byte_identical(tmp_path):
    spec = golden(num_runs=2)
    run_experiment(spec, str(tmp_path / 'a'), threads=2)
    run_experiment(spec, str(tmp_path / 'b'))
    for name in ('run_0.csv', 'run_1.csv', 'aggregate.csv'):
        a = (tmp_path / 'a' / 'tfim2_golden' / name).read_bytes()
        b = (tmp_path / 'b' / 'tfim2_golden' / name).read_bytes()
        assert a == b


def test_multiple_runs(tmp_path):
    report = run_experiment(golden(num_runs=3), str(tmp_path))
    out = tmp_path / 'tfim2_golden'
    assert sorted(p.name for p in out.glob('run_?.csv')) == ['run_0.csv', 'run_1.csv',
                                                             'run_2.csv']
    assert report.num_runs == 3 and len(report.summaries) == 3


def test_compare(tmp_path):
    full = golden(name='full', policy=replace(golden().policy, kind='full'))
    fs = golden(name='fs')
    rows = compare_policies([full, fs], str(tmp_path))
    assert [r['name'] for r in rows] == ['full', 'fs']
    assert rows[0]['mean_optimized_params'] == 6.0
    assert rows[1]['mean_optimized_params'] == 3.0
    assert len(read_csv(tmp_path / 'comparison.csv')) == 3
    with pytest.raises(ComparisonError):
        compare_policies([fs, golden(name='other', dt=0.05)], str(tmp_path))


def test_failed_run_leaves_partial_files(tmp_path, monkeypatch):
    calls = {'n': 0}
    real = engine.optimize

    def failing(*args):
        calls['n'] += 1
        if calls['n'] == 2:
            raise NumericFailureError("projection loss became inf")
        return real(*args)

    monkeypatch.setattr(engine, 'optimize', failing)
    with pytest.raises(EvolutionError):
        run_experiment(golden(), str(tmp_path))
    out = tmp_path / 'tfim2_golden'
    assert (out / 'run_0.csv.partial').exists()
    assert not (out / 'run_0.csv').exists()
    assert not (out / 'aggregate.csv').exists()
    assert len(read_csv(out / 'run_0.csv.partial')) == 2


def test_unexpected_errors_mark_partial_files(tmp_path, monkeypatch):
    real = cli.run_evolution

    def odd_seeds_fail(cfg, verbosity=0):
        if cfg.run_seed % 2:
            raise ValueError("malformed observable table")
        return real(cfg, verbosity)

    monkeypatch.setattr(cli, 'run_evolution', odd_seeds_fail)
    with pytest.raises(ValueError):
        run_experiment(golden(num_runs=2, seed=4), str(tmp_path))
    out = tmp_path / 'tfim2_golden'
    assert (out / 'run_0.csv.partial').exists()
    assert (out / 'run_0_timing.csv.partial').exists()
    assert not (out / 'run_0.csv').exists()
    assert not (out / 'run_1.csv').exists()
    assert not (out / 'aggregate.csv').exists()

    assert main(['run', 'tfim2_golden', '--out-dir', str(tmp_path / 'cli'),
                 '--seed', '4', '--runs', '2']) == 1


def test_main(tmp_path, capsys):
    assert main(['presets', 'list']) == 0
    assert 'ising8_fs2' in capsys.readouterr().out.split()
    assert main(['presets', 'dump', 'xyz10_fs4']) == 0
    dumped = json.loads(capsys.readouterr().out)
    assert dumped['Jy'] == 0.8
    assert main(['presets', 'dump', 'nope']) == 1

    config = tmp_path / 'bad.json'
    config.write_text('{"model": "tfim"}')
    assert main(['run', str(config)]) == 1
    assert 'dt: missing' in capsys.readouterr().err

    assert main(['run', 'tfim2_golden', '--out-dir', str(tmp_path), '--seed', '3',
                 '--runs', '2']) == 0
    assert (tmp_path / 'tfim2_golden' / 'run_1.csv').exists()
