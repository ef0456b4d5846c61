"""
Command line front end

    pvqd run ising8_fs2.json --runs 10 --threads 4 -v
    pvqd compare pvqd1.json pvqd2.json fs2.json
    pvqd presets list
    pvqd presets dump ising8_fs2 > ising8_fs2.json

Every run writes run_<r>.csv and run_<r>_timing.csv into
<out-dir>/<experiment name>/, followed by aggregate.csv and aggregate.json.
"""
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace, asdict
import argparse
import csv
import json
import logging
import os
import sys
import numpy as np

from pvqd.exceptions import PVQDError, EvolutionError, ComparisonError
from pvqd.engine import run_evolution
from pvqd.config import parse_config, spec_from_dict
from pvqd.subs import PRESETS, get_preset

logger = logging.getLogger(__name__)

TRAILING_COLUMNS = ('loss', 'infidelity', 'iterations', 'loss_evals',
                    'grad_evals', 'active_blocks', 'active_width',
                    'optimized_params')
NON_NUMERIC = ('step', 't', 'active_blocks')


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def run_columns(observables):
    """per-run CSV header; energy first, then the other observables in order"""
    names = ['energy'] + [o for o in observables if o != 'energy']
    cols = ['step', 't']
    for name in names:
        cols.extend(['%s_sim' % name, '%s_exact' % name])
    return cols + list(TRAILING_COLUMNS)


def record_row(record):
    row = OrderedDict([('step', record.step_index), ('t', record.time)])
    names = ['energy'] + [o for o in record.simulated if o != 'energy']
    for name in names:
        row['%s_sim' % name] = record.simulated[name]
        row['%s_exact' % name] = record.exact[name]
    row['loss'] = record.loss
    row['infidelity'] = record.infidelity
    row['iterations'] = record.iterations
    row['loss_evals'] = record.loss_evaluations
    row['grad_evals'] = record.gradient_evaluations
    row['active_blocks'] = ' '.join(str(b) for b in record.active_blocks)
    row['active_width'] = record.active_width
    row['optimized_params'] = record.optimized_params
    return row


def write_run_csv(path, records, observables):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(run_columns(observables))
        for record in records:
            writer.writerow([v if isinstance(v, str) else _fmt(v)
                             for v in record_row(record).values()])


def write_timing_csv(path, records):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['step', 'wall_ms'])
        for record in records:
            writer.writerow([record.step_index, _fmt(record.wall_time_ms)])


@dataclass
class AggregateReport(object):
    """
    per-step mean and population standard deviation across the runs of one
    experiment, for every numeric per-run column
    """
    name: str
    num_runs: int
    steps: list
    times: list
    means: OrderedDict
    stds: OrderedDict
    summaries: list = field(default_factory=list)

    def row(self, k):
        out = OrderedDict([('step', self.steps[k]), ('t', self.times[k])])
        for col in self.means:
            out['%s_mean' % col] = self.means[col][k]
            out['%s_std' % col] = self.stds[col][k]
        return out

    def to_json(self):
        return OrderedDict([
            ('name', self.name),
            ('num_runs', self.num_runs),
            ('step', list(self.steps)),
            ('t', list(self.times)),
            ('mean', OrderedDict((c, list(v)) for c, v in self.means.items())),
            ('std', OrderedDict((c, list(v)) for c, v in self.stds.items())),
            ('runs', [asdict(s) for s in self.summaries]),
        ])


def aggregate(name, results):
    """AggregateReport over completed RunResults of one experiment"""
    tables = [[record_row(r) for r in res.records] for res in results]
    first = tables[0]
    columns = [c for c in first[0] if c not in NON_NUMERIC]
    means = OrderedDict()
    stds = OrderedDict()
    for col in columns:
        values = np.array([[float(row[col]) for row in table] for table in tables])
        means[col] = [float(v) for v in values.mean(axis=0)]
        stds[col] = [float(v) for v in values.std(axis=0)]
    return AggregateReport(name=name, num_runs=len(results),
                           steps=[row['step'] for row in first],
                           times=[float(row['t']) for row in first],
                           means=means, stds=stds,
                           summaries=[res.summary for res in results])


def write_aggregate(out_dir, report):
    with open(os.path.join(out_dir, 'aggregate.csv'), 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        for k in range(len(report.steps)):
            row = report.row(k)
            if k == 0:
                writer.writerow(list(row))
            writer.writerow([_fmt(v) for v in row.values()])
    with open(os.path.join(out_dir, 'aggregate.json'), 'w') as f:
        json.dump(report.to_json(), f, indent=2)
        f.write('\n')


def _mark_partial(paths):
    for path in paths:
        if os.path.exists(path):
            os.replace(path, path + '.partial')


def run_experiment(spec, out_dir='results', threads=1, verbosity=0):
    """
    Run spec.num_runs seeded runs (seed + r) and write per-run and aggregate
    files into out_dir/<spec.name>. On a failed run every file written so far
    gets a .partial suffix and the error is re-raised.
    """
    exp_dir = os.path.join(out_dir, spec.name)
    os.makedirs(exp_dir, exist_ok=True)
    configs = [spec.evolution_config(r) for r in range(spec.num_runs)]
    if verbosity >= 1:
        logger.info("%s: %d runs on %d thread(s) -> %s", spec.name, spec.num_runs,
                    threads, exp_dir)

    written = []
    results = [None] * len(configs)
    failure = None
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(run_evolution, cfg, verbosity) for cfg in configs]
        for r, future in enumerate(futures):
            run_csv = os.path.join(exp_dir, 'run_%d.csv' % r)
            timing_csv = os.path.join(exp_dir, 'run_%d_timing.csv' % r)
            try:
                res = future.result()
            except EvolutionError as e:
                write_run_csv(run_csv, e.records, configs[r].observables)
                write_timing_csv(timing_csv, e.records)
                written.extend([run_csv, timing_csv])
                failure = failure or e
                continue
            except Exception as e:
                logger.error("%s run %d failed: %r", spec.name, r, e)
                failure = failure or e
                continue
            write_run_csv(run_csv, res.records, configs[r].observables)
            write_timing_csv(timing_csv, res.records)
            written.extend([run_csv, timing_csv])
            results[r] = res
    if failure is not None:
        _mark_partial(written)
        raise failure

    report = aggregate(spec.name, results)
    write_aggregate(exp_dir, report)
    return report


COMPARISON_SUMMARY = ('mean_infidelity', 'max_infidelity', 'mean_step_infidelity',
                      'total_iterations', 'mean_iterations_per_step', 'total_wall_time_ms',
                      'mean_wall_ms_per_iteration', 'mean_optimized_params')


def compare_policies(specs, out_dir='results', threads=1, verbosity=0):
    """
    Run each spec and tabulate one row per spec: average observable errors,
    infidelity, iteration and timing figures averaged over its runs. The specs
    may differ only in sweep policy, optimizer and ansatz blocks.
    """
    if not specs:
        raise ComparisonError("nothing to compare")
    key = specs[0].model_key()
    for spec in specs[1:]:
        if spec.model_key() != key:
            raise ComparisonError("%s and %s describe different models"
                                  % (specs[0].name, spec.name))
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ComparisonError("experiment names must be distinct: %s" % names)

    rows = []
    for spec in specs:
        report = run_experiment(spec, out_dir, threads, verbosity)
        row = OrderedDict([('name', spec.name), ('policy', spec.policy.kind),
                           ('ansatz_blocks', spec.ansatz_blocks),
                           ('num_runs', report.num_runs)])
        summaries = report.summaries
        for obs in summaries[0].observable_errors:
            errs = np.array([s.observable_errors[obs] for s in summaries])
            row['%s_error' % obs] = float(errs[:, 0].mean())
            row['%s_error_std' % obs] = float(errs[:, 1].mean())
        for attr in COMPARISON_SUMMARY:
            row[attr] = float(np.mean([getattr(s, attr) for s in summaries]))
        rows.append(row)

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, 'comparison.csv'), 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row.values()])
    return rows


def _load(path, args):
    """experiment file or preset name, with command line overrides"""
    if not os.path.exists(path) and path in PRESETS:
        spec = spec_from_dict(get_preset(path))
    else:
        spec = parse_config(path)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.runs is not None:
        spec = replace(spec, num_runs=args.runs)
    return spec


def build_parser():
    parser = argparse.ArgumentParser(prog='pvqd', description=__doc__.split('\n')[1])
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v one line per run, -vv one line per time step')
    sub = parser.add_subparsers(dest='command', required=True)

    def run_flags(p):
        p.add_argument('--seed', type=int, default=None, help='base seed override')
        p.add_argument('--runs', type=int, default=None, help='number of seeded runs')
        p.add_argument('--out-dir', default='results')
        p.add_argument('--threads', type=int, default=1)

    p = sub.add_parser('run', help='run one experiment')
    p.add_argument('config', help='experiment JSON file or preset name')
    run_flags(p)

    p = sub.add_parser('compare', help='run experiments side by side')
    p.add_argument('configs', nargs='+')
    run_flags(p)

    p = sub.add_parser('presets', help='list or dump the bundled presets')
    p.add_argument('action', choices=('list', 'dump'))
    p.add_argument('name', nargs='?')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    verbosity = min(args.verbose, 2)
    try:
        if args.command == 'presets':
            if args.action == 'list':
                for name in PRESETS:
                    print(name)
                return 0
            if args.name not in PRESETS:
                print("pvqd: unknown preset %r" % (args.name,), file=sys.stderr)
                return 1
            json.dump(get_preset(args.name), sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write('\n')
            return 0
        if args.runs is not None and args.runs < 1:
            print("pvqd: --runs must be >= 1", file=sys.stderr)
            return 1
        if args.command == 'run':
            run_experiment(_load(args.config, args), args.out_dir, args.threads,
                           verbosity)
        else:
            specs = [_load(path, args) for path in args.configs]
            for row in compare_policies(specs, args.out_dir, args.threads, verbosity):
                print("%-24s infidelity %.3e  iterations %8.1f  params/step %.1f"
                      % (row['name'], row['mean_infidelity'],
                         row['total_iterations'], row['mean_optimized_params']))
    except PVQDError as e:
        print("pvqd: %s" % e, file=sys.stderr)
        return 1
    except Exception:
        logger.exception("pvqd: unexpected failure")
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
