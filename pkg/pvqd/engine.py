"PVQD time evolution with blockwise parameter sweeping"
from collections import OrderedDict
from dataclasses import dataclass, field, replace
import logging
import time
import numpy as np

from pvqd.exceptions import (InvalidConfigError, NumericFailureError,
                             EvolutionError)
from pvqd.statevec import StateVector, expectation
from pvqd.pauli import propagator_for, infidelity, tfim_observables, build_tfim
from pvqd.circuits import build_blocked_ansatz, trotter_step_circuit, evaluate
from pvqd.variational import LossContext, OptimizerConfig, SPSA, optimize
from pvqd.sweep import (SweepPolicy, initial_sweep_state, select_mask,
                        next_window, commit_step, warm_start_initial, FIDELITY)
from pvqd.measurement import (NoiseSpec, sample_trajectories,
                              measure_observable_shots)

logger = logging.getLogger(__name__)

EXACT = 'exact'
SHOTS = 'shots'


@dataclass(frozen=True)
class MeasurementConfig(object):
    """observable backend: exact statevector or shot sampling with noise"""
    kind: str = EXACT
    shots: int = None
    noise: NoiseSpec = NoiseSpec()

    def __post_init__(self):
        if self.kind not in (EXACT, SHOTS):
            raise InvalidConfigError("measurement kind %r not in (%r, %r)"
                                     % (self.kind, EXACT, SHOTS))
        if self.kind == SHOTS and (self.shots is None or self.shots < 1):
            raise InvalidConfigError("shot measurement needs shots >= 1")


@dataclass
class EvolutionConfig(object):
    """
    One evolution run
    ________
    hamiltonian     PauliSum H
    ansatz_blocks   n, repetitions of the parameterized Trotter block
    trotter_steps   p, sub-steps of the projection target
    dt, num_steps   time step and N_t
    observables     name -> PauliSum, 'energy' first
    initial_flips   qubits prepared in |1> (default |0...0>)
    """
    hamiltonian: object
    ansatz_blocks: int
    dt: float
    num_steps: int
    trotter_steps: int = 8
    policy: SweepPolicy = SweepPolicy()
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    observables: OrderedDict = None
    measurement: MeasurementConfig = MeasurementConfig()
    run_seed: int = 0
    initial_flips: tuple = ()
    name: str = 'run'

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidConfigError("dt must be positive, got %r" % (self.dt,))
        if self.num_steps < 1:
            raise InvalidConfigError("num_steps must be >= 1, got %r" % (self.num_steps,))
        if self.observables is None:
            self.observables = OrderedDict([('energy', self.hamiltonian)])
        self.observables = OrderedDict(self.observables)
        self.initial_flips = tuple(self.initial_flips)


@dataclass
class TimeStepRecord(object):
    """telemetry of one time step"""
    step_index: int
    time: float
    simulated: OrderedDict
    exact: OrderedDict
    std_errors: OrderedDict
    loss: float
    infidelity: float
    iterations: int
    loss_evaluations: int
    gradient_evaluations: int
    active_blocks: tuple
    active_width: int
    optimized_params: int
    passes: int = 1
    wall_time_ms: float = 0.0


@dataclass
class Summary(object):
    """
    per-observable (mean, std) of |exact - simulated| over the steps, plus
    infidelity, iteration and timing totals

    `mean_step_infidelity` averages the per-step projection infidelity
    loss * dt^2, the error added by each step alone; `mean_infidelity` is
    measured against the exact state and accumulates over the run.
    """
    observable_errors: OrderedDict
    mean_infidelity: float
    max_infidelity: float
    mean_step_infidelity: float
    total_iterations: int
    mean_iterations_per_step: float
    total_wall_time_ms: float
    mean_wall_ms_per_step: float
    mean_wall_ms_per_iteration: float
    mean_optimized_params: float


@dataclass
class RunResult(object):
    config: EvolutionConfig
    records: list
    summary: Summary


def summarize(records):
    """mean absolute error per observable over the steps, and run totals"""
    if not records:
        raise InvalidConfigError("cannot summarize an empty run")
    errors = OrderedDict()
    for name in records[0].simulated:
        diff = np.array([abs(r.exact[name] - r.simulated[name]) for r in records])
        errors[name] = (float(diff.mean()), float(diff.std()))
    infid = np.array([r.infidelity for r in records])
    step_infid = np.array([r.loss * (r.time / r.step_index) ** 2 for r in records])
    iterations = sum(r.iterations for r in records)
    wall = float(sum(r.wall_time_ms for r in records))
    return Summary(observable_errors=errors,
                   mean_infidelity=float(infid.mean()),
                   max_infidelity=float(infid.max()),
                   mean_step_infidelity=float(step_infid.mean()),
                   total_iterations=int(iterations),
                   mean_iterations_per_step=iterations / float(len(records)),
                   total_wall_time_ms=wall,
                   mean_wall_ms_per_step=wall / len(records),
                   mean_wall_ms_per_iteration=wall / iterations if iterations else 0.0,
                   mean_optimized_params=float(np.mean([r.optimized_params for r in records])))


def _seeds(run_seed):
    """independent streams for the sweep, the optimizer and the measurements"""
    sweep, optimizer, measure = np.random.SeedSequence(run_seed).spawn(3)
    return sweep, optimizer, measure


class Evolution(object):
    """
    Static parts of a run (circuits, oracle factorization); `run()` does the
    time stepping
    """
    def __init__(self, cfg):
        self.cfg = cfg
        ps = cfg.hamiltonian
        self.ansatz = build_blocked_ansatz(ps, cfg.ansatz_blocks)
        self.target_step = trotter_step_circuit(ps, cfg.dt, cfg.trotter_steps)
        self.initial_state = StateVector.product_state(ps.num_qubits, cfg.initial_flips)
        self.propagator = propagator_for(ps)
        self.initial_coefficients = self.propagator.to_eigenbasis(self.initial_state)

        sweep_seq, opt_seq, measure_seq = _seeds(cfg.run_seed)
        policy = cfg.policy
        if policy.rng_seed is None:
            policy = replace(policy, rng_seed=int(sweep_seq.generate_state(1)[0]))
        self.policy = policy
        self.optimizer_rng = np.random.default_rng(opt_seq)
        self.measure_rng = np.random.default_rng(measure_seq)

    def _optimizer_for_step(self):
        cfg = self.cfg.optimizer
        if cfg.mode != SPSA:
            return cfg
        seed = int(self.optimizer_rng.integers(2 ** 62))
        if cfg.rng_seed is not None:
            seed ^= int(cfg.rng_seed)
        return replace(cfg, rng_seed=seed)

    def step(self, theta, sweep_state, prev_result):
        """
        optimize one time step; returns (theta, sweep_state, result, summary
        of the passes)
        """
        n = self.ansatz.num_blocks
        size = self.ansatz.block_size
        mask, sweep_state = select_mask(self.policy, sweep_state, prev_result, n, size)
        target = None
        touched = []
        counts = [0, 0, 0]
        width = mask.width
        optimized = 0
        while True:
            ctx = LossContext(self.ansatz, theta, self.target_step, self.cfg.dt,
                              self.initial_state, target)
            d0 = warm_start_initial(self.policy, sweep_state, theta, mask)
            result = optimize(ctx, mask, d0, self._optimizer_for_step())
            theta = theta + result.d_theta_star.values
            sweep_state = commit_step(sweep_state, mask, result)
            touched.extend(b for b in mask.active_blocks if b not in touched)
            counts[0] += result.iterations
            counts[1] += result.loss_evaluations
            counts[2] += result.gradient_evaluations
            optimized = max(optimized, mask.num_parameters)
            nxt = next_window(self.policy, sweep_state, result, n, size)
            if nxt is None:
                break
            mask, sweep_state = nxt
            target = ctx.target_amplitudes
        passes = sweep_state.passes
        return theta, sweep_state, result, (tuple(touched), width, optimized, counts, passes)

    def measure(self, theta, psi):
        cfg = self.cfg
        simulated = OrderedDict()
        std_errors = OrderedDict()
        if cfg.measurement.kind == EXACT:
            for name, obs in cfg.observables.items():
                simulated[name] = expectation(psi, obs)
                std_errors[name] = 0.0
            return simulated, std_errors
        m = cfg.measurement
        trajectories = sample_trajectories(self.ansatz, theta, self.initial_state,
                                           m.noise, m.shots, self.measure_rng)
        for name, obs in cfg.observables.items():
            simulated[name], std_errors[name] = measure_observable_shots(
                psi, obs, m.shots, m.noise, self.measure_rng, trajectories)
        return simulated, std_errors

    def run(self, verbosity=0):
        cfg = self.cfg
        theta = self.ansatz.zero_parameters().values
        sweep_state = initial_sweep_state(self.policy, self.ansatz.num_blocks)
        prev_result = None
        records = []
        if verbosity >= 1:
            logger.info("%s: %d qubits, %d terms, n=%d, p=%d, dt=%g, %d steps, %s sweep",
                        cfg.name, cfg.hamiltonian.num_qubits, cfg.hamiltonian.num_terms,
                        cfg.ansatz_blocks, cfg.trotter_steps, cfg.dt, cfg.num_steps,
                        self.policy.kind)
        for k in range(1, cfg.num_steps + 1):
            t = k * cfg.dt
            start = time.perf_counter()
            try:
                theta, sweep_state, prev_result, info = self.step(theta, sweep_state,
                                                                  prev_result)
            except NumericFailureError as e:
                raise EvolutionError("%s aborted at step %d: %s" % (cfg.name, k, e),
                                     records, e)
            wall_ms = 1e3 * (time.perf_counter() - start)
            blocks, width, optimized, counts, passes = info

            psi = evaluate(self.ansatz, theta, self.initial_state)
            exact_state = self.propagator.evolve_coefficients(self.initial_coefficients, t)
            simulated, std_errors = self.measure(theta, psi)
            exact = OrderedDict((name, expectation(exact_state, obs))
                                for name, obs in cfg.observables.items())
            record = TimeStepRecord(step_index=k, time=t, simulated=simulated,
                                    exact=exact, std_errors=std_errors,
                                    loss=prev_result.final_loss,
                                    infidelity=infidelity(exact_state, psi),
                                    iterations=counts[0], loss_evaluations=counts[1],
                                    gradient_evaluations=counts[2],
                                    active_blocks=blocks, active_width=width,
                                    optimized_params=optimized, passes=passes,
                                    wall_time_ms=wall_ms)
            records.append(record)
            if verbosity >= 2:
                logger.debug("%s step %d t=%.4f blocks=%s it=%d loss=%.3e infid=%.3e",
                             cfg.name, k, t, blocks, counts[0], record.loss,
                             record.infidelity)
        result = RunResult(cfg, records, summarize(records))
        if verbosity >= 1:
            logger.info("%s: mean infidelity %.3e, %d iterations, %.1f s",
                        cfg.name, result.summary.mean_infidelity,
                        result.summary.total_iterations,
                        result.summary.total_wall_time_ms / 1e3)
        return result


def run_evolution(cfg, verbosity=0):
    """
    PVQD loop: select blocks, optimize the masked projection loss, commit
    theta, measure, and compare with the exact state at t = k dt
    """
    return Evolution(cfg).run(verbosity)


def test():
    """
    Short fidelity sweep on a 4 qubit Ising chain
    """
    ps = build_tfim(4, -0.25, -1.0)
    cfg = EvolutionConfig(hamiltonian=ps, ansatz_blocks=2, dt=0.05, num_steps=3,
                          policy=SweepPolicy(kind=FIDELITY, loss_threshold=1e-4),
                          observables=tfim_observables(ps))
    result = run_evolution(cfg)
    assert len(result.records) == 3
    assert result.summary.max_infidelity < 1e-2


if __name__ == "__main__":
    from pvqd.subs import get_preset
    from pvqd.config import spec_from_dict

    logging.basicConfig(level=logging.DEBUG, format="%(message)s")
    spec = spec_from_dict(get_preset('ising8_fs2'))
    res = run_evolution(spec.evolution_config(0), verbosity=2)
    for name, (mean, std) in res.summary.observable_errors.items():
        print("%-8s %.5f +- %.5f" % (name, mean, std))
    print("infidelity %.3e" % res.summary.mean_infidelity)
