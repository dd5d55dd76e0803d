"""Builds a simulation for one algorithm, runs it to quiescence, and
verifies the run-wide invariants before handing back results."""

from dataclasses import dataclass

from .baselines import (EagleCentral, EagleScheduler, EagleWorker,
                        SparrowScheduler, SparrowWorker)
from .engine import SimConfig, Simulation, SimulationError, derived_rng
from .scheduler import PeacockScheduler
from .worker import IDLE, PeacockWorker


@dataclass
class RunResult:
    config: SimConfig
    records: list
    counters: dict
    makespan_us: int

    @property
    def workers(self):
        return self.config.workers


def _build_peacock(sim, config):
    W = config.workers
    workers = [PeacockWorker(sim, i, successor_eid=(i + 1) % W)
               for i in range(W)]
    worker_eids = [w.eid for w in workers]
    schedulers = [PeacockScheduler(sim, s, worker_eids,
                                   derived_rng(config.seed, "scheduler", s))
                  for s in range(config.schedulers)]
    sched_eids = [s.eid for s in schedulers]
    for s in schedulers:
        s.peer_eids = [e for e in sched_eids if e != s.eid]
    # All workers tick at multiples of the rotation interval.
    for w in workers:
        sim.schedule_at(config.rotation_interval_us, w.eid, ("tick",))
    return workers, schedulers


def _build_sparrow(sim, config):
    workers = [SparrowWorker(sim, i) for i in range(config.workers)]
    worker_eids = [w.eid for w in workers]
    schedulers = [SparrowScheduler(sim, s, worker_eids,
                                   derived_rng(config.seed, "scheduler", s),
                                   config.sparrow_probe_ratio)
                  for s in range(config.schedulers)]
    return workers, schedulers


def _build_eagle(sim, config):
    W = config.workers
    short_count = max(1, min(W - 1, round(config.eagle_short_fraction * W))) \
        if W > 1 else 0
    short_indices = list(range(short_count))
    general_indices = list(range(short_count, W))
    workers = []
    for i in range(W):
        partition = "short" if i < short_count else "general"
        workers.append(EagleWorker(
            sim, i, partition, short_worker_eids=None,
            rng=derived_rng(config.seed, "eagle-worker", i),
            srpt_bound_us=config.eagle_srpt_bound_us))
    worker_eids = [w.eid for w in workers]
    short_eids = [worker_eids[i] for i in short_indices] or worker_eids
    for w in workers:
        w.short_worker_eids = short_eids
    central = EagleCentral(sim,
                           [worker_eids[i] for i in general_indices] or worker_eids,
                           general_indices or list(range(W)))
    for w in workers:
        w.central_eid = central.eid
    schedulers = [EagleScheduler(sim, s, worker_eids,
                                 derived_rng(config.seed, "scheduler", s),
                                 config.eagle_probe_ratio,
                                 config.eagle_long_cutoff_us, central.eid)
                  for s in range(config.schedulers)]
    return workers, schedulers


_BUILDERS = {"peacock": _build_peacock,
             "sparrow": _build_sparrow,
             "eagle": _build_eagle}


def run_simulation(config, records):
    """Run one algorithm over a workload; returns a RunResult.

    Jobs are assigned to schedulers round-robin (or at random, per
    config).  Raises SimulationError if the run ends in a non-quiescent
    state.
    """
    sim = Simulation(config)
    workers, schedulers = _BUILDERS[config.algo](sim, config)
    assign_rng = derived_rng(config.seed, "job-assignment")
    sim.total_jobs = len(records)
    for i, record in enumerate(records):
        if record.submit_us is None:
            raise SimulationError("job %r has no submit time" % (record.job_id,))
        if config.job_assignment == "random":
            target = schedulers[assign_rng.randrange(len(schedulers))]
        else:
            target = schedulers[i % len(schedulers)]
        sim.schedule_at(record.submit_us, target.eid, ("job", record))
    sim.run()
    _check_quiescence(sim, workers, schedulers, len(records))
    sim.records.sort(key=lambda r: str(r.job_id))
    return RunResult(config=config, records=sim.records,
                     counters=dict(sim.counters),
                     makespan_us=sim.last_completion_us)


def _check_quiescence(sim, workers, schedulers, total_jobs):
    if sim.jobs_done != total_jobs:
        raise SimulationError("run ended with %d of %d jobs incomplete"
                              % (total_jobs - sim.jobs_done, total_jobs))
    for s in schedulers:
        if getattr(s, "probe_count", 0) != 0 or getattr(s, "load_us", 0) != 0:
            raise SimulationError(
                "scheduler %d aggregate not drained: (%d, %d)"
                % (s.sid, s.probe_count, s.load_us))
    for w in workers:
        if w.slot != IDLE:
            raise SimulationError("worker %d not idle at quiescence" % w.index)
        queue = w.queue
        entries = queue.entries if hasattr(queue, "entries") else queue
        if len(entries) or getattr(queue, "rotating", None):
            raise SimulationError("worker %d still holds probes" % w.index)
    if sim.counters["tasks_launched"] != sim.counters["tasks_finished"]:
        raise SimulationError("launch/finish mismatch")
