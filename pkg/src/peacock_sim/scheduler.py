"""Scheduler state machine: job admission, probe placement, aggregate
load accounting, peer updates, and task dispatch.

Each stage of a job DAG is scheduled as an independent unit: one probe per
task, bound to its task at admission, sent to randomly drawn workers.  The
scheduler-wide aggregate (probe count, total estimated load) feeds the
shared state that workers use to size their elastic queues.
"""

from statistics import mean

from .engine import ProtocolError, SimulationError
from .probes import Probe, SharedState


def pick_workers(rng, total, count):
    """Draw ``count`` worker indices, distinct while count <= total and
    with replacement beyond."""
    if count <= total:
        return rng.sample(range(total), count)
    ids = rng.sample(range(total), total)
    ids += [rng.randrange(total) for _ in range(count - total)]
    return ids


def probe_quota(probe_count, workers):
    """Average probes per worker, rounded half-up."""
    return (2 * probe_count + workers) // (2 * workers)


class JobState:
    __slots__ = ("record", "arrival_us", "thetas", "stage_remaining",
                 "remaining_deps", "dependents", "submitted", "launched",
                 "rotations", "tasks_left", "completion_us", "pool_next")

    def __init__(self, record, arrival_us):
        self.record = record
        self.arrival_us = arrival_us
        self.thetas = [int(round(mean(s.durations_us))) or 1
                       for s in record.stages]
        self.stage_remaining = [len(s.durations_us) for s in record.stages]
        self.remaining_deps = [len(s.deps) for s in record.stages]
        self.dependents = [[] for _ in record.stages]
        for i, stage in enumerate(record.stages):
            for d in stage.deps:
                self.dependents[d].append(i)
        self.submitted = [False] * len(record.stages)
        self.launched = set()
        self.rotations = []
        self.tasks_left = record.task_count
        self.completion_us = arrival_us
        # Late-binding task pool cursor per stage (baselines only).
        self.pool_next = [0] * len(record.stages)

    def task_finished(self, stage_idx, task_id, finish_us):
        """Record one task completion; return stage indices that became
        ready for submission."""
        if (stage_idx, task_id) not in self.launched:
            raise ProtocolError("finish for unlaunched task %r of job %r"
                                % ((stage_idx, task_id), self.record.job_id))
        if self.stage_remaining[stage_idx] <= 0:
            raise ProtocolError("double finish in stage %d of job %r"
                                % (stage_idx, self.record.job_id))
        self.completion_us = max(self.completion_us, finish_us)
        self.tasks_left -= 1
        self.stage_remaining[stage_idx] -= 1
        ready = []
        if self.stage_remaining[stage_idx] == 0:
            for dep in self.dependents[stage_idx]:
                self.remaining_deps[dep] -= 1
                if self.remaining_deps[dep] == 0 and not self.submitted[dep]:
                    ready.append(dep)
        return ready

    @property
    def done(self):
        return self.tasks_left == 0


class PeacockScheduler:
    """One of a few equal schedulers; owns the full life cycle of its jobs."""

    def __init__(self, sim, sid, worker_eids, rng):
        self.sim = sim
        self.sid = sid
        self.eid = sim.add_entity(self)
        self.worker_eids = worker_eids
        self.peer_eids = []
        self.rng = rng
        self.probe_count = 0
        self.load_us = 0
        self.jobs = {}

    # -- event dispatch -----------------------------------------------------

    def handle(self, payload, now):
        kind = payload[0]
        if kind == "job":
            self.on_job_arrival(payload[1], now)
        elif kind == "task_request":
            _, probe, worker_eid = payload
            self.on_task_request(probe, worker_eid, now)
        elif kind == "task_finish":
            _, job_id, task_id, finish_us = payload
            self.on_task_finish(job_id, task_id, finish_us, now)
        elif kind == "peer":
            _, dcount, dload = payload
            self.on_peer_update(dcount, dload)
        else:
            raise ProtocolError("scheduler %d: unknown payload %r"
                                % (self.sid, kind))

    # -- shared state -------------------------------------------------------

    def shared_state(self, now):
        workers = len(self.worker_eids)
        return SharedState(
            probe_quota=probe_quota(self.probe_count, workers),
            load_quota_us=self.load_us // workers,
            version=(now, self.sid),
        )

    def broadcast_peer(self, dcount, dload_us, now):
        for eid in self.peer_eids:
            self.sim.send(eid, ("peer", dcount, dload_us), now)

    def on_peer_update(self, dcount, dload_us):
        self.probe_count += dcount
        self.load_us += dload_us
        if self.probe_count < 0 or self.load_us < 0:
            self.probe_count = max(0, self.probe_count)
            self.load_us = max(0, self.load_us)
            self.sim.counters["aggregate_clamps"] += 1

    # -- job admission ------------------------------------------------------

    def on_job_arrival(self, record, now):
        if not record.stages or any(not s.durations_us for s in record.stages):
            raise SimulationError("rejecting empty job %r" % (record.job_id,))
        job = JobState(record, now)
        self.jobs[record.job_id] = job
        for i, stage in enumerate(record.stages):
            if not stage.deps:
                self.submit_stage(job, i, now)

    def submit_stage(self, job, stage_idx, now):
        job.submitted[stage_idx] = True
        durations = job.record.stages[stage_idx].durations_us
        n = len(durations)
        theta = job.thetas[stage_idx]
        self.probe_count += n
        self.load_us += n * theta
        self.broadcast_peer(n, n * theta, now)
        state = self.shared_state(now)
        allowance = state.load_quota_us
        targets = pick_workers(self.rng, len(self.worker_eids), n)
        self.sim.counters["probes_created"] += n
        for task_id, widx in enumerate(targets):
            probe = Probe(job_id=(job.record.job_id, stage_idx),
                          task_id=task_id, arrival_us=now,
                          runtime_us=theta, allowance_us=allowance,
                          scheduler=self.eid)
            self.sim.send(self.worker_eids[widx],
                          ("probe", probe, state, "submit"), now)

    # -- task dispatch ------------------------------------------------------

    def on_task_request(self, probe, worker_eid, now):
        job_id, stage_idx = probe.job_id
        job = self.jobs.get(job_id)
        if job is None:
            raise ProtocolError("task request for unknown job %r" % (job_id,))
        key = (stage_idx, probe.task_id)
        if key in job.launched:
            raise ProtocolError("task %r of job %r already launched"
                                % (key, job_id))
        job.launched.add(key)
        job.rotations.append(probe.rotations)
        self.sim.counters["tasks_launched"] += 1
        duration = job.record.stages[stage_idx].durations_us[probe.task_id]
        self.sim.send(worker_eid,
                      ("assign", probe.job_id, probe.task_id, duration,
                       self.shared_state(now)), now)

    def on_task_finish(self, job_key, task_id, finish_us, now):
        job_id, stage_idx = job_key
        job = self.jobs.get(job_id)
        if job is None:
            raise ProtocolError("finish for unknown job %r" % (job_id,))
        theta = job.thetas[stage_idx]
        self.probe_count -= 1
        self.load_us -= theta
        if self.probe_count < 0 or self.load_us < 0:
            self.probe_count = max(0, self.probe_count)
            self.load_us = max(0, self.load_us)
            self.sim.counters["aggregate_clamps"] += 1
        self.broadcast_peer(-1, -theta, now)
        for ready in job.task_finished(stage_idx, task_id, finish_us):
            self.submit_stage(job, ready, now)
        if job.done:
            self._complete_job(job)

    def _complete_job(self, job):
        from .metrics import JobRecord
        self.sim.records.append(JobRecord(
            job_id=job.record.job_id, scheduler=self.sid,
            arrival_us=job.arrival_us, completion_us=job.completion_us,
            rotations=list(job.rotations)))
        self.sim.jobs_done += 1
