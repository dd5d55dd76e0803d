"""Worker state machine on the ring.

A worker executes one task at a time.  Between requesting a task and
receiving its data the single slot is *reserved*: the worker neither
executes nor pulls another probe, and concurrent enqueues see a remaining
runtime of zero.  Probes marked for rotation leave in one batched message
per round, grouped by job to drop the per-probe redundancy.
"""

from .engine import ProtocolError
from .probes import EMPTY_STATE, Probe, WaitingQueue

IDLE = "idle"
RESERVED = "reserved"
RUNNING = "running"


def encode_rotation_batch(probes):
    """Group probes by job so shared fields are carried once per job."""
    groups = {}
    order = []
    for p in probes:
        key = (p.job_id, p.arrival_us, p.allowance_us, p.runtime_us, p.scheduler)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append((p.task_id, p.rotations, p.probe_arrival_us))
    return [(key, groups[key]) for key in order]


def decode_rotation_batch(batch):
    probes = []
    for (job_id, arrival, allowance, runtime, scheduler), tasks in batch:
        for task_id, rotations, beta in tasks:
            probes.append(Probe(job_id, task_id, arrival, runtime, allowance,
                                scheduler=scheduler, rotations=rotations,
                                probe_arrival_us=beta))
    return probes


class PeacockWorker:
    """One ring node: elastic queue, single execution slot, rotation rounds."""

    def __init__(self, sim, index, successor_eid):
        self.sim = sim
        self.index = index
        self.eid = sim.add_entity(self)
        self.successor_eid = successor_eid
        self.queue = WaitingQueue()
        self.known_state = EMPTY_STATE
        self.last_sent_version = EMPTY_STATE.version
        self.slot = IDLE
        self.reserved_probe = None
        self.running_probe = None
        self.running_duration_us = 0
        self.finish_us = 0
        self.held = set()

    # -- event dispatch -----------------------------------------------------

    def handle(self, payload, now):
        kind = payload[0]
        if kind == "probe":
            _, probe, state, _via = payload
            self.adopt_shared_state(state)
            if probe.probe_arrival_us is None:
                probe.probe_arrival_us = now
            self.on_probe_arrival(probe, now)
        elif kind == "rotation":
            _, batch, state = payload
            self.adopt_shared_state(state)
            for probe in decode_rotation_batch(batch):
                if probe.probe_arrival_us is None:
                    probe.probe_arrival_us = now
                self.on_probe_arrival(probe, now)
        elif kind == "assign":
            _, job_id, task_id, duration_us, state = payload
            self.adopt_shared_state(state)
            self.on_task_assign(job_id, task_id, duration_us, now)
        elif kind == "tick":
            self.on_rotation_tick(now)
        elif kind == "complete":
            self.on_task_complete(now)
        else:
            raise ProtocolError("worker %d: unknown payload %r"
                                % (self.index, kind))

    # -- probe handling -----------------------------------------------------

    def on_probe_arrival(self, probe, now):
        if probe.key in self.held:
            raise ProtocolError(
                "worker %d: duplicate probe arrival for %r"
                % (self.index, probe.key))
        self.held.add(probe.key)
        if self.slot == IDLE and not self.queue.entries:
            self._reserve(probe, now)
            return
        if self.slot == RUNNING:
            delta = max(0, self.finish_us - now)
        else:
            delta = 0
        self.queue.enqueue(probe, now, delta, self.known_state,
                           bypass_rule=self.sim.config.bypass_rule)
        # Evicted probes are already in the rotating buffer; they stay held
        # until the next rotation round carries them off.

    def adopt_shared_state(self, state):
        """Adopt a fresher shared state and re-trim the queue to its quotas."""
        if state.version <= self.known_state.version:
            return []
        self.known_state = state
        return self.queue.trim_to_quota(state)

    # -- rotation rounds ----------------------------------------------------

    def on_rotation_tick(self, now):
        state_changed = self.known_state.version > self.last_sent_version
        if self.queue.rotating or state_changed:
            probes = self.queue.rotating
            self.queue.rotating = []
            for p in probes:
                p.rotations += 1
                self.held.discard(p.key)
            batch = encode_rotation_batch(probes)
            self.sim.send(self.successor_eid,
                          ("rotation", batch, self.known_state), now)
            self.sim.counters["rotation_messages"] += 1
            self.sim.counters["probe_hops"] += len(probes)
            self.last_sent_version = self.known_state.version
        if self.sim.jobs_done < self.sim.total_jobs:
            self.sim.schedule_at(
                now + self.sim.config.rotation_interval_us, self.eid, ("tick",))

    # -- task lifecycle -----------------------------------------------------

    def _reserve(self, probe, now):
        self.slot = RESERVED
        self.reserved_probe = probe
        self.sim.send(probe.scheduler,
                      ("task_request", probe, self.eid), now)

    def on_task_assign(self, job_id, task_id, duration_us, now):
        if self.slot != RESERVED or self.reserved_probe.key != (job_id, task_id):
            raise ProtocolError(
                "worker %d: task assignment without matching reservation"
                % self.index)
        self.slot = RUNNING
        self.running_probe = self.reserved_probe
        self.reserved_probe = None
        self.running_duration_us = duration_us
        self.finish_us = now + duration_us
        self.sim.schedule_at(self.finish_us, self.eid, ("complete",))

    def on_task_complete(self, now):
        probe = self.running_probe
        self.running_probe = None
        self.held.discard(probe.key)
        self.sim.counters["tasks_finished"] += 1
        self.sim.counters["busy_us"] += self.running_duration_us
        self.sim.last_completion_us = max(self.sim.last_completion_us, now)
        self.sim.send(probe.scheduler,
                      ("task_finish", probe.job_id, probe.task_id, now), now)
        head = self.queue.pop_head()
        if head is not None:
            self._reserve(head, now)
        else:
            self.slot = IDLE
            assert not self.queue.entries, \
                "worker went idle with queued probes"
