"""Elastic worker queue: priority insertion with starvation guards and
quota-driven trimming.

All times and durations are integer microseconds so that the cached load
total stays exact under any operation sequence.

A probe descends from the tail of the queue towards the head, bypassing
entries only when doing so shortens head-of-line blocking without pushing
an already-waiting probe past its deadline.  Probes that cannot be placed
without violating their own deadline are marked for rotation to the ring
successor instead.
"""

from dataclasses import dataclass


class InvalidProbeError(ValueError):
    """Raised when a probe violates the queue's contract."""


@dataclass(frozen=True, slots=True)
class SharedState:
    """Cluster-wide elasticity signal: probe quota, load quota, freshness.

    ``version`` is a totally ordered (time_us, scheduler_id) stamp; adopting
    a state with a lower or equal version is a no-op.
    """

    probe_quota: int
    load_quota_us: int
    version: tuple

    def __post_init__(self):
        if self.probe_quota < 0 or self.load_quota_us < 0:
            raise ValueError("quotas must be non-negative")


#: State a worker holds before it has seen any real shared state.
EMPTY_STATE = SharedState(0, 0, (-1, -1))


class Probe:
    """Placeholder for one task, enqueued at workers ahead of the task data.

    ``arrival_us`` (job arrival), ``runtime_us`` (runtime estimate) and
    ``allowance_us`` (waiting-time allowance, frozen at admission) never
    change after creation.  ``rotations`` counts ring hops.
    """

    __slots__ = (
        "job_id", "task_id", "arrival_us", "runtime_us", "allowance_us",
        "probe_arrival_us", "rotations", "scheduler",
        "is_long", "resampled", "enqueued_us",
    )

    def __init__(self, job_id, task_id, arrival_us, runtime_us, allowance_us,
                 scheduler=None, rotations=0, probe_arrival_us=None,
                 is_long=False):
        if runtime_us <= 0:
            raise InvalidProbeError("probe runtime estimate must be positive")
        if allowance_us < 0:
            raise InvalidProbeError("probe allowance must be non-negative")
        self.job_id = job_id
        self.task_id = task_id
        self.arrival_us = arrival_us
        self.runtime_us = runtime_us
        self.allowance_us = allowance_us
        self.probe_arrival_us = probe_arrival_us
        self.rotations = rotations
        self.scheduler = scheduler
        # Baseline-only bookkeeping (Eagle re-sampling, SRPT ordering).
        self.is_long = is_long
        self.resampled = False
        self.enqueued_us = 0

    @property
    def deadline_us(self):
        return self.arrival_us + self.allowance_us

    @property
    def key(self):
        return (self.job_id, self.task_id)

    def __repr__(self):
        return ("Probe(job=%r, task=%r, arr=%d, rt=%d, allow=%d, rot=%d)"
                % (self.job_id, self.task_id, self.arrival_us,
                   self.runtime_us, self.allowance_us, self.rotations))


INSERTED = "inserted"
ROTATED = "rotated"

#: Bypass-test strategies for a later-arrived probe passing an earlier one.
#: "prose" keeps the waiting probe inside its deadline; "literal" only lets
#: probes pass entries whose deadline already expired.
BYPASS_PROSE = "prose"
BYPASS_LITERAL = "literal"


class WaitingQueue:
    """Ordered probe queue with cached load total and a rotation buffer.

    ``entries[0]`` is the head (next to execute).  ``total_runtime_us``
    always equals the exact sum of runtime estimates over ``entries``.
    Probes evicted by quota trimming or rejected at placement move to
    ``rotating`` and leave on the next rotation round.
    """

    __slots__ = ("entries", "total_runtime_us", "rotating")

    def __init__(self):
        self.entries = []
        self.total_runtime_us = 0
        self.rotating = []

    def __len__(self):
        return len(self.entries)

    def enqueue(self, probe, now_us, running_remaining_us, state,
                bypass_rule=BYPASS_PROSE):
        """Insert ``probe`` by the reordering rules, then trim to quota.

        ``running_remaining_us`` is the remaining runtime of the task
        currently running on the owning worker (0 when idle or reserved).
        Returns ``(outcome, position, evicted)`` where outcome is INSERTED
        or ROTATED; evicted probes were moved to the rotating buffer.
        """
        if probe.runtime_us <= 0:
            raise InvalidProbeError("probe runtime estimate must be positive")
        if running_remaining_us < 0:
            raise InvalidProbeError("running remainder cannot be negative")

        entries = self.entries
        wait_us = running_remaining_us + self.total_runtime_us
        outcome = None
        position = None
        for i in range(len(entries) - 1, -1, -1):
            q = entries[i]
            if probe.arrival_us >= q.arrival_us:
                # Later-scheduled probe: may pass q only if it is shorter
                # and q stays within its deadline.
                if bypass_rule == BYPASS_PROSE:
                    can_pass = (
                        probe.runtime_us <= q.runtime_us
                        and now_us < q.deadline_us
                        and now_us + (wait_us - q.runtime_us + probe.runtime_us)
                        <= q.deadline_us
                    )
                else:
                    can_pass = (
                        probe.runtime_us <= q.runtime_us
                        and q.deadline_us + probe.runtime_us <= now_us
                    )
                if can_pass:
                    wait_us -= q.runtime_us
                    continue
                outcome, position = self.place_or_rotate(
                    probe, i + 1, now_us, wait_us)
                break
            else:
                # Earlier-scheduled probe: stop here unless q is shorter
                # and waiting would blow the new probe's own deadline.
                if (q.runtime_us <= probe.runtime_us
                        and now_us + wait_us <= probe.deadline_us):
                    outcome, position = self.place_or_rotate(
                        probe, i + 1, now_us, wait_us)
                    break
                wait_us -= q.runtime_us
        if outcome is None:
            entries.insert(0, probe)
            self.total_runtime_us += probe.runtime_us
            outcome, position = INSERTED, 0
        evicted = self.trim_to_quota(state)
        return outcome, position, evicted

    def place_or_rotate(self, probe, position, now_us, wait_us):
        """Insert at ``position`` if the wait is tolerable or the deadline
        has already expired; otherwise mark the probe for rotation."""
        if (now_us + wait_us <= probe.deadline_us
                or probe.deadline_us <= now_us):
            self.entries.insert(position, probe)
            self.total_runtime_us += probe.runtime_us
            return INSERTED, position
        self.rotating.append(probe)
        return ROTATED, None

    def trim_to_quota(self, state):
        """Evict tail probes while the queue exceeds either quota.

        Post-state: queue empty, or strictly below both quotas.  Evicted
        probes are appended to the rotating buffer and returned in removal
        order.
        """
        evicted = []
        entries = self.entries
        while entries and (len(entries) >= state.probe_quota
                           or self.total_runtime_us >= state.load_quota_us):
            q = entries.pop()
            self.total_runtime_us -= q.runtime_us
            evicted.append(q)
            self.rotating.append(q)
        return evicted

    def pop_head(self):
        """Remove and return the head probe, or None when empty."""
        if not self.entries:
            return None
        p = self.entries.pop(0)
        self.total_runtime_us -= p.runtime_us
        return p
