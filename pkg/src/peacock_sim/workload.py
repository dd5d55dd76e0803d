"""Trace ingestion and synthetic workload generation.

Trace files are line-delimited JSON, one job per line, with all durations
and timestamps in integer microseconds:

    {"id": "j1", "submit_us": 0, "stages": [{"durations_us": [...], "deps": []}]}

An optional header line ``{"schema": "peacock-trace-1"}`` carries the
format version.  ``submit_us`` may be omitted; arrivals can then be
generated by a Poisson process calibrated to a target load.  Files ending
in ``.gz`` are transparently decompressed.
"""

import gzip
import json
import math
import random
from dataclasses import dataclass, field

from .engine import US_PER_S, derived_rng

SCHEMA = "peacock-trace-1"


class TraceError(ValueError):
    """Malformed trace file."""


@dataclass
class Stage:
    durations_us: list
    deps: list = field(default_factory=list)


@dataclass
class TraceRecord:
    job_id: object
    submit_us: int = None
    stages: list = field(default_factory=list)

    @property
    def task_count(self):
        return sum(len(s.durations_us) for s in self.stages)

    @property
    def total_work_us(self):
        return sum(sum(s.durations_us) for s in self.stages)

    def critical_path_us(self):
        """Longest chain of per-stage longest tasks through the DAG."""
        memo = {}

        def longest(i):
            if i not in memo:
                stage = self.stages[i]
                base = max(longest(d) for d in stage.deps) if stage.deps else 0
                memo[i] = base + max(stage.durations_us)
            return memo[i]

        return max(longest(i) for i in range(len(self.stages)))


def _validate(record):
    """Return None if the record is valid, else a reason string."""
    if not record.stages:
        return "no stages"
    for stage in record.stages:
        if not stage.durations_us:
            return "empty stage"
        if any(d <= 0 for d in stage.durations_us):
            return "non-positive duration"
        if any(not 0 <= d < len(record.stages) for d in stage.deps):
            return "dep out of range"
    # Cycle check by iterative removal of dep-free stages.
    remaining = {i: set(s.deps) for i, s in enumerate(record.stages)}
    while remaining:
        ready = [i for i, deps in remaining.items() if not deps]
        if not ready:
            return "cyclic deps"
        for i in ready:
            del remaining[i]
        for deps in remaining.values():
            deps.difference_update(ready)
    return None


def load_trace(path):
    """Parse a trace file.

    Returns ``(records, dropped)`` where ``dropped`` counts invalid jobs
    that were pruned.  Structurally malformed lines are fatal and reported
    with their line number.
    """
    opener = gzip.open if str(path).endswith(".gz") else open
    records = []
    dropped = 0
    seen_ids = set()
    with opener(path, "rt") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError("line %d: invalid JSON (%s)" % (lineno, exc))
            if "schema" in obj and "id" not in obj:
                if obj["schema"] != SCHEMA:
                    raise TraceError(
                        "line %d: unsupported schema %r" % (lineno, obj["schema"]))
                continue
            try:
                record = TraceRecord(
                    job_id=obj["id"],
                    submit_us=obj.get("submit_us"),
                    stages=[Stage(list(s["durations_us"]), list(s.get("deps", [])))
                            for s in obj["stages"]],
                )
            except (KeyError, TypeError) as exc:
                raise TraceError("line %d: bad record (%s)" % (lineno, exc))
            if record.job_id in seen_ids:
                raise TraceError("line %d: duplicate job id %r"
                                 % (lineno, record.job_id))
            seen_ids.add(record.job_id)
            if _validate(record) is None:
                records.append(record)
            else:
                dropped += 1
    return records, dropped


def save_trace(records, path):
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wt") as fh:
        fh.write(json.dumps({"schema": SCHEMA}) + "\n")
        for r in records:
            obj = {"id": r.job_id,
                   "stages": [{"durations_us": list(s.durations_us),
                               "deps": list(s.deps)} for s in r.stages]}
            if r.submit_us is not None:
                obj["submit_us"] = r.submit_us
            fh.write(json.dumps(obj) + "\n")


def mean_interarrival_us(load, workers, mean_tasks, mean_duration_us):
    """Mean job inter-arrival time so offered work equals ``load`` times
    cluster capacity (``workers`` single-slot workers)."""
    if load <= 0 or workers < 1 or mean_tasks <= 0 or mean_duration_us <= 0:
        raise ValueError("all calibration inputs must be positive")
    return mean_tasks * mean_duration_us / (load * workers)


@dataclass
class SyntheticSpec:
    """Synthetic workload: Poisson arrivals at a target average load.

    ``duration_model`` is "lognormal" (heavy-tailed, ``mean_duration_us``
    and ``sigma``) or "two_class" (a short/long mix for head-of-line
    blocking experiments).
    """

    load: float
    job_count: int
    seed: int = 0
    mean_tasks: float = 8.0
    duration_model: str = "lognormal"
    mean_duration_us: int = 2 * US_PER_S
    sigma: float = 1.0
    short_fraction: float = 0.9
    short_duration_us: int = 1 * US_PER_S
    long_duration_us: int = 10 * US_PER_S

    def __post_init__(self):
        if self.load <= 0:
            raise ValueError("target load must be positive")
        if self.job_count < 1:
            raise ValueError("need at least one job")
        if self.duration_model not in ("lognormal", "two_class"):
            raise ValueError("unknown duration model %r" % self.duration_model)

    @property
    def model_mean_duration_us(self):
        if self.duration_model == "lognormal":
            return float(self.mean_duration_us)
        return (self.short_fraction * self.short_duration_us
                + (1.0 - self.short_fraction) * self.long_duration_us)


def _sample_tasks(rng, mean_tasks):
    """Geometric task count with the given mean, minimum 1."""
    if mean_tasks <= 1.0:
        return 1
    p = 1.0 / mean_tasks
    u = rng.random()
    return 1 + int(math.log(u) / math.log(1.0 - p))


def _sample_durations(rng, spec, count):
    if spec.duration_model == "lognormal":
        mu = math.log(spec.mean_duration_us) - spec.sigma ** 2 / 2.0
        samples = (rng.lognormvariate(mu, spec.sigma) for _ in range(count))
        return [max(1, int(round(d))) for d in samples]
    # Two-class mix: the class is drawn per job, so a job is wholly short
    # or wholly long (what drives head-of-line blocking between jobs).
    if rng.random() < spec.short_fraction:
        return [spec.short_duration_us] * count
    return [spec.long_duration_us] * count


def generate(spec, workers):
    """Generate arrival-stamped single-stage jobs.

    Deterministic under ``spec.seed``; the empirical offered load converges
    to ``spec.load`` as the job count grows.
    """
    rng = derived_rng(spec.seed, "workload")
    mean_gap = mean_interarrival_us(
        spec.load, workers, spec.mean_tasks, spec.model_mean_duration_us)
    records = []
    t = 0.0
    for i in range(spec.job_count):
        n = _sample_tasks(rng, spec.mean_tasks)
        durations = _sample_durations(rng, spec, n)
        records.append(TraceRecord(job_id=i, submit_us=int(t),
                                   stages=[Stage(durations)]))
        t += rng.expovariate(1.0 / mean_gap)
    return records
