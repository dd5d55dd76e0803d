"""Baseline scheduler tests: batch sampling, late binding with lazy
cancellation, the static partition, re-sampling, and bounded
shortest-first reordering."""

import pytest

from peacock_sim import driver
from peacock_sim.baselines import EagleCentral, EagleWorker, SparrowWorker
from peacock_sim.engine import ProtocolError, SimConfig, Simulation, \
    derived_rng
from peacock_sim.probes import Probe
from peacock_sim.workload import Stage, SyntheticSpec, TraceRecord, generate

US = 1_000_000


class Recorder:
    def __init__(self, sim):
        self.eid = sim.add_entity(self)
        self.inbox = []

    def handle(self, payload, now):
        self.inbox.append((now, payload))


def job(job_id, durations_s, submit_us=0):
    return TraceRecord(job_id=job_id, submit_us=submit_us,
                       stages=[Stage([d * US for d in durations_s])])


def probe(job_key, task_id, theta_s, scheduler=None, **kw):
    return Probe(job_id=job_key, task_id=task_id, arrival_us=0,
                 runtime_us=theta_s * US, allowance_us=0,
                 scheduler=scheduler, **kw)


# -- sparrow -----------------------------------------------------------------

def test_sparrow_probe_count_and_exactly_once():
    cfg = SimConfig(workers=20, schedulers=1, algo="sparrow",
                    sparrow_probe_ratio=2, net_delay_us=1000, seed=3)
    result = driver.run_simulation(cfg, [job("j", [5, 5, 5])])
    c = result.counters
    assert c["probes_created"] == 6        # ratio 2 x 3 tasks
    assert c["tasks_launched"] == 3
    assert c["tasks_finished"] == 3
    assert c["probes_cancelled"] == 3      # surplus probes cancelled lazily
    assert result.records[0].job_id == "j"


def test_sparrow_probes_hit_distinct_workers():
    sim = Simulation(SimConfig(workers=10, algo="sparrow"))
    from peacock_sim.baselines import SparrowScheduler
    recorders = [Recorder(sim) for _ in range(10)]
    sched = SparrowScheduler(sim, 0, [r.eid for r in recorders],
                             derived_rng(1, "s"), probe_ratio=2)
    sched.on_job_arrival(job("j", [5, 5, 5, 5]), 0)
    sim.run()
    hit = [r for r in recorders if r.inbox]
    assert len(hit) == 8                   # 8 probes, all distinct workers


def test_sparrow_worker_queue_is_fifo():
    sim = Simulation(SimConfig(workers=1, algo="sparrow", net_delay_us=0))
    sched = Recorder(sim)
    w = SparrowWorker(sim, 0)
    first = probe(("a", 0), ("probe", 0), 5, scheduler=sched.eid)
    w.handle(("probe", first), 0)
    assert w.slot == "reserved"
    later = [probe(("b", 0), ("probe", i), 1, scheduler=sched.eid)
             for i in range(3)]
    for i, p in enumerate(later):
        w.handle(("probe", p), i + 1)
    assert list(w.queue) == later          # shorter probes do not jump ahead


def test_late_binding_maps_probes_to_remaining_tasks():
    # One 2-task stage, ratio 2: the first two probes to reach a slot get
    # tasks 0 and 1, the last two are cancelled.
    cfg = SimConfig(workers=4, schedulers=1, algo="sparrow",
                    sparrow_probe_ratio=2, net_delay_us=1000, seed=8)
    result = driver.run_simulation(cfg, [job("j", [7, 2])])
    assert result.counters["tasks_launched"] == 2
    assert result.counters["probes_cancelled"] == 2


# -- eagle -------------------------------------------------------------------

def make_eagle_worker(partition="general", bound_s=5):
    sim = Simulation(SimConfig(workers=2, algo="eagle", net_delay_us=0))
    sched = Recorder(sim)
    short_stub = Recorder(sim)
    w = EagleWorker(sim, 0, partition, short_worker_eids=[short_stub.eid],
                    rng=derived_rng(0, "w"), srpt_bound_us=bound_s * US)
    w.central_eid = sched.eid
    return sim, w, sched, short_stub


def test_eagle_short_probe_resamples_off_long_work():
    sim, w, sched, short_stub = make_eagle_worker()
    w.handle(("probe", probe(("L", 0), 0, 100, scheduler=sched.eid,
                             is_long=True)), 0)
    assert w.long_count == 1
    p = probe(("s", 0), ("probe", 0), 2, scheduler=sched.eid)
    w.handle(("probe", p), 1)
    sim.run()
    forwarded = [m for _, m in short_stub.inbox if m[0] == "probe"]
    assert len(forwarded) == 1 and forwarded[0][1] is p
    assert p.resampled


def test_eagle_resample_happens_at_most_once():
    sim, w, sched, short_stub = make_eagle_worker()
    w.handle(("probe", probe(("L", 0), 0, 100, scheduler=sched.eid,
                             is_long=True)), 0)
    p = probe(("s", 0), ("probe", 0), 2, scheduler=sched.eid)
    p.resampled = True
    w.handle(("probe", p), 1)
    assert short_stub.inbox == []          # stays despite the long work
    assert p in w.queue


def test_eagle_long_probe_on_short_partition_is_protocol_violation():
    sim, w, sched, _ = make_eagle_worker(partition="short")
    with pytest.raises(ProtocolError):
        w.handle(("probe", probe(("L", 0), 0, 100, scheduler=sched.eid,
                                 is_long=True)), 0)


def test_eagle_queue_orders_shortest_first():
    sim, w, sched, _ = make_eagle_worker()
    w.slot = "running"
    w.handle(("probe", probe(("a", 0), ("probe", 0), 9,
                             scheduler=sched.eid)), 0)
    w.handle(("probe", probe(("b", 0), ("probe", 0), 3,
                             scheduler=sched.eid)), 1)
    w.handle(("probe", probe(("c", 0), ("probe", 0), 6,
                             scheduler=sched.eid)), 2)
    assert [p.runtime_us for p in w.queue] == [3 * US, 6 * US, 9 * US]


def test_eagle_starvation_bound_blocks_bypass():
    sim, w, sched, _ = make_eagle_worker(bound_s=5)
    w.slot = "running"
    w.handle(("probe", probe(("old", 0), ("probe", 0), 9,
                             scheduler=sched.eid)), 0)
    # 6s later the old probe has aged past the bound: no more bypassing.
    w.handle(("probe", probe(("new", 0), ("probe", 0), 1,
                             scheduler=sched.eid)), 6 * US)
    assert [p.job_id[0] for p in w.queue] == ["old", "new"]


def test_eagle_central_places_least_loaded():
    sim = Simulation(SimConfig(workers=3, algo="eagle", net_delay_us=0))
    recorders = [Recorder(sim) for _ in range(3)]
    sched = Recorder(sim)
    central = EagleCentral(sim, [r.eid for r in recorders], [0, 1, 2])
    central.handle(("long_stage", ("L", 0), (100 * US, 100 * US), 100 * US,
                    sched.eid), 0)
    assert central.loads_us == {0: 100 * US, 1: 100 * US, 2: 0}
    central.handle(("long_finish", 0, 100 * US), 5)
    central.handle(("long_stage", ("M", 0), (50 * US,), 50 * US,
                    sched.eid), 10)
    # Workers 0 and 2 tie at load zero; the index tie-break picks 0.
    assert central.loads_us == {0: 50 * US, 1: 100 * US, 2: 0}
    sim.run()
    assert len([m for _, m in recorders[0].inbox if m[0] == "probe"]) == 2


def test_eagle_long_stage_goes_central_short_stays_sampled():
    cfg = SimConfig(workers=20, schedulers=1, algo="eagle",
                    eagle_long_cutoff_us=3 * US, net_delay_us=1000, seed=4)
    result = driver.run_simulation(
        cfg, [job("short", [2, 2]), job("long", [30, 30], submit_us=1)])
    c = result.counters
    # Short stage: ratio x 2 probes; long stage: exactly one probe per task.
    assert c["probes_created"] == cfg.eagle_probe_ratio * 2 + 2
    assert c["tasks_launched"] == c["tasks_finished"] == 4
    assert {r.job_id for r in result.records} == {"short", "long"}


@pytest.mark.parametrize("algo", ["sparrow", "eagle"])
def test_baseline_runs_reach_quiescence(algo):
    spec = SyntheticSpec(load=0.7, job_count=60, seed=2, mean_tasks=4.0,
                         duration_model="two_class", short_fraction=0.8,
                         short_duration_us=US, long_duration_us=20 * US)
    cfg = SimConfig(workers=25, schedulers=2, seed=2, algo=algo)
    result = driver.run_simulation(cfg, generate(spec, cfg.workers))
    assert len(result.records) == 60
    assert result.counters["tasks_launched"] == \
        result.counters["tasks_finished"]
