"""Simulation-engine tests: construction, invariants and policy contracts."""

import dataclasses

import numpy as np
import pytest

from oscmc.engine import (
    RunLog,
    Simulation,
    SimulationError,
    first_fit_place,
    pssf_place,
    run,
)
from oscmc.metrics import METRICS_CSV_HEADER
from oscmc.model import Placement, ResourceVector, Server
from oscmc.scenario import Scenario, load_scenario, with_policy


def small_scenario(**overrides):
    base = dict(
        name="small",
        servers=6,
        vms=12,
        users=4,
        intervals=8,
        seed=13,
        reserved_per=6,
        malicious_user_pct=25.0,
        cross_user_auth_rate=0.1,
    )
    base.update(overrides)
    return Scenario(**base)


def make_servers(n, cpu=2000.0, mem=2048.0, bw=10000.0):
    return {
        sid: Server(sid, ResourceVector(cpu, mem, bw)) for sid in range(1, n + 1)
    }


def test_first_fit_place_scans_by_server_id():
    servers = make_servers(3, cpu=1000.0)
    d = ResourceVector(600.0, 10.0, 10.0)
    placed = first_fit_place([(1, d), (2, d), (3, d)], servers, Placement(servers))
    assert placed.server_of(1) == 1
    assert placed.server_of(2) == 2
    assert placed.server_of(3) == 3


def test_pssf_place_prefers_owner_prior_server():
    servers = make_servers(3, cpu=2000.0)
    d = ResourceVector(500.0, 10.0, 10.0)
    items = [(1, 7, d), (2, 8, d), (3, 7, d), (4, 8, d)]
    placed = pssf_place(items, servers, Placement(servers))
    # First VM of each owner lands first-fit on server 1; later VMs follow.
    assert placed.server_of(1) == 1
    assert placed.server_of(3) == 1
    assert placed.server_of(2) == 1
    assert placed.server_of(4) == 1


def test_pssf_place_falls_back_when_prior_full():
    servers = make_servers(2, cpu=1000.0)
    d = ResourceVector(600.0, 10.0, 10.0)
    items = [(1, 7, d), (2, 7, d)]
    placed = pssf_place(items, servers, Placement(servers))
    assert placed.server_of(1) == 1
    assert placed.server_of(2) == 2  # prior server cannot fit the second VM


def test_simulation_builds_deterministic_population():
    a = Simulation(small_scenario())
    b = Simulation(small_scenario())
    assert a.owners == b.owners
    assert a.malicious_vm_ids == b.malicious_vm_ids
    assert {s: a.servers[s].vulnerability_score for s in a.servers} == {
        s: b.servers[s].vulnerability_score for s in b.servers
    }
    assert np.array_equal(a.usage, b.usage)


def test_population_respects_fixed_users_and_malicious_list():
    sc = load_scenario("illustration")
    sim = Simulation(sc)
    assert sim.users[3].is_malicious_truth
    assert not sim.users[1].is_malicious_truth
    assert sorted(sim.users[3].vm_ids) == [8, 9, 10, 11]
    assert sim.malicious_vm_ids == [8, 9, 10, 11]


def test_ivcl_grants_cover_intra_user_pairs():
    sim = Simulation(small_scenario(cross_user_auth_rate=0.0))
    for user in sim.users.values():
        for a in user.vm_ids:
            for b in user.vm_ids:
                if a != b:
                    assert sim.ivcl.is_authorized(a, b)
    # No cross-user authorisation when the rate is zero.
    for a, owner_a in sim.owners.items():
        for b, owner_b in sim.owners.items():
            if a != b and owner_a != owner_b:
                assert not sim.ivcl.is_authorized(a, b)


def test_reserved_servers_only_under_surveillance_policy():
    assert any(
        s.reserved_for_hogs for s in Simulation(small_scenario()).servers.values()
    )
    for policy in ("pssf", "wosc"):
        sim = Simulation(small_scenario(policy=policy))
        assert not any(s.reserved_for_hogs for s in sim.servers.values())


def test_workload_identical_across_policies():
    usages = [
        Simulation(small_scenario(policy=p)).usage for p in ("oscmc", "pssf", "wosc")
    ]
    assert np.array_equal(usages[0], usages[1])
    assert np.array_equal(usages[1], usages[2])


def test_oversized_vm_is_rejected():
    sc = small_scenario(vm_flavors=[(9000.0, 10.0, 10.0)])
    with pytest.raises(SimulationError, match="rejected"):
        Simulation(sc)


def test_run_preserves_vm_conservation_and_capacity():
    sc = small_scenario()
    sim = Simulation(sc)
    all_vms = set(sim.vms)
    for t in range(sc.intervals):
        sim.step(t)
        assert set(sim.placement.vm_ids) | sim.suspended == all_vms
        assert not (set(sim.placement.vm_ids) & sim.suspended)
        assert sim.placement.capacity_ok()


def test_suspended_vms_never_relink():
    sc = small_scenario(intervals=12)
    sim = Simulation(sc)
    seen_after_suspension = []
    for t in range(sc.intervals):
        suspended_before = set(sim.suspended)
        sim.step(t)
        for src, dst in sim.live:
            if src in suspended_before or dst in suspended_before:
                seen_after_suspension.append((t, src, dst))
    assert seen_after_suspension == []
    # The log records suspensions in quarantine order; contents must agree.
    assert sim.suspended == set(sim.log.suspended)
    assert len(sim.log.suspended) == len(set(sim.log.suspended))


def test_detector_never_reads_ground_truth():
    """Scrambling truth labels after construction changes no detection output."""
    sc = small_scenario()
    a = Simulation(sc)
    b = Simulation(sc)
    for user in b.users.values():
        user.is_malicious_truth = not user.is_malicious_truth
    # Keep the injection identical by restoring the original attacker list.
    b.malicious_vm_ids = list(a.malicious_vm_ids)
    b.benign_vm_ids = list(a.benign_vm_ids)
    for t in range(sc.intervals):
        a.step(t)
        b.step(t)
        ra, rb = a.log.reports[t], b.log.reports[t]
        assert ra.malicious_vms == rb.malicious_vms
        assert ra.colocation == rb.colocation


def test_oscmc_quarantines_and_wosc_does_not():
    sc = small_scenario(intervals=10)
    a = run(sc)
    w = run(with_policy(sc, "wosc"))
    assert len(a.suspended) > 0
    assert w.suspended == []
    assert a.realized_breaches == 0
    assert w.realized_breaches > 0
    assert a.metrics[-1].authorized_link_pct == 100.0
    assert w.metrics[-1].authorized_link_pct < 100.0


def test_metrics_csv_round_trip():
    result = run(small_scenario(intervals=4))
    text = result.metrics_csv_text()
    lines = text.strip().split("\n")
    assert lines[0] == METRICS_CSV_HEADER
    assert len(lines) == 5
    for line in lines[1:]:
        assert len(line.split(",")) == len(METRICS_CSV_HEADER.split(","))


def test_events_csv_contains_detections():
    result = run(small_scenario(intervals=6))
    lines = result.events_csv_text().strip().split("\n")
    assert lines[0] == "interval,kind,attacker,victim,servers"
    kinds = {line.split(",")[1] for line in lines[1:]}
    assert kinds <= {"col", "cas", "vul"}
    assert len(lines) > 1  # steady attacks must raise something


def test_summary_text_fields():
    result = run(small_scenario(intervals=4))
    text = result.summary_text()
    for needle in (
        "scenario: small",
        "policy: oscmc",
        "intervals: 4",
        "suspended vms:",
        "realized breaches:",
    ):
        assert needle in text


def test_run_log_counts_match_reports():
    result = run(small_scenario(intervals=6))
    assert len(result.metrics) == 6
    assert len(result.reports) == 6
    cum = set()
    for m, r in zip(result.metrics, result.reports):
        cum |= r.malicious_vms
        assert m.malicious_vms_cum == len(cum)
        assert m.theta_col == len(r.colocation)
        assert m.theta_cas == len(r.cascading)
        assert m.theta_vul == len(r.vulnerability)


def test_scripted_links_skip_suspended_sources():
    sc = small_scenario(
        intervals=3,
        benign_link_rate=0.0,
        attack_colocated_rate=0.0,
        attack_remote_rate=0.0,
        cross_user_auth_rate=0.0,
        scripted_links={0: [(1, 4)], 1: [(1, 4)], 2: [(1, 4)]},
    )
    sim = Simulation(sc)
    # VM 1 and 4 belong to different users, so (1, 4) is unauthorised.
    assert sim.owners[1] != sim.owners[4]
    for t in range(3):
        sim.step(t)
    assert 1 in sim.suspended
    # After suspension the scripted link is ignored, so later intervals are clean.
    assert sim.log.reports[1].is_clean()
    assert sim.log.reports[2].is_clean()


def test_vulnerability_events_fire_under_tight_guarantee():
    sc = load_scenario("xi200")
    sc = dataclasses.replace(sc, server_bw=3000.0, guaranteed_frac=0.4, intervals=15)
    result = run(sc)
    assert sum(len(r.vulnerability) for r in result.reports) > 0


def test_high_risk_flag_follows_fixed_score():
    sc = load_scenario("xi200")
    sc = dataclasses.replace(
        sc, server_bw=3000.0, guaranteed_frac=0.4, intervals=15, vuln_score_fixed=8.0
    )
    result = run(sc)
    events = [e for r in result.reports for e in r.vulnerability]
    assert events and all(e.high_risk for e in events)


def test_trace_driven_run(tmp_path):
    lines = ["timestamp,vm_id,cpu_usage_mips,mem_usage_mb,net_bw_used"]
    rng = np.random.default_rng(2)
    for vm in ("a", "b", "c"):
        for t in range(10):
            lines.append(
                "%d,%s,%.1f,%.1f,%.1f"
                % (t, vm, rng.uniform(100, 900), rng.uniform(100, 900), rng.uniform(100, 900))
            )
    f = tmp_path / "trace.csv"
    f.write_text("\n".join(lines) + "\n")
    sc = small_scenario(intervals=5, trace_path=str(f))
    result = run(sc)
    assert len(result.metrics) == 5
    sim = Simulation(sc)
    # Rescaled trace means match nominal demand per VM.
    assert sim.usage.shape == (5, 12, 3)


def test_worker_fanout_preserves_results():
    sc = small_scenario(intervals=8)
    a = run(sc, workers=1)
    b = run(sc, workers=3)
    assert a.metrics_csv_text() == b.metrics_csv_text()
    assert a.events_csv_text() == b.events_csv_text()
    assert a.summary_text() == b.summary_text()


def test_wosc_run_log_has_static_placement_power():
    sc = small_scenario(intervals=6)
    result = run(with_policy(sc, "wosc"))
    powers = {m.pw_dc for m in result.metrics}
    assert len(powers) == 1  # no quarantine, no rebalancing: constant draw
