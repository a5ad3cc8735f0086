"""Scenario configuration and file-format tests."""

import pytest

from oscmc.scenario import (
    PRESETS,
    Scenario,
    ScenarioError,
    load_scenario,
    parse_scenario_text,
    with_policy,
)


def test_presets_all_validate():
    for name, build in PRESETS.items():
        sc = build()
        sc.validate()
        assert sc.name == name


def test_xi_presets_scale_servers_at_45_percent():
    assert load_scenario("xi200").servers == 90
    assert load_scenario("xi500").servers == 225
    assert load_scenario("xi800").servers == 360
    assert load_scenario("xi1100").servers == 495


def test_illustration_preset_structure():
    sc = load_scenario("illustration")
    assert sc.servers == 5 and sc.vms == 15
    assert sc.fixed_malicious_users == [3]
    assert sorted(sc.fixed_users) == [1, 2, 3, 4]
    placed = sorted(vm for vms in sc.fixed_placement.values() for vm in vms)
    assert placed == list(range(1, 16))
    assert sc.pin_placement


def test_parse_basic_keys():
    sc = parse_scenario_text(
        """
        # trial fleet
        servers = 4
        vms = 9
        intervals = 12
        seed = 5
        policy = wosc
        malicious_user_pct = 10.5
        per_vm_models = true
        vm_flavors = 100:200:300, 400:500:600
        """
    )
    assert sc.servers == 4 and sc.vms == 9 and sc.intervals == 12
    assert sc.seed == 5 and sc.policy == "wosc"
    assert sc.malicious_user_pct == 10.5
    assert sc.per_vm_models is True
    assert sc.vm_flavors == [(100.0, 200.0, 300.0), (400.0, 500.0, 600.0)]


def test_parse_inline_comment_and_blank_lines():
    sc = parse_scenario_text("servers = 7  # trimmed fleet\n\nvms = 3\n")
    assert sc.servers == 7 and sc.vms == 3


def test_parse_unknown_key_reports_line():
    with pytest.raises(ScenarioError, match="line 2: unknown key 'frobnicate'"):
        parse_scenario_text("servers = 3\nfrobnicate = 9\n")


def test_parse_bad_value_reports_line_and_key():
    with pytest.raises(ScenarioError, match="line 1: bad value 'many' for servers"):
        parse_scenario_text("servers = many\n")
    with pytest.raises(ScenarioError, match="bad value"):
        parse_scenario_text("vm_flavors = 1:2\n")
    with pytest.raises(ScenarioError, match="bad value"):
        parse_scenario_text("per_vm_models = maybe\n")


def test_parse_missing_equals_reports_line():
    with pytest.raises(ScenarioError, match="line 1: expected key = value"):
        parse_scenario_text("servers 3\n")


def test_validate_rejects_bad_figures():
    with pytest.raises(ScenarioError):
        Scenario(servers=0).validate()
    with pytest.raises(ScenarioError):
        Scenario(policy="magic").validate()
    with pytest.raises(ScenarioError):
        Scenario(malicious_user_pct=120.0).validate()
    with pytest.raises(ScenarioError):
        Scenario(benign_link_rate=1.5).validate()
    with pytest.raises(ScenarioError):
        Scenario(attack_mode="surprise").validate()
    with pytest.raises(ScenarioError):
        Scenario(users=50, vms=10).validate()
    with pytest.raises(ScenarioError):
        Scenario(workers=0).validate()


def test_load_scenario_from_file(tmp_path):
    f = tmp_path / "mini.scn"
    f.write_text("servers = 3\nvms = 6\nintervals = 4\n")
    sc = load_scenario(str(f))
    assert sc.name == "mini"
    assert sc.servers == 3


def test_load_scenario_unknown_reference():
    with pytest.raises(ScenarioError, match="scenario not found"):
        load_scenario("does-not-exist")


def test_with_policy_replaces_only_policy():
    sc = load_scenario("xi200")
    other = with_policy(sc, "pssf")
    assert other.policy == "pssf"
    assert sc.policy == "oscmc"
    assert other.seed == sc.seed
    with pytest.raises(ScenarioError):
        with_policy(sc, "magic")


def test_user_count_default_is_third_of_vms():
    assert Scenario(vms=21).user_count() == 7
    assert Scenario(vms=2).user_count() == 1
    assert Scenario(vms=30, users=5).user_count() == 5
