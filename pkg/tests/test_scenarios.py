import json
import math
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spgpnav.safety import pairwise_h
from spgpnav.scenarios import (
    CAPACITY,
    SCENARIOS,
    ScenarioError,
    build_scenario,
    from_document,
    load_scenario,
    save_scenario,
    to_document,
    with_params,
)

ALL_SIZES = [(name, n) for name in SCENARIOS for n in range(1, CAPACITY[name] + 1)]


class TestBuild:
    @pytest.mark.parametrize("name,n", ALL_SIZES)
    def test_clear_start_and_goals(self, name, n):
        config = build_scenario(name, n)
        assert config.n_agents == n
        for a, b in combinations(config.agents, 2):
            assert pairwise_h(a, b) >= 0
            assert math.dist(a.goal, b.goal) >= a.safety_radius + b.safety_radius
        for a in config.agents:
            assert a.velocity == (0.0, 0.0)
            for w in config.walls:
                assert w.clearance(a.position, a.safety_radius) >= 0
                assert w.clearance(a.goal, a.safety_radius) >= 0

    @pytest.mark.parametrize("name", SCENARIOS)
    def test_over_capacity(self, name):
        with pytest.raises(ScenarioError, match=str(CAPACITY[name])):
            build_scenario(name, CAPACITY[name] + 1)

    def test_unknown_name(self):
        with pytest.raises(ScenarioError, match="unknown scenario"):
            build_scenario("maze", 2)

    def test_zero_agents(self):
        with pytest.raises(ScenarioError):
            build_scenario("doorway", 0)

    def test_unknown_override(self):
        with pytest.raises(ScenarioError, match="colour"):
            build_scenario("doorway", 2, {"colour": 1})

    def test_overrides_routed(self):
        c = build_scenario("doorway", 2, {"delta": 1.5, "gamma": 3.0, "kp": 0.5, "dt": 0.02,
                                          "t_max": 50, "gap": 1.0})
        assert (c.spgp.delta, c.safety.gamma, c.gains.kp, c.dt, c.t_max) == \
            (1.5, 3.0, 0.5, 0.02, 50)
        assert dict(c.geometry)["gap"] == 1.0

    def test_defaults(self):
        c = build_scenario("doorway", 2)
        assert (c.dt, c.t_max, c.eps_goal) == (0.05, 2000, 0.1)
        assert c.spgp.delta == 1.0
        assert all(a.accel_limit == 1.0 and a.safety_radius == 0.2 for a in c.agents)

    def test_doorway_is_head_on(self):
        c = build_scenario("doorway", 2)
        a, b = c.agents
        # starts on opposite sides of the wall line x = 0, goals swapped across it
        assert a.position[0] * b.position[0] < 0
        assert a.position[0] * a.goal[0] < 0
        assert b.position[0] * b.goal[0] < 0

    @pytest.mark.parametrize("name,n", ALL_SIZES)
    def test_deterministic(self, name, n):
        assert save_scenario(build_scenario(name, n)) == save_scenario(build_scenario(name, n))

    def test_overlapping_goals_rejected(self):
        with pytest.raises(ScenarioError, match="goals of agents"):
            build_scenario("doorway", 4, {"goal_spacing": 0.1})


class TestDocuments:
    @pytest.mark.parametrize("name,n", ALL_SIZES)
    def test_round_trip(self, name, n):
        config = build_scenario(name, n, {"delta": 0.75})
        again = load_scenario(save_scenario(config))
        assert again == config
        assert save_scenario(again) == save_scenario(config)

    def test_header(self):
        doc = json.loads(save_scenario(build_scenario("hallway", 2)))
        assert doc["format"] == "spgpnav-scenario" and doc["version"] == 1

    def test_missing_delta_names_key(self):
        doc = to_document(build_scenario("doorway", 2))
        del doc["spgp"]["delta"]
        with pytest.raises(ScenarioError, match="spgp.*delta"):
            from_document(doc)

    def test_missing_agent_key(self):
        doc = to_document(build_scenario("doorway", 2))
        del doc["agents"][1]["goal"]
        with pytest.raises(ScenarioError, match=r"agents\[1\].*goal"):
            from_document(doc)

    def test_overlap_names_pair(self):
        doc = to_document(build_scenario("doorway", 3))
        doc["agents"][2]["position"] = list(doc["agents"][0]["position"])
        with pytest.raises(ScenarioError, match="agents 0 and 2 overlap"):
            from_document(doc)

    def test_agent_in_wall(self):
        doc = to_document(build_scenario("doorway", 2))
        doc["agents"][0]["position"] = [0.0, 2.0]
        with pytest.raises(ScenarioError, match="agent 0 overlaps wall"):
            from_document(doc)

    def test_obstacle_overlap(self):
        doc = to_document(build_scenario("hallway", 2))
        doc["obstacles"] = [{"center": doc["agents"][0]["goal"], "radius": 0.1}]
        with pytest.raises(ScenarioError, match="goal of agent 0"):
            from_document(doc)

    @pytest.mark.parametrize("field,value,pattern", [
        ("format", "other", "format"),
        ("version", 2, "version"),
    ])
    def test_header_checked(self, field, value, pattern):
        doc = to_document(build_scenario("doorway", 2))
        doc[field] = value
        with pytest.raises(ScenarioError, match=pattern):
            from_document(doc)

    def test_unknown_param_key(self):
        doc = to_document(build_scenario("doorway", 2))
        doc["safety"]["beta"] = 1.0
        with pytest.raises(ScenarioError, match="beta"):
            from_document(doc)

    def test_invalid_param_value(self):
        doc = to_document(build_scenario("doorway", 2))
        doc["spgp"]["delta"] = -1.0
        with pytest.raises(ScenarioError, match="spgp"):
            from_document(doc)

    def test_bad_json_reports_line(self):
        with pytest.raises(ScenarioError, match="line 2"):
            load_scenario('{\n  "format": }')

    def test_capacity_enforced_on_load(self):
        doc = to_document(build_scenario("lcorner", 5))
        extra = dict(doc["agents"][0], id=99, position=[50.0, 50.0], goal=[60.0, 60.0])
        doc["agents"].append(extra)
        with pytest.raises(ScenarioError, match="at most 5"):
            from_document(doc)

    def test_custom_name_has_no_capacity(self):
        doc = to_document(build_scenario("lcorner", 5))
        doc["name"] = "custom"
        doc["agents"].append(dict(doc["agents"][0], id=99, position=[50.0, 50.0],
                                  goal=[60.0, 60.0]))
        assert from_document(doc).n_agents == 6


class TestWithParams:
    def test_routes_groups(self):
        c = with_params(build_scenario("doorway", 2), delta=2.0, gamma=5.0, t_max=10)
        assert (c.spgp.delta, c.safety.gamma, c.t_max) == (2.0, 5.0, 10)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.1, 5.0))
    def test_only_delta_changes(self, delta):
        base = build_scenario("intersection", 3)
        c = with_params(base, delta=delta)
        assert c.spgp.delta == delta
        assert c.agents == base.agents and c.walls == base.walls and c.safety == base.safety
