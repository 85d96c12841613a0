import xml.etree.ElementTree as ET

import pytest

from spgpnav.plotting import sweep_svg, trajectory_svg, write_svg
from spgpnav.scenarios import build_scenario
from spgpnav.simulator import simulate

NS = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def doorway_log():
    config = build_scenario("doorway", 2)
    return simulate(config, 0), config


def by_class(root, name):
    return [e for e in root.iter() if e.get("class") == name]


class TestTrajectory:
    def test_structure(self, doorway_log):
        log, config = doorway_log
        root = ET.fromstring(trajectory_svg(log, config))
        assert root.tag == f"{NS}svg"
        paths = by_class(root, "path")
        assert len(paths) == 2
        assert all(p.tag == f"{NS}polyline" for p in paths)
        assert len(paths[0].get("points").split()) == log.positions.shape[0]
        assert len(by_class(root, "wall")) == len(config.walls)
        assert len(by_class(root, "goal")) == 2
        assert len(by_class(root, "start")) == len(by_class(root, "end")) == 2

    def test_pseudo_goal_markers(self, doorway_log):
        log, config = doorway_log
        root = ET.fromstring(trajectory_svg(log, config))
        assert len(by_class(root, "pseudo-goal")) == log.count("perturb") > 0

    def test_deterministic(self, doorway_log):
        log, config = doorway_log
        assert trajectory_svg(log, config) == trajectory_svg(log, config)

    def test_title_escaped(self, doorway_log):
        log, config = doorway_log
        root = ET.fromstring(trajectory_svg(log, config, title="a < b & c"))
        assert root.find(f"{NS}title").text == "a < b & c"


class TestSweep:
    CURVE = [(0.5, 330.0, 5.0), (1.0, 375.0, 0.0), (1.5, 381.0, 2.0), (2.0, 399.0, 4.0)]

    def test_markers(self):
        root = ET.fromstring(sweep_svg(self.CURVE))
        assert len(by_class(root, "marker")) == 4
        assert len(by_class(root, "curve")) == 1
        # zero std draws no error bar
        assert len(by_class(root, "errorbar")) == 3

    def test_markers_follow_data(self):
        root = ET.fromstring(sweep_svg(self.CURVE))
        xs = [float(m.get("cx")) for m in by_class(root, "marker")]
        ys = [float(m.get("cy")) for m in by_class(root, "marker")]
        assert xs == sorted(xs)
        # larger makespan is drawn higher, i.e. smaller y
        assert ys == sorted(ys, reverse=True)

    def test_order_of_input_irrelevant(self):
        assert sweep_svg(self.CURVE) == sweep_svg(self.CURVE[::-1])

    def test_single_point(self):
        root = ET.fromstring(sweep_svg([(1.0, 100.0, 0.0)]))
        assert len(by_class(root, "marker")) == 1

    def test_empty(self):
        with pytest.raises(ValueError):
            sweep_svg([])


def test_write_error_names_path(tmp_path):
    path = str(tmp_path / "no" / "plot.svg")
    with pytest.raises(OSError, match="plot.svg"):
        write_svg("<svg/>", path)
