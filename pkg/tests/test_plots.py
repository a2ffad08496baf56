import xml.etree.ElementTree as ET

import numpy as np
import pytest

from cvrpisa.plots import PlotSpec, UnjoinedInstances, performance_color, scatter_svg, write_scatter

NS = {"s": "http://www.w3.org/2000/svg"}


def parse(svg):
    return ET.fromstring(svg.encode())


def markers(root):
    return root.findall(".//s:g[@class='points']/*[@class='marker']", NS)


def legend(root):
    return root.findall(".//s:g[@class='legend']/s:g[@class='legend-entry']", NS)


def test_two_sources():
    root = parse(scatter_svg(["X-n101-k25", "E-n22-k4"], [[0, 0], [1, 1]]))
    assert len(markers(root)) == 2
    labels = sorted(e.find("s:text", NS).text for e in legend(root))
    assert labels == ["E", "X"]
    assert {m.get("fill") for m in markers(root)} == {"#0072B2", "#D55E00"}


def test_performance_endpoints():
    assert performance_color(0.0) == "#2166ac"
    assert performance_color(1.0) == "#b2182b"
    assert performance_color(-3) == performance_color(0) and performance_color(7) == performance_color(1)
    spec = PlotSpec("performance", {"a": 0.0, "b": 1.0, "c": 0.5})
    root = parse(scatter_svg(["a", "b", "c"], np.eye(3, 2), spec))
    fills = {m.find("s:title", NS).text: m.get("fill") for m in markers(root)}
    assert fills["a"] == "#2166ac" and fills["b"] == "#b2182b"
    assert len(legend(root)) == 3


def test_membership_stars():
    spec = PlotSpec("membership", {"a": "member", "b": "other", "c": "other"})
    root = parse(scatter_svg(["a", "b", "c"], np.zeros((3, 2)), spec))
    ms = markers(root)
    assert [m.tag.split("}")[1] for m in ms] == ["circle", "circle", "polygon"]
    assert ms[-1].find("s:title", NS).text == "a"


def test_unjoined_rows():
    with pytest.raises(UnjoinedInstances) as err:
        scatter_svg(["a", "b"], np.zeros((2, 2)), PlotSpec("source", {"a": "x"}))
    assert err.value.names == ("b",)


def test_performance_requires_values():
    with pytest.raises(ValueError):
        PlotSpec("performance")
    with pytest.raises(ValueError):
        PlotSpec("shape")


def test_escaping_and_empty(tmp_path):
    spec = PlotSpec(title="a < b & c")
    write_scatter(tmp_path / "p.svg", ["<odd>&name"], [[1.0, 2.0]], spec)
    root = ET.parse(tmp_path / "p.svg").getroot()
    assert len(markers(root)) == 1
    assert len(markers(parse(scatter_svg([], np.zeros((0, 2)))))) == 0


def test_equal_aspect():
    root = parse(scatter_svg(["a", "b", "c"], [[0, 0], [10, 0], [0, 1]]))
    pts = {m.find("s:title", NS).text: (float(m.get("cx")), float(m.get("cy"))) for m in markers(root)}
    dx = pts["b"][0] - pts["a"][0]
    dy = pts["a"][1] - pts["c"][1]
    assert dx / dy == pytest.approx(10, rel=0.05)
