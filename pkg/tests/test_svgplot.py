import xml.etree.ElementTree as ET

import numpy as np

from mkdv_lab.svgplot import LinePlot, heat_strip

NS = "{http://www.w3.org/2000/svg}"


def test_line_plot_is_valid_svg():
    p = LinePlot("title <&>", "t", "y", logx=True, logy=True)
    t = np.linspace(1, 10, 20)
    p.add(t, t**-1, "a").add(t, t**-2, "b", dashed=True)
    root = ET.fromstring(p.render())
    lines = root.findall(f"{NS}polyline")
    assert len(lines) == 2
    assert all(len(pl.get("points").split()) == 20 for pl in lines)
    assert lines[1].get("stroke-dasharray")


def test_log_axes_skip_nonpositive_and_nonfinite():
    p = LinePlot("t", "x", "y", logy=True).add([1, 2, 3, 4], [1.0, 0.0, np.nan, 2.0], "s")
    pts = ET.fromstring(p.render()).find(f"{NS}polyline").get("points").split()
    assert len(pts) == 2


def test_empty_plot():
    root = ET.fromstring(LinePlot("t", "x", "y").render())
    assert any(el.text == "no data" for el in root.iter(f"{NS}text"))


def test_constant_series_renders():
    ET.fromstring(LinePlot("t", "x", "y").add([1, 1], [2, 2], "c").render())


def test_heat_strip():
    root = ET.fromstring(heat_strip("h", [0, 1, 2], {"a": [1.0, 10.0, 100.0], "b": [0.0, 1.0, 1.0]}))
    assert len(root.findall(f"{NS}rect")) == 1 + 6
