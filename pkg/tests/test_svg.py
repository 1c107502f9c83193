import xml.etree.ElementTree as ET

import numpy as np
import pytest

from cyclicproj.svg import HEIGHT, WIDTH, Figure

NS = "{http://www.w3.org/2000/svg}"


def test_render_is_valid_xml():
    fig = Figure(title="a < b & c", xlabel="x", ylabel="y", equal_aspect=True)
    fig.polygon([[0, 0], [1, 0], [0, 1]])
    fig.circle((0, 0), 1.0)
    fig.polyline([[0, 0], [2, 1], [3, -1]], dash="4 2")
    fig.markers([[1, 1], [2, 2]])
    fig.text((0.5, 0.5), "label <1>")
    root = ET.fromstring(fig.render())
    assert root.tag == NS + "svg"
    assert root.get("width") == str(WIDTH) and root.get("height") == str(HEIGHT)
    assert len(root.findall(NS + "polygon")) == 1
    assert len(root.findall(NS + "polyline")) == 1


def test_autoscale_keeps_points_on_canvas():
    fig = Figure()
    fig.polyline(np.array([[-1e3, 5.0], [1e3, 7.0]]))
    root = ET.fromstring(fig.render())
    pts = root.find(NS + "polyline").get("points").split()
    for p in pts:
        x, y = map(float, p.split(","))
        assert 0 <= x <= WIDTH and 0 <= y <= HEIGHT


def test_empty_and_degenerate_figures():
    ET.fromstring(Figure().render())
    fig = Figure()
    fig.markers([[1.0, 1.0]])
    ET.fromstring(fig.render())


def test_rejects_bad_shape():
    with pytest.raises(ValueError):
        Figure().polyline([1.0, 2.0, 3.0])


def test_save(tmp_path):
    fig = Figure(title="t")
    fig.polyline([[0, 0], [1, 1]])
    path = tmp_path / "f.svg"
    fig.save(path)
    ET.parse(path)
