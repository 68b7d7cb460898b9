import xml.etree.ElementTree as ET

import numpy as np
from hypothesis import given, strategies as st

from fusedfocus.svg import HEIGHT, MARGIN, WIDTH, Figure, Marker, Series

NS = "{http://www.w3.org/2000/svg}"
finite = st.floats(-1e3, 1e3)


def parse(fig):
    return ET.fromstring(fig.render())


class TestFigure:
    def test_well_formed(self):
        fig = Figure(title="a < b & c", xlabel="x", ylabel="y", hlines=[0.0])
        fig.series.append(Series([0, 1, 2], [1, 0, 1], "red", "curve", dashed=True))
        fig.markers.append(Marker(1.0, 0.0, "green", "point"))
        root = parse(fig)
        assert root.tag == NS + "svg"
        assert len(root.findall(NS + "polyline")) == 1
        assert len(root.findall(NS + "circle")) == 1
        assert any(t.text == "a < b & c" for t in root.iter(NS + "text"))

    def test_nonfinite_points_dropped(self):
        fig = Figure(series=[Series([0, 1, 2, 3], [0, np.nan, np.inf, 1])])
        (line,) = parse(fig).findall(NS + "polyline")
        assert len(line.get("points").split()) == 2

    def test_empty_figure(self):
        assert parse(Figure(title="empty")).tag == NS + "svg"

    def test_deterministic(self):
        def make():
            return Figure(series=[Series(np.linspace(0, 1, 50), np.sin(np.linspace(0, 1, 50)))]).render()
        assert make() == make()

    @given(xs=st.lists(finite, min_size=1, max_size=30), ys=st.lists(finite, min_size=1, max_size=30))
    def test_points_inside_plot_area(self, xs, ys):
        n = min(len(xs), len(ys))
        (line,) = parse(Figure(series=[Series(xs[:n], ys[:n])])).findall(NS + "polyline")
        for pair in line.get("points").split():
            a, b = map(float, pair.split(","))
            assert MARGIN - 0.01 <= a <= WIDTH - MARGIN + 0.01
            assert MARGIN - 0.01 <= b <= HEIGHT - MARGIN + 0.01
