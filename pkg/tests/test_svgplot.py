"""Standalone SVG chart rendering."""

import xml.etree.ElementTree as ET

import pytest

from stosym.svgplot import log_log_chart


def test_chart_is_well_formed_svg():
    svg = log_log_chart(
        [("err", [0.5, 0.25, 0.125], [1e-2, 5e-3, 2.5e-3])],
        x_label="dt",
        y_label="rms error",
        title="order 1",
    )
    assert svg.startswith("<?xml")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    text = ET.tostring(root, encoding="unicode")
    assert "polyline" in text
    assert "2^-1" in text  # power-of-two tick labels
    assert "order 1" in text


def test_chart_supports_multiple_series_and_base_ten():
    svg = log_log_chart(
        [("a", [0.1, 0.01], [1.0, 0.1]), ("b", [0.1, 0.01], [2.0, 0.02])],
        x_label="x",
        y_label="y",
        base=10.0,
    )
    assert svg.count("polyline") == 2
    assert "10^-1" in svg


def test_chart_rejects_nonpositive_data():
    with pytest.raises(ValueError):
        log_log_chart([("bad", [0.5, 0.25], [1.0, 0.0])], x_label="x", y_label="y")
    with pytest.raises(ValueError):
        log_log_chart([], x_label="x", y_label="y")
