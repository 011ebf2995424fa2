import math

import pytest
from hypothesis import given, strategies as st

from shotvalue.errors import GeometryError, ParseError
from shotvalue.geometry import CourtGeometry, in_bounds, load_geometry, save_geometry

GEOM = CourtGeometry()


def test_defaults_are_regulation():
    assert GEOM.court_half_length == pytest.approx(11.885)
    assert GEOM.singles_half_width == pytest.approx(4.115)
    assert GEOM.service_line_distance == pytest.approx(6.40)
    assert GEOM.net_height_center == pytest.approx(0.914)


def test_invalid_geometry_rejected():
    with pytest.raises(GeometryError):
        CourtGeometry(court_half_length=-1.0)
    with pytest.raises(GeometryError):
        CourtGeometry(service_line_distance=12.0)  # beyond the baseline


def test_interior_point_past_net():
    assert in_bounds((0.0, 0.1), "singles_court", GEOM)


def test_wide_point_is_out():
    assert not in_bounds((GEOM.singles_half_width + 0.001, 3.0), "singles_court", GEOM)
    assert not in_bounds((-5.0, 3.0), "singles_court", GEOM)


def test_on_the_line_is_in():
    assert in_bounds((GEOM.singles_half_width, 3.0), "singles_court", GEOM)
    assert in_bounds((0.0, GEOM.court_half_length), "singles_court", GEOM)
    assert in_bounds((0.0, 0.0), "singles_court", GEOM)


def test_nonfinite_is_out():
    assert not in_bounds((math.nan, 1.0), "singles_court", GEOM)
    assert not in_bounds((1.0, math.inf), "singles_court", GEOM)


def test_unknown_region():
    with pytest.raises(ValueError):
        in_bounds((0, 0), "doubles_alley", GEOM)


@given(
    x=st.floats(-20, 20, allow_nan=False),
    y=st.floats(-20, 20, allow_nan=False),
)
def test_service_boxes_subset_of_court(x, y):
    for box in ("deuce_service_box", "ad_service_box"):
        if in_bounds((x, y), box, GEOM):
            assert in_bounds((x, y), "singles_court", GEOM)


def test_deuce_and_ad_split_the_band():
    assert in_bounds((-2.0, 3.0), "deuce_service_box", GEOM)
    assert not in_bounds((2.0, 3.0), "deuce_service_box", GEOM)
    assert in_bounds((2.0, 3.0), "ad_service_box", GEOM)


def test_geometry_config_roundtrip(tmp_path):
    path = tmp_path / "court.cfg"
    custom = CourtGeometry(
        court_half_length=12.0,
        singles_half_width=4.0,
        service_line_distance=6.0,
        net_height_center=1.0,
    )
    save_geometry(custom, path)
    assert load_geometry(path) == custom


def test_geometry_config_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("court_half_length twelve\n")
    with pytest.raises(ParseError):
        load_geometry(path)
    path.write_text("no_such_key = 3\n")
    with pytest.raises(ParseError):
        load_geometry(path)
