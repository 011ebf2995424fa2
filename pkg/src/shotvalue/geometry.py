"""Court geometry and landing-region tests.

Coordinate frame used throughout the package: origin at the court center,
the net plane at y = 0, z vertical. Shots are canonicalized so the shooter
hits from y < 0 toward +y; landing regions therefore live in the y >= 0
half. Balls on the line count as in (regions are closed sets).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError, ParseError

# Regulation singles court, meters.
DEFAULT_COURT_HALF_LENGTH = 11.885
DEFAULT_SINGLES_HALF_WIDTH = 4.115
DEFAULT_SERVICE_LINE_DISTANCE = 6.40
DEFAULT_NET_HEIGHT_CENTER = 0.914

REGIONS = ("singles_court", "deuce_service_box", "ad_service_box")


@dataclass(frozen=True)
class CourtGeometry:
    """Dimensions of a singles court, all in meters from the court center."""

    court_half_length: float = DEFAULT_COURT_HALF_LENGTH
    singles_half_width: float = DEFAULT_SINGLES_HALF_WIDTH
    service_line_distance: float = DEFAULT_SERVICE_LINE_DISTANCE
    net_height_center: float = DEFAULT_NET_HEIGHT_CENTER

    def __post_init__(self):
        for name in (
            "court_half_length",
            "singles_half_width",
            "service_line_distance",
            "net_height_center",
        ):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise GeometryError(f"{name} must be a positive finite number, got {v!r}")
        if self.service_line_distance >= self.court_half_length:
            raise GeometryError(
                "service_line_distance must be smaller than court_half_length "
                f"({self.service_line_distance} >= {self.court_half_length})"
            )


def in_bounds(point, region, geometry=None):
    """True iff ``point`` = (x, y) lies inside the closed landing ``region``.

    Regions are defined for the canonical orientation (shooter at y < 0),
    so legal landings have y >= 0. Deuce is the receiver's right-hand half
    court, which is x <= 0 in this frame. Non-finite coordinates are out.
    """
    geometry = geometry or CourtGeometry()
    x, y = float(point[0]), float(point[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        return False
    if region == "singles_court":
        return abs(x) <= geometry.singles_half_width and 0.0 <= y <= geometry.court_half_length
    if region == "deuce_service_box":
        return -geometry.singles_half_width <= x <= 0.0 and 0.0 <= y <= geometry.service_line_distance
    if region == "ad_service_box":
        return 0.0 <= x <= geometry.singles_half_width and 0.0 <= y <= geometry.service_line_distance
    raise ValueError(f"unknown region {region!r}; expected one of {REGIONS}")


def in_service_boxes(point, geometry=None):
    """True iff the point lies in either service box (serving side unknown)."""
    return in_bounds(point, "deuce_service_box", geometry) or in_bounds(
        point, "ad_service_box", geometry
    )


def load_geometry(path):
    """Read a flat ``key = value`` geometry file (meters)."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            try:
                values[key.strip()] = float(value.strip())
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad number {value.strip()!r}") from exc
    allowed = {f.name for f in CourtGeometry.__dataclass_fields__.values()}
    unknown = set(values) - allowed
    if unknown:
        raise ParseError(f"{path}: unknown geometry keys {sorted(unknown)}")
    return CourtGeometry(**values)


def save_geometry(geometry, path):
    with open(path, "w", encoding="utf-8") as fh:
        for name in (
            "court_half_length",
            "singles_half_width",
            "service_line_distance",
            "net_height_center",
        ):
            fh.write(f"{name} = {getattr(geometry, name)!r}\n")
