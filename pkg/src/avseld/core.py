"""Directions of arrival, angle arithmetic and the equirectangular projection.

Conventions used throughout the package:

- Angles are in degrees. Azimuth is wrapped into [-180, 180) and grows
  counterclockwise seen from above (+90 is to the left), elevation lies in
  [-90, 90] and grows upward.
- Cartesian axes: x points to the front (azimuth 0), y to the left, z up.
- Equirectangular columns decrease with azimuth, so azimuth -90 lands at
  column 3/4 of the frame width and a -90 degree rotation is a roll of
  3/4 of the width towards negative columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from avseld.errors import ZeroVector

_ZERO_NORM = 1e-12


def wrap_azimuth(azimuth: float) -> float:
    """Wrap an angle in degrees into [-180, 180)."""
    wrapped = (float(azimuth) + 180.0) % 360.0 - 180.0
    # fmod rounding can land exactly on the excluded upper bound
    if wrapped >= 180.0:
        wrapped -= 360.0
    return wrapped


@dataclass(frozen=True)
class Doa:
    """Direction of arrival in degrees."""

    azimuth: float
    elevation: float

    def __post_init__(self):
        elevation = float(self.elevation)
        if not math.isfinite(elevation) or not math.isfinite(float(self.azimuth)):
            raise ValueError(f"non-finite direction ({self.azimuth}, {self.elevation})")
        if abs(elevation) > 90.0:
            raise ValueError(f"elevation {elevation} outside [-90, 90]")
        object.__setattr__(self, "azimuth", wrap_azimuth(self.azimuth))
        object.__setattr__(self, "elevation", elevation)

    def unit_vec(self) -> Vec3:
        return doa_to_unit_vec(self)


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class FrameGeometry:
    """Pixel size of an equirectangular (full sphere) frame."""

    width: int = 1920
    height: int = 960

    def __post_init__(self):
        if self.height <= 0 or self.width != 2 * self.height:
            raise ValueError(
                f"equirectangular frames need width == 2 * height, got {self.width}x{self.height}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


def doa_to_unit_vec(d: Doa) -> Vec3:
    azi = math.radians(d.azimuth)
    ele = math.radians(d.elevation)
    cos_ele = math.cos(ele)
    return Vec3(math.cos(azi) * cos_ele, math.sin(azi) * cos_ele, math.sin(ele))


def unit_vec_to_doa(v) -> Doa:
    """Direction of any non-zero vector; azimuth is pinned to 0 on the vertical axis."""
    x, y, z = (float(c) for c in v)
    if math.sqrt(x * x + y * y + z * z) <= _ZERO_NORM:
        raise ZeroVector(f"cannot take the direction of {(x, y, z)}")
    r_xy = math.hypot(x, y)
    elevation = math.degrees(math.atan2(z, r_xy))
    azimuth = 0.0 if r_xy == 0.0 else math.degrees(math.atan2(y, x))
    return Doa(azimuth, elevation)


def angular_distance(a: Doa, b: Doa) -> float:
    """Great-circle angle between two directions, in degrees within [0, 180]."""
    u = np.asarray(doa_to_unit_vec(a))
    v = np.asarray(doa_to_unit_vec(b))
    # atan2 form stays accurate for nearly parallel and nearly antipodal pairs
    return math.degrees(math.atan2(float(np.linalg.norm(np.cross(u, v))), float(u @ v)))


def angular_distance_vec(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorised great-circle angle (degrees) between rows of two (..., 3) arrays."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.degrees(np.arctan2(cross, dot))


def project_equirect(d: Doa, g: FrameGeometry = FrameGeometry()) -> tuple[int, int]:
    """Pixel (column, row) containing direction ``d``.

    Directions that fall exactly on a row boundary are assigned to the row on
    the pole side of that boundary. The horizon itself is a boundary for even
    heights; it goes to the lower row for ``+0.0`` and to the upper row for
    ``-0.0``. This makes the mapping commute exactly with a vertical mirror of
    the frame (see :func:`avseld.augment.transform_frame`).
    """
    col_f = g.width / 2 - d.azimuth * g.width / 360.0
    col = math.floor(col_f) % g.width

    row_f = g.height / 2 - d.elevation * g.height / 180.0
    upper = d.elevation > 0 or (d.elevation == 0 and math.copysign(1.0, d.elevation) < 0)
    row = math.ceil(row_f) - 1 if upper else math.floor(row_f)
    row = min(max(row, 0), g.height - 1)
    return col, row
