"""Channel-swap / pixel-swap augmentation.

Each transform rotates the sound field by a multiple of -90 degrees about
the vertical axis and optionally mirrors it through the horizontal plane.
For first-order Ambisonics both operations are signed channel
permutations, and on an equirectangular frame they are a column roll and a
row flip, so audio, video and labels can be transformed in lockstep without
any resampling or interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from avseld.core import Doa, FrameGeometry
from avseld.errors import GeometryMismatch, NotFoa
from avseld.foa import FoaClip, W, X, Y, Z
from avseld.labels import SeldEvent


@dataclass(frozen=True)
class AcsTransform:
    """Azimuth rotation by ``-90 * quarter_turns`` degrees, then optional elevation flip."""

    quarter_turns: int = 0
    elevation_flip: bool = False

    def __post_init__(self):
        if self.quarter_turns not in (0, 1, 2, 3):
            raise ValueError(f"quarter_turns must be 0..3, got {self.quarter_turns}")
        object.__setattr__(self, "elevation_flip", bool(self.elevation_flip))

    @property
    def index(self) -> int:
        """Position in :func:`augmentation_set` (0 is the identity)."""
        return self.quarter_turns + 4 * self.elevation_flip

    @property
    def is_identity(self) -> bool:
        return self.quarter_turns == 0 and not self.elevation_flip

    def compose(self, inner: AcsTransform) -> AcsTransform:
        """Transform equal to applying ``inner`` first and then ``self``."""
        # z-rotations commute with the z-mirror
        return AcsTransform(
            (self.quarter_turns + inner.quarter_turns) % 4,
            self.elevation_flip != inner.elevation_flip,
        )

    def inverse(self) -> AcsTransform:
        return AcsTransform((-self.quarter_turns) % 4, self.elevation_flip)

    def __str__(self):
        return f"rot{-90 * self.quarter_turns}{'_flip' if self.elevation_flip else ''}"


IDENTITY = AcsTransform()


def augmentation_set() -> list[AcsTransform]:
    """All eight transforms; identity first, rotations before their flipped twins."""
    return [AcsTransform(k, flip) for flip in (False, True) for k in range(4)]


def transform_doa(t: AcsTransform, d: Doa) -> Doa:
    elevation = -d.elevation if t.elevation_flip else d.elevation
    return Doa(d.azimuth - 90.0 * t.quarter_turns, elevation)


def transform_channels(t: AcsTransform, samples: np.ndarray) -> np.ndarray:
    """Apply ``t`` to an ACN-ordered array of shape (4, ...). Exact sign swaps only."""
    samples = np.asarray(samples)
    if samples.shape[0] != 4:
        raise NotFoa(f"expected 4 ACN channels, got {samples.shape[0]}")
    x, y = samples[X], samples[Y]
    # for psi = -k*90: X' = X cos psi - Y sin psi, Y' = Y cos psi + X sin psi
    new_x, new_y = {
        0: (x, y),
        1: (y, -x),
        2: (-x, -y),
        3: (-y, x),
    }[t.quarter_turns]
    out = np.empty_like(samples)
    out[W] = samples[W]
    out[X] = new_x
    out[Y] = new_y
    out[Z] = -samples[Z] if t.elevation_flip else samples[Z]
    return out


def transform_foa(t: AcsTransform, c: FoaClip) -> FoaClip:
    return FoaClip(transform_channels(t, c.samples), c.sample_rate)


def transform_vectors(t: AcsTransform, v: np.ndarray) -> np.ndarray:
    """Apply ``t`` to Cartesian (x, y, z) vectors along the last axis."""
    v = np.asarray(v)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    new_x, new_y = {0: (x, y), 1: (y, -x), 2: (-x, -y), 3: (-y, x)}[t.quarter_turns]
    return np.stack([new_x, new_y, -z if t.elevation_flip else z], axis=-1)


def column_shift(t: AcsTransform, width: int) -> int:
    """Columns the content moves by (mod width): -3/4 width per quarter turn."""
    return (-t.quarter_turns * 3 * width // 4) % width


def transform_frame(t: AcsTransform, frame: np.ndarray, g: FrameGeometry = FrameGeometry()) -> np.ndarray:
    """Roll and/or mirror an equirectangular frame of shape (H, W[, channels])."""
    frame = np.asarray(frame)
    if frame.shape[:2] != g.shape:
        raise GeometryMismatch(f"frame is {frame.shape[:2]}, geometry says {g.shape}")
    if g.width % 4:
        raise GeometryMismatch(f"width {g.width} is not divisible into quarter turns")
    out = frame
    if t.quarter_turns:
        out = np.roll(out, column_shift(t, g.width), axis=1)
    if t.elevation_flip:
        out = out[::-1]
    if out is frame:
        return frame.copy()
    return np.ascontiguousarray(out)


def transform_metadata(t: AcsTransform, events: Iterable[SeldEvent]) -> list[SeldEvent]:
    return [
        SeldEvent(e.frame, e.class_idx, e.source_idx, transform_doa(t, e.doa))
        for e in events
    ]
