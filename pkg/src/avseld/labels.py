"""Label codecs: metadata CSV, multi-ACCDOA targets and bounding-box embeddings."""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from avseld.core import Doa, doa_to_unit_vec, unit_vec_to_doa
from avseld.errors import ParseError, RangeError, TooManySources
from avseld.wavio import atomic_path

N_CLASSES = 13
N_TRACKS = 3
LABEL_RATE_HZ = 10  # label frames per second (100 ms hop)

# visual embedding layout
MAX_BOXES = 6
N_BINS = 37

DECODE_THRESHOLD = 0.5

ACCDOA_MAGIC = 0xACCD
VISUAL_MAGIC = 0x715E
TENSOR_VERSION = 1
_HEADER_LEN = 8


@dataclass(frozen=True)
class SeldEvent:
    """One labelled source in one 100 ms frame."""

    frame: int
    class_idx: int
    source_idx: int
    doa: Doa

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"negative frame index {self.frame}")
        if not 0 <= self.class_idx < N_CLASSES:
            raise ValueError(f"class {self.class_idx} outside 0..{N_CLASSES - 1}")
        if self.source_idx < 0:
            raise ValueError(f"negative source index {self.source_idx}")

    @property
    def sort_key(self):
        return (self.frame, self.class_idx, self.source_idx)


def sort_events(events: Iterable[SeldEvent]) -> list[SeldEvent]:
    return sorted(events, key=lambda e: e.sort_key)


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def _parse_int(field: str, name: str, path, lineno: int) -> int:
    try:
        value = float(field)
    except ValueError:
        raise ParseError(f"{name} {field!r} is not a number", path, lineno) from None
    if not value.is_integer():
        raise ParseError(f"{name} {field!r} is not an integer", path, lineno)
    return int(value)


def parse_metadata(text: str, path=None) -> list[SeldEvent]:
    """Parse ``frame,class,source,azimuth,elevation`` rows.

    A sixth column (source distance, as in newer dataset releases) is
    accepted and ignored. Blank lines are skipped.
    """
    events = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) not in (5, 6):
            raise ParseError(f"expected 5 comma-separated fields, got {len(fields)}", path, lineno)
        frame = _parse_int(fields[0], "frame", path, lineno)
        class_idx = _parse_int(fields[1], "class", path, lineno)
        source_idx = _parse_int(fields[2], "source", path, lineno)
        try:
            azimuth, elevation = float(fields[3]), float(fields[4])
        except ValueError:
            raise ParseError("azimuth/elevation must be numbers", path, lineno) from None
        if frame < 0:
            raise RangeError(f"frame {frame} is negative", path, lineno)
        if not 0 <= class_idx < N_CLASSES:
            raise RangeError(f"class {class_idx} outside 0..{N_CLASSES - 1}", path, lineno)
        if source_idx < 0:
            raise RangeError(f"source {source_idx} is negative", path, lineno)
        if not (math.isfinite(azimuth) and math.isfinite(elevation)) or abs(elevation) > 90:
            raise RangeError(f"invalid direction ({azimuth}, {elevation})", path, lineno)
        events.append(SeldEvent(frame, class_idx, source_idx, Doa(azimuth, elevation)))
    return sort_events(events)


def read_metadata(path) -> list[SeldEvent]:
    return parse_metadata(Path(path).read_text(), path)


def format_metadata(events: Iterable[SeldEvent]) -> str:
    lines = []
    for e in sort_events(events):
        azimuth = round_half_away(e.doa.azimuth)
        if azimuth == 180:
            azimuth = -180
        elevation = round_half_away(e.doa.elevation)
        lines.append(f"{e.frame},{e.class_idx},{e.source_idx},{azimuth},{elevation}\n")
    return "".join(lines)


def write_metadata(events: Iterable[SeldEvent], path) -> None:
    """Write integer-degree rows sorted by (frame, class, source), no header."""
    text = format_metadata(events)
    with atomic_path(path) as tmp:
        tmp.write_text(text)


def n_frames(events: Sequence[SeldEvent]) -> int:
    return max((e.frame for e in events), default=-1) + 1


def encode_multi_accdoa(events: Iterable[SeldEvent], n_frames: int) -> np.ndarray:
    """Targets of shape (T, tracks, classes, 3).

    Sources active in the same frame and class occupy tracks 0, 1, 2 in
    ascending source index; each holds the unit DoA vector.
    """
    out = np.zeros((n_frames, N_TRACKS, N_CLASSES, 3))
    grouped: dict[tuple[int, int], dict[int, Doa]] = {}
    for e in events:
        if e.frame >= n_frames:
            raise ValueError(f"event frame {e.frame} beyond {n_frames} target frames")
        grouped.setdefault((e.frame, e.class_idx), {})[e.source_idx] = e.doa
    for (frame, class_idx), sources in grouped.items():
        if len(sources) > N_TRACKS:
            raise TooManySources(
                f"frame {frame}, class {class_idx}: {len(sources)} sources, at most {N_TRACKS}"
            )
        for track, source_idx in enumerate(sorted(sources)):
            out[frame, track, class_idx] = doa_to_unit_vec(sources[source_idx])
    return out


def decode_multi_accdoa(
    values: np.ndarray, threshold: float = DECODE_THRESHOLD
) -> list[SeldEvent]:
    """Events for every (frame, track, class) vector longer than ``threshold``."""
    values = np.asarray(values, dtype=np.float64)
    norms = np.linalg.norm(values, axis=-1)
    events = []
    for frame, track, class_idx in zip(*np.nonzero(norms > threshold)):
        doa = unit_vec_to_doa(values[frame, track, class_idx])
        events.append(SeldEvent(int(frame), int(class_idx), int(track), doa))
    return sort_events(events)


@dataclass(frozen=True)
class BoundingBox:
    """Detection box in normalised image coordinates (centre and size)."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ValueError(f"box centre ({self.cx}, {self.cy}) outside the unit square")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"box size ({self.w}, {self.h}) outside (0, 1]")

    @property
    def area(self) -> float:
        return self.w * self.h


def gaussian_bins(center: float, size: float, n_bins: int = N_BINS) -> np.ndarray:
    """Gaussian bump over ``n_bins`` bins for a box edge span.

    The peak sits at ``center * (n_bins - 1)``; the width is half the box
    extent in bins, floored at one bin.
    """
    scale = n_bins - 1
    sigma = max(size * scale / 2.0, 1.0)
    n = np.arange(n_bins)
    return np.exp(-((n - center * scale) ** 2) / (2.0 * sigma**2))


def encode_visual_boxes(boxes: Sequence[BoundingBox]) -> np.ndarray:
    """Embedding of shape (2, 6, 37): azimuth rows then elevation rows.

    With more than six boxes only the six largest by area are kept (stable
    for equal areas, kept boxes stay in input order) and a warning is issued.
    """
    boxes = list(boxes)
    if len(boxes) > MAX_BOXES:
        warnings.warn(
            f"{len(boxes)} boxes in one frame, keeping the {MAX_BOXES} largest",
            stacklevel=2,
        )
        keep = sorted(range(len(boxes)), key=lambda i: -boxes[i].area)[:MAX_BOXES]
        boxes = [boxes[i] for i in sorted(keep)]
    out = np.zeros((2, MAX_BOXES, N_BINS))
    for slot, box in enumerate(boxes):
        out[0, slot] = gaussian_bins(box.cx, box.w)
        out[1, slot] = gaussian_bins(box.cy, box.h)
    return out


def read_boxes(path) -> dict[int, list[BoundingBox]]:
    """Read ``frame,cx,cy,w,h`` rows into per-frame box lists (file order kept)."""
    frames: dict[int, list[BoundingBox]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 5:
            raise ParseError(f"expected 5 comma-separated fields, got {len(fields)}", path, lineno)
        frame = _parse_int(fields[0], "frame", path, lineno)
        try:
            box = BoundingBox(*(float(f) for f in fields[1:]))
        except ValueError as err:
            raise RangeError(str(err), path, lineno) from None
        if frame < 0:
            raise RangeError(f"frame {frame} is negative", path, lineno)
        frames.setdefault(frame, []).append(box)
    return frames


def encode_visual_sequence(frames: dict[int, list[BoundingBox]], n_frames: int) -> np.ndarray:
    out = np.zeros((n_frames, 2, MAX_BOXES, N_BINS))
    for frame, boxes in frames.items():
        if frame < n_frames:
            out[frame] = encode_visual_boxes(boxes)
    return out


# Tensor files: 8 little-endian float32 header values
# (magic, version, d0, d1, d2, d3, 0, 0) followed by the C-order float32 payload.

def tensor_to_bytes(values: np.ndarray, magic: int) -> bytes:
    values = np.asarray(values)
    if values.ndim != 4:
        raise ValueError(f"tensor files hold 4-D arrays, got {values.ndim}-D")
    header = np.array([magic, TENSOR_VERSION, *values.shape, 0, 0], dtype="<f4")
    return header.tobytes() + np.ascontiguousarray(values, dtype="<f4").tobytes()


def tensor_from_bytes(data: bytes, magic: int | None = None) -> np.ndarray:
    if len(data) < 4 * _HEADER_LEN:
        raise ParseError("tensor file shorter than its header")
    header = struct.unpack("<8f", data[: 4 * _HEADER_LEN])
    if magic is not None and header[0] != magic:
        raise ParseError(f"bad magic {header[0]:g}, expected {magic}")
    if header[1] != TENSOR_VERSION:
        raise ParseError(f"unsupported tensor version {header[1]:g}")
    shape = tuple(int(d) for d in header[2:6])
    payload = np.frombuffer(data, dtype="<f4", offset=4 * _HEADER_LEN)
    if payload.size != math.prod(shape):
        raise ParseError(f"payload has {payload.size} values, header says {shape}")
    return payload.reshape(shape).astype(np.float32)


def write_tensor(path, values: np.ndarray, magic: int = ACCDOA_MAGIC) -> None:
    data = tensor_to_bytes(values, magic)
    with atomic_path(path) as tmp:
        tmp.write_bytes(data)


def read_tensor(path, magic: int | None = None) -> np.ndarray:
    return tensor_from_bytes(Path(path).read_bytes(), magic)
