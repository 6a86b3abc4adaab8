"""Equirectangular frame sequences stored as directories of PNG files.

Frames are Sub-filtered and compressed once as independent deflate pieces,
one per quarter row. Under the Sub filter only the first pixel of a quarter
depends on what sits to its left, and quarter-turn rolls keep the cyclic
order of quarters, so each quarter has exactly two encodings: leading its
row or following its left neighbour. Those first pixels are stored verbatim
in front of the compressed remainder. Every rolled or mirrored copy of the
frame is then a reordering of precompressed IDAT chunks with an adler32
trailer derived from per-piece checksums. The result is an ordinary PNG
readable by any decoder.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np
from PIL import Image

from avseld.core import FrameGeometry

try:  # ISA-L deflate is several times faster than zlib at comparable ratios
    from isal import isal_zlib as _deflate

    _LEVEL = 0
except ImportError:  # pragma: no cover - exercised only without isal
    _deflate = zlib
    _LEVEL = 1

FRAME_EXTENSIONS = (".png", ".jpg", ".jpeg", ".npy")
SIDECAR = "frames.json"
NAME_PATTERN = "{:06d}.png"

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ADLER_MOD = 65521
_COLOR_TYPES = {1: 0, 2: 4, 3: 2, 4: 6}
_CHANNELS = {v: k for k, v in _COLOR_TYPES.items()}
_ZLIB_HEADER = b"\x78\x01"
_FINAL_BLOCK = b"\x03\x00"
_FILTER_SUB = 1
_MAX_STORED = 65535


def _chunk(kind: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + kind
        + payload
        + struct.pack(">I", zlib.crc32(kind + payload) & 0xFFFFFFFF)
    )


def _stored(data: bytes) -> bytes:
    """Non-final stored deflate blocks; valid wherever the stream is byte aligned."""
    out = []
    for i in range(0, len(data), _MAX_STORED):
        block = data[i:i + _MAX_STORED]
        out.append(b"\x00" + struct.pack("<HH", len(block), len(block) ^ 0xFFFF) + block)
    return b"".join(out)


class QuarterTiledFrame:
    """A uint8 frame pre-compressed so rolled/mirrored PNGs are cheap to emit."""

    def __init__(self, frame: np.ndarray, level: int = _LEVEL):
        frame = np.asarray(frame)
        if frame.dtype != np.uint8:
            raise TypeError(f"frames must be uint8, got {frame.dtype}")
        if frame.ndim == 2:
            frame = frame[:, :, None]
        height, width, channels = frame.shape
        if channels not in _COLOR_TYPES:
            raise ValueError(f"unsupported channel count {channels}")
        if width % 4 or width == 0:
            raise ValueError(f"width {width} is not divisible by 4")
        self.height, self.width, self.channels = height, width, channels
        qw = width // 4
        self.row_len = 1 + width * channels

        frame = np.ascontiguousarray(frame)
        sub = frame.copy()
        np.subtract(frame[:, 1:], frame[:, :-1], out=sub[:, 1:])
        firsts = frame[:, ::qw]
        lefts = frame[:, [(q * qw - 1) % width for q in range(4)]]
        body_len = (qw - 1) * channels
        bodies = np.ascontiguousarray(sub.reshape(height, 4, qw * channels)[:, :, channels:])
        body_blob = bodies.tobytes()

        # head bytes of both variants: the leading one carries the row's filter byte
        heads = []
        for v, pixel in enumerate((firsts, firsts - lefts)):
            prefix = np.frombuffer(bytes([_FILTER_SUB]) if v == 0 else b"", dtype=np.uint8)
            raw = np.concatenate([np.broadcast_to(prefix, (height, 4, len(prefix))), pixel], axis=2)
            n = raw.shape[2]
            stored = b"IDAT\x00" + struct.pack("<HH", n, n ^ 0xFFFF)
            block = np.concatenate(
                [np.broadcast_to(np.frombuffer(stored, np.uint8), (height, 4, len(stored))), raw], axis=2
            )
            heads.append((raw.astype(np.int64), block.tobytes(), block.shape[2]))

        compressor = _deflate.compressobj(level, _deflate.DEFLATED, -15)
        compress, flush, full = compressor.compress, compressor.flush, _deflate.Z_FULL_FLUSH
        pack = struct.Struct(">I").pack
        crc32, adler32 = _deflate.crc32, zlib.adler32
        limit = body_len + 5 * (body_len // _MAX_STORED + 1)
        cache: dict[bytes, bytes] = {}
        (_, lead_blob, lead_len), (_, follow_blob, follow_len) = heads
        lead_chunks, follow_chunks, body_adler = [], [], []
        for i in range(height * 4):
            raw = body_blob[i * body_len:(i + 1) * body_len]
            piece = cache.get(raw)
            if piece is None:
                piece = compress(raw) + flush(full)
                if len(piece) > limit:
                    piece = _stored(raw)
                cache[raw] = piece
            body_adler.append(adler32(raw))
            for blob, n, out in ((lead_blob, lead_len, lead_chunks), (follow_blob, follow_len, follow_chunks)):
                data = blob[i * n:(i + 1) * n] + piece
                out.append(pack(len(data) - 4) + data + pack(crc32(data)))
        self._lead = [lead_chunks[r * 4:r * 4 + 4] for r in range(height)]
        self._follow = [follow_chunks[r * 4:r * 4 + 4] for r in range(height)]

        # per (variant, row, quarter): S, T (mod 65521) and length of the uncompressed unit
        m = _ADLER_MOD
        a = np.array(body_adler, dtype=np.int64).reshape(height, 4)
        s_body = ((a & 0xFFFF) - 1) % m
        t_body = ((a >> 16) - body_len) % m
        stats = np.zeros((2, height, 4, 3), dtype=np.int64)
        for v, (raw, _, _) in enumerate(heads):
            n = raw.shape[2]
            s_head = raw.sum(axis=2)
            t_head = raw @ np.arange(n, 0, -1, dtype=np.int64)
            stats[v, ..., 0] = (s_head + s_body) % m
            stats[v, ..., 1] = (t_head + s_head * body_len + t_body) % m
            stats[v, ..., 2] = n + body_len
        self._stats = stats

    def _adler32(self, row_order: np.ndarray, quarter_order: np.ndarray) -> int:
        m = _ADLER_MOD
        lead = self._stats[0][:, quarter_order[0]]
        rest = self._stats[1][:, quarter_order[1:]]
        units = np.concatenate([lead[:, None], rest], axis=1)  # (H, 4, 3) in row order
        s, t, n = units[..., 0] % m, units[..., 1] % m, units[..., 2]
        after = np.cumsum(n[:, ::-1], axis=1)[:, ::-1] - n
        s_row = s.sum(axis=1) % m
        t_row = (t.sum(axis=1) + (s * (after % m)).sum(axis=1)) % m
        s_row, t_row = s_row[row_order], t_row[row_order]
        after_row = (self.row_len * np.arange(self.height - 1, -1, -1, dtype=np.int64)) % m
        total = self.height * self.row_len
        a = (1 + int(s_row.sum())) % m
        b = (total + int(t_row.sum()) + int((s_row * after_row).sum())) % m
        return (b << 16) | a

    def png(self, quarter_turns: int = 0, flip: bool = False) -> bytes:
        """PNG bytes of the frame rolled by ``-quarter_turns * 3/4`` width and optionally mirrored."""
        row_order = np.arange(self.height)
        if flip:
            row_order = row_order[::-1]
        quarter_order = (np.arange(4) - quarter_turns) % 4
        q0, q1, q2, q3 = (int(q) for q in quarter_order)

        ihdr = struct.pack(
            ">IIBBBBB", self.width, self.height, 8, _COLOR_TYPES[self.channels], 0, 0, 0
        )
        parts = [_SIGNATURE, _chunk(b"IHDR", ihdr), _chunk(b"IDAT", _ZLIB_HEADER)]
        lead, follow = self._lead, self._follow
        for r in row_order:
            f = follow[r]
            parts += (lead[r][q0], f[q1], f[q2], f[q3])
        trailer = _FINAL_BLOCK + struct.pack(">I", self._adler32(row_order, quarter_order))
        parts += (_chunk(b"IDAT", trailer), _chunk(b"IEND", b""))
        return b"".join(parts)


def encode_png(frame: np.ndarray) -> bytes:
    return QuarterTiledFrame(frame).png()


def _decode_png(data: bytes) -> Optional[np.ndarray]:
    """Fast path for 8-bit, non-interlaced PNGs that only use the None/Sub/Up filters.

    Returns ``None`` for anything else so the caller can fall back to Pillow.
    """
    if data[:8] != _SIGNATURE:
        return None
    pos, header, idat = 8, None, []
    while pos + 8 <= len(data):
        length, kind = struct.unpack(">I4s", data[pos:pos + 8])
        payload = data[pos + 8:pos + 8 + length]
        if len(payload) != length:
            return None
        if kind == b"IHDR":
            header = struct.unpack(">IIBBBBB", payload)
        elif kind == b"IDAT":
            idat.append(payload)
        elif kind == b"IEND":
            break
        elif kind == b"PLTE":
            return None
        pos += 12 + length
    if header is None:
        return None
    width, height, depth, color, _, _, interlace = header
    if depth != 8 or interlace or color not in _CHANNELS:
        return None
    channels = _CHANNELS[color]
    try:
        raw = _deflate.decompress(b"".join(idat))
    except Exception:
        return None
    row_len = 1 + width * channels
    if len(raw) != height * row_len:
        return None
    rows = np.frombuffer(raw, dtype=np.uint8).reshape(height, row_len)
    filters = rows[:, 0]
    if np.any(filters > 2):
        return None
    data3 = rows[:, 1:].reshape(height, width, channels)
    if np.all(filters == _FILTER_SUB):
        out = np.cumsum(data3, axis=1, dtype=np.uint8)
    else:
        out = np.empty_like(data3)
        for r in range(height):
            f = filters[r]
            if f == 0:
                out[r] = data3[r]
            elif f == 1:
                np.cumsum(data3[r], axis=0, dtype=np.uint8, out=out[r])
            else:
                prior = out[r - 1] if r else 0
                np.add(data3[r], prior, out=out[r], casting="unsafe")
    return out[:, :, 0] if channels == 1 else out


def read_frame(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    if path.suffix.lower() == ".png":
        frame = _decode_png(path.read_bytes())
        if frame is not None:
            return frame
    with Image.open(path) as im:
        return np.asarray(im)


def list_frames(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"frame directory {directory} does not exist")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in FRAME_EXTENSIONS)


def read_sidecar(directory) -> dict:
    path = Path(directory) / SIDECAR
    return json.loads(path.read_text()) if path.exists() else {}


def sidecar(n_frames: int, fps: float, g: FrameGeometry) -> dict:
    return {
        "fps": fps,
        "width": g.width,
        "height": g.height,
        "count": n_frames,
        "pattern": NAME_PATTERN.replace("{:06d}", "%06d"),
    }


def write_sidecar(directory, meta: dict) -> None:
    (Path(directory) / SIDECAR).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def write_frames(frames: Iterable[np.ndarray], directory) -> int:
    """Write frames as zero-padded PNGs into an existing directory; returns the count."""
    directory = Path(directory)
    n = 0
    for n, frame in enumerate(frames, start=1):
        (directory / NAME_PATTERN.format(n - 1)).write_bytes(encode_png(frame))
    return n


def iter_frames(directory) -> Iterator[tuple[Path, np.ndarray]]:
    for path in list_frames(directory):
        yield path, read_frame(path)
