"""Synthetic 360-degree audio-visual soundscapes.

A scene is a list of static events. Each event takes a mono asset, spatialises
it with the room impulse response nearest to its direction, and appears in
the video as a 50x50 tile pasted on a black equirectangular canvas at the
projected direction. Labels follow the 100 ms ``frame,class,source,azimuth,
elevation`` convention.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from PIL import Image

from avseld.core import Doa, FrameGeometry, doa_to_unit_vec, project_equirect, angular_distance_vec
from avseld.errors import InfeasibleScene, ParseError, RangeError, SampleRateMismatch
from avseld.foa import DEFAULT_SR, FoaClip, MonoClip, Rir, convolve_rir, delta_rir, mix_events, peak_normalize
from avseld.labels import LABEL_RATE_HZ, N_CLASSES, SeldEvent, sort_events, write_metadata
from avseld.pngseq import list_frames, read_frame
from avseld.wavio import read_mono, read_wav

log = logging.getLogger(__name__)

DEFAULT_DURATION = 30.0
DEFAULT_POLYPHONY = 3
DEFAULT_FPS = 29.97
MAX_ATTEMPTS = 10_000
TILE_SIZE = 50
OUTPUT_PEAK = 0.95

# one solid colour per class for tiles without video assets; none is black
CLASS_COLORS = np.array(
    [
        (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
        (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
        (210, 245, 60), (250, 190, 212), (0, 128, 128), (220, 190, 255),
        (170, 110, 40),
    ],
    dtype=np.uint8,
)


@dataclass(frozen=True)
class AssetEntry:
    audio_path: str
    class_idx: int
    duration: float
    tile_frames_path: Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.class_idx < N_CLASSES:
            raise ValueError(f"class {self.class_idx} outside 0..{N_CLASSES - 1}")
        if self.duration <= 0:
            raise ValueError(f"asset {self.audio_path} has no samples")


@dataclass(frozen=True)
class SceneEvent:
    asset: AssetEntry
    onset: float
    doa: Doa
    gain: float = 1.0
    duration: Optional[float] = None  # defaults to the asset length

    @property
    def length(self) -> float:
        return self.asset.duration if self.duration is None else self.duration


@dataclass(frozen=True)
class SceneSpec:
    duration: float = DEFAULT_DURATION
    events: tuple[SceneEvent, ...] = ()
    seed: int = 0
    sr: int = DEFAULT_SR
    max_polyphony: int = DEFAULT_POLYPHONY

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        total = self.n_samples
        for i, ev in enumerate(self.events):
            start, length = self.event_span(ev)
            if ev.onset < 0 or length <= 0 or start + length > total:
                raise ValueError(
                    f"event {i} spans [{ev.onset}, {ev.onset + ev.length}) outside [0, {self.duration}]"
                )
        peak = int(self.frame_counts().max(initial=0))
        if peak > self.max_polyphony:
            raise ValueError(f"{peak} overlapping events exceed max_polyphony={self.max_polyphony}")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sr))

    @property
    def n_label_frames(self) -> int:
        return math.ceil(self.duration * LABEL_RATE_HZ - 1e-9)

    def event_span(self, ev: SceneEvent) -> tuple[int, int]:
        """(start sample, sample count) of an event."""
        return int(round(ev.onset * self.sr)), int(round(ev.length * self.sr))

    def event_frames(self, ev: SceneEvent) -> range:
        start, length = self.event_span(ev)
        return label_frames(start, length, self.sr)

    def frame_counts(self) -> np.ndarray:
        counts = np.zeros(self.n_label_frames, dtype=int)
        for ev in self.events:
            frames = self.event_frames(ev)
            counts[frames.start:frames.stop] += 1
        return counts


def label_frames(start: int, length: int, sr: int) -> range:
    """100 ms frames overlapping the sample span [start, start + length)."""
    first = start * LABEL_RATE_HZ // sr
    stop = -(-(start + length) * LABEL_RATE_HZ // sr)
    return range(first, stop)


@dataclass
class RirBank:
    entries: list[Rir]
    manifest_path: Optional[str] = None
    _vectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.entries:
            raise ValueError("an RIR bank needs at least one entry")
        self._vectors = np.array([doa_to_unit_vec(r.doa) for r in self.entries])

    def __len__(self):
        return len(self.entries)

    @property
    def sample_rate(self) -> int:
        return self.entries[0].sample_rate


def anechoic_bank(sr: int = DEFAULT_SR) -> RirBank:
    """Delta RIRs on a 10 x 20 degree grid: 36 azimuths times 9 elevations."""
    entries = [
        delta_rir(Doa(azimuth, elevation), sr)
        for elevation in range(-80, 81, 20)
        for azimuth in range(-180, 180, 10)
    ]
    return RirBank(entries, manifest_path=None)


def load_rir_bank(manifest) -> RirBank:
    """Load ``path,azimuth,elevation,distance,room_id`` rows (paths relative to the manifest)."""
    manifest = Path(manifest)
    entries = []
    with open(manifest, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if len(row) != 5:
                raise ParseError(f"expected 5 fields, got {len(row)}", manifest, lineno)
            path, azimuth, elevation, distance, room_id = (f.strip() for f in row)
            try:
                doa = Doa(float(azimuth), float(elevation))
            except ValueError as err:
                raise RangeError(str(err), manifest, lineno) from None
            ir_path = manifest.parent / path
            ir, sr, _ = read_wav(ir_path)
            if ir.shape[0] != 4:
                raise ParseError(f"{ir_path} has {ir.shape[0]} channels, need 4", manifest, lineno)
            entries.append(
                Rir(ir, doa, sr, room_id, float(distance) if distance else None, str(ir_path))
            )
    if not entries:
        raise ParseError("no RIRs listed", manifest)
    return RirBank(entries, str(manifest))


def _wav_duration(path) -> float:
    samples, sr, _ = read_wav(path)
    return samples.shape[1] / sr


def load_assets(path) -> list[AssetEntry]:
    """Read an asset manifest: ``audio_path,class_idx[,tile_frames_path]`` per line.

    ``path`` may be the manifest itself or a directory holding ``assets.csv``.
    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    manifest = path / "assets.csv" if path.is_dir() else path
    root = manifest.parent
    assets = []
    with open(manifest, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if len(row) not in (2, 3):
                raise ParseError(f"expected 2 or 3 fields, got {len(row)}", manifest, lineno)
            audio = root / row[0].strip()
            try:
                class_idx = int(row[1])
            except ValueError:
                raise ParseError(f"class {row[1]!r} is not an integer", manifest, lineno) from None
            if not 0 <= class_idx < N_CLASSES:
                raise RangeError(f"class {class_idx} outside 0..{N_CLASSES - 1}", manifest, lineno)
            tiles = str(root / row[2].strip()) if len(row) == 3 and row[2].strip() else None
            assets.append(AssetEntry(str(audio), class_idx, _wav_duration(audio), tiles))
    if not assets:
        raise ParseError("no assets listed", manifest)
    return assets


def nearest_rir(bank: RirBank, d: Doa) -> Rir:
    """Bank entry closest to ``d``; ties go to the lowest manifest index."""
    target = np.asarray(doa_to_unit_vec(d))
    dist = angular_distance_vec(bank._vectors, target[None, :])
    best = np.flatnonzero(dist <= dist.min() + 1e-9)[0]
    return bank.entries[int(best)]


def sample_scene(
    seed: int,
    assets: Sequence[AssetEntry],
    bank: RirBank,
    duration: float = DEFAULT_DURATION,
    max_polyphony: int = DEFAULT_POLYPHONY,
    sr: int = DEFAULT_SR,
    n_events: Optional[int] = None,
) -> SceneSpec:
    """Draw a random scene that never exceeds ``max_polyphony`` active events per label frame.

    The number of events, when not given, is uniform in ``1..cap`` where
    ``cap`` fills roughly half of the polyphony budget with average-length
    assets. Each event gets a uniformly chosen asset, a uniform onset (in
    samples) that keeps it inside the scene, and the direction of a uniformly
    chosen bank entry. Draws that would break the polyphony limit are
    rejected; more than ``MAX_ATTEMPTS`` draws raise :class:`InfeasibleScene`.
    """
    if not assets:
        raise ValueError("no assets to sample from")
    if max_polyphony < 1:
        raise ValueError(f"max_polyphony must be at least 1, got {max_polyphony}")
    rng = np.random.default_rng(seed)
    total = int(round(duration * sr))
    n_frames = math.ceil(duration * LABEL_RATE_HZ - 1e-9)
    if n_events is None:
        mean_len = float(np.mean([min(a.duration, duration) for a in assets]))
        cap = max(1, int(max_polyphony * duration / (2.0 * mean_len)))
        n_events = int(rng.integers(1, cap + 1))

    counts = np.zeros(n_frames, dtype=int)
    events: list[SceneEvent] = []
    attempts = 0
    while len(events) < n_events:
        attempts += 1
        if attempts > MAX_ATTEMPTS:
            raise InfeasibleScene(
                f"placed {len(events)}/{n_events} events within {MAX_ATTEMPTS} draws"
            )
        asset = assets[int(rng.integers(len(assets)))]
        length = min(int(round(asset.duration * sr)), total)
        start = int(rng.integers(0, total - length + 1))
        rir = bank.entries[int(rng.integers(len(bank)))]
        frames = label_frames(start, length, sr)
        if np.any(counts[frames.start:frames.stop] >= max_polyphony):
            continue
        counts[frames.start:frames.stop] += 1
        events.append(SceneEvent(asset, start / sr, rir.doa, 1.0, length / sr))
    return SceneSpec(duration, tuple(events), seed, sr, max_polyphony)


def _asset_loader() -> Callable[[str], MonoClip]:
    return lru_cache(maxsize=None)(read_mono)


def render_audio(
    spec: SceneSpec, bank: RirBank, loader: Optional[Callable[[str], MonoClip]] = None
) -> tuple[FoaClip, list[SeldEvent]]:
    """Spatialise, mix and label every event of ``spec``.

    Events are labelled with the direction of the RIR actually used. The mix
    is peak-normalised to ``OUTPUT_PEAK`` unless it is silent.
    """
    loader = loader or _asset_loader()
    placed = []
    labels = []
    for source_idx, ev in enumerate(spec.events):
        clip = loader(ev.asset.audio_path)
        if clip.sample_rate != spec.sr:
            raise SampleRateMismatch(
                f"{ev.asset.audio_path} is {clip.sample_rate} Hz, scene is {spec.sr} Hz"
            )
        start, length = spec.event_span(ev)
        dry = MonoClip(clip.samples[:length], clip.sample_rate)
        rir = nearest_rir(bank, ev.doa)
        wet = convolve_rir(dry, rir)
        if ev.gain != 1.0:
            wet = FoaClip(wet.samples * ev.gain, wet.sample_rate)
        placed.append((wet, start / spec.sr))
        labels.extend(
            SeldEvent(frame, ev.asset.class_idx, source_idx, rir.doa)
            for frame in label_frames(start, length, spec.sr)
        )
    mix = mix_events(placed, spec.duration, spec.sr)
    if np.any(mix.samples):
        mix = peak_normalize(mix, OUTPUT_PEAK)
    return mix, sort_events(labels)


def emit_metadata(events: Sequence[SeldEvent], path) -> None:
    write_metadata(events, path)


class _TileSource:
    def __init__(self):
        self._frames: dict[str, list[Path]] = {}
        self._cache: dict[tuple[str, int], np.ndarray] = {}

    def tile(self, ev: SceneEvent, t: float, fps: float) -> np.ndarray:
        directory = ev.asset.tile_frames_path
        if directory is None:
            return np.broadcast_to(CLASS_COLORS[ev.asset.class_idx], (TILE_SIZE, TILE_SIZE, 3))
        if directory not in self._frames:
            self._frames[directory] = list_frames(directory)
        paths = self._frames[directory]
        if not paths:
            return np.broadcast_to(CLASS_COLORS[ev.asset.class_idx], (TILE_SIZE, TILE_SIZE, 3))
        index = int((t - ev.onset) * fps) % len(paths)
        key = (directory, index)
        if key not in self._cache:
            image = Image.fromarray(read_frame(paths[index])).convert("RGB")
            self._cache[key] = np.asarray(image.resize((TILE_SIZE, TILE_SIZE), Image.BILINEAR))
        return self._cache[key]


def paste_tile(canvas: np.ndarray, tile: np.ndarray, col: int, row: int) -> None:
    """Paste ``tile`` centred at (col, row); wraps across the azimuth seam, stays inside vertically."""
    height, width = canvas.shape[:2]
    th, tw = tile.shape[:2]
    cols = (col - tw // 2 + np.arange(tw)) % width
    top = min(max(row - th // 2, 0), height - th)
    canvas[top:top + th, cols] = tile


def n_video_frames(duration: float, fps: float) -> int:
    return math.ceil(duration * fps - 1e-9)


def render_video(
    spec: SceneSpec,
    g: FrameGeometry = FrameGeometry(),
    fps: float = DEFAULT_FPS,
    bank: Optional[RirBank] = None,
) -> Iterator[np.ndarray]:
    """Yield RGB uint8 frames of shape (H, W, 3).

    When ``bank`` is given, tiles sit at the direction of the RIR each event
    is rendered with, matching the audio labels exactly.
    """
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    if g.height < TILE_SIZE:
        raise ValueError(f"frames must be at least {TILE_SIZE} pixels tall")
    placed = []
    for ev in spec.events:
        doa = nearest_rir(bank, ev.doa).doa if bank is not None else ev.doa
        start, length = spec.event_span(ev)
        placed.append((ev, start / spec.sr, (start + length) / spec.sr, project_equirect(doa, g)))
    tiles = _TileSource()
    for i in range(n_video_frames(spec.duration, fps)):
        t = i / fps
        canvas = np.zeros((g.height, g.width, 3), dtype=np.uint8)
        for ev, on, off, (col, row) in placed:
            if on <= t < off:
                paste_tile(canvas, tiles.tile(ev, t, fps), col, row)
        yield canvas
