"""First-order Ambisonics buffers, free-field encoding, RIR convolution and mixing.

Channel order is ACN (W, Y, Z, X) with SN3D normalisation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import signal

from avseld.core import Doa
from avseld.errors import EmptyClip, NotFoa, SampleRateMismatch, SilentClip

DEFAULT_SR = 24000
W, Y, Z, X = 0, 1, 2, 3

# kernels at or below this length are convolved directly in the time domain
DIRECT_CONV_MAX_TAPS = 512
# kernels with this few non-zero taps are applied as a sum of shifted copies
SPARSE_CONV_MAX_NONZERO = 16


@dataclass(frozen=True, eq=False)
class FoaClip:
    samples: np.ndarray
    sample_rate: int = DEFAULT_SR

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[0] != 4:
            raise NotFoa(f"FOA clips need shape (4, T), got {samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True, eq=False)
class MonoClip:
    samples: np.ndarray
    sample_rate: int = DEFAULT_SR

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 2 and samples.shape[0] == 1:
            samples = samples[0]
        if samples.ndim != 1:
            raise ValueError(f"mono clips need a 1-D sample array, got {samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True, eq=False)
class Rir:
    """4-channel ACN/SN3D impulse response measured (or synthesised) at ``doa``."""

    ir: np.ndarray
    doa: Doa
    sample_rate: int = DEFAULT_SR
    room_id: str = ""
    distance: Optional[float] = None
    path: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        ir = np.asarray(self.ir, dtype=np.float64)
        if ir.ndim != 2 or ir.shape[0] != 4 or ir.shape[1] < 1:
            raise ValueError(f"RIRs need shape (4, L) with L >= 1, got {ir.shape}")
        object.__setattr__(self, "ir", ir)


def sn3d_gains(d: Doa) -> np.ndarray:
    """First-order SN3D panning gains in ACN order."""
    azi = np.radians(d.azimuth)
    ele = np.radians(d.elevation)
    return np.array(
        [1.0, np.sin(azi) * np.cos(ele), np.sin(ele), np.cos(azi) * np.cos(ele)]
    )


def delta_rir(d: Doa, sample_rate: int = DEFAULT_SR, room_id: str = "anechoic") -> Rir:
    """Single-tap RIR that pans a source to ``d`` in free field."""
    return Rir(sn3d_gains(d)[:, None], d, sample_rate=sample_rate, room_id=room_id)


def encode_foa_anechoic(m: MonoClip, d: Doa) -> FoaClip:
    if len(m) == 0:
        raise EmptyClip("cannot encode an empty clip")
    gains = sn3d_gains(d)
    return FoaClip(gains[:, None] * m.samples[None, :], m.sample_rate)


def convolve(x: np.ndarray, h: np.ndarray, method: str = "auto") -> np.ndarray:
    """Full linear convolution of two 1-D arrays.

    ``method`` is ``"direct"``, ``"fft"`` (overlap-add) or ``"auto"``, which
    applies sparse kernels as shifted copies (bit-exact for delta kernels),
    short kernels directly and long ones by overlap-add.
    """
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if method == "direct":
        return np.convolve(x, h)
    if method == "fft":
        return signal.oaconvolve(x, h)
    if method != "auto":
        raise ValueError(f"unknown convolution method {method!r}")
    nonzero = np.flatnonzero(h)
    if len(nonzero) <= SPARSE_CONV_MAX_NONZERO:
        out = np.zeros(len(x) + len(h) - 1)
        for lag in nonzero:
            out[lag:lag + len(x)] += h[lag] * x
        return out
    if len(h) <= DIRECT_CONV_MAX_TAPS:
        return np.convolve(x, h)
    return signal.oaconvolve(x, h)


def convolve_rir(m: MonoClip, r: Rir) -> FoaClip:
    """Full linear convolution of a mono clip with each channel of an RIR."""
    if len(m) == 0:
        raise EmptyClip("cannot convolve an empty clip")
    if m.sample_rate != r.sample_rate:
        raise SampleRateMismatch(
            f"clip at {m.sample_rate} Hz, RIR at {r.sample_rate} Hz"
        )
    return FoaClip(
        np.stack([convolve(m.samples, h) for h in r.ir]), m.sample_rate
    )


def mix_events(
    placed: Iterable[tuple[FoaClip, float]], duration: float, sr: int = DEFAULT_SR
) -> FoaClip:
    """Sum clips into a buffer of ``round(duration * sr)`` samples.

    Each clip starts at its onset (seconds, rounded to the nearest sample);
    anything past the end of the buffer is dropped. No normalisation.
    """
    n = int(round(duration * sr))
    out = np.zeros((4, n))
    for clip, onset in placed:
        if clip.sample_rate != sr:
            raise SampleRateMismatch(f"event at {clip.sample_rate} Hz in a {sr} Hz mix")
        if onset < 0:
            raise ValueError(f"negative onset {onset}")
        start = int(round(onset * sr))
        if start >= n:
            continue
        stop = min(n, start + len(clip))
        out[:, start:stop] += clip.samples[:, : stop - start]
    return FoaClip(out, sr)


def peak_normalize(c: FoaClip, target: float = 1.0) -> FoaClip:
    """Scale every channel by one common factor so the peak magnitude equals ``target``."""
    peak = float(np.max(np.abs(c.samples))) if c.samples.size else 0.0
    if peak == 0.0:
        raise SilentClip("cannot normalise a silent clip")
    if peak == target:
        return FoaClip(c.samples.copy(), c.sample_rate)
    return FoaClip(c.samples * (target / peak), c.sample_rate)
