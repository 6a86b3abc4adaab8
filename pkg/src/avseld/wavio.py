"""Multichannel WAV I/O (PCM16 and float32) and atomic file writes."""

from __future__ import annotations

import contextlib
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from avseld.foa import FoaClip, MonoClip

PCM16 = "PCM_16"
FLOAT = "FLOAT"

_PCM16_SCALE = 32768.0


@contextlib.contextmanager
def atomic_path(path):
    """Yield a temporary sibling of ``path`` that replaces it on success.

    Nothing is left at ``path`` if the body raises.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".part", dir=path.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


@contextlib.contextmanager
def atomic_dir(path):
    """Directory flavour of :func:`atomic_path`; an existing directory is replaced."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{path.name}.", suffix=".part", dir=path.parent))
    try:
        yield tmp
        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def read_wav(path) -> tuple[np.ndarray, int, str]:
    """Return ``(samples, sample_rate, subtype)`` with samples shaped (channels, T).

    Integer PCM is scaled to [-1, 1) by 1/32768.
    """
    sr, data = wavfile.read(path)
    if data.ndim == 1:
        data = data[:, None]
    if data.dtype == np.int16:
        samples, subtype = data.T.astype(np.float64) / _PCM16_SCALE, PCM16
    elif data.dtype in (np.float32, np.float64):
        samples, subtype = data.T.astype(np.float64), FLOAT
    else:
        raise ValueError(f"{path}: unsupported WAV sample type {data.dtype}")
    return samples, int(sr), subtype


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    scaled = np.round(np.asarray(samples, dtype=np.float64) * _PCM16_SCALE)
    return np.clip(scaled, -32768, 32767).astype(np.int16)


def write_wav(path, samples: np.ndarray, sample_rate: int, subtype: str = PCM16) -> None:
    samples = np.asarray(samples)
    if samples.ndim == 1:
        samples = samples[None, :]
    if subtype == PCM16:
        data = to_pcm16(samples)
    elif subtype == FLOAT:
        data = samples.astype(np.float32)
    else:
        raise ValueError(f"unknown WAV subtype {subtype!r}")
    with atomic_path(path) as tmp:
        wavfile.write(tmp, int(sample_rate), np.ascontiguousarray(data.T))


def read_foa(path) -> tuple[FoaClip, str]:
    samples, sr, subtype = read_wav(path)
    return FoaClip(samples, sr), subtype


def write_foa(path, clip: FoaClip, subtype: str = PCM16) -> None:
    write_wav(path, clip.samples, clip.sample_rate, subtype)


def read_mono(path) -> MonoClip:
    """Read a WAV as mono; multichannel files are downmixed by averaging."""
    samples, sr, _ = read_wav(path)
    return MonoClip(samples.mean(axis=0) if samples.shape[0] > 1 else samples[0], sr)
