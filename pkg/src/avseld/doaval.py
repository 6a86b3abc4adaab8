"""Pseudo-intensity DoA estimation and label checks for rendered FOA scenes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable, Optional

import numpy as np

from avseld.core import Doa, angular_distance, doa_to_unit_vec, unit_vec_to_doa
from avseld.errors import SilentSegment
from avseld.foa import FoaClip, W, X, Y, Z
from avseld.labels import LABEL_RATE_HZ, SeldEvent

SILENCE_RMS = 1e-6
MIN_RUN_FRAMES = 5
ANECHOIC_TOLERANCE = 5.0
MEASURED_TOLERANCE = 10.0


def intensity_vector(c: FoaClip, start: int = 0, length: Optional[int] = None) -> np.ndarray:
    """Time-summed (W*X, W*Y, W*Z) over ``[start, start + length)``."""
    stop = len(c) if length is None else start + length
    if start < 0 or stop > len(c) or stop <= start:
        raise ValueError(f"segment [{start}, {stop}) outside clip of {len(c)} samples")
    seg = c.samples[:, start:stop]
    w = seg[W]
    if math.sqrt(float(np.mean(w * w))) <= SILENCE_RMS:
        raise SilentSegment(f"W channel silent over [{start}, {stop})")
    return np.array([w @ seg[X], w @ seg[Y], w @ seg[Z]])


def estimate_doa(c: FoaClip, start: int = 0, length: Optional[int] = None) -> Doa:
    v = intensity_vector(c, start, length)
    return unit_vec_to_doa(v / np.linalg.norm(v))


@dataclass(frozen=True)
class RunResult:
    first_frame: int
    last_frame: int  # inclusive
    class_idx: int
    source_idx: int
    label: Doa
    estimate: Optional[Doa]
    error: float  # degrees; inf when the segment was silent
    passed: bool


@dataclass
class ValidationReport:
    tolerance: float
    runs: list[RunResult] = field(default_factory=list)
    skipped_overlap: int = 0
    skipped_short: int = 0

    @property
    def evaluated(self) -> int:
        return len(self.runs)

    @property
    def failed(self) -> int:
        return sum(not r.passed for r in self.runs)

    @property
    def passed(self) -> bool:
        return self.failed == 0

    def format(self) -> str:
        lines = [
            f"{'frames':>13} {'class':>5} {'src':>4} {'label':>15} {'estimate':>15} {'error':>7}  result"
        ]
        for r in self.runs:
            est = "-" if r.estimate is None else f"({r.estimate.azimuth:.1f},{r.estimate.elevation:.1f})"
            lines.append(
                f"{r.first_frame:>6}-{r.last_frame:<6} {r.class_idx:>5} {r.source_idx:>4} "
                f"{f'({r.label.azimuth:.1f},{r.label.elevation:.1f})':>15} {est:>15} "
                f"{r.error:>7.2f}  {'pass' if r.passed else 'FAIL'}"
            )
        lines.append(
            f"evaluated {self.evaluated} runs, {self.failed} failed, "
            f"skipped {self.skipped_overlap} overlapping and {self.skipped_short} short runs "
            f"(tolerance {self.tolerance:g} deg)"
        )
        return "\n".join(lines)


def _frame_groups(events: Iterable[SeldEvent]) -> dict[int, list[SeldEvent]]:
    frames: dict[int, list[SeldEvent]] = {}
    for e in events:
        frames.setdefault(e.frame, []).append(e)
    return frames


def _mean_doa(doas: list[Doa]) -> Doa:
    v = np.sum([doa_to_unit_vec(d) for d in doas], axis=0)
    if np.linalg.norm(v) <= 1e-12:
        return doas[0]
    return unit_vec_to_doa(v)


def validate_scene(
    c: FoaClip,
    events: Iterable[SeldEvent],
    tolerance: float = ANECHOIC_TOLERANCE,
    min_run_frames: int = MIN_RUN_FRAMES,
) -> ValidationReport:
    """Compare the estimated direction of every single-source stretch with its labels.

    A run is a maximal stretch of consecutive label frames in which exactly
    one (class, source) pair is active. Stretches with two or more active
    sources are counted in ``skipped_overlap``; single-source runs shorter
    than ``min_run_frames`` in ``skipped_short``.
    """
    frames = _frame_groups(events)
    hop = c.sample_rate / LABEL_RATE_HZ
    report = ValidationReport(tolerance)

    def state(f):
        active = frames.get(f)
        if not active:
            return None
        keys = {(e.class_idx, e.source_idx) for e in active}
        return next(iter(keys)) if len(keys) == 1 else "overlap"

    for key, group in groupby(sorted(frames), key=state):
        group = list(group)
        # groupby over sorted frame indices: split on gaps
        runs = [[group[0]]]
        for f in group[1:]:
            if f == runs[-1][-1] + 1:
                runs[-1].append(f)
            else:
                runs.append([f])
        for run in runs:
            if key == "overlap":
                report.skipped_overlap += 1
                continue
            if len(run) < min_run_frames:
                report.skipped_short += 1
                continue
            label = _mean_doa([e.doa for f in run for e in frames[f]])
            start = int(round(run[0] * hop))
            stop = min(len(c), int(round((run[-1] + 1) * hop)))
            try:
                estimate = estimate_doa(c, start, stop - start)
                error = angular_distance(label, estimate)
            except (SilentSegment, ValueError):
                estimate, error = None, math.inf
            report.runs.append(
                RunResult(run[0], run[-1], key[0], key[1], label, estimate, error, error <= tolerance)
            )
    report.runs.sort(key=lambda r: r.first_frame)
    return report
