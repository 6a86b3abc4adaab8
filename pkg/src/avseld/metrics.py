"""Location-aware detection and class-aware localization scores (ER, F, LE, LR).

Events are pooled into segments of ``segment`` label frames. Inside a
segment every (class, source) pair becomes one segment-event whose direction
is the normalised mean of its frame directions. Per segment and class,
predictions are matched to references with a minimum total angular distance
assignment:

- a matched pair within ``doa_threshold`` degrees is a true positive,
- a matched pair beyond it counts as one false positive and one false negative,
- unmatched references are false negatives, unmatched predictions false positives.

Per segment, S = min(FP, FN), D = max(0, FN - FP), I = max(0, FP - FN) and
ER = (S + D + I) / N over the total number N of reference segment-events.
F = 2TP / (2TP + FP + FN). LE is the mean distance over all class-matched
pairs regardless of the threshold and LR the fraction of reference
segment-events that got a class match.

Macro averaging takes F over classes that occur in the reference or the
prediction, LR over classes present in the reference and LE over classes
with at least one matched pair.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from avseld.core import angular_distance_vec, doa_to_unit_vec
from avseld.labels import N_CLASSES, SeldEvent

DOA_THRESHOLD = 20.0
SEGMENT_FRAMES = 10

_COST_RTOL = 1e-9


def _min_total(cost: np.ndarray) -> float:
    if cost.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def assign_min_cost(cost) -> list[tuple[int, int]]:
    """Optimal assignment of ``min(R, P)`` (row, col) pairs for an R x P cost matrix.

    Among all optimal assignments the one whose sorted pair list is
    lexicographically smallest is returned, so ties resolve the same way on
    every platform.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError(f"cost must be a matrix, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)) or np.any(cost < 0):
        raise ValueError("costs must be finite and non-negative")
    n_rows, n_cols = cost.shape
    k = min(n_rows, n_cols)
    if k == 0:
        return []
    best = _min_total(cost)
    tol = _COST_RTOL * max(1.0, abs(best))

    pairs: list[tuple[int, int]] = []
    used_cols: set[int] = set()
    spent = 0.0
    next_row = 0
    while len(pairs) < k:
        for r, c in itertools.product(range(next_row, n_rows), range(n_cols)):
            if c in used_cols:
                continue
            rest_rows = list(range(r + 1, n_rows))
            rest_cols = [j for j in range(n_cols) if j not in used_cols and j != c]
            # rows before r are left unmatched; the remainder must still fill k pairs
            if min(len(rest_rows), len(rest_cols)) < k - len(pairs) - 1:
                continue
            total = spent + cost[r, c] + _min_total(cost[np.ix_(rest_rows, rest_cols)])
            if total <= best + tol:
                pairs.append((r, c))
                used_cols.add(c)
                spent += cost[r, c]
                next_row = r + 1
                break
        else:  # pragma: no cover - the optimum always admits a completion
            raise RuntimeError("assignment search failed")
    return pairs


@dataclass
class ClassStats:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    n_ref: int = 0
    matched: int = 0
    total_distance: float = 0.0

    @property
    def f(self) -> Optional[float]:
        denom = 2 * self.tp + self.fp + self.fn
        return None if denom == 0 else 2 * self.tp / denom

    @property
    def le(self) -> Optional[float]:
        return None if self.matched == 0 else self.total_distance / self.matched

    @property
    def lr(self) -> Optional[float]:
        return None if self.n_ref == 0 else self.matched / self.n_ref


@dataclass(frozen=True)
class SeldScores:
    er20: float
    f20: float
    le: Optional[float]
    lr: float
    classwise: tuple[ClassStats, ...] = field(default=(), compare=False, repr=False)


def pool_segments(
    events: Iterable[SeldEvent], segment: int = SEGMENT_FRAMES
) -> dict[int, dict[int, np.ndarray]]:
    """Segment index -> class -> (n_sources, 3) mean unit vectors, sources in ascending order."""
    sums: dict[tuple[int, int, int], np.ndarray] = {}
    first: dict[tuple[int, int, int], np.ndarray] = {}
    # canonical summation order keeps scores bit-identical under input reordering
    for e in sorted(events, key=lambda e: (e.sort_key, e.doa.azimuth, e.doa.elevation)):
        key = (e.frame // segment, e.class_idx, e.source_idx)
        v = np.asarray(doa_to_unit_vec(e.doa))
        if key in sums:
            sums[key] = sums[key] + v
        else:
            sums[key] = v
            first[key] = v
    pooled: dict[int, dict[int, list]] = defaultdict(lambda: defaultdict(list))
    for key in sorted(sums):
        v = sums[key]
        norm = np.linalg.norm(v)
        pooled[key[0]][key[1]].append(v / norm if norm > 1e-12 else first[key])
    return {
        seg: {cls: np.array(vs) for cls, vs in classes.items()}
        for seg, classes in pooled.items()
    }


class SeldEvaluator:
    """Accumulates SELD statistics over any number of (reference, prediction) file pairs."""

    def __init__(
        self,
        doa_threshold: float = DOA_THRESHOLD,
        segment: int = SEGMENT_FRAMES,
        average: str = "macro",
        n_classes: int = N_CLASSES,
    ):
        if segment < 1:
            raise ValueError(f"segment must be at least one frame, got {segment}")
        if average not in ("macro", "micro"):
            raise ValueError(f"average must be 'macro' or 'micro', got {average!r}")
        self.doa_threshold = doa_threshold
        self.segment = segment
        self.average = average
        self.classes = [ClassStats() for _ in range(n_classes)]
        self.substitutions = 0
        self.deletions = 0
        self.insertions = 0

    def update(self, reference: Iterable[SeldEvent], predicted: Iterable[SeldEvent]) -> None:
        ref = pool_segments(reference, self.segment)
        pred = pool_segments(predicted, self.segment)
        for seg in sorted(set(ref) | set(pred)):
            ref_seg, pred_seg = ref.get(seg, {}), pred.get(seg, {})
            seg_fp = seg_fn = 0
            for cls in sorted(set(ref_seg) | set(pred_seg)):
                stats = self.classes[cls]
                r = ref_seg.get(cls, np.empty((0, 3)))
                p = pred_seg.get(cls, np.empty((0, 3)))
                stats.n_ref += len(r)
                pairs = []
                if len(r) and len(p):
                    dist = angular_distance_vec(r[:, None, :], p[None, :, :])
                    pairs = assign_min_cost(dist)
                    for i, j in pairs:
                        d = float(dist[i, j])
                        stats.matched += 1
                        stats.total_distance += d
                        if d <= self.doa_threshold:
                            stats.tp += 1
                        else:
                            stats.fp += 1
                            stats.fn += 1
                            seg_fp += 1
                            seg_fn += 1
                fn = len(r) - len(pairs)
                fp = len(p) - len(pairs)
                stats.fn += fn
                stats.fp += fp
                seg_fn += fn
                seg_fp += fp
            self.substitutions += min(seg_fp, seg_fn)
            self.deletions += max(0, seg_fn - seg_fp)
            self.insertions += max(0, seg_fp - seg_fn)

    @property
    def n_ref(self) -> int:
        return sum(c.n_ref for c in self.classes)

    def scores(self) -> SeldScores:
        errors = self.substitutions + self.deletions + self.insertions
        er = errors / max(self.n_ref, 1)
        if self.average == "micro":
            tp = sum(c.tp for c in self.classes)
            fp = sum(c.fp for c in self.classes)
            fn = sum(c.fn for c in self.classes)
            matched = sum(c.matched for c in self.classes)
            f = 1.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
            le = None if matched == 0 else sum(c.total_distance for c in self.classes) / matched
            lr = 1.0 if self.n_ref == 0 else matched / self.n_ref
        else:
            fs = [c.f for c in self.classes if c.f is not None]
            les = [c.le for c in self.classes if c.le is not None]
            lrs = [c.lr for c in self.classes if c.lr is not None]
            f = float(np.mean(fs)) if fs else 1.0
            le = float(np.mean(les)) if les else None
            lr = float(np.mean(lrs)) if lrs else 1.0
        return SeldScores(er, f, le, lr, tuple(ClassStats(**vars(c)) for c in self.classes))


def evaluate(
    reference: Iterable[SeldEvent],
    predicted: Iterable[SeldEvent],
    doa_threshold: float = DOA_THRESHOLD,
    segment: int = SEGMENT_FRAMES,
    average: str = "macro",
) -> SeldScores:
    """Score one prediction list against its reference.

    With no references at all, ER counts raw errors (denominator 1) and LR is
    1.0; with nothing to score on either side F is 1.0. LE is ``None`` when no
    prediction shares a class and segment with a reference.
    """
    ev = SeldEvaluator(doa_threshold, segment, average)
    ev.update(reference, predicted)
    return ev.scores()
