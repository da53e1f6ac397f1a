"""Frame-level multi-label detection scoring and multi-system overlap analysis.

Each disfluency class is scored as an independent binary task over frames;
"nondisfluent" is the extra binary task of predicting an all-false frame.
Macros (unweighted and support-weighted) average the five disfluency classes
only, skipping classes with no ground-truth frames (with a warning).
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import TrackMismatchError
from .model import CLASS_NAMES, FrameGrid, FrameTrack, Word, project_intervals

log = logging.getLogger(__name__)

NONDISFLUENT = "nondisfluent"
SCORED_CLASSES = CLASS_NAMES + (NONDISFLUENT,)


@dataclass(frozen=True)
class PredictionTrack:
    """Predictions for one segment: timestamped flagged words, or per-frame flags."""

    segment_id: str
    words: tuple[Word, ...] | None = None
    frame_flags: tuple | None = None

    def __post_init__(self):
        if (self.words is None) == (self.frame_flags is None):
            raise ValueError("prediction track needs words or frame_flags, not both")
        if self.words is not None:
            object.__setattr__(self, "words", tuple(self.words))
        else:
            object.__setattr__(self, "frame_flags", tuple(self.frame_flags))

    @classmethod
    def word_level(cls, segment_id, words) -> "PredictionTrack":
        return cls(segment_id=segment_id, words=tuple(words))

    @classmethod
    def frame_level(cls, segment_id, frame_flags) -> "PredictionTrack":
        return cls(segment_id=segment_id, frame_flags=tuple(frame_flags))


def prediction_masks(pred: PredictionTrack, grid: FrameGrid, nframes: int) -> list[int]:
    """Per-frame flag bitmasks; word-level tracks are upsampled onto the grid."""
    if pred.frame_flags is not None:
        if len(pred.frame_flags) != nframes:
            raise TrackMismatchError(
                f"segment {pred.segment_id}: prediction has {len(pred.frame_flags)} "
                f"frames, truth has {nframes}"
            )
        return [f.as_mask() for f in pred.frame_flags]
    entries, _ = project_intervals(
        [(w.start_s, w.end_s) for w in pred.words], grid, nframes
    )
    word_masks = [w.flags.as_mask() for w in pred.words]
    return [0 if k is None else word_masks[k] for k in entries]


def _truth_masks(truth: FrameTrack) -> list[int]:
    return [f.as_mask() for f in truth.entries]


@dataclass(frozen=True, slots=True)
class BinaryCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "BinaryCounts") -> "BinaryCounts":
        return BinaryCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


def confusion_counts(truth_masks: Sequence[int], pred_masks: Sequence[int]) -> dict:
    """Per-class binary confusion counts over aligned frame mask vectors."""
    if len(truth_masks) != len(pred_masks):
        raise TrackMismatchError(
            f"truth has {len(truth_masks)} frames, prediction has {len(pred_masks)}"
        )
    pair_counts = Counter(zip(truth_masks, pred_masks))
    counts = {name: [0, 0, 0, 0] for name in SCORED_CLASSES}
    for (tmask, pmask), n in pair_counts.items():
        for bit, name in enumerate(CLASS_NAMES):
            t = tmask & (1 << bit)
            p = pmask & (1 << bit)
            c = counts[name]
            if t and p:
                c[0] += n
            elif not t and p:
                c[1] += n
            elif t and not p:
                c[2] += n
            else:
                c[3] += n
        t = tmask == 0
        p = pmask == 0
        c = counts[NONDISFLUENT]
        if t and p:
            c[0] += n
        elif not t and p:
            c[1] += n
        elif t and not p:
            c[2] += n
        else:
            c[3] += n
    return {name: BinaryCounts(*vals) for name, vals in counts.items()}


def merge_counts(a: dict, b: dict) -> dict:
    return {name: a[name] + b[name] for name in SCORED_CLASSES}


@dataclass(frozen=True, slots=True)
class ClassScores:
    tp: int
    fp: int
    fn: int
    tn: int
    support: int
    recall: Optional[float]
    f1: Optional[float]


@dataclass(frozen=True)
class ScoreResult:
    classes: dict
    unweighted_recall: Optional[float]
    weighted_recall: Optional[float]
    unweighted_f1: Optional[float]
    weighted_f1: Optional[float]
    excluded_classes: tuple[str, ...]


def score_from_counts(counts: dict) -> ScoreResult:
    """Per-class recall/F1 plus macros over the supported disfluency classes."""
    classes = {}
    for name in SCORED_CLASSES:
        c = counts[name]
        support = c.tp + c.fn
        recall = c.tp / support if support else None
        denom = 2 * c.tp + c.fp + c.fn
        f1 = 2 * c.tp / denom if denom else None
        classes[name] = ClassScores(
            tp=c.tp, fp=c.fp, fn=c.fn, tn=c.tn, support=support, recall=recall, f1=f1
        )

    supported = [name for name in CLASS_NAMES if classes[name].support > 0]
    excluded = tuple(name for name in CLASS_NAMES if classes[name].support == 0)
    if excluded:
        log.warning(
            "classes with no ground-truth frames excluded from macros: %s",
            ", ".join(excluded),
        )
    if supported:
        total_support = sum(classes[n].support for n in supported)
        uw_recall = sum(classes[n].recall for n in supported) / len(supported)
        w_recall = sum(classes[n].recall * classes[n].support for n in supported) / total_support
        uw_f1 = sum(classes[n].f1 for n in supported) / len(supported)
        w_f1 = sum(classes[n].f1 * classes[n].support for n in supported) / total_support
    else:
        uw_recall = w_recall = uw_f1 = w_f1 = None
    return ScoreResult(
        classes=classes,
        unweighted_recall=uw_recall,
        weighted_recall=w_recall,
        unweighted_f1=uw_f1,
        weighted_f1=w_f1,
        excluded_classes=excluded,
    )


def score(truth: FrameTrack, pred: PredictionTrack, grid: FrameGrid) -> ScoreResult:
    """Score one segment's predictions against its ground-truth frame labels."""
    truth_masks = _truth_masks(truth)
    pred_masks = prediction_masks(pred, grid, truth.nframes)
    return score_from_counts(confusion_counts(truth_masks, pred_masks))


@dataclass(frozen=True)
class OverlapDiagram:
    """How the qualifying frames partition over which systems got them right.

    regions maps a bitmask over systems (bit k = k-th system correct) to a
    frame count; missed frames have no correct system. Percentages of all
    non-empty subsets plus the miss rate total 100.
    """

    total_frames: int
    regions: dict

    def __add__(self, other: "OverlapDiagram") -> "OverlapDiagram":
        merged = dict(self.regions)
        for key, n in other.regions.items():
            merged[key] = merged.get(key, 0) + n
        return OverlapDiagram(self.total_frames + other.total_frames, merged)

    def percentages(self) -> tuple[dict, Optional[float]]:
        """(non-empty subset -> percent, missed percent); (empty, None) if no frames."""
        if self.total_frames == 0:
            return {}, None
        pct = {
            key: 100.0 * n / self.total_frames
            for key, n in sorted(self.regions.items())
            if key != 0
        }
        missed = 100.0 * self.regions.get(0, 0) / self.total_frames
        return pct, missed


def overlap_counts(
    truth_masks: Sequence[int], system_masks: Sequence[Sequence[int]], strict: bool = False
) -> dict:
    """Overlap diagrams ("overall" plus one per class) for one segment.

    For a class diagram, a system is correct on a frame when it predicts that
    class there. For the overall diagram a system is correct when it predicts
    at least one of the frame's true classes, or all of them under strict.
    """
    nframes = len(truth_masks)
    for masks in system_masks:
        if len(masks) != nframes:
            raise TrackMismatchError(
                f"system track has {len(masks)} frames, truth has {nframes}"
            )
    diagrams = {name: Counter() for name in ("overall", *CLASS_NAMES)}
    totals = dict.fromkeys(diagrams, 0)
    for i, tmask in enumerate(truth_masks):
        if tmask == 0:
            continue
        overall_subset = 0
        for s, masks in enumerate(system_masks):
            pmask = masks[i]
            hit = (tmask & pmask) == tmask if strict else (tmask & pmask) != 0
            if hit:
                overall_subset |= 1 << s
        totals["overall"] += 1
        diagrams["overall"][overall_subset] += 1
        for bit, name in enumerate(CLASS_NAMES):
            if not tmask & (1 << bit):
                continue
            subset = 0
            for s, masks in enumerate(system_masks):
                if masks[i] & (1 << bit):
                    subset |= 1 << s
            totals[name] += 1
            diagrams[name][subset] += 1
    return {
        name: OverlapDiagram(total_frames=totals[name], regions=dict(diagrams[name]))
        for name in diagrams
    }


def merge_overlap(a: dict, b: dict) -> dict:
    return {name: a[name] + b[name] for name in a}


def overlap_analysis(
    truth: FrameTrack,
    pred_tracks: Sequence[tuple[str, PredictionTrack]],
    grid: FrameGrid,
    strict: bool = False,
) -> dict:
    """Overlap diagrams for one segment given (name, track) prediction pairs."""
    if not pred_tracks:
        raise ValueError("overlap analysis needs at least one system")
    truth_masks = _truth_masks(truth)
    system_masks = [
        prediction_masks(track, grid, truth.nframes) for _, track in pred_tracks
    ]
    result = overlap_counts(truth_masks, system_masks, strict=strict)
    if result["overall"].total_frames == 0:
        log.warning("no disfluent frames in truth — overlap diagram is empty")
    return result


def subset_label(mask: int, system_names: Sequence[str]) -> str:
    """Human-readable name for a region bitmask, e.g. 0b101 -> 'a+c'."""
    return "+".join(name for s, name in enumerate(system_names) if mask & (1 << s))
