"""Core domain types: disfluency flags, timestamped words, segments, and the frame grid.

Everything here is an immutable value object; the projection helpers are pure
functions, so all of it is safe to share across threads or processes.

Timing conventions
------------------
Word intervals are half-open ``[start_s, end_s)``. Frame ``i`` of a grid spans
``[i*hop_s, i*hop_s + win_s)`` and has midpoint ``i*hop_s + win_s/2``. A frame
belongs to the word whose interval contains its midpoint; a word too short to
contain any midpoint falls back to the single frame whose midpoint is nearest
the word's center (distances within ``TIE_EPS_S`` count as ties, resolved to
the earlier frame), and only claims it if no other word owns it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError

# Canonical flag order; also the order of boolean lists in file formats.
CLASS_NAMES = ("fp", "pw", "rp", "rv", "rs")

# Nearest-frame distances within this many seconds count as a tie (earlier
# frame wins). Needed because "equidistant" centers are rarely exact in floats.
TIE_EPS_S = 1e-9

# Slack added before flooring in the frame-count formula so that durations
# landing one float ulp below an exact frame boundary still round like exact
# arithmetic would.
_NFRAMES_EPS = 1e-9


@dataclass(frozen=True, slots=True)
class DisfluencyFlags:
    """Multi-label disfluency marking for one word or frame.

    fp: filled pause, pw: partial word, rp: repetition, rv: revision,
    rs: restart. Any subset may be set.
    """

    fp: bool = False
    pw: bool = False
    rp: bool = False
    rv: bool = False
    rs: bool = False

    def is_disfluent(self) -> bool:
        return self.fp or self.pw or self.rp or self.rv or self.rs

    def as_mask(self) -> int:
        mask = 0
        if self.fp:
            mask |= 1
        if self.pw:
            mask |= 2
        if self.rp:
            mask |= 4
        if self.rv:
            mask |= 8
        if self.rs:
            mask |= 16
        return mask

    @classmethod
    def from_mask(cls, mask: int) -> "DisfluencyFlags":
        return cls(
            fp=bool(mask & 1),
            pw=bool(mask & 2),
            rp=bool(mask & 4),
            rv=bool(mask & 8),
            rs=bool(mask & 16),
        )

    def as_list(self) -> list[bool]:
        return [self.fp, self.pw, self.rp, self.rv, self.rs]

    @classmethod
    def from_list(cls, values) -> "DisfluencyFlags":
        if len(values) != len(CLASS_NAMES):
            raise ValueError(f"expected {len(CLASS_NAMES)} flags, got {len(values)}")
        return cls(*(bool(v) for v in values))


NO_FLAGS = DisfluencyFlags()


@dataclass(frozen=True, slots=True)
class Word:
    """A token with its time interval and disfluency flags."""

    text: str
    start_s: float
    end_s: float
    flags: DisfluencyFlags = NO_FLAGS


@dataclass(frozen=True, slots=True)
class DisfluencyRegion:
    """An annotated error span and its (possibly empty) correction span.

    Indices refer to positions in the owning segment's word list and must be
    strictly increasing; the two spans must not share indices.
    """

    region_id: str
    error_indices: tuple[int, ...]
    correction_indices: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "error_indices", tuple(self.error_indices))
        object.__setattr__(self, "correction_indices", tuple(self.correction_indices))


@dataclass(frozen=True)
class Segment:
    """An utterance: ordered timestamped words plus region annotations.

    Words are expected sorted by (start_s, end_s); parsers enforce this and
    ``validation.validate_segment`` checks it along with the interval and
    region invariants.
    """

    segment_id: str
    duration_s: float
    words: tuple[Word, ...] = ()
    regions: tuple[DisfluencyRegion, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "regions", tuple(self.regions))

    def texts(self) -> list[str]:
        return [w.text for w in self.words]

    def flags(self) -> list[DisfluencyFlags]:
        return [w.flags for w in self.words]


@dataclass(frozen=True, slots=True)
class FrameGrid:
    """Fixed-hop analysis frame timeline (defaults: 25 ms window, 20 ms hop)."""

    hop_s: float = 0.020
    win_s: float = 0.025

    def __post_init__(self):
        if self.hop_s <= 0:
            raise ConfigurationError(f"hop_s must be > 0, got {self.hop_s}")
        if self.win_s < self.hop_s:
            raise ConfigurationError(
                f"win_s must be >= hop_s, got win={self.win_s} hop={self.hop_s}"
            )

    def nframes(self, duration_s: float) -> int:
        """Number of frames covering ``duration_s`` seconds (always >= 1)."""
        if duration_s < self.win_s:
            return 1
        return max(1, math.floor((duration_s - self.win_s) / self.hop_s + _NFRAMES_EPS) + 1)

    def midpoint(self, i: int) -> float:
        return i * self.hop_s + self.win_s / 2.0


@dataclass(frozen=True)
class FrameTrack:
    """Per-frame payloads (word indices or DisfluencyFlags) for one segment.

    ``collisions`` lists word indices that could not claim any frame: words
    containing no frame midpoint whose fallback frame was already owned.
    """

    nframes: int
    entries: tuple
    collisions: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "collisions", tuple(self.collisions))
        if len(self.entries) != self.nframes:
            raise ValueError(
                f"track has {len(self.entries)} entries for {self.nframes} frames"
            )


def _frame_range(grid: FrameGrid, nframes: int, start_s: float, end_s: float):
    """Inclusive frame-index range whose midpoints fall inside [start_s, end_s).

    Returns (lo, hi) with lo > hi when no midpoint is contained. Seeds the
    bounds arithmetically, then fixes them with the exact midpoint comparisons
    so the result matches a naive per-frame scan bit for bit.
    """
    hop = grid.hop_s
    half = grid.win_s / 2.0

    lo = max(0, math.ceil((start_s - half) / hop) - 2)
    while lo < nframes and lo * hop + half < start_s:
        lo += 1
    while lo > 0 and (lo - 1) * hop + half >= start_s:
        lo -= 1

    hi = min(nframes - 1, math.floor((end_s - half) / hop) + 2)
    while hi >= 0 and hi * hop + half >= end_s:
        hi -= 1
    while hi + 1 < nframes and (hi + 1) * hop + half < end_s:
        hi += 1

    return lo, hi


def _nearest_frame(grid: FrameGrid, nframes: int, t: float) -> int:
    """Frame whose midpoint is nearest ``t``; ties (within TIE_EPS_S) go earlier."""
    hop = grid.hop_s
    half = grid.win_s / 2.0
    base = math.floor((t - half) / hop)
    best = None
    best_d = 0.0
    for i in range(max(0, base - 2), min(nframes, base + 3)):
        d = abs(i * hop + half - t)
        if best is None or d < best_d - TIE_EPS_S:
            best = i
            best_d = d
    if best is None:
        # t lies entirely before or after the candidate window; clamp.
        return 0 if base < 0 else nframes - 1
    return best


def project_intervals(intervals, grid: FrameGrid, nframes: int):
    """Assign [start, end) intervals to frames by midpoint containment.

    Returns (entries, collisions): entries[i] is the index of the interval
    owning frame i (or None), collisions the interval indices left without a
    frame. Earlier intervals win contested frames; intervals containing no
    midpoint fall back to the frame nearest their center but never displace
    an owner.
    """
    entries: list[int | None] = [None] * nframes
    short: list[int] = []
    for k, (start_s, end_s) in enumerate(intervals):
        lo, hi = _frame_range(grid, nframes, start_s, end_s)
        if lo > hi:
            short.append(k)
            continue
        for i in range(lo, hi + 1):
            if entries[i] is None:
                entries[i] = k
    collisions: list[int] = []
    for k in short:
        start_s, end_s = intervals[k]
        f = _nearest_frame(grid, nframes, (start_s + end_s) / 2.0)
        if entries[f] is None:
            entries[f] = k
        else:
            collisions.append(k)
    return entries, collisions


def project_words_to_frames(segment: Segment, grid: FrameGrid) -> FrameTrack:
    """Map each frame of the segment to the word index occupying it (or None)."""
    nframes = grid.nframes(segment.duration_s)
    entries, collisions = project_intervals(
        [(w.start_s, w.end_s) for w in segment.words], grid, nframes
    )
    return FrameTrack(nframes=nframes, entries=tuple(entries), collisions=tuple(collisions))


def frame_label_masks(segment: Segment, grid: FrameGrid):
    """Per-frame disfluency bitmasks (0 for wordless frames); fast path for scoring."""
    track = project_words_to_frames(segment, grid)
    word_masks = [w.flags.as_mask() for w in segment.words]
    masks = [0 if k is None else word_masks[k] for k in track.entries]
    return masks, track.collisions


def frame_labels(segment: Segment, grid: FrameGrid) -> FrameTrack:
    """Copy each word's flags onto the frames it occupies; all-false elsewhere."""
    masks, collisions = frame_label_masks(segment, grid)
    flags = tuple(NO_FLAGS if m == 0 else DisfluencyFlags.from_mask(m) for m in masks)
    return FrameTrack(nframes=len(flags), entries=flags, collisions=collisions)
