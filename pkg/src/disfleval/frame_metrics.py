"""Frame error rates: project both transcripts onto the frame grid and compare.

The reference segment's duration fixes the frame count. A frame is an error
when the reference and hypothesis frames disagree on the token occupying it;
"no word" is its own value, so a word facing silence counts as an error
unless ignore_silence is set. Frames are disfluent when the ground-truth word
they contain is.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional

from .model import FrameGrid, Segment, project_intervals

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class FrameErrorSummary:
    """Frame counts and error counts split by disfluent/nondisfluent frames."""

    nframes: int = 0
    nframes_e: int = 0
    nframes_d: int = 0
    nframes_n: int = 0
    nframes_e_d: int = 0
    nframes_e_n: int = 0

    def __add__(self, other: "FrameErrorSummary") -> "FrameErrorSummary":
        return FrameErrorSummary(
            nframes=self.nframes + other.nframes,
            nframes_e=self.nframes_e + other.nframes_e,
            nframes_d=self.nframes_d + other.nframes_d,
            nframes_n=self.nframes_n + other.nframes_n,
            nframes_e_d=self.nframes_e_d + other.nframes_e_d,
            nframes_e_n=self.nframes_e_n + other.nframes_e_n,
        )


@dataclass(frozen=True, slots=True)
class FerResult:
    summary: FrameErrorSummary
    fer: Optional[float]
    fer_nd: Optional[float]
    fer_d: Optional[float]


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def rates_from_summary(summary: FrameErrorSummary) -> FerResult:
    return FerResult(
        summary=summary,
        fer=_ratio(summary.nframes_e, summary.nframes),
        fer_nd=_ratio(summary.nframes_e_n, summary.nframes_n),
        fer_d=_ratio(summary.nframes_e_d, summary.nframes_d),
    )


def _clip_hyp_words(words, duration_s: float):
    kept = []
    for w in words:
        if w.start_s >= duration_s:
            log.warning(
                "hypothesis word %r at %.3fs starts beyond the %.3fs segment — dropped",
                w.text, w.start_s, duration_s,
            )
            continue
        if w.end_s > duration_s:
            log.warning(
                "hypothesis word %r ends beyond the %.3fs segment — clipped",
                w.text, duration_s,
            )
            w = replace(w, end_s=duration_s)
        kept.append(w)
    kept.sort(key=lambda w: (w.start_s, w.end_s))
    return kept


def frame_error_summary(
    ref: Segment, hyp_words, grid: FrameGrid, ignore_silence: bool = False
) -> FrameErrorSummary:
    """Per-frame comparison of a reference segment against hypothesis words.

    Both sides must be normalized with the same pipeline. Hypothesis words
    beyond the reference duration are clipped with a warning.
    """
    nframes = grid.nframes(ref.duration_s)
    hyp = _clip_hyp_words(hyp_words, ref.duration_s)

    ref_entries, _ = project_intervals(
        [(w.start_s, w.end_s) for w in ref.words], grid, nframes
    )
    hyp_entries, _ = project_intervals(
        [(w.start_s, w.end_s) for w in hyp], grid, nframes
    )

    # Compare interned token ids instead of strings; -1 means silence.
    token_ids: dict[str, int] = {}
    ref_tok = [
        -1 if k is None else token_ids.setdefault(ref.words[k].text, len(token_ids))
        for k in ref_entries
    ]
    hyp_tok = [
        -1 if k is None else token_ids.setdefault(hyp[k].text, len(token_ids))
        for k in hyp_entries
    ]
    ref_disf = [False if k is None else ref.words[k].flags.is_disfluent() for k in ref_entries]

    nframes_d = 0
    errors = 0
    errors_d = 0
    for i in range(nframes):
        r = ref_tok[i]
        h = hyp_tok[i]
        if ignore_silence:
            is_err = r != h and r >= 0 and h >= 0
        else:
            is_err = r != h
        if ref_disf[i]:
            nframes_d += 1
            if is_err:
                errors += 1
                errors_d += 1
        elif is_err:
            errors += 1
    return FrameErrorSummary(
        nframes=nframes,
        nframes_e=errors,
        nframes_d=nframes_d,
        nframes_n=nframes - nframes_d,
        nframes_e_d=errors_d,
        nframes_e_n=errors - errors_d,
    )


def fer_suite(ref: Segment, hyp_words, grid: FrameGrid, ignore_silence: bool = False) -> FerResult:
    """FER / FER-ND / FER-D for one segment (merge summaries for corpus rates)."""
    return rates_from_summary(frame_error_summary(ref, hyp_words, grid, ignore_silence))
