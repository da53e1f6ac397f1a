"""Transcript-only rule tagger: a runnable no-ML predictor for pipeline tests.

Predicts fp for "um"/"uh", pw for tokens with a trailing "-", and rp for the
first copy of any adjacent repeated token span (greedy, longest span first,
left to right, non-overlapping). Revisions and restarts are lexically
undecidable from the transcript alone and are never predicted.
"""

from __future__ import annotations

from .labeling import FILLED_PAUSE_TOKENS, CanonMap, normalize_token
from .model import DisfluencyFlags, Segment, Word
from .scoring import PredictionTrack


def tag(tokens, max_span: int = 3) -> list[DisfluencyFlags]:
    """Flags for tokens normalized with trailing hyphens preserved."""
    n = len(tokens)
    masks = [0] * n
    for i, tok in enumerate(tokens):
        if tok in FILLED_PAUSE_TOKENS:
            masks[i] |= 1  # fp
        if tok.endswith("-"):
            masks[i] |= 2  # pw

    consumed = [False] * n
    for span in range(min(max_span, n // 2), 0, -1):
        i = 0
        while i + 2 * span <= n:
            window = range(i, i + 2 * span)
            if any(consumed[j] for j in window):
                i += 1
                continue
            if tokens[i : i + span] == tokens[i + span : i + 2 * span]:
                for j in range(i, i + span):
                    masks[j] |= 4  # rp on the first copy
                for j in window:
                    consumed[j] = True
                i += 2 * span
            else:
                i += 1
    return [DisfluencyFlags.from_mask(m) for m in masks]


def tag_segment(segment: Segment, canon: CanonMap | None = None, max_span: int = 3) -> PredictionTrack:
    """Tag a raw segment; emits a word-level track with fully normalized tokens.

    Words that normalize to nothing keep their slot during matching but are
    dropped from the emitted track.
    """
    label_toks = [
        normalize_token(w.text, canon, strip_trailing_hyphen=False) for w in segment.words
    ]
    flags = tag(label_toks, max_span=max_span)
    words = []
    for w, ltok, f in zip(segment.words, label_toks, flags):
        text = normalize_token(w.text, canon, strip_trailing_hyphen=True)
        if not text:
            continue
        words.append(Word(text=text, start_s=w.start_s, end_s=w.end_s, flags=f))
    return PredictionTrack.word_level(segment.segment_id, words)
