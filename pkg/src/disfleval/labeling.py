"""Token normalization and rule-based mapping of annotations to disfluency classes.

Labeling runs in two phases. Rules fire on tokens normalized with trailing
hyphens preserved (a trailing "-" is what marks a partial word); afterwards
tokens are re-normalized with the hyphen stripped, and words that normalize
to nothing are dropped with a warning.

Rules:
  * "um"/"uh" -> filled pause (fp)
  * trailing "-" -> partial word (pw)
  * per error/correction region: no correction -> restart (rs) on the error
    span; correction matching the error span -> repetition (rp); otherwise
    revision (rv). Matching compares fully normalized tokens position by
    position; an error token ending in "-" also matches when its stem is a
    non-empty prefix of the correction token (a partial word that restarted
    the same word counts as a repetition of it).

Rules combine: a word may carry any subset of the five classes.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

from .errors import AnnotationError, ParseError
from .model import (
    CLASS_NAMES,
    DisfluencyFlags,
    FrameGrid,
    Segment,
    Word,
    frame_label_masks,
)

log = logging.getLogger(__name__)

FILLED_PAUSE_TOKENS = frozenset({"um", "uh"})

_PUNCT_TABLE = str.maketrans("", "", ".?!,-")

DEFAULT_CANON_PAIRS = (("umm", "um"), ("uhm", "um"), ("ok", "okay"))


@dataclass(frozen=True)
class CanonMap:
    """Whole-token spelling canonicalization (e.g. "umm" -> "um").

    Applied once per token, after punctuation handling; no chaining.
    """

    pairs: tuple[tuple[str, str], ...] = DEFAULT_CANON_PAIRS
    _mapping: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((str(s), str(c)) for s, c in self.pairs))
        mapping = {}
        for surface, canonical in self.pairs:
            if surface in mapping:
                raise ParseError(f"duplicate canonicalization key {surface!r}")
            mapping[surface] = canonical
        object.__setattr__(self, "_mapping", mapping)

    def apply(self, token: str) -> str:
        return self._mapping.get(token, token)

    @classmethod
    def from_file(cls, path, base: "CanonMap | None" = None) -> "CanonMap":
        """Load ``surface<TAB>canonical`` pairs; blank lines and # comments skipped.

        With ``base`` given, the file extends it and overrides clashing keys
        (duplicates within the file itself are still an error).
        """
        pairs = []
        seen = set()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                parts = stripped.split("\t")
                if len(parts) != 2 or not parts[0] or not parts[1]:
                    raise ParseError(
                        "expected two tab-separated fields", path=os.fspath(path), line=lineno
                    )
                if parts[0] in seen:
                    raise ParseError(
                        f"duplicate canonicalization key {parts[0]!r}",
                        path=os.fspath(path), line=lineno,
                    )
                seen.add(parts[0])
                pairs.append((parts[0], parts[1]))
        if base is not None:
            pairs = [(s, c) for s, c in base.pairs if s not in seen] + pairs
        return cls(pairs=tuple(pairs))


DEFAULT_CANON = CanonMap()


def normalize_token(raw: str, canon: CanonMap | None = None, strip_trailing_hyphen: bool = True) -> str:
    """Lowercase ``raw`` and strip punctuation ``. ? ! , -``.

    With strip_trailing_hyphen=False a single trailing "-" survives (used
    during labeling, before final normalization). The canon map applies after
    punctuation handling. May return "" — callers decide whether to drop.
    """
    if canon is None:
        canon = DEFAULT_CANON
    token = raw.lower()
    keep_hyphen = not strip_trailing_hyphen and token.endswith("-")
    token = token.translate(_PUNCT_TABLE)
    if keep_hyphen and token:
        token += "-"
    if token:
        token = canon.apply(token)
    return token


def _spans_match(error_pairs, correction_tokens) -> bool:
    """True when the error span repeats its correction.

    error_pairs holds (labeling_phase_token, full_token) per error word;
    correction_tokens holds full tokens. Position-wise comparison; a partial
    word on the error side matches by stem prefix.
    """
    if len(error_pairs) != len(correction_tokens):
        return False
    for (label_tok, full_tok), corr_tok in zip(error_pairs, correction_tokens):
        if full_tok == corr_tok:
            continue
        if label_tok.endswith("-") and full_tok and corr_tok.startswith(full_tok):
            continue
        return False
    return True


def _check_regions(segment: Segment) -> None:
    nwords = len(segment.words)
    seen: dict[int, str] = {}
    for region in segment.regions:
        if not region.error_indices:
            raise AnnotationError(
                f"segment {segment.segment_id}: region {region.region_id} has an empty error span"
            )
        for name, indices in (
            ("error", region.error_indices),
            ("correction", region.correction_indices),
        ):
            prev = -1
            for idx in indices:
                if not 0 <= idx < nwords:
                    raise AnnotationError(
                        f"segment {segment.segment_id}: region {region.region_id} "
                        f"{name} index {idx} out of range"
                    )
                if idx <= prev:
                    raise AnnotationError(
                        f"segment {segment.segment_id}: region {region.region_id} "
                        f"{name} indices not strictly increasing"
                    )
                prev = idx
                if idx in seen:
                    raise AnnotationError(
                        f"segment {segment.segment_id}: word {idx} belongs to regions "
                        f"{seen[idx]} and {region.region_id}"
                    )
                seen[idx] = region.region_id


def label_segment(segment: Segment, canon: CanonMap | None = None) -> Segment:
    """Populate disfluency flags from the segment's raw tokens and regions.

    Returns a new segment with normalized tokens; words that normalize to ""
    are dropped (warned) and region indices remapped accordingly.
    """
    if canon is None:
        canon = DEFAULT_CANON
    _check_regions(segment)

    label_toks = [normalize_token(w.text, canon, strip_trailing_hyphen=False) for w in segment.words]
    full_toks = [normalize_token(w.text, canon, strip_trailing_hyphen=True) for w in segment.words]
    masks = [0] * len(segment.words)

    for i, tok in enumerate(label_toks):
        if tok in FILLED_PAUSE_TOKENS:
            masks[i] |= 1  # fp
        if tok.endswith("-"):
            masks[i] |= 2  # pw

    for region in segment.regions:
        if not region.correction_indices:
            bit = 16  # rs
        else:
            error_pairs = [
                (label_toks[i], full_toks[i]) for i in region.error_indices if full_toks[i]
            ]
            correction = [full_toks[i] for i in region.correction_indices if full_toks[i]]
            bit = 4 if _spans_match(error_pairs, correction) else 8  # rp / rv
        for i in region.error_indices:
            masks[i] |= bit

    keep = [i for i, tok in enumerate(full_toks) if tok]
    for i, tok in enumerate(full_toks):
        if not tok:
            log.warning(
                "segment %s: dropping word %d (%r) — empty after normalization",
                segment.segment_id, i, segment.words[i].text,
            )
    remap = {old: new for new, old in enumerate(keep)}

    words = tuple(
        Word(
            text=full_toks[i],
            start_s=segment.words[i].start_s,
            end_s=segment.words[i].end_s,
            flags=DisfluencyFlags.from_mask(masks[i]),
        )
        for i in keep
    )

    regions = []
    for region in segment.regions:
        error = tuple(remap[i] for i in region.error_indices if i in remap)
        correction = tuple(remap[i] for i in region.correction_indices if i in remap)
        if not error:
            log.warning(
                "segment %s: region %s lost its whole error span to normalization",
                segment.segment_id, region.region_id,
            )
            continue
        regions.append(region.__class__(region.region_id, error, correction))

    return Segment(
        segment_id=segment.segment_id,
        duration_s=segment.duration_s,
        words=words,
        regions=tuple(regions),
    )


def normalize_words(words, canon: CanonMap | None = None):
    """Fully normalize a word sequence, dropping words that normalize to ""."""
    out = []
    for w in words:
        text = normalize_token(w.text, canon, strip_trailing_hyphen=True)
        if not text:
            log.warning("dropping word %r — empty after normalization", w.text)
            continue
        out.append(Word(text=text, start_s=w.start_s, end_s=w.end_s, flags=w.flags))
    return out


@dataclass(frozen=True)
class CorpusStats:
    """Per-class disfluency proportions at utterance, word, and frame level."""

    nsegments: int
    nwords: int
    nframes: int
    utterance: dict
    word: dict
    frame: dict


def corpus_stats(segments, grid: FrameGrid | None = None) -> CorpusStats:
    """Fraction of segments/words/frames carrying each disfluency class.

    Expects labeled segments. An empty corpus yields all zeros with a warning.
    """
    if grid is None:
        grid = FrameGrid()
    nsegments = 0
    nwords = 0
    nframes = 0
    seg_counts = dict.fromkeys(CLASS_NAMES, 0)
    word_counts = dict.fromkeys(CLASS_NAMES, 0)
    frame_counts = dict.fromkeys(CLASS_NAMES, 0)

    for segment in segments:
        nsegments += 1
        nwords += len(segment.words)
        seg_mask = 0
        for w in segment.words:
            mask = w.flags.as_mask()
            seg_mask |= mask
            for bit, name in enumerate(CLASS_NAMES):
                if mask & (1 << bit):
                    word_counts[name] += 1
        for bit, name in enumerate(CLASS_NAMES):
            if seg_mask & (1 << bit):
                seg_counts[name] += 1
        masks, _ = frame_label_masks(segment, grid)
        nframes += len(masks)
        for mask in masks:
            if mask:
                for bit, name in enumerate(CLASS_NAMES):
                    if mask & (1 << bit):
                        frame_counts[name] += 1

    if nsegments == 0:
        log.warning("corpus_stats over an empty corpus — reporting all zeros")

    def fractions(counts, total):
        return {name: (counts[name] / total if total else 0.0) for name in CLASS_NAMES}

    return CorpusStats(
        nsegments=nsegments,
        nwords=nwords,
        nframes=nframes,
        utterance=fractions(seg_counts, nsegments),
        word=fractions(word_counts, nwords),
        frame=fractions(frame_counts, nframes),
    )
