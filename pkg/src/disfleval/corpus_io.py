"""JSON-lines corpus formats, feature files, and validation.

Reference corpus (one object per line):
  {"segment_id": ..., "duration_s": ..., "words": [
      {"text": ..., "start_s": ..., "end_s": ...,
       "role": "outside"|"error"|"correction", "region_id": "..."}]}
or the pre-labeled variant where each word carries
  "flags": [fp, pw, rp, rv, rs] booleans instead of a role.

Hypothesis file lines: {"segment_id": ..., "words": [{"text","start_s","end_s"}]}.
Prediction file lines: word objects with "flags", or {"segment_id",
"frames": [[fp,pw,rp,rv,rs], ...]} for frame-level predictions.

Feature matrix file: a header line ``dim=<d> nframes=<n>`` followed by n lines
of d space-separated decimal numbers. Word-rate features are JSON lines
{"text","start_s","end_s","vec":[...]}.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .fusion import FeatureStream, WordVector
from .labeling import CanonMap, label_segment
from .model import DisfluencyFlags, DisfluencyRegion, Segment, Word
from .scoring import PredictionTrack

log = logging.getLogger(__name__)

ROLES = ("outside", "error", "correction")


@dataclass(frozen=True)
class ParsedSegment:
    """A parsed corpus segment plus whether its flags came from the file."""

    segment: Segment
    prelabeled: bool


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    segment_id: str | None
    word_index: int | None
    message: str

    def render(self) -> str:
        where = self.segment_id or "<file>"
        if self.word_index is not None:
            where += f" word {self.word_index}"
        return f"{self.severity}: {where}: {self.message}"


def _open(path, mode="r"):
    if hasattr(path, "read") or hasattr(path, "write"):
        return path, False
    return open(path, mode, encoding="utf-8"), True


def _require(obj, key, path, lineno):
    if key not in obj:
        raise ParseError(f"missing field {key!r}", path=path, line=lineno)
    return obj[key]


def _number(value, key, path, lineno):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"field {key!r} must be a number", path=path, line=lineno)
    return float(value)


def _parse_word(obj, path, lineno):
    if not isinstance(obj, dict):
        raise ParseError("word entries must be objects", path=path, line=lineno)
    text = _require(obj, "text", path, lineno)
    if not isinstance(text, str):
        raise ParseError("word text must be a string", path=path, line=lineno)
    start = _number(_require(obj, "start_s", path, lineno), "start_s", path, lineno)
    end = _number(_require(obj, "end_s", path, lineno), "end_s", path, lineno)
    return text, start, end


def _parse_flags(raw, path, lineno):
    if not isinstance(raw, list) or len(raw) != 5:
        raise ParseError("flags must be a list of 5 booleans", path=path, line=lineno)
    return DisfluencyFlags.from_list(raw)


def parse_segment_obj(obj, path=None, lineno=None) -> ParsedSegment:
    """Build a Segment from one decoded corpus-file object."""
    if not isinstance(obj, dict):
        raise ParseError("each line must hold a JSON object", path=path, line=lineno)
    segment_id = _require(obj, "segment_id", path, lineno)
    if not isinstance(segment_id, str) or not segment_id:
        raise ParseError("segment_id must be a non-empty string", path=path, line=lineno)
    duration = _number(_require(obj, "duration_s", path, lineno), "duration_s", path, lineno)
    raw_words = _require(obj, "words", path, lineno)
    if not isinstance(raw_words, list):
        raise ParseError("words must be a list", path=path, line=lineno)

    entries = []
    labeled_words = 0
    for w in raw_words:
        text, start, end = _parse_word(w, path, lineno)
        if "flags" in w:
            if "role" in w or "region_id" in w:
                raise ParseError(
                    "a word cannot carry both flags and a role", path=path, line=lineno
                )
            flags = _parse_flags(w["flags"], path, lineno)
            entries.append((start, end, text, flags, "outside", None))
            labeled_words += 1
        else:
            role = w.get("role", "outside")
            if role not in ROLES:
                raise ParseError(f"unknown role {role!r}", path=path, line=lineno)
            region_id = w.get("region_id")
            if role != "outside" and not region_id:
                raise ParseError(
                    f"role {role!r} requires a region_id", path=path, line=lineno
                )
            if region_id is not None and not isinstance(region_id, str):
                raise ParseError("region_id must be a string", path=path, line=lineno)
            entries.append((start, end, text, None, role, region_id))

    if labeled_words and labeled_words != len(entries):
        raise ParseError(
            "segment mixes pre-labeled and role-annotated words", path=path, line=lineno
        )
    prelabeled = bool(labeled_words) or not entries

    entries.sort(key=lambda e: (e[0], e[1]))
    words = tuple(
        Word(text=text, start_s=start, end_s=end, flags=flags or DisfluencyFlags())
        for start, end, text, flags, _, _ in entries
    )

    regions = []
    by_region: dict[str, dict] = {}
    for idx, (_, _, _, _, role, region_id) in enumerate(entries):
        if role == "outside":
            continue
        slot = by_region.setdefault(region_id, {"error": [], "correction": []})
        if not slot["error"] and not slot["correction"]:
            regions.append(region_id)
        slot[role].append(idx)
    region_objs = tuple(
        DisfluencyRegion(
            region_id=rid,
            error_indices=tuple(by_region[rid]["error"]),
            correction_indices=tuple(by_region[rid]["correction"]),
        )
        for rid in regions
    )

    return ParsedSegment(
        segment=Segment(
            segment_id=segment_id, duration_s=duration, words=words, regions=region_objs
        ),
        prelabeled=prelabeled,
    )


def _iter_jsonl(path, collect_errors=False):
    """Yield (lineno, filename, decoded object) per non-blank line.

    With collect_errors=True, undecodable lines yield the ParseError instead
    of raising, so scanning can continue past them.
    """
    fh, owned = _open(path)
    name = os.fspath(path) if not hasattr(path, "read") else getattr(path, "name", "<stream>")
    try:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                err = ParseError(f"invalid JSON: {exc.msg}", path=name, line=lineno)
                if collect_errors:
                    yield lineno, name, err
                    continue
                raise err from None
            yield lineno, name, obj
    finally:
        if owned:
            fh.close()


def load_corpus(path) -> list[ParsedSegment]:
    """Parse a reference corpus file; raises ParseError on the first bad line."""
    out = []
    seen: set[str] = set()
    for lineno, name, obj in _iter_jsonl(path):
        parsed = parse_segment_obj(obj, path=name, lineno=lineno)
        sid = parsed.segment.segment_id
        if sid in seen:
            raise ParseError(f"duplicate segment_id {sid!r}", path=name, line=lineno)
        seen.add(sid)
        out.append(parsed)
    return out


def scan_corpus(path):
    """Tolerant corpus parse: (segments, issues); bad lines become error issues."""
    out = []
    issues = []
    seen: set[str] = set()
    for lineno, name, obj in _iter_jsonl(path, collect_errors=True):
        if isinstance(obj, ParseError):
            issues.append(Issue("error", None, None, str(obj)))
            continue
        try:
            parsed = parse_segment_obj(obj, path=name, lineno=lineno)
        except ParseError as exc:
            issues.append(Issue("error", None, None, str(exc)))
            continue
        sid = parsed.segment.segment_id
        if sid in seen:
            issues.append(
                Issue("error", sid, None, f"duplicate segment_id at line {lineno}")
            )
            continue
        seen.add(sid)
        out.append(parsed)
    return out, issues


def load_hyp(path) -> dict[str, tuple[Word, ...]]:
    """Parse a hypothesis file into segment_id -> time-sorted words."""
    out: dict[str, tuple[Word, ...]] = {}
    for lineno, name, obj in _iter_jsonl(path):
        if not isinstance(obj, dict):
            raise ParseError("each line must hold a JSON object", path=name, line=lineno)
        sid = _require(obj, "segment_id", name, lineno)
        if sid in out:
            raise ParseError(f"duplicate segment_id {sid!r}", path=name, line=lineno)
        raw_words = _require(obj, "words", name, lineno)
        if not isinstance(raw_words, list):
            raise ParseError("words must be a list", path=name, line=lineno)
        words = [Word(text=t, start_s=s, end_s=e) for t, s, e in
                 (_parse_word(w, name, lineno) for w in raw_words)]
        words.sort(key=lambda w: (w.start_s, w.end_s))
        out[sid] = tuple(words)
    return out


def load_predictions(path) -> dict[str, PredictionTrack]:
    """Parse a prediction file (word-level flags or frame-level flag rows)."""
    out: dict[str, PredictionTrack] = {}
    for lineno, name, obj in _iter_jsonl(path):
        if not isinstance(obj, dict):
            raise ParseError("each line must hold a JSON object", path=name, line=lineno)
        sid = _require(obj, "segment_id", name, lineno)
        if sid in out:
            raise ParseError(f"duplicate segment_id {sid!r}", path=name, line=lineno)
        if "frames" in obj:
            rows = obj["frames"]
            if not isinstance(rows, list):
                raise ParseError("frames must be a list", path=name, line=lineno)
            flags = tuple(_parse_flags(row, name, lineno) for row in rows)
            out[sid] = PredictionTrack.frame_level(sid, flags)
        elif "words" in obj:
            words = []
            for w in obj["words"]:
                text, start, end = _parse_word(w, name, lineno)
                flags = _parse_flags(_require(w, "flags", name, lineno), name, lineno)
                words.append(Word(text=text, start_s=start, end_s=end, flags=flags))
            words.sort(key=lambda w: (w.start_s, w.end_s))
            out[sid] = PredictionTrack.word_level(sid, words)
        else:
            raise ParseError("prediction needs words or frames", path=name, line=lineno)
    return out


def _word_obj(word: Word, parsed: ParsedSegment | None = None, index: int | None = None):
    obj = {"text": word.text, "start_s": word.start_s, "end_s": word.end_s}
    if parsed is not None and not parsed.prelabeled:
        role = "outside"
        region_id = None
        for region in parsed.segment.regions:
            if index in region.error_indices:
                role, region_id = "error", region.region_id
            elif index in region.correction_indices:
                role, region_id = "correction", region.region_id
        if role != "outside":
            obj["role"] = role
            obj["region_id"] = region_id
    else:
        obj["flags"] = word.flags.as_list()
    return obj


def dump_corpus(parsed_segments, path) -> None:
    """Write segments back out; role variant for raw input, flags otherwise."""
    fh, owned = _open(path, "w")
    try:
        for parsed in parsed_segments:
            seg = parsed.segment
            obj = {
                "segment_id": seg.segment_id,
                "duration_s": seg.duration_s,
                "words": [
                    _word_obj(w, parsed, i) for i, w in enumerate(seg.words)
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    finally:
        if owned:
            fh.close()


def dump_labeled(segments, path) -> None:
    """Write labeled segments in the flags variant."""
    dump_corpus([ParsedSegment(s, prelabeled=True) for s in segments], path)


def dump_predictions(tracks, path) -> None:
    fh, owned = _open(path, "w")
    try:
        for track in tracks:
            if track.words is not None:
                obj = {
                    "segment_id": track.segment_id,
                    "words": [
                        {
                            "text": w.text,
                            "start_s": w.start_s,
                            "end_s": w.end_s,
                            "flags": w.flags.as_list(),
                        }
                        for w in track.words
                    ],
                }
            else:
                obj = {
                    "segment_id": track.segment_id,
                    "frames": [f.as_list() for f in track.frame_flags],
                }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    finally:
        if owned:
            fh.close()


def read_feature_matrix(path) -> FeatureStream:
    fh, owned = _open(path)
    name = os.fspath(path) if not hasattr(path, "read") else getattr(path, "name", "<stream>")
    try:
        header = fh.readline().strip()
        parts = dict(
            item.split("=", 1) for item in header.split() if "=" in item
        )
        try:
            dim = int(parts["dim"])
            nframes = int(parts["nframes"])
        except (KeyError, ValueError):
            raise ParseError(
                "header must read 'dim=<d> nframes=<n>'", path=name, line=1
            ) from None
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            values = line.split()
            if len(values) != dim:
                raise ParseError(
                    f"expected {dim} values, got {len(values)}", path=name, line=lineno
                )
            try:
                rows.append([float(v) for v in values])
            except ValueError:
                raise ParseError("non-numeric value", path=name, line=lineno) from None
        if len(rows) != nframes:
            raise ParseError(
                f"header promises {nframes} frames, file has {len(rows)}", path=name
            )
        matrix = np.array(rows, dtype=np.float64) if rows else np.zeros((0, dim))
        return FeatureStream.frame_rate(matrix.reshape(len(rows), dim))
    finally:
        if owned:
            fh.close()


def write_feature_matrix(stream: FeatureStream, path) -> None:
    fh, owned = _open(path, "w")
    try:
        fh.write(f"dim={stream.dim} nframes={stream.nframes}\n")
        for row in stream.matrix:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    finally:
        if owned:
            fh.close()


def read_word_features(path) -> list[WordVector]:
    out = []
    for lineno, name, obj in _iter_jsonl(path):
        text, start, end = _parse_word(obj, name, lineno)
        vec = _require(obj, "vec", name, lineno)
        if not isinstance(vec, list):
            raise ParseError("vec must be a list of numbers", path=name, line=lineno)
        out.append(WordVector(text=text, start_s=start, end_s=end, vec=vec))
    out.sort(key=lambda w: (w.start_s, w.end_s))
    return out


def write_word_features(words, path) -> None:
    fh, owned = _open(path, "w")
    try:
        for w in words:
            obj = {
                "text": w.text,
                "start_s": w.start_s,
                "end_s": w.end_s,
                "vec": [float(v) for v in w.vec],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    finally:
        if owned:
            fh.close()


def validate_segment(segment: Segment) -> list[Issue]:
    """Structural checks: timing invariants and region consistency."""
    issues = []
    sid = segment.segment_id
    if segment.duration_s <= 0:
        issues.append(Issue("error", sid, None, f"duration_s must be > 0, got {segment.duration_s}"))
    prev = None
    for i, w in enumerate(segment.words):
        if not w.text:
            issues.append(Issue("warning", sid, i, "word text is empty"))
        if w.end_s < w.start_s:
            issues.append(
                Issue("error", sid, i, f"word {w.text!r} ends ({w.end_s}) before it starts ({w.start_s})")
            )
        elif w.end_s == w.start_s:
            issues.append(Issue("warning", sid, i, f"word {w.text!r} has zero duration"))
        if w.start_s < 0 or w.end_s > segment.duration_s:
            issues.append(
                Issue(
                    "error", sid, i,
                    f"word {w.text!r} [{w.start_s}, {w.end_s}) outside [0, {segment.duration_s}]",
                )
            )
        if prev is not None and (w.start_s, w.end_s) < prev:
            issues.append(Issue("error", sid, i, "words are not sorted by time"))
        prev = (w.start_s, w.end_s)

    nwords = len(segment.words)
    claimed: dict[int, str] = {}
    for region in segment.regions:
        if not region.error_indices:
            issues.append(Issue("error", sid, None, f"region {region.region_id} has an empty error span"))
        for kind, indices in (
            ("error", region.error_indices),
            ("correction", region.correction_indices),
        ):
            last = -1
            for idx in indices:
                if not 0 <= idx < nwords:
                    issues.append(
                        Issue("error", sid, None,
                              f"region {region.region_id} {kind} index {idx} out of range")
                    )
                    continue
                if idx <= last:
                    issues.append(
                        Issue("error", sid, None,
                              f"region {region.region_id} {kind} indices not strictly increasing")
                    )
                last = idx
                if idx in claimed:
                    issues.append(
                        Issue("error", sid, idx,
                              f"word in regions {claimed[idx]} and {region.region_id}")
                    )
                claimed[idx] = region.region_id
    return issues


def ensure_labeled(parsed: ParsedSegment, canon: CanonMap | None = None) -> Segment:
    """Return a labeled segment, mapping annotations when not pre-labeled."""
    if parsed.prelabeled:
        return parsed.segment
    return label_segment(parsed.segment, canon)
