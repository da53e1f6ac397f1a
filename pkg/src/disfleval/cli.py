"""Command-line interface.

Subcommands: label, stats, wer, fer, score, overlap, fuse, baseline, validate.
Reports go to stdout (or --out); every diagnostic goes to stderr. Exit codes:
0 success, 1 validation/processing errors, 2 usage errors. Segments are
independent work units; --jobs N fans them out over a process pool and reduces
results in input order, so reports are bit-identical for any N.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

from . import corpus_io, reports
from .alignment import align, rates_from_summary as wer_rates, summarize_ops
from .baseline import tag_segment
from .errors import ParseError, ToolkitError
from .frame_metrics import frame_error_summary, rates_from_summary as fer_rates
from .fusion import concat_streams, upsample_word_features
from .labeling import CanonMap, corpus_stats, normalize_words
from .model import FrameGrid, Segment, frame_label_masks
from .scoring import (
    confusion_counts,
    merge_counts,
    merge_overlap,
    overlap_counts,
    prediction_masks,
    score_from_counts,
)

log = logging.getLogger("disfleval")


@dataclass(frozen=True)
class JobConfig:
    grid: FrameGrid
    canon: CanonMap
    ignore_silence: bool = False
    overlap_strict: bool = False
    max_span: int = 3


# -- workers (top level, picklable) ------------------------------------------

def _wer_worker(cfg: JobConfig, item):
    segment, hyp_words = item
    hyp = normalize_words(hyp_words, cfg.canon)
    ops = align(segment.texts(), [w.text for w in hyp])
    return segment.segment_id, summarize_ops(ops, segment.flags())


def _fer_worker(cfg: JobConfig, item):
    segment, hyp_words = item
    hyp = normalize_words(hyp_words, cfg.canon)
    return segment.segment_id, frame_error_summary(
        segment, hyp, cfg.grid, ignore_silence=cfg.ignore_silence
    )


def _score_worker(cfg: JobConfig, item):
    segment, pred = item
    truth_masks, _ = frame_label_masks(segment, cfg.grid)
    pred_masks = prediction_masks(pred, cfg.grid, len(truth_masks))
    return segment.segment_id, confusion_counts(truth_masks, pred_masks)


def _overlap_worker(cfg: JobConfig, item):
    segment, preds = item
    truth_masks, _ = frame_label_masks(segment, cfg.grid)
    system_masks = [
        prediction_masks(pred, cfg.grid, len(truth_masks)) for pred in preds
    ]
    return segment.segment_id, overlap_counts(
        truth_masks, system_masks, strict=cfg.overlap_strict
    )


def _label_worker(cfg: JobConfig, parsed):
    return corpus_io.ensure_labeled(parsed, cfg.canon)


def _baseline_worker(cfg: JobConfig, segment: Segment):
    return tag_segment(segment, cfg.canon, max_span=cfg.max_span)


def _map_jobs(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunksize = max(1, math.ceil(len(items) / (jobs * 4)))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))


# -- shared plumbing ----------------------------------------------------------

def _job_config(args) -> JobConfig:
    if args.canon_map:
        canon = CanonMap.from_file(args.canon_map, base=CanonMap())
    else:
        canon = CanonMap()
    return JobConfig(
        grid=FrameGrid(hop_s=args.hop, win_s=args.win),
        canon=canon,
        ignore_silence=getattr(args, "fer_ignore_silence", False),
        overlap_strict=getattr(args, "overlap_strict", False),
        max_span=getattr(args, "max_span", 3),
    )


def _load_usable(path, strict: bool) -> list[corpus_io.ParsedSegment]:
    usable = []
    for parsed in corpus_io.load_corpus(path):
        issues = corpus_io.validate_segment(parsed.segment)
        errors = [i for i in issues if i.severity == "error"]
        for issue in issues:
            (log.error if issue.severity == "error" else log.warning)("%s", issue.render())
        if errors:
            if strict:
                raise ToolkitError(
                    f"segment {parsed.segment.segment_id} failed validation (--strict)"
                )
            log.error(
                "skipping segment %s (%d validation error(s))",
                parsed.segment.segment_id, len(errors),
            )
            continue
        usable.append(parsed)
    return usable


def _load_labeled(args, cfg: JobConfig) -> list[Segment]:
    usable = _load_usable(args.ref, args.strict)
    return _map_jobs(partial(_label_worker, cfg), usable, args.jobs)


def _pair(segments: list[Segment], other: dict, what: str):
    """Match reference segments with hyp/pred entries; report both leftovers."""
    known = {seg.segment_id for seg in segments}
    unknown = [sid for sid in other if sid not in known]
    if unknown:
        log.warning(
            "%d %s segment(s) with no reference — skipped: %s",
            len(unknown), what, ", ".join(unknown),
        )
    pairs = []
    missing = []
    for seg in segments:
        if seg.segment_id in other:
            pairs.append((seg, other[seg.segment_id]))
        else:
            missing.append(seg.segment_id)
    if missing:
        log.warning(
            "%d reference segment(s) missing from %s — skipped: %s",
            len(missing), what, ", ".join(missing),
        )
    return pairs, unknown + missing


def _emit(text: str, args) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_jsonl(dump_fn, items, args) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            dump_fn(items, fh)
    else:
        dump_fn(items, sys.stdout)


# -- commands ------------------------------------------------------------------

def _cmd_label(args) -> int:
    cfg = _job_config(args)
    labeled = _load_labeled(args, cfg)
    _emit_jsonl(corpus_io.dump_labeled, labeled, args)
    return 0


def _cmd_stats(args) -> int:
    cfg = _job_config(args)
    labeled = _load_labeled(args, cfg)
    stats = corpus_stats(labeled, cfg.grid)
    _emit(reports.render(reports.stats_report(stats), args.format), args)
    return 0


def _cmd_wer(args) -> int:
    cfg = _job_config(args)
    labeled = _load_labeled(args, cfg)
    pairs, skipped = _pair(labeled, corpus_io.load_hyp(args.hyp), "hypothesis")
    results = _map_jobs(partial(_wer_worker, cfg), pairs, args.jobs)
    total = None
    per_segment = []
    for sid, summary in results:
        total = summary if total is None else total + summary
        per_segment.append((sid, wer_rates(summary)))
    if total is None:
        raise ToolkitError("no segments to score")
    report = reports.wer_report(wer_rates(total), per_segment, skipped)
    _emit(reports.render(report, args.format), args)
    return 0


def _cmd_fer(args) -> int:
    cfg = _job_config(args)
    labeled = _load_labeled(args, cfg)
    pairs, skipped = _pair(labeled, corpus_io.load_hyp(args.hyp), "hypothesis")
    results = _map_jobs(partial(_fer_worker, cfg), pairs, args.jobs)
    total = None
    per_segment = []
    for sid, summary in results:
        total = summary if total is None else total + summary
        per_segment.append((sid, fer_rates(summary)))
    if total is None:
        raise ToolkitError("no segments to score")
    report = reports.fer_report(fer_rates(total), per_segment, skipped)
    _emit(reports.render(report, args.format), args)
    return 0


def _cmd_score(args) -> int:
    cfg = _job_config(args)
    labeled = _load_labeled(args, cfg)
    pairs, skipped = _pair(labeled, corpus_io.load_predictions(args.pred), "prediction")
    results = _map_jobs(partial(_score_worker, cfg), pairs, args.jobs)
    total = None
    for _, counts in results:
        total = counts if total is None else merge_counts(total, counts)
    if total is None:
        raise ToolkitError("no segments to score")
    report = reports.score_report(score_from_counts(total), skipped)
    _emit(reports.render(report, args.format), args)
    return 0


def _cmd_overlap(args) -> int:
    cfg = _job_config(args)
    labeled = _load_labeled(args, cfg)
    systems = []
    for spec_arg in args.pred:
        name, sep, path = spec_arg.partition("=")
        if not sep or not name or not path:
            raise ToolkitError(f"--pred expects NAME=PATH, got {spec_arg!r}")
        systems.append((name, corpus_io.load_predictions(path)))

    pairs = []
    skipped = []
    for seg in labeled:
        tracks = []
        for name, preds in systems:
            if seg.segment_id not in preds:
                break
            tracks.append(preds[seg.segment_id])
        if len(tracks) != len(systems):
            skipped.append(seg.segment_id)
            continue
        pairs.append((seg, tracks))
    if skipped:
        log.warning(
            "%d segment(s) missing from at least one system — skipped: %s",
            len(skipped), ", ".join(skipped),
        )
    known = {seg.segment_id for seg in labeled}
    for name, preds in systems:
        unknown = [sid for sid in preds if sid not in known]
        if unknown:
            log.warning(
                "%d %s segment(s) with no reference — skipped: %s",
                len(unknown), name, ", ".join(unknown),
            )

    results = _map_jobs(partial(_overlap_worker, cfg), pairs, args.jobs)
    total = None
    for _, diagrams in results:
        total = diagrams if total is None else merge_overlap(total, diagrams)
    if total is None:
        raise ToolkitError("no segments to analyze")
    if total["overall"].total_frames == 0:
        log.warning("no disfluent frames in truth — overlap diagram is empty")
    report = reports.overlap_report(total, [name for name, _ in systems], skipped)
    _emit(reports.render(report, args.format), args)
    return 0


def _cmd_fuse(args) -> int:
    cfg = _job_config(args)
    frame_stream = corpus_io.read_feature_matrix(args.frame_feats)
    words = corpus_io.read_word_features(args.word_feats)
    if args.duration is not None:
        duration = args.duration
    else:
        # Minimal duration producing exactly as many frames as the frame stream.
        duration = cfg.grid.win_s + (frame_stream.nframes - 1) * cfg.grid.hop_s
    word_stream = upsample_word_features(
        words, cfg.grid, duration, dim=args.word_dim
    )
    fused = concat_streams(word_stream, frame_stream)
    if args.out:
        corpus_io.write_feature_matrix(fused, args.out)
    else:
        corpus_io.write_feature_matrix(fused, sys.stdout)
    return 0


def _cmd_baseline(args) -> int:
    cfg = _job_config(args)
    usable = _load_usable(args.ref, args.strict)
    tracks = _map_jobs(
        partial(_baseline_worker, cfg), [p.segment for p in usable], args.jobs
    )
    _emit_jsonl(corpus_io.dump_predictions, tracks, args)
    return 0


def _cmd_validate(args) -> int:
    files = []
    had_error = False

    def note(path, issues, segments):
        nonlocal had_error
        errors = sum(1 for i in issues if i.severity == "error")
        warnings = sum(1 for i in issues if i.severity == "warning")
        for issue in issues:
            (log.error if issue.severity == "error" else log.warning)("%s", issue.render())
        had_error = had_error or errors > 0
        files.append(
            {"path": str(path), "segments": segments, "errors": errors, "warnings": warnings}
        )

    if args.ref:
        parsed, issues = corpus_io.scan_corpus(args.ref)
        for p in parsed:
            issues.extend(corpus_io.validate_segment(p.segment))
        note(args.ref, issues, len(parsed))
    if args.hyp:
        issues = []
        count = 0
        try:
            hyp = corpus_io.load_hyp(args.hyp)
            count = len(hyp)
            for sid, words in hyp.items():
                for i, w in enumerate(words):
                    if w.end_s < w.start_s:
                        issues.append(corpus_io.Issue(
                            "error", sid, i,
                            f"word {w.text!r} ends ({w.end_s}) before it starts ({w.start_s})",
                        ))
        except ParseError as exc:
            issues.append(corpus_io.Issue("error", None, None, str(exc)))
        note(args.hyp, issues, count)
    if args.pred:
        issues = []
        count = 0
        try:
            count = len(corpus_io.load_predictions(args.pred))
        except ParseError as exc:
            issues.append(corpus_io.Issue("error", None, None, str(exc)))
        note(args.pred, issues, count)
    if not files:
        raise ToolkitError("validate needs at least one of --ref/--hyp/--pred")

    _emit(reports.render(reports.validate_report(files), args.format), args)
    return 1 if had_error else 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    default_jobs = int(os.environ.get("DISFLEVAL_JOBS", "1"))

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--hop", type=float, default=0.020,
                        help="frame hop in seconds (default 0.020)")
    common.add_argument("--win", type=float, default=0.025,
                        help="frame window in seconds (default 0.025)")
    common.add_argument("--canon-map", metavar="FILE",
                        help="extra spelling canonicalizations (surface<TAB>canonical)")
    common.add_argument("--format", choices=("json", "md"), default="json",
                        help="report format (default json)")
    common.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
    common.add_argument("--jobs", type=int, default=default_jobs,
                        help="worker processes (default $DISFLEVAL_JOBS or 1)")
    common.add_argument("--strict", action="store_true",
                        help="abort on the first per-segment failure")
    common.add_argument("--fer-ignore-silence", action="store_true",
                        help="do not count word-vs-silence frames as errors")
    common.add_argument("--overlap-strict", action="store_true",
                        help="overall overlap requires all true classes predicted")

    parser = argparse.ArgumentParser(
        prog="disfleval",
        description="Disfluency-aware transcript evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", parents=[common],
                       help="map error/correction annotations to disfluency classes")
    p.add_argument("--ref", required=True, help="reference corpus (JSON lines)")
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("stats", parents=[common],
                       help="per-class proportions at utterance/word/frame level")
    p.add_argument("--ref", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("wer", parents=[common],
                       help="disfluency-decomposed word error rates")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True, help="hypothesis transcripts (JSON lines)")
    p.set_defaults(func=_cmd_wer)

    p = sub.add_parser("fer", parents=[common],
                       help="disfluency-decomposed frame error rates")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.set_defaults(func=_cmd_fer)

    p = sub.add_parser("score", parents=[common],
                       help="frame-level detection recall/F1 with macros")
    p.add_argument("--ref", required=True)
    p.add_argument("--pred", required=True, help="prediction file (JSON lines)")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("overlap", parents=[common],
                       help="multi-system overlap of correctly categorized frames")
    p.add_argument("--ref", required=True)
    p.add_argument("--pred", action="append", required=True, metavar="NAME=PATH",
                   help="one prediction file per system (repeatable)")
    p.set_defaults(func=_cmd_overlap)

    p = sub.add_parser("fuse", parents=[common],
                       help="upsample word features to the frame grid and concatenate")
    p.add_argument("--word-feats", required=True, help="word feature file (JSON lines)")
    p.add_argument("--frame-feats", required=True, help="frame feature matrix file")
    p.add_argument("--duration", type=float,
                   help="segment duration in seconds (default: from frame stream)")
    p.add_argument("--word-dim", type=int,
                   help="word feature dimension (only needed when the word file is empty)")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("baseline", parents=[common],
                       help="rule-based transcript-only disfluency predictions")
    p.add_argument("--ref", required=True)
    p.add_argument("--max-span", type=int, default=3,
                   help="longest repeated token span to match (default 3)")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("validate", parents=[common],
                       help="check files against the format and timing invariants")
    p.add_argument("--ref")
    p.add_argument("--hyp")
    p.add_argument("--pred")
    p.set_defaults(func=_cmd_validate)

    return parser


class _DynamicStderrHandler(logging.StreamHandler):
    """Writes to whatever sys.stderr is at emit time (it may be redirected)."""

    def __init__(self):
        super().__init__(sys.stderr)

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def _configure_logging() -> None:
    root = logging.getLogger("disfleval")
    if not root.handlers:
        handler = _DynamicStderrHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        root.addHandler(handler)
        root.setLevel(logging.INFO)


def cli(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ToolkitError, OSError) as exc:
        log.error("%s", exc)
        return 1


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
