"""Report construction and rendering (JSON and markdown).

All metric values are rounded to 4 decimals (round-half-even) when the report
dict is built, so the JSON and markdown renderings carry identical numbers.
Undefined metrics (zero denominators) stay None/null and render as "n/a".
"""

from __future__ import annotations

import json
from dataclasses import asdict

from .model import CLASS_NAMES
from .scoring import NONDISFLUENT, SCORED_CLASSES, subset_label

CLASS_TITLES = {
    "fp": "FP",
    "pw": "PW",
    "rp": "RP",
    "rv": "RV",
    "rs": "RS",
    NONDISFLUENT: "NonDisfluent",
}


def round4(x):
    return None if x is None else round(x, 4)


def fmt(x) -> str:
    return "n/a" if x is None else f"{x:.4f}"


def _md_table(headers, rows) -> str:
    lines = ["| " + " | ".join(headers) + " |",
             "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(lines)


def render(report: dict, fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    renderer = _MD_RENDERERS[report["command"]]
    return renderer(report) + "\n"


# -- wer ---------------------------------------------------------------------

def wer_report(overall, per_segment, skipped=()) -> dict:
    def entry(result):
        d = asdict(result.summary)
        d["wer"] = round4(result.wer)
        d["wer_nd"] = round4(result.wer_nd)
        d["wer_d"] = round4(result.wer_d)
        return d

    report = {"command": "wer", "overall": entry(overall)}
    report["per_segment"] = [
        {"segment_id": sid, **entry(res)} for sid, res in per_segment
    ]
    if skipped:
        report["skipped"] = list(skipped)
    return report


def _render_wer_md(report: dict) -> str:
    o = report["overall"]
    parts = ["# Word error rates", ""]
    parts.append(_md_table(
        ["metric", "value"],
        [["WER", fmt(o["wer"])], ["WER-ND", fmt(o["wer_nd"])], ["WER-D", fmt(o["wer_d"])]],
    ))
    parts.append("")
    parts.append(_md_table(
        ["count", "total", "disfluent", "nondisfluent"],
        [
            ["reference words", o["nwords"], o["nwords_d"], o["nwords_n"]],
            ["insertions", o["insertions"], 0, o["insertions_n"]],
            ["deletions", o["deletions"], o["deletions_d"], o["deletions_n"]],
            ["substitutions", o["substitutions"], o["substitutions_d"], o["substitutions_n"]],
        ],
    ))
    if report["per_segment"]:
        parts.append("")
        parts.append("## Per segment")
        parts.append("")
        parts.append(_md_table(
            ["segment", "WER", "WER-ND", "WER-D", "I", "D", "S", "nwords"],
            [
                [e["segment_id"], fmt(e["wer"]), fmt(e["wer_nd"]), fmt(e["wer_d"]),
                 e["insertions"], e["deletions"], e["substitutions"], e["nwords"]]
                for e in report["per_segment"]
            ],
        ))
    return "\n".join(parts)


# -- fer ---------------------------------------------------------------------

def fer_report(overall, per_segment, skipped=()) -> dict:
    def entry(result):
        d = asdict(result.summary)
        d["fer"] = round4(result.fer)
        d["fer_nd"] = round4(result.fer_nd)
        d["fer_d"] = round4(result.fer_d)
        return d

    report = {"command": "fer", "overall": entry(overall)}
    report["per_segment"] = [
        {"segment_id": sid, **entry(res)} for sid, res in per_segment
    ]
    if skipped:
        report["skipped"] = list(skipped)
    return report


def _render_fer_md(report: dict) -> str:
    o = report["overall"]
    parts = ["# Frame error rates", ""]
    parts.append(_md_table(
        ["metric", "value"],
        [["FER", fmt(o["fer"])], ["FER-ND", fmt(o["fer_nd"])], ["FER-D", fmt(o["fer_d"])]],
    ))
    parts.append("")
    parts.append(_md_table(
        ["count", "total", "disfluent", "nondisfluent"],
        [
            ["frames", o["nframes"], o["nframes_d"], o["nframes_n"]],
            ["frames with errors", o["nframes_e"], o["nframes_e_d"], o["nframes_e_n"]],
        ],
    ))
    if report["per_segment"]:
        parts.append("")
        parts.append("## Per segment")
        parts.append("")
        parts.append(_md_table(
            ["segment", "FER", "FER-ND", "FER-D", "frames", "errors"],
            [
                [e["segment_id"], fmt(e["fer"]), fmt(e["fer_nd"]), fmt(e["fer_d"]),
                 e["nframes"], e["nframes_e"]]
                for e in report["per_segment"]
            ],
        ))
    return "\n".join(parts)


# -- score -------------------------------------------------------------------

def score_report(result, skipped=()) -> dict:
    classes = {}
    for name in SCORED_CLASSES:
        c = result.classes[name]
        classes[name] = {
            "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn,
            "support": c.support,
            "recall": round4(c.recall),
            "f1": round4(c.f1),
        }
    report = {
        "command": "score",
        "macros": {
            "unweighted_recall": round4(result.unweighted_recall),
            "weighted_recall": round4(result.weighted_recall),
            "unweighted_f1": round4(result.unweighted_f1),
            "weighted_f1": round4(result.weighted_f1),
        },
        "classes": classes,
        "excluded_classes": list(result.excluded_classes),
    }
    if skipped:
        report["skipped"] = list(skipped)
    return report


def _render_score_md(report: dict) -> str:
    macros = report["macros"]
    classes = report["classes"]
    headers = ["metric", "Unweighted", "Weighted"] + [
        CLASS_TITLES[c] for c in SCORED_CLASSES
    ]
    rows = [
        ["F1", fmt(macros["unweighted_f1"]), fmt(macros["weighted_f1"])]
        + [fmt(classes[c]["f1"]) for c in SCORED_CLASSES],
        ["Recall", fmt(macros["unweighted_recall"]), fmt(macros["weighted_recall"])]
        + [fmt(classes[c]["recall"]) for c in SCORED_CLASSES],
    ]
    parts = ["# Frame-level detection scores", "", _md_table(headers, rows), ""]
    parts.append(_md_table(
        ["class", "tp", "fp", "fn", "tn", "support"],
        [
            [CLASS_TITLES[c], classes[c]["tp"], classes[c]["fp"], classes[c]["fn"],
             classes[c]["tn"], classes[c]["support"]]
            for c in SCORED_CLASSES
        ],
    ))
    if report["excluded_classes"]:
        parts.append("")
        parts.append(
            "Excluded from macros (no ground-truth frames): "
            + ", ".join(CLASS_TITLES[c] for c in report["excluded_classes"])
        )
    return "\n".join(parts)


# -- stats -------------------------------------------------------------------

def stats_report(stats) -> dict:
    return {
        "command": "stats",
        "nsegments": stats.nsegments,
        "nwords": stats.nwords,
        "nframes": stats.nframes,
        "classes": {
            name: {
                "utterance": round4(stats.utterance[name]),
                "word": round4(stats.word[name]),
                "frame": round4(stats.frame[name]),
            }
            for name in CLASS_NAMES
        },
    }


def _render_stats_md(report: dict) -> str:
    parts = ["# Corpus disfluency proportions", ""]
    parts.append(
        f"segments: {report['nsegments']}, words: {report['nwords']}, "
        f"frames: {report['nframes']}"
    )
    parts.append("")
    parts.append(_md_table(
        ["class", "utterance", "word", "frame"],
        [
            [CLASS_TITLES[c],
             fmt(report["classes"][c]["utterance"]),
             fmt(report["classes"][c]["word"]),
             fmt(report["classes"][c]["frame"])]
            for c in CLASS_NAMES
        ],
    ))
    return "\n".join(parts)


# -- overlap -----------------------------------------------------------------

def overlap_report(diagrams: dict, system_names, skipped=()) -> dict:
    names = list(system_names)
    out = {"command": "overlap", "systems": names, "diagrams": {}}
    for diagram_name, diagram in diagrams.items():
        pct, missed = diagram.percentages()
        out["diagrams"][diagram_name] = {
            "total_frames": diagram.total_frames,
            "regions": {
                subset_label(mask, names): round4(p) for mask, p in pct.items()
            },
            "missed_pct": round4(missed),
        }
    if skipped:
        out["skipped"] = list(skipped)
    return out


def _render_overlap_md(report: dict) -> str:
    names = report["systems"]
    diagram_names = list(report["diagrams"])
    subset_labels = [
        subset_label(mask, names) for mask in range(1, 2 ** len(names))
    ]
    headers = ["region"] + [CLASS_TITLES.get(dn, dn) for dn in diagram_names]
    rows = []
    for label in subset_labels + ["missed"]:
        row = [label]
        for dn in diagram_names:
            d = report["diagrams"][dn]
            if d["total_frames"] == 0:
                row.append("n/a")
            elif label == "missed":
                row.append(fmt(d["missed_pct"]))
            else:
                row.append(fmt(d["regions"].get(label, 0.0)))
        rows.append(row)
    parts = ["# Correctly categorized frame overlap (%)", "", _md_table(headers, rows), ""]
    parts.append(_md_table(
        ["diagram", "qualifying frames"],
        [[CLASS_TITLES.get(dn, dn), report["diagrams"][dn]["total_frames"]]
         for dn in diagram_names],
    ))
    return "\n".join(parts)


# -- validate ----------------------------------------------------------------

def validate_report(files: list[dict]) -> dict:
    return {
        "command": "validate",
        "files": files,
        "total_errors": sum(f["errors"] for f in files),
        "total_warnings": sum(f["warnings"] for f in files),
    }


def _render_validate_md(report: dict) -> str:
    parts = ["# Validation summary", ""]
    parts.append(_md_table(
        ["file", "segments", "errors", "warnings"],
        [[f["path"], f["segments"], f["errors"], f["warnings"]] for f in report["files"]],
    ))
    parts.append("")
    parts.append(
        f"total: {report['total_errors']} error(s), {report['total_warnings']} warning(s)"
    )
    return "\n".join(parts)


_MD_RENDERERS = {
    "wer": _render_wer_md,
    "fer": _render_fer_md,
    "score": _render_score_md,
    "stats": _render_stats_md,
    "overlap": _render_overlap_md,
    "validate": _render_validate_md,
}
