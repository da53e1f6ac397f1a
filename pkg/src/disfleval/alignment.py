"""Levenshtein word alignment and disfluency-decomposed word error rates.

WER splits by the reference word's disfluency: deletions and substitutions
attribute to the deleted/substituted reference word, insertions always count
as nondisfluent (ASR systems do not invent filled pauses or repetitions).
Metrics with a zero denominator are reported as None, never as 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

MATCH = "match"
SUBSTITUTION = "substitution"
DELETION = "deletion"
INSERTION = "insertion"


class EditOp(NamedTuple):
    """One step of an alignment; deletion has no hyp_index, insertion no ref_index."""

    kind: str
    ref_index: Optional[int]
    hyp_index: Optional[int]


def align(ref: Sequence[str], hyp: Sequence[str]) -> list[EditOp]:
    """Minimal-cost alignment of ref against hyp under unit edit costs.

    The backtrace runs end to start and resolves cost ties in the fixed order
    match > substitution > deletion > insertion, so equal-cost alignments
    always resolve the same way (the disfluent/nondisfluent split depends on
    which optimal alignment is chosen).
    """
    n = len(ref)
    m = len(hyp)
    rows = [list(range(m + 1))]
    prev = rows[0]
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        rw = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1]
            if rw == hyp[j - 1]:
                cur[j] = diag
            else:
                up = prev[j]
                left = cur[j - 1]
                best = diag if diag <= up else up
                if left < best:
                    best = left
                cur[j] = best + 1
        rows.append(cur)
        prev = cur

    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        cost = rows[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and cost == rows[i - 1][j - 1]:
            ops.append(EditOp(MATCH, i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and ref[i - 1] != hyp[j - 1] and cost == rows[i - 1][j - 1] + 1:
            ops.append(EditOp(SUBSTITUTION, i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and cost == rows[i - 1][j] + 1:
            ops.append(EditOp(DELETION, i - 1, None))
            i -= 1
        else:
            ops.append(EditOp(INSERTION, None, j - 1))
            j -= 1
    ops.reverse()
    return ops


@dataclass(frozen=True, slots=True)
class EditSummary:
    """Edit counts split by the disfluency of the attributed reference word."""

    nwords: int = 0
    nwords_d: int = 0
    nwords_n: int = 0
    insertions: int = 0
    deletions: int = 0
    substitutions: int = 0
    insertions_n: int = 0
    deletions_d: int = 0
    deletions_n: int = 0
    substitutions_d: int = 0
    substitutions_n: int = 0

    def __add__(self, other: "EditSummary") -> "EditSummary":
        return EditSummary(
            nwords=self.nwords + other.nwords,
            nwords_d=self.nwords_d + other.nwords_d,
            nwords_n=self.nwords_n + other.nwords_n,
            insertions=self.insertions + other.insertions,
            deletions=self.deletions + other.deletions,
            substitutions=self.substitutions + other.substitutions,
            insertions_n=self.insertions_n + other.insertions_n,
            deletions_d=self.deletions_d + other.deletions_d,
            deletions_n=self.deletions_n + other.deletions_n,
            substitutions_d=self.substitutions_d + other.substitutions_d,
            substitutions_n=self.substitutions_n + other.substitutions_n,
        )

    def errors(self) -> int:
        return self.insertions + self.deletions + self.substitutions


@dataclass(frozen=True, slots=True)
class WerResult:
    summary: EditSummary
    wer: Optional[float]
    wer_nd: Optional[float]
    wer_d: Optional[float]


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def summarize_ops(ops: Sequence[EditOp], ref_flags) -> EditSummary:
    """Tally an alignment into disfluent/nondisfluent edit counts.

    ref_flags holds one DisfluencyFlags per reference word, in order.
    """
    disfluent = [f.is_disfluent() for f in ref_flags]
    nwords = len(disfluent)
    nwords_d = sum(disfluent)
    ins = dels = subs = dels_d = subs_d = 0
    ref_seen = 0
    try:
        for op in ops:
            kind = op.kind
            if kind == MATCH:
                ref_seen += 1
            elif kind == SUBSTITUTION:
                subs += 1
                if disfluent[op.ref_index]:
                    subs_d += 1
                ref_seen += 1
            elif kind == DELETION:
                dels += 1
                if disfluent[op.ref_index]:
                    dels_d += 1
                ref_seen += 1
            else:
                ins += 1
    except IndexError:
        ref_seen = 1 + max(op.ref_index for op in ops if op.ref_index is not None)
    if ref_seen != nwords:
        raise ValueError(
            f"alignment covers {ref_seen} reference words but {nwords} flags were given"
        )
    return EditSummary(
        nwords=nwords,
        nwords_d=nwords_d,
        nwords_n=nwords - nwords_d,
        insertions=ins,
        deletions=dels,
        substitutions=subs,
        insertions_n=ins,
        deletions_d=dels_d,
        deletions_n=dels - dels_d,
        substitutions_d=subs_d,
        substitutions_n=subs - subs_d,
    )


def rates_from_summary(summary: EditSummary) -> WerResult:
    """WER / WER-ND / WER-D from a (possibly merged) edit summary."""
    return WerResult(
        summary=summary,
        wer=_ratio(summary.errors(), summary.nwords),
        wer_nd=_ratio(
            summary.insertions_n + summary.deletions_n + summary.substitutions_n,
            summary.nwords_n,
        ),
        wer_d=_ratio(summary.deletions_d + summary.substitutions_d, summary.nwords_d),
    )


def wer_suite(ops: Sequence[EditOp], ref_flags) -> WerResult:
    """Score one aligned segment; corpus runs merge EditSummary counts first."""
    return rates_from_summary(summarize_ops(ops, ref_flags))
