"""Temporal fusion of word-rate and frame-rate feature streams.

Word-level vectors are upsampled to the frame grid with the same midpoint
projection used for labels (zero vectors on wordless frames), then
concatenated column-wise with a frame-rate stream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import StreamError
from .model import FrameGrid, project_intervals

log = logging.getLogger(__name__)

WORD_RATE = "word_rate"
FRAME_RATE = "frame_rate"


@dataclass(frozen=True)
class WordVector:
    """A timestamped word carrying a feature vector."""

    text: str
    start_s: float
    end_s: float
    vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vec", np.asarray(self.vec, dtype=np.float64))


@dataclass(frozen=True)
class FeatureStream:
    """Either timestamped word vectors or an nframes x dim matrix."""

    kind: str
    dim: int
    matrix: np.ndarray | None = None
    words: tuple[WordVector, ...] | None = None

    def __post_init__(self):
        if self.kind == FRAME_RATE:
            if self.matrix is None or self.words is not None:
                raise StreamError("frame_rate stream needs a matrix and no words")
            matrix = np.asarray(self.matrix, dtype=np.float64)
            if matrix.ndim != 2 or matrix.shape[1] != self.dim:
                raise StreamError(
                    f"matrix shape {matrix.shape} does not match dim={self.dim}"
                )
            object.__setattr__(self, "matrix", matrix)
        elif self.kind == WORD_RATE:
            if self.words is None or self.matrix is not None:
                raise StreamError("word_rate stream needs words and no matrix")
            words = tuple(self.words)
            for w in words:
                if w.vec.shape != (self.dim,):
                    raise StreamError(
                        f"word {w.text!r} has a {w.vec.shape[0]}-dim vector, expected {self.dim}"
                    )
            object.__setattr__(self, "words", words)
        else:
            raise StreamError(f"unknown stream kind {self.kind!r}")

    @property
    def nframes(self) -> int:
        if self.matrix is None:
            raise StreamError("word_rate stream has no frame count")
        return self.matrix.shape[0]

    @classmethod
    def frame_rate(cls, matrix) -> "FeatureStream":
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(kind=FRAME_RATE, dim=matrix.shape[1], matrix=matrix)

    @classmethod
    def word_rate(cls, words, dim: int | None = None) -> "FeatureStream":
        words = tuple(words)
        if dim is None:
            if not words:
                raise StreamError("dim is required for an empty word stream")
            dim = words[0].vec.shape[0]
        return cls(kind=WORD_RATE, dim=dim, words=words)


def upsample_word_features(
    words, grid: FrameGrid, duration_s: float, dim: int | None = None
) -> FeatureStream:
    """Copy each word's vector onto the frames it occupies; zeros elsewhere.

    ``dim`` is only needed when ``words`` is empty (it cannot be inferred).
    """
    words = tuple(words)
    if words:
        inferred = words[0].vec.shape[0]
        if dim is None:
            dim = inferred
        for w in words:
            if w.vec.shape != (dim,):
                raise StreamError(
                    f"word {w.text!r} has a {w.vec.shape[0]}-dim vector, expected {dim}"
                )
    elif dim is None:
        raise StreamError("dim is required to upsample an empty word stream")

    nframes = grid.nframes(duration_s)
    matrix = np.zeros((nframes, dim), dtype=np.float64)
    entries, collisions = project_intervals(
        [(w.start_s, w.end_s) for w in words], grid, nframes
    )
    if collisions:
        log.warning(
            "%d word vector(s) could not claim a frame: %s",
            len(collisions), ", ".join(words[k].text for k in collisions),
        )
    for i, k in enumerate(entries):
        if k is not None:
            matrix[i] = words[k].vec
    return FeatureStream.frame_rate(matrix)


def concat_streams(a: FeatureStream, b: FeatureStream, max_row_slack: int = 2) -> FeatureStream:
    """Column-wise concatenation of two frame-rate streams (a's columns first).

    Row counts differing by at most ``max_row_slack`` frames (edge effects of
    different producers) are reconciled by truncating to the shorter stream.
    """
    if a.kind != FRAME_RATE or b.kind != FRAME_RATE:
        raise StreamError("concat_streams needs two frame_rate streams")
    rows_a, rows_b = a.nframes, b.nframes
    if rows_a != rows_b:
        if abs(rows_a - rows_b) > max_row_slack:
            raise StreamError(
                f"row counts {rows_a} and {rows_b} differ by more than {max_row_slack} frames"
            )
        log.warning(
            "row counts %d and %d differ — truncating to %d",
            rows_a, rows_b, min(rows_a, rows_b),
        )
    n = min(rows_a, rows_b)
    return FeatureStream.frame_rate(np.hstack([a.matrix[:n], b.matrix[:n]]))
