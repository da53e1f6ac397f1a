"""Disfluency-aware evaluation of speech transcripts.

Maps error/correction annotations to disfluency classes, computes
disfluency-decomposed word and frame error rates, scores frame-level
detection, and performs the word-to-frame feature fusion alignment.
"""

from importlib import resources
from pathlib import Path

from .alignment import EditOp, EditSummary, WerResult, align, wer_suite
from .baseline import tag, tag_segment
from .errors import (
    AnnotationError,
    ConfigurationError,
    ParseError,
    StreamError,
    ToolkitError,
    TrackMismatchError,
)
from .frame_metrics import FerResult, FrameErrorSummary, fer_suite
from .fusion import FeatureStream, WordVector, concat_streams, upsample_word_features
from .labeling import (
    CanonMap,
    CorpusStats,
    corpus_stats,
    label_segment,
    normalize_token,
    normalize_words,
)
from .model import (
    CLASS_NAMES,
    DisfluencyFlags,
    DisfluencyRegion,
    FrameGrid,
    FrameTrack,
    Segment,
    Word,
    frame_labels,
    project_words_to_frames,
)
from .scoring import (
    ClassScores,
    OverlapDiagram,
    PredictionTrack,
    ScoreResult,
    overlap_analysis,
    score,
)

__version__ = "0.1.0"


def mini_corpus_dir() -> Path:
    """Directory holding the bundled miniature corpus (ref/hyp/pred fixtures)."""
    return Path(resources.files("disfleval") / "data" / "mini_corpus")
