import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disfleval import DisfluencyFlags, FrameGrid, Segment, Word, fer_suite
from disfleval.frame_metrics import FrameErrorSummary, frame_error_summary, rates_from_summary

from oracles import naive_fer_counts

FP = DisfluencyFlags(fp=True)


def example_ref():
    return Segment("s", 0.20, (Word("um", 0.05, 0.10, FP), Word("hi", 0.10, 0.18)))


class TestFerExamples:
    def test_worked_example(self):
        res = fer_suite(example_ref(), [Word("hi", 0.04, 0.18)], FrameGrid())
        assert res.summary.nframes == 9
        assert res.fer == pytest.approx(3 / 9, abs=0)
        assert res.fer_d == 1.0
        assert res.fer_nd == 0.0

    def test_identical_hypothesis(self):
        ref = example_ref()
        res = fer_suite(ref, list(ref.words), FrameGrid())
        assert res.fer == 0.0 and res.fer_d == 0.0 and res.fer_nd == 0.0

    def test_empty_hypothesis_errors_on_word_frames(self):
        ref = example_ref()
        grid = FrameGrid()
        res = fer_suite(ref, [], grid)
        covered = sum(
            1 for i in range(res.summary.nframes)
            if any(w.start_s <= grid.midpoint(i) < w.end_s for w in ref.words)
        )
        assert res.summary.nframes_e == covered
        assert res.fer == pytest.approx(covered / res.summary.nframes, abs=0)

    def test_hyp_word_beyond_duration_clipped(self, caplog):
        ref = example_ref()
        with caplog.at_level(logging.WARNING, logger="disfleval"):
            res = fer_suite(ref, [Word("um", 0.05, 0.10), Word("hi", 0.10, 0.50)], FrameGrid())
        assert "clipped" in caplog.text
        assert res.fer == 0.0

    def test_hyp_word_starting_beyond_duration_dropped(self, caplog):
        ref = example_ref()
        with caplog.at_level(logging.WARNING, logger="disfleval"):
            res = fer_suite(
                ref,
                [Word("um", 0.05, 0.10), Word("hi", 0.10, 0.18), Word("x", 0.9, 1.0)],
                FrameGrid(),
            )
        assert "dropped" in caplog.text
        assert res.fer == 0.0

    def test_ignore_silence_flag(self):
        ref = example_ref()
        # hypothesis only covers "hi"; the um frames face silence
        res_strict = fer_suite(ref, [Word("hi", 0.10, 0.18)], FrameGrid())
        res_lenient = fer_suite(
            ref, [Word("hi", 0.10, 0.18)], FrameGrid(), ignore_silence=True
        )
        assert res_strict.summary.nframes_e == 3
        assert res_lenient.summary.nframes_e == 0

    def test_zero_denominators_undefined(self):
        ref = Segment("s", 0.20, (Word("hi", 0.0, 0.2),))
        res = fer_suite(ref, list(ref.words), FrameGrid())
        assert res.fer_d is None
        assert res.fer == 0.0


class TestSummaryMerge:
    def test_add(self):
        a = FrameErrorSummary(9, 3, 3, 6, 3, 0)
        b = FrameErrorSummary(5, 1, 0, 5, 0, 1)
        c = a + b
        assert c == FrameErrorSummary(14, 4, 3, 11, 3, 1)

    def test_rates_on_merged(self):
        merged = FrameErrorSummary(10, 4, 5, 5, 3, 1)
        res = rates_from_summary(merged)
        assert res.fer == pytest.approx(0.4, abs=0)
        assert res.fer_d == pytest.approx(0.6, abs=0)
        assert res.fer_nd == pytest.approx(0.2, abs=0)


@st.composite
def segment_pair(draw):
    hop = draw(st.floats(0.005, 0.05))
    grid = FrameGrid(hop_s=hop, win_s=hop * draw(st.floats(1.0, 3.0)))
    n = draw(st.integers(0, 6))
    vocab = ["a", "b", "c"]
    words = []
    t = 0.05
    for i in range(n):
        dur = draw(st.floats(0.01, 0.3))
        flags = DisfluencyFlags(fp=draw(st.booleans()))
        words.append(Word(draw(st.sampled_from(vocab)), t, t + dur, flags))
        t += dur + draw(st.floats(0.0, 0.05))
    duration = t + 0.05
    ref = Segment("s", duration, tuple(words))
    hyp = []
    for w in words:
        action = draw(st.integers(0, 3))
        if action == 0:
            continue  # deletion
        text = w.text if action < 3 else draw(st.sampled_from(vocab))
        shift = draw(st.floats(-0.02, 0.02))
        hyp.append(Word(text, max(0.0, w.start_s + shift), w.end_s))
    return ref, hyp, grid


class TestFerProperties:
    @settings(max_examples=100, deadline=None)
    @given(segment_pair())
    def test_matches_frame_walk_oracle(self, case):
        ref, hyp, grid = case
        summary = frame_error_summary(ref, hyp, grid)
        expected = naive_fer_counts(
            [(w.text, w.start_s, w.end_s, w.flags.is_disfluent()) for w in ref.words],
            [(w.text, w.start_s, w.end_s) for w in hyp],
            ref.duration_s, grid.hop_s, grid.win_s,
        )
        got = (
            summary.nframes, summary.nframes_e, summary.nframes_d,
            summary.nframes_n, summary.nframes_e_d, summary.nframes_e_n,
        )
        assert got == expected

    @settings(max_examples=100, deadline=None)
    @given(segment_pair())
    def test_decomposition_and_bounds(self, case):
        ref, hyp, grid = case
        s = frame_error_summary(ref, hyp, grid)
        assert s.nframes == s.nframes_d + s.nframes_n
        assert s.nframes_e == s.nframes_e_d + s.nframes_e_n
        assert s.nframes_e_d <= s.nframes_d
        assert s.nframes_e_n <= s.nframes_n
        res = rates_from_summary(s)
        for value in (res.fer, res.fer_d, res.fer_nd):
            if value is not None:
                assert 0.0 <= value <= 1.0

    @settings(max_examples=60, deadline=None)
    @given(segment_pair())
    def test_exact_hypothesis_zero_for_any_grid(self, case):
        ref, _, grid = case
        res = fer_suite(ref, list(ref.words), grid)
        assert res.summary.nframes_e == 0
        assert res.fer == 0.0
