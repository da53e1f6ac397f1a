import json

import pytest

from disfleval import FrameGrid, fer_suite, normalize_words
from disfleval.baseline import tag_segment
from disfleval.cli import build_parser
from disfleval.corpus_io import ensure_labeled, load_corpus, load_predictions
from disfleval.frame_metrics import rates_from_summary

from cli_harness import run_cli


class TestWerCommand:
    def test_json_values_on_mini_corpus(self, mini_dir):
        code, out, _ = run_cli(["wer", "--ref", mini_dir / "ref.jsonl", "--hyp", mini_dir / "hyp.jsonl"])
        assert code == 0
        report = json.loads(out)
        overall = report["overall"]
        # hand-derived: 1 insertion (very), 7 deletions (um, h, with, my, uh,
        # we, were — all disfluent), 1 substitution (stay->say, nondisfluent)
        assert overall["nwords"] == 39
        assert overall["nwords_d"] == 9
        assert overall["insertions"] == 1
        assert overall["deletions"] == 7
        assert overall["substitutions"] == 1
        assert overall["deletions_d"] == 7
        assert overall["substitutions_n"] == 1
        assert overall["wer"] == round(9 / 39, 4)
        assert overall["wer_d"] == round(7 / 9, 4)
        assert overall["wer_nd"] == round(2 / 30, 4)
        # cross-check the total edit count against the brute-force oracle
        from disfleval.corpus_io import load_hyp
        from oracles import naive_edit_distance
        hyps = load_hyp(mini_dir / "hyp.jsonl")
        total = 0
        for parsed in load_corpus(mini_dir / "ref.jsonl"):
            seg = ensure_labeled(parsed)
            hyp_words = normalize_words(hyps[seg.segment_id])
            total += naive_edit_distance(seg.texts(), [w.text for w in hyp_words])
        assert total == overall["insertions"] + overall["deletions"] + overall["substitutions"]
        by_id = {e["segment_id"]: e for e in report["per_segment"]}
        assert by_id["rv01"]["wer"] == round(3 / 7, 4)
        assert by_id["rv01"]["wer_d"] == 1.0
        assert by_id["rv01"]["wer_nd"] == 0.0
        assert by_id["flu01"]["wer_d"] is None

    def test_md_carries_same_numbers(self, mini_dir):
        args = ["wer", "--ref", mini_dir / "ref.jsonl", "--hyp", mini_dir / "hyp.jsonl"]
        _, json_out, _ = run_cli(args)
        _, md_out, _ = run_cli(args + ["--format", "md"])
        overall = json.loads(json_out)["overall"]
        for key in ("wer", "wer_nd", "wer_d"):
            assert f"{overall[key]:.4f}" in md_out

    def test_unknown_hyp_segment_listed_and_skipped(self, mini_dir, tmp_path):
        hyp = (mini_dir / "hyp.jsonl").read_text(encoding="utf-8")
        hyp += json.dumps({"segment_id": "ghost", "words": []}) + "\n"
        path = tmp_path / "hyp.jsonl"
        path.write_text(hyp, encoding="utf-8")
        code, out, err = run_cli(["wer", "--ref", mini_dir / "ref.jsonl", "--hyp", path])
        assert code == 0
        report = json.loads(out)
        assert "ghost" in report["skipped"]
        assert "ghost" in err

    def test_same_report_from_labeled_corpus(self, mini_dir, tmp_path):
        labeled = tmp_path / "labeled.jsonl"
        run_cli(["label", "--ref", mini_dir / "ref.jsonl", "--out", labeled])
        _, raw_out, _ = run_cli(["wer", "--ref", mini_dir / "ref.jsonl", "--hyp", mini_dir / "hyp.jsonl"])
        _, lab_out, _ = run_cli(["wer", "--ref", labeled, "--hyp", mini_dir / "hyp.jsonl"])
        assert raw_out == lab_out

    def test_ref_without_hyp_skipped(self, mini_dir, tmp_path):
        path = tmp_path / "hyp.jsonl"
        lines = (mini_dir / "hyp.jsonl").read_text(encoding="utf-8").splitlines()
        path.write_text("\n".join(lines[:3]) + "\n", encoding="utf-8")
        code, out, err = run_cli(["wer", "--ref", mini_dir / "ref.jsonl", "--hyp", path])
        assert code == 0
        report = json.loads(out)
        assert len(report["per_segment"]) == 3
        assert set(report["skipped"]) == {"rv01", "rs01", "flu01"}


class TestFerCommand:
    def test_matches_library(self, mini_dir):
        code, out, _ = run_cli(["fer", "--ref", mini_dir / "ref.jsonl", "--hyp", mini_dir / "hyp.jsonl"])
        assert code == 0
        report = json.loads(out)

        from disfleval.corpus_io import load_hyp
        grid = FrameGrid()
        total = None
        for parsed in load_corpus(mini_dir / "ref.jsonl"):
            seg = ensure_labeled(parsed)
            hyp = normalize_words(load_hyp(mini_dir / "hyp.jsonl")[seg.segment_id])
            res = fer_suite(seg, hyp, grid)
            total = res.summary if total is None else total + res.summary
        expected = rates_from_summary(total)
        assert report["overall"]["nframes"] == expected.summary.nframes
        assert report["overall"]["nframes_e"] == expected.summary.nframes_e
        assert report["overall"]["fer"] == round(expected.fer, 4)
        assert report["overall"]["fer_d"] == round(expected.fer_d, 4)

    def test_ignore_silence_flag_changes_counts(self, mini_dir):
        base_args = ["fer", "--ref", mini_dir / "ref.jsonl", "--hyp", mini_dir / "hyp.jsonl"]
        _, out1, _ = run_cli(base_args)
        _, out2, _ = run_cli(base_args + ["--fer-ignore-silence"])
        e1 = json.loads(out1)["overall"]["nframes_e"]
        e2 = json.loads(out2)["overall"]["nframes_e"]
        assert e2 < e1  # deleted words no longer count against silence


class TestScoreCommand:
    def test_oracle_predictions_are_perfect(self, mini_dir):
        code, out, _ = run_cli([
            "score", "--ref", mini_dir / "ref.jsonl", "--pred", mini_dir / "pred_oracle.jsonl",
        ])
        assert code == 0
        report = json.loads(out)
        assert report["macros"] == {
            "unweighted_recall": 1.0, "weighted_recall": 1.0,
            "unweighted_f1": 1.0, "weighted_f1": 1.0,
        }
        for name, scores in report["classes"].items():
            assert scores["recall"] == 1.0, name
            assert scores["f1"] == 1.0, name

    def test_md_format_equivalence(self, mini_dir):
        args = ["score", "--ref", mini_dir / "ref.jsonl", "--pred", mini_dir / "pred_baseline.jsonl"]
        _, json_out, _ = run_cli(args)
        _, md_out, _ = run_cli(args + ["--format", "md"])
        report = json.loads(json_out)
        for cls in ("fp", "pw", "rp", "rv", "rs"):
            recall = report["classes"][cls]["recall"]
            rendered = "n/a" if recall is None else f"{recall:.4f}"
            assert rendered in md_out
        assert f"{report['macros']['unweighted_recall']:.4f}" in md_out

    def test_frame_level_predictions(self, mini_dir, tmp_path):
        # frame-level tracks built from the truth must also score perfectly
        grid = FrameGrid()
        from disfleval import frame_labels
        from disfleval.corpus_io import dump_predictions
        from disfleval.scoring import PredictionTrack
        tracks = []
        for parsed in load_corpus(mini_dir / "ref.jsonl"):
            seg = ensure_labeled(parsed)
            truth = frame_labels(seg, grid)
            tracks.append(PredictionTrack.frame_level(seg.segment_id, truth.entries))
        path = tmp_path / "frames.jsonl"
        dump_predictions(tracks, path)
        code, out, _ = run_cli(["score", "--ref", mini_dir / "ref.jsonl", "--pred", path])
        assert code == 0
        assert json.loads(out)["macros"]["unweighted_recall"] == 1.0

    def test_frame_length_mismatch_is_error(self, mini_dir, tmp_path):
        # two mismatched segments so --jobs 4 really exercises the pool path
        path = tmp_path / "short.jsonl"
        path.write_text(
            json.dumps({"segment_id": "fp01", "frames": [[0, 0, 0, 0, 0]] * 3}) + "\n"
            + json.dumps({"segment_id": "pw01", "frames": [[0, 0, 0, 0, 0]] * 3}) + "\n",
            encoding="utf-8",
        )
        for jobs in ("1", "4"):
            code, _, err = run_cli([
                "score", "--ref", mini_dir / "ref.jsonl", "--pred", path, "--jobs", jobs,
            ])
            assert code == 1
            assert "frames" in err

    def test_baseline_misses_rv_rs(self, mini_dir):
        _, out, _ = run_cli([
            "score", "--ref", mini_dir / "ref.jsonl", "--pred", mini_dir / "pred_baseline.jsonl",
        ])
        report = json.loads(out)
        assert report["classes"]["fp"]["recall"] == 1.0
        assert report["classes"]["pw"]["recall"] == 1.0
        assert report["classes"]["rv"]["recall"] == 0.0
        assert report["classes"]["rs"]["recall"] == 0.0


class TestOverlapCommand:
    def test_partition_sums_to_100(self, mini_dir):
        code, out, _ = run_cli([
            "overlap", "--ref", mini_dir / "ref.jsonl",
            "--pred", f"oracle={mini_dir / 'pred_oracle.jsonl'}",
            "--pred", f"base={mini_dir / 'pred_baseline.jsonl'}",
        ])
        assert code == 0
        report = json.loads(out)
        assert report["systems"] == ["oracle", "base"]
        for diagram in report["diagrams"].values():
            if diagram["total_frames"] == 0:
                continue
            total = sum(diagram["regions"].values()) + diagram["missed_pct"]
            assert total == pytest.approx(100.0, abs=1e-6)
        # the oracle system is perfect, so nothing is missed anywhere
        assert report["diagrams"]["overall"]["missed_pct"] == 0.0

    def test_bad_pred_spec_is_error(self, mini_dir):
        code, _, err = run_cli([
            "overlap", "--ref", mini_dir / "ref.jsonl", "--pred", "nonsense",
        ])
        assert code == 1
        assert "NAME=PATH" in err


class TestLabelCommand:
    def test_output_matches_library(self, mini_dir, tmp_path):
        out_path = tmp_path / "labeled.jsonl"
        code, _, _ = run_cli(["label", "--ref", mini_dir / "ref.jsonl", "--out", out_path])
        assert code == 0
        from_cli = [p.segment for p in load_corpus(out_path)]
        expected = [ensure_labeled(p) for p in load_corpus(mini_dir / "ref.jsonl")]
        assert [s.words for s in from_cli] == [s.words for s in expected]

    def test_stdout_equals_out_file(self, mini_dir, tmp_path):
        out_path = tmp_path / "labeled.jsonl"
        _, stdout, _ = run_cli(["label", "--ref", mini_dir / "ref.jsonl"])
        run_cli(["label", "--ref", mini_dir / "ref.jsonl", "--out", out_path])
        assert stdout == out_path.read_text(encoding="utf-8")

    def test_canon_map_flag(self, mini_dir, tmp_path):
        canon = tmp_path / "canon.tsv"
        canon.write_text("grandmother\tgrandma\n", encoding="utf-8")
        _, stdout, _ = run_cli([
            "label", "--ref", mini_dir / "ref.jsonl", "--canon-map", canon,
        ])
        assert "grandma" in stdout
        assert '"um"' in stdout  # default canonicalizations still applied


class TestBaselineCommand:
    def test_matches_library(self, mini_dir, tmp_path):
        out_path = tmp_path / "pred.jsonl"
        code, _, _ = run_cli(["baseline", "--ref", mini_dir / "ref.jsonl", "--out", out_path])
        assert code == 0
        preds = load_predictions(out_path)
        for parsed in load_corpus(mini_dir / "ref.jsonl"):
            expected = tag_segment(parsed.segment)
            assert preds[parsed.segment.segment_id] == expected

    def test_bundled_baseline_fixture_is_current(self, mini_dir):
        _, stdout, _ = run_cli(["baseline", "--ref", mini_dir / "ref.jsonl"])
        assert stdout == (mini_dir / "pred_baseline.jsonl").read_text(encoding="utf-8")


class TestStatsCommand:
    def test_values(self, mini_dir):
        code, out, _ = run_cli(["stats", "--ref", mini_dir / "ref.jsonl"])
        assert code == 0
        report = json.loads(out)
        assert report["nsegments"] == 6
        assert report["nwords"] == 39
        assert report["classes"]["fp"]["utterance"] == round(2 / 6, 4)
        assert report["classes"]["fp"]["word"] == round(2 / 39, 4)
        assert report["classes"]["rp"]["utterance"] == round(2 / 6, 4)


class TestFuseCommand:
    def test_fused_matrix(self, mini_dir):
        code, out, _ = run_cli([
            "fuse", "--word-feats", mini_dir / "word_feats.jsonl",
            "--frame-feats", mini_dir / "frame_feats.txt",
        ])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "dim=5 nframes=7"
        first = [float(v) for v in lines[1].split()]
        assert first == [1.0, 2.0, 3.0, 0.1, 0.2]
        last = [float(v) for v in lines[-1].split()]
        assert last[:3] == [0.0, 0.0, 0.0]

    def test_duration_flag_controls_frames(self, mini_dir):
        code, out, err = run_cli([
            "fuse", "--word-feats", mini_dir / "word_feats.jsonl",
            "--frame-feats", mini_dir / "frame_feats.txt",
            "--duration", "0.105",
        ])
        # 0.105 s -> 5 frames vs 7 in the frame stream: gap 2, reconciled
        assert code == 0
        assert out.splitlines()[0] == "dim=5 nframes=5"
        assert "truncating" in err

    def test_empty_word_file_needs_dim(self, mini_dir, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        code, _, err = run_cli([
            "fuse", "--word-feats", empty, "--frame-feats", mini_dir / "frame_feats.txt",
        ])
        assert code == 1
        code, out, _ = run_cli([
            "fuse", "--word-feats", empty, "--frame-feats", mini_dir / "frame_feats.txt",
            "--word-dim", "3",
        ])
        assert code == 0
        assert out.splitlines()[0] == "dim=5 nframes=7"


class TestValidateCommand:
    def test_clean_corpus_exit_0(self, mini_dir):
        code, out, _ = run_cli([
            "validate", "--ref", mini_dir / "ref.jsonl",
            "--hyp", mini_dir / "hyp.jsonl", "--pred", mini_dir / "pred_oracle.jsonl",
        ])
        assert code == 0
        assert json.loads(out)["total_errors"] == 0

    def test_out_of_range_word_exit_1(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({
            "segment_id": "oops", "duration_s": 1.0,
            "words": [{"text": "late", "start_s": 0.8, "end_s": 1.7}],
        }) + "\n", encoding="utf-8")
        code, out, err = run_cli(["validate", "--ref", path])
        assert code == 1
        assert "oops" in err and "word 0" in err
        assert json.loads(out)["total_errors"] == 1

    def test_bad_json_exit_1(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{nope\n", encoding="utf-8")
        code, out, _ = run_cli(["validate", "--ref", path])
        assert code == 1

    def test_needs_an_input(self):
        code, _, err = run_cli(["validate"])
        assert code == 1


class TestStrictMode:
    def test_bad_segment_skipped_by_default(self, mini_dir, tmp_path):
        ref = (mini_dir / "ref.jsonl").read_text(encoding="utf-8")
        ref += json.dumps({
            "segment_id": "broken", "duration_s": 1.0,
            "words": [{"text": "x", "start_s": 0.5, "end_s": 2.0}],
        }) + "\n"
        path = tmp_path / "ref.jsonl"
        path.write_text(ref, encoding="utf-8")
        code, out, err = run_cli(["stats", "--ref", path])
        assert code == 0
        assert json.loads(out)["nsegments"] == 6
        assert "broken" in err

    def test_strict_aborts(self, mini_dir, tmp_path):
        ref = (mini_dir / "ref.jsonl").read_text(encoding="utf-8")
        ref += json.dumps({
            "segment_id": "broken", "duration_s": 1.0,
            "words": [{"text": "x", "start_s": 0.5, "end_s": 2.0}],
        }) + "\n"
        path = tmp_path / "ref.jsonl"
        path.write_text(ref, encoding="utf-8")
        code, _, err = run_cli(["stats", "--ref", path, "--strict"])
        assert code == 1
        assert "broken" in err


class TestExitCodes:
    def test_usage_error_is_2(self):
        assert run_cli([])[0] == 2
        assert run_cli(["frobnicate"])[0] == 2
        assert run_cli(["wer", "--ref", "x.jsonl"])[0] == 2  # missing --hyp

    def test_missing_file_is_1(self, tmp_path):
        code, _, err = run_cli(["stats", "--ref", tmp_path / "absent.jsonl"])
        assert code == 1

    def test_help_exits_0(self):
        code, out, _ = run_cli(["--help"])
        assert code == 0


class TestJobsFlag:
    def test_env_default(self, monkeypatch):
        monkeypatch.setenv("DISFLEVAL_JOBS", "5")
        args = build_parser().parse_args(["stats", "--ref", "x"])
        assert args.jobs == 5

    def test_flag_overrides_env(self, monkeypatch):
        monkeypatch.setenv("DISFLEVAL_JOBS", "5")
        args = build_parser().parse_args(["stats", "--ref", "x", "--jobs", "2"])
        assert args.jobs == 2

    def test_jobs_2_matches_jobs_1(self, mini_dir):
        base = ["wer", "--ref", mini_dir / "ref.jsonl", "--hyp", mini_dir / "hyp.jsonl"]
        _, seq, _ = run_cli(base + ["--jobs", "1"])
        _, par, _ = run_cli(base + ["--jobs", "2"])
        assert seq == par
