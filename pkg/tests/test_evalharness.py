import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogspeech.errors import ParseError, ValidationError
from cogspeech.disfluency import PauseConfig, session_vectors
from cogspeech.evalharness.experiment import (
    apply_overrides,
    fit_fold_scaler,
    load_experiment_config,
    parse_experiment_config,
    run_experiment,
)
from cogspeech.evalharness.folds import (
    fold_plan_from_json,
    fold_plan_to_json,
    make_folds,
)
from cogspeech.evalharness.metrics import (
    FoldMetrics,
    aggregate,
    compute_metrics,
    parse_report_csv,
    render_report,
)
from cogspeech.evalharness.synth import synth_fixture
from cogspeech.ingest.asr import session_to_json_bytes
from cogspeech.ingest.cmudict import EMPTY_LEXICON
from cogspeech.ingest.types import INT_TO_LABEL


class TestMakeFolds:
    def test_exact_stratification(self):
        labels = {f"cn{i}": 0 for i in range(10)} | {f"ad{i}": 1 for i in range(10)}
        plan = make_folds(labels, k=5, seed=1)
        for fold in range(5):
            members = plan.speakers_in(fold)
            assert sum(1 for s in members if labels[s] == 0) == 2
            assert sum(1 for s in members if labels[s] == 1) == 2

    def test_published_cohort_split(self):
        labels = {f"ad{i}": 1 for i in range(87)} | {f"cn{i}": 0 for i in range(79)}
        plan = make_folds(labels, k=5, seed=7)
        ad_counts = []
        cn_counts = []
        for fold in range(5):
            members = plan.speakers_in(fold)
            ad_counts.append(sum(1 for s in members if labels[s] == 1))
            cn_counts.append(sum(1 for s in members if labels[s] == 0))
        assert set(ad_counts) <= {17, 18}
        assert set(cn_counts) <= {15, 16}
        assert sum(ad_counts) == 87
        assert sum(cn_counts) == 79

    def test_same_seed_same_plan(self):
        labels = {f"s{i}": i % 2 for i in range(20)}
        assert make_folds(labels, 5, 3).assignments == make_folds(labels, 5, 3).assignments

    def test_small_class_rejected(self):
        labels = {"a": 0, "b": 0, "c": 1}
        with pytest.raises(ValidationError, match="fewer than k"):
            make_folds(labels, k=2, seed=0)

    @settings(max_examples=100)
    @given(
        n_cn=st.integers(min_value=5, max_value=60),
        n_ad=st.integers(min_value=5, max_value=60),
        seed=st.integers(min_value=0, max_value=1000),
    )
    def test_stratification_within_one(self, n_cn, n_ad, seed):
        labels = {f"cn{i}": 0 for i in range(n_cn)} | {f"ad{i}": 1 for i in range(n_ad)}
        plan = make_folds(labels, k=5, seed=seed)
        for cls, total in ((0, n_cn), (1, n_ad)):
            counts = [
                sum(1 for s in plan.speakers_in(f) if labels[s] == cls)
                for f in range(5)
            ]
            assert max(counts) - min(counts) <= 1
            assert sum(counts) == total

    def test_plan_json_round_trip(self):
        labels = {f"s{i}": i % 2 for i in range(20)}
        plan = make_folds(labels, 5, 3)
        again = fold_plan_from_json(fold_plan_to_json(plan))
        assert again.k == plan.k
        assert dict(again.assignments) == dict(plan.assignments)


class TestComputeMetrics:
    def test_perfect(self):
        pred = {"a": 0, "b": 1}
        metrics = compute_metrics(pred, pred)
        assert metrics.values() == [1.0] * 7

    def test_hand_confusion_matrix(self):
        # TP_AD=8, FN_AD=2, FP_AD=3, TN_AD=7
        actual = {}
        pred = {}
        idx = 0
        for _ in range(8):
            actual[f"s{idx}"] = 1; pred[f"s{idx}"] = 1; idx += 1
        for _ in range(2):
            actual[f"s{idx}"] = 1; pred[f"s{idx}"] = 0; idx += 1
        for _ in range(3):
            actual[f"s{idx}"] = 0; pred[f"s{idx}"] = 1; idx += 1
        for _ in range(7):
            actual[f"s{idx}"] = 0; pred[f"s{idx}"] = 0; idx += 1
        m = compute_metrics(pred, actual)
        assert m.acc == pytest.approx(0.75)
        assert m.precision_ad == pytest.approx(8 / 11)
        assert m.recall_ad == pytest.approx(0.8)
        assert m.f1_ad == pytest.approx(2 * (8 / 11) * 0.8 / (8 / 11 + 0.8))
        assert m.precision_cn == pytest.approx(7 / 9)
        assert m.recall_cn == pytest.approx(0.7)

    def test_degenerate_all_cn_flags(self):
        actual = {"a": 1, "b": 0}
        pred = {"a": 0, "b": 0}
        m = compute_metrics(pred, actual)
        assert m.recall_ad == 0.0
        assert m.precision_ad == 0.0
        assert "precision_ad" in m.zero_division_flags

    def test_speaker_mismatch_rejected(self):
        with pytest.raises(ValidationError, match="differ"):
            compute_metrics({"a": 0}, {"b": 0})

    @settings(max_examples=100)
    @given(
        rows=st.lists(
            st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=2, max_size=40
        )
    )
    def test_accuracy_identities(self, rows):
        actual = {f"s{i}": a for i, (a, _) in enumerate(rows)}
        pred = {f"s{i}": p for i, (_, p) in enumerate(rows)}
        m = compute_metrics(pred, actual)
        n = len(rows)
        n_cn = sum(1 for a, _ in rows if a == 0)
        n_ad = n - n_cn
        # accuracy equals support-weighted recall
        assert m.acc == pytest.approx((m.recall_cn * n_cn + m.recall_ad * n_ad) / n)
        # micro-averaged precision equals accuracy in the exhaustive 2-class case
        tp_cn = sum(1 for a, p in rows if a == 0 and p == 0)
        tp_ad = sum(1 for a, p in rows if a == 1 and p == 1)
        assert m.acc == pytest.approx((tp_cn + tp_ad) / n)

    @settings(max_examples=50)
    @given(
        rows=st.lists(
            st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=2, max_size=20
        ),
        seed=st.integers(0, 100),
    )
    def test_speaker_relabeling_invariance(self, rows, seed):
        rng = np.random.default_rng(seed)
        names = [f"s{i}" for i in range(len(rows))]
        renamed = [f"x{int(v)}_{i}" for i, v in enumerate(rng.permutation(len(rows)))]
        actual1 = dict(zip(names, (a for a, _ in rows)))
        pred1 = dict(zip(names, (p for _, p in rows)))
        actual2 = dict(zip(renamed, (a for a, _ in rows)))
        pred2 = dict(zip(renamed, (p for _, p in rows)))
        assert compute_metrics(pred1, actual1).values() == compute_metrics(pred2, actual2).values()


class TestRenderReport:
    def sample_report(self):
        folds = [
            FoldMetrics(0.8, 0.75, 0.85, 0.7, 0.9, 0.72, 0.87),
            FoldMetrics(0.86, 0.8, 0.9, 0.8, 0.9, 0.8, 0.9),
        ]
        return aggregate(folds)

    def test_markdown_six_decimals(self):
        report = self.sample_report()
        md = render_report(report, "markdown").decode()
        assert "0.830000" in md  # mean accuracy row

    def test_csv_round_trip_bytes(self):
        report = self.sample_report()
        payload = render_report(report, "csv")
        again = parse_report_csv(payload)
        assert render_report(again, "csv") == payload

    def test_column_order(self):
        header = render_report(self.sample_report(), "csv").decode().splitlines()[1]
        assert header == "row,acc,precision_cn,precision_ad,recall_cn,recall_ad,f1_cn,f1_ad"

    def test_bad_preamble_rejected(self):
        with pytest.raises(ParseError):
            parse_report_csv(b"not,a,report\n")


class TestSynthFixture:
    def test_deterministic(self):
        a = synth_fixture(5, 1.0, seed=3)
        b = synth_fixture(5, 1.0, seed=3)
        assert [session_to_json_bytes(s) for s in a] == [session_to_json_bytes(s) for s in b]

    def test_balanced_labels(self):
        sessions = synth_fixture(7, 1.0, seed=0)
        assert sum(1 for s in sessions if s.label == 0) == 7
        assert sum(1 for s in sessions if s.label == 1) == 7

    def test_sessions_valid_and_parseable(self):
        from cogspeech.ingest.asr import parse_asr_session

        for s in synth_fixture(3, 2.0, seed=1):
            assert parse_asr_session(session_to_json_bytes(s)) == s

    def test_published_rate_ordering_reproduced(self):
        sessions = synth_fixture(60, 1.0, seed=5)
        spm = {0: [], 1: []}
        conf = {0: [], 1: []}
        for s in sessions:
            vecs = session_vectors(s, EMPTY_LEXICON, PauseConfig())
            spm[s.label].append(np.mean([v.syllables_per_minute for v in vecs]))
            conf[s.label].append(np.mean([v.mean_confidence for v in vecs]))
        assert np.mean(spm[0]) > np.mean(spm[1])   # controls speak faster
        assert np.mean(conf[0]) > np.mean(conf[1])  # controls score higher

    def test_huge_separation_trivially_separable(self):
        import tempfile

        root = write_synth_tree(Path(tempfile.mkdtemp()), n=20, separation=10.0, seed=4)
        config = quick_config(root)
        config["model"] = {"kind": "logistic", "logistic": {"l2": 0.01}}
        config["cv"] = {"k": 5, "seed": 2}
        (root / "exp.json").write_text(json.dumps(config))
        report, _ = run_experiment(load_experiment_config(root / "exp.json"))
        assert report.mean.acc >= 0.99

    def test_separation_zero_classes_identical_in_distribution(self):
        sessions = synth_fixture(40, 0.0, seed=9)
        msd = {0: [], 1: []}
        for s in sessions:
            vecs = session_vectors(s, EMPTY_LEXICON, PauseConfig())
            msd[s.label].append(np.mean([v.mean_syllable_duration for v in vecs]))
        # class gap far below a meaningful signal
        assert abs(np.mean(msd[0]) - np.mean(msd[1])) < 0.02


class TestScalerDiscipline:
    def test_training_fold_statistics_ignore_test_sentinel(self):
        rng = np.random.default_rng(0)
        features = {f"s{i}": rng.normal(size=(4, 3)) for i in range(10)}
        train = [f"s{i}" for i in range(8)]
        baseline = fit_fold_scaler(features, train)
        # plant an absurd sentinel in a held-out speaker
        features["s9"] = features["s9"] + 1e9
        sentinel = fit_fold_scaler(features, train)
        assert np.array_equal(baseline.mean, sentinel.mean)
        assert np.array_equal(baseline.sd, sentinel.sd)


def write_synth_tree(tmp_path: Path, n=6, separation=8.0, seed=1) -> Path:
    sessions = synth_fixture(n, separation, seed=seed)
    sessions_dir = tmp_path / "sessions"
    sessions_dir.mkdir(parents=True, exist_ok=True)
    for s in sessions:
        (sessions_dir / f"{s.speaker_id}.json").write_bytes(session_to_json_bytes(s))
    labels = ["speaker_id,label"] + [f"{s.speaker_id},{INT_TO_LABEL[s.label]}" for s in sessions]
    (tmp_path / "labels.csv").write_text("\n".join(labels) + "\n")
    return tmp_path


def quick_config(tmp_path: Path, out_name="out", epochs=3, k=3) -> dict:
    return {
        "dataset": {"sessions_dir": "sessions", "labels": "labels.csv"},
        "features": {"use_disfluency": True, "use_contours": False},
        "model": {
            "kind": "cnn",
            "train": {"epochs": epochs, "batch_size": 4, "seed": 5},
            "bag": {"n_instances": 1, "base_seed": 4},
        },
        "cv": {"k": k, "seed": 2},
        "out_dir": out_name,
    }


class TestExperimentConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError, match="unknown key"):
            parse_experiment_config({"dataset": {"sessions_dir": "x"},
                                     "model": {"kind": "cnn"}, "bogus": 1})

    def test_unknown_nested_key_rejected(self):
        cfg = {"dataset": {"sessions_dir": "x", "fancy": True}, "model": {"kind": "cnn"}}
        with pytest.raises(ValidationError, match="dataset"):
            parse_experiment_config(cfg)

    def test_unknown_model_kind(self):
        with pytest.raises(ValidationError, match="model.kind"):
            parse_experiment_config({"dataset": {"sessions_dir": "x"},
                                     "model": {"kind": "transformer"}})

    def test_unknown_tie_break_rejected(self):
        with pytest.raises(ValidationError, match="tie_break"):
            parse_experiment_config({"dataset": {"sessions_dir": "x"},
                                     "model": {"kind": "cnn", "tie_break": "coin_flip"}})

    def test_overrides_dotted_paths(self):
        base = {"model": {"train": {"epochs": 3}}}
        out = apply_overrides(base, ["model.train.epochs=50", "cv.seed=9"])
        assert out["model"]["train"]["epochs"] == 50
        assert out["cv"]["seed"] == 9

    def test_override_bad_shape(self):
        with pytest.raises(ValidationError, match="key=value"):
            apply_overrides({}, ["no-equals-sign"])

    def test_load_resolves_relative_paths(self, tmp_path):
        write_synth_tree(tmp_path)
        (tmp_path / "exp.json").write_text(json.dumps(quick_config(tmp_path)))
        cfg = load_experiment_config(tmp_path / "exp.json")
        assert Path(cfg.dataset.sessions_dir).is_absolute()
        assert Path(cfg.dataset.sessions_dir).is_dir()

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ValidationError, match="exp.json"):
            load_experiment_config(tmp_path / "exp.json")


class TestRunExperiment:
    def test_separable_quick_run(self, tmp_path):
        write_synth_tree(tmp_path, n=6, separation=8.0)
        (tmp_path / "exp.json").write_text(json.dumps(quick_config(tmp_path, epochs=40)))
        cfg = load_experiment_config(tmp_path / "exp.json")
        report, manifest = run_experiment(cfg)
        assert report.mean.acc >= 0.8
        out = tmp_path / "out"
        for name in ("report.csv", "report.md", "manifest.json", "fold_plan.json",
                     "predictions.jsonl"):
            assert (out / name).is_file()

    def test_byte_identical_reruns(self, tmp_path):
        write_synth_tree(tmp_path)
        config = quick_config(tmp_path)
        (tmp_path / "exp.json").write_text(json.dumps(config))
        cfg = load_experiment_config(tmp_path / "exp.json")
        run_experiment(cfg)
        first = {
            name: (tmp_path / "out" / name).read_bytes()
            for name in ("report.csv", "report.md", "manifest.json", "fold_plan.json",
                         "predictions.jsonl")
        }
        run_experiment(cfg)
        second = {
            name: (tmp_path / "out" / name).read_bytes() for name in first
        }
        assert first == second

    def test_logistic_kind(self, tmp_path):
        write_synth_tree(tmp_path, n=6, separation=8.0)
        config = quick_config(tmp_path)
        config["model"] = {"kind": "logistic", "logistic": {"l2": 0.05}}
        (tmp_path / "exp.json").write_text(json.dumps(config))
        report, _ = run_experiment(load_experiment_config(tmp_path / "exp.json"))
        assert report.mean.acc >= 0.9

    def test_manifest_has_fingerprint_and_hash(self, tmp_path):
        write_synth_tree(tmp_path)
        (tmp_path / "exp.json").write_text(json.dumps(quick_config(tmp_path)))
        _, manifest = run_experiment(load_experiment_config(tmp_path / "exp.json"))
        assert len(manifest["dataset_fingerprint"]) == 64
        assert len(manifest["config_hash"]) == 64
        assert manifest["cv"] == {"k": 3, "seed": 2}
