"""Tiny-encoder end-to-end tests: export on synthetic speakers, then feed the
primary toolkit's ensembles through the file interfaces only."""
import json
import subprocess
import sys
import time

import pytest

from lm_exporter.config import ExporterError, FinetuneSpec
from lm_exporter.data import load_dataset, load_fold_plan, session_text
from lm_exporter.export import (
    export_only,
    finetune_and_export,
    validate_embedding_row,
    validate_prediction_row,
)

TINY = dict(epochs=2, batch_size=4, max_seq_len=64, n_instances=2, tiny=True,
            warmup_steps=2)


def run_cli(args: list[str]) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", *args], capture_output=True, text=True
    )


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """8 synthetic speakers, fold plan from the primary CLI, flat CoNLL-U."""
    root = tmp_path_factory.mktemp("secondary")
    synth = run_cli([
        "cogspeech", "synth", "--n", "4", "--separation", "6.0", "--seed", "3",
        "--out", str(root), "--quiet",
    ])
    assert synth.returncode == 0, synth.stderr

    # flat syntactic annotations: one sentence per utterance, root = first word
    conllu_dir = root / "conllu"
    conllu_dir.mkdir()
    for session_path in sorted((root / "sessions").glob("*.json")):
        payload = json.loads(session_path.read_text())
        blocks = []
        for utterance in payload["utterances"]:
            lines = []
            for i, word in enumerate(utterance["words"]):
                head = 0 if i == 0 else 1
                deprel = "root" if i == 0 else "dep"
                lines.append(
                    "\t".join([
                        str(i + 1), word["text"], word["text"], "NOUN", "_", "_",
                        str(head), deprel, "_", "_",
                    ])
                )
            blocks.append("\n".join(lines))
        (conllu_dir / f"{payload['speaker_id']}.conllu").write_text(
            "\n\n".join(blocks) + "\n"
        )

    # fold plan produced by the primary harness (shared-file interface)
    config = {
        "dataset": {"sessions_dir": "sessions", "labels": "labels.csv"},
        "model": {"kind": "logistic", "logistic": {"l2": 0.05}},
        "cv": {"k": 2, "seed": 6},
        "out_dir": "plan_out",
    }
    (root / "plan.json").write_text(json.dumps(config))
    evaluate = run_cli(["cogspeech", "evaluate", "--config", str(root / "plan.json"),
                        "--quiet"])
    assert evaluate.returncode == 0, evaluate.stderr
    return root


class TestFinetuneSpec:
    def test_requires_epochs_and_batch(self):
        with pytest.raises(TypeError):
            FinetuneSpec(model_id="ernie")

    def test_unknown_pretrained_name_rejected(self):
        with pytest.raises(ExporterError, match="model_name"):
            FinetuneSpec(model_id="x", epochs=1, batch_size=1, model_name="gpt-99")

    def test_tiny_accepts_any_name(self):
        spec = FinetuneSpec(model_id="x", epochs=1, batch_size=1, tiny=True)
        assert spec.tiny

    def test_instance_seed_xor(self):
        spec = FinetuneSpec(model_id="x", epochs=1, batch_size=1, tiny=True,
                            base_seed=0b100)
        assert spec.instance_seed(1) == 0b101

    def test_paper_defaults(self):
        spec = FinetuneSpec(model_id="ernie", epochs=1, batch_size=1)
        assert spec.learning_rate == 2e-5
        assert spec.warmup_steps == 50
        assert spec.weight_decay == 0.1
        assert spec.max_seq_len == 256
        assert spec.n_instances == 50


class TestData:
    def test_session_text_adds_full_stops(self):
        payload = {
            "utterances": [
                {"words": [{"text": "the"}, {"text": "boy"}]},
                {"words": [{"text": "falls"}]},
            ]
        }
        assert session_text(payload) == "the boy . falls ."

    def test_load_dataset(self, workspace):
        dataset = load_dataset(workspace / "sessions", workspace / "labels.csv")
        assert len(dataset.texts) == 8
        assert set(dataset.labels.values()) == {0, 1}

    def test_empty_text_rejected(self, tmp_path):
        payload = {"speaker_id": "s", "label": "CN", "utterances": []}
        (tmp_path / "s.json").write_text(json.dumps(payload))
        with pytest.raises(ExporterError, match="empty text"):
            load_dataset(tmp_path)

    def test_fold_plan_round_trip(self, workspace):
        plan = load_fold_plan(workspace / "plan_out" / "fold_plan.json")
        assert plan.k == 2
        assert len(plan.assignments) == 8


class TestRowValidation:
    def test_prediction_simplex(self):
        with pytest.raises(ExporterError, match="simplex"):
            validate_prediction_row(
                {"speaker_id": "s", "model_id": "m", "instance_id": 0,
                 "fold": 0, "probs": [0.7, 0.7]},
                1,
            )

    def test_embedding_dim_consistency(self):
        dim = validate_embedding_row(
            {"speaker_id": "s", "model_id": "m", "vector": [0.1, 0.2]}, 1, None
        )
        with pytest.raises(ExporterError, match="dimension"):
            validate_embedding_row(
                {"speaker_id": "t", "model_id": "m", "vector": [0.1]}, 2, dim
            )


@pytest.fixture(scope="module")
def exported(workspace):
    """Run the exporter twice (two model ids) on the shared fold plan."""
    dataset = load_dataset(workspace / "sessions", workspace / "labels.csv")
    plan = load_fold_plan(workspace / "plan_out" / "fold_plan.json")
    out = workspace / "exported"
    checkpoints = workspace / "checkpoints"
    started = time.monotonic()
    paths = {}
    for model_id, seed in (("ernie", 0), ("bert", 1000)):
        spec = FinetuneSpec(model_id=model_id, base_seed=seed, **TINY)
        preds, embs = finetune_and_export(
            dataset, spec, plan, out,
            checkpoint_dir=checkpoints / model_id if model_id == "ernie" else None,
        )
        paths[model_id] = (preds, embs)
    elapsed = time.monotonic() - started
    assert elapsed < 600.0, f"exporter took {elapsed:.0f}s, budget is 10 min"
    return workspace, paths


class TestExportedFiles:
    def test_schema_valid_against_primary_reader(self, exported):
        from cogspeech.ensemble.external import (
            read_external_embeddings,
            read_external_predictions,
        )

        workspace, paths = exported
        for model_id, (preds_path, embs_path) in paths.items():
            predictions = read_external_predictions(preds_path.read_bytes())
            assert predictions.model_ids() == [model_id]
            # 2 instances x 8 speakers, every prediction out-of-fold
            assert len(predictions) == 16
            embeddings = read_external_embeddings(embs_path.read_bytes())
            assert len(embeddings) == 8

    def test_probs_on_simplex(self, exported):
        _, paths = exported
        for preds_path, _ in paths.values():
            for line in preds_path.read_text().splitlines():
                probs = json.loads(line)["probs"]
                assert abs(sum(probs) - 1.0) <= 1e-6

    def test_out_of_fold_discipline(self, exported):
        workspace, paths = exported
        plan = load_fold_plan(workspace / "plan_out" / "fold_plan.json")
        for preds_path, _ in paths.values():
            for line in preds_path.read_text().splitlines():
                row = json.loads(line)
                assert row["fold"] == plan.assignments[row["speaker_id"]]

    def test_embedding_dimension_is_hidden_size(self, exported):
        from lm_exporter.modeling import TINY_HIDDEN

        _, paths = exported
        _, embs_path = paths["ernie"]
        row = json.loads(embs_path.read_text().splitlines()[0])
        assert len(row["vector"]) == TINY_HIDDEN


class TestPrimaryEnsembleConsumption:
    def test_model_a_over_cnn_and_exported_bag(self, exported):
        workspace, paths = exported
        preds_path, _ = paths["ernie"]
        config = {
            "dataset": {"sessions_dir": "sessions", "labels": "labels.csv"},
            "model": {
                "kind": "ensemble_a",
                "train": {"epochs": 15, "batch_size": 4, "seed": 5},
                "bag": {"n_instances": 2, "base_seed": 9},
                "external": {"predictions": str(preds_path), "vote_model_id": "ernie"},
            },
            "cv": {"k": 2, "seed": 6},
            "out_dir": "model_a_out",
        }
        (workspace / "model_a.json").write_text(json.dumps(config))
        result = run_cli(["cogspeech", "ensemble", "--config",
                          str(workspace / "model_a.json"), "--quiet"])
        assert result.returncode == 0, result.stderr
        report = (workspace / "model_a_out" / "report.csv").read_text()
        assert report.splitlines()[1].startswith("row,acc")

    def test_model_c_over_all_four_sources(self, exported):
        workspace, paths = exported
        merged = workspace / "exported" / "merged_predictions.jsonl"
        merged.write_bytes(
            paths["ernie"][0].read_bytes() + paths["bert"][0].read_bytes()
        )
        config = {
            "dataset": {
                "sessions_dir": "sessions",
                "labels": "labels.csv",
                "conllu_dir": "conllu",
            },
            "features": {"use_disfluency": True, "use_contours": True},
            "model": {
                "kind": "ensemble_c",
                "external": {"predictions": str(merged)},
                "stacking": {"external_ids": ["ernie", "bert"]},
            },
            "cv": {"k": 2, "seed": 6},
            "out_dir": "model_c_out",
        }
        (workspace / "model_c.json").write_text(json.dumps(config))
        result = run_cli(["cogspeech", "ensemble", "--config",
                          str(workspace / "model_c.json"), "--quiet"])
        assert result.returncode == 0, result.stderr
        manifest = json.loads((workspace / "model_c_out" / "manifest.json").read_text())
        # all four base sources fed the meta model
        names = manifest["feature_names"]
        assert "ttr" in names and "msd" in names


class TestExportOnly:
    def test_deterministic_and_truncation_flagged(self, exported):
        workspace, _ = exported
        dataset = load_dataset(workspace / "sessions", workspace / "labels.csv")
        checkpoint = workspace / "checkpoints" / "ernie" / "fold_0"
        out1 = workspace / "exp1"
        out2 = workspace / "exp2"
        p1 = export_only(checkpoint, dataset, "ernie", out1, max_seq_len=16)
        p2 = export_only(checkpoint, dataset, "ernie", out2, max_seq_len=16)
        assert p1.read_bytes() == p2.read_bytes()
        meta = json.loads((out1 / "ernie_export_meta.json").read_text())
        assert meta["truncated_speakers"]  # 16 tokens clips every session

    def test_missing_checkpoint(self, exported, tmp_path):
        workspace, _ = exported
        dataset = load_dataset(workspace / "sessions", workspace / "labels.csv")
        with pytest.raises(ExporterError, match="checkpoint"):
            export_only(tmp_path / "nope", dataset, "m", tmp_path)
