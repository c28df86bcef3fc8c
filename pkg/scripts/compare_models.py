#!/usr/bin/env python3
"""Compare the CNN against the aggregate logistic baseline on one synthetic
dataset, printing a small Table-2-style summary to stdout.

Usage: python scripts/compare_models.py --separation 2.0
"""
import argparse
import json
import sys
import tempfile
from pathlib import Path

from cogspeech.evalharness.experiment import load_experiment_config, run_experiment
from cogspeech.evalharness.synth import synth_fixture
from cogspeech.ingest.asr import session_to_json_bytes
from cogspeech.ingest.types import INT_TO_LABEL


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--separation", type=float, default=2.0)
    parser.add_argument("--n-per-class", type=int, default=40)
    parser.add_argument("--epochs", type=int, default=150)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    root = Path(tempfile.mkdtemp(prefix="compare_"))
    (root / "sessions").mkdir()
    sessions = synth_fixture(args.n_per_class, args.separation, seed=args.seed)
    for s in sessions:
        (root / "sessions" / f"{s.speaker_id}.json").write_bytes(session_to_json_bytes(s))
    labels = ["speaker_id,label"] + [
        f"{s.speaker_id},{INT_TO_LABEL[s.label]}" for s in sessions
    ]
    (root / "labels.csv").write_text("\n".join(labels) + "\n")

    models = {
        "cnn": {"kind": "cnn", "train": {"epochs": args.epochs, "seed": 100}},
        "logistic": {"kind": "logistic", "logistic": {"l2": 0.01}},
    }
    print("model,acc,precision_cn,precision_ad,recall_cn,recall_ad,f1_cn,f1_ad")
    for name, model in models.items():
        config = {
            "dataset": {"sessions_dir": "sessions", "labels": "labels.csv"},
            "model": model,
            "cv": {"k": 5, "seed": 13},
        }
        (root / "exp.json").write_text(json.dumps(config))
        report, _ = run_experiment(load_experiment_config(root / "exp.json"))
        cells = ",".join(f"{v:.4f}" for v in report.mean.values())
        print(f"{name},{cells}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
