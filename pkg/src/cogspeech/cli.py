"""Batch command-line interface.

Subcommands: ingest, extract-disfluency, extract-contours, train, ensemble,
evaluate, synth, report. Exit codes: 0 success, 1 validation/usage error,
2 runtime error. Diagnostics go to stderr; data goes to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from cogspeech import __version__
from cogspeech.errors import ToolkitError, ValidationError
from cogspeech.contours.contour import WindowConfig, contour, contour_csv
from cogspeech.contours.registry import default_registry, registry_from_json
from cogspeech.disfluency import PauseConfig, summary_csv, utterance_csv
from cogspeech.ensemble.stacking import Scaler
from cogspeech.evalharness.experiment import (
    _aggregate_features,
    _cnn_spec,
    _train_config,
    load_dataset,
    load_experiment_config,
    run_experiment,
    write_atomic,
)
from cogspeech.evalharness.metrics import parse_report_csv, render_report
from cogspeech.evalharness.synth import synth_fixture
from cogspeech.ingest.asr import parse_asr_session, session_to_json_bytes
from cogspeech.ingest.cmudict import EMPTY_LEXICON, load_syllable_lexicon
from cogspeech.ingest.conllu import parse_conllu
from cogspeech.ingest.types import INT_TO_LABEL
from cogspeech.nn.cnn import cnn_fit
from cogspeech.nn.logistic import logistic_fit
from cogspeech.nn.serialize import save_model

log = logging.getLogger("cogspeech")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="cogspeech", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.add_argument("--jobs", type=int, default=1, help="worker pool size")
        return p

    p = common(sub.add_parser("ingest", help="normalize ASR output to canonical session JSON"))
    p.add_argument("--asr", required=True, help="ASR session JSON file or directory")
    p.add_argument("--segmentation", help="diarization CSV (speaker,begin_ms,end_ms)")
    p.add_argument("--out", help="output directory (stdout for a single file if omitted)")

    p = common(sub.add_parser("extract-disfluency", help="per-utterance disfluency CSVs"))
    p.add_argument("--sessions", required=True, help="directory of canonical session JSON")
    p.add_argument("--cmudict", help="CMU pronouncing dictionary file")
    p.add_argument("--out", required=True, help="output directory")

    p = common(sub.add_parser("extract-contours", help="complexity contour CSV from CoNLL-U"))
    p.add_argument("--conllu", required=True, help="directory of <speaker>.conllu files")
    p.add_argument("--registry", help="measure registry JSON (core measures if omitted)")
    p.add_argument("--ws", type=int, default=1, help="window size in sentences")
    p.add_argument("--smoothing", type=float, default=1.0,
                   help="additive smoothing for n-gram log frequency")
    p.add_argument("--out", required=True, help="output directory")

    p = common(sub.add_parser("train", help="fit one model on the whole dataset"))
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted-path config override")
    p.add_argument("--out", help="output directory (default: config out_dir)")

    for name, help_text in (
        ("ensemble", "cross-validate one of the ensemble architectures"),
        ("evaluate", "cross-validate the configured model and write reports"),
    ):
        p = common(sub.add_parser(name, help=help_text))
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path config override")
        p.add_argument("--seed", type=int, help="override cv.seed")
        p.add_argument("--out", help="override out_dir")

    p = common(sub.add_parser("synth", help="generate a synthetic labeled dataset"))
    p.add_argument("--n", type=int, required=True, help="speakers per class")
    p.add_argument("--separation", type=float, default=1.0,
                   help="class separation multiplier (1.0 = published gaps)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = common(sub.add_parser("report", help="re-render a report CSV"))
    p.add_argument("--in", dest="input", required=True, help="report.csv path")
    p.add_argument("--format", choices=["csv", "markdown"], default="markdown")
    p.add_argument("--out", help="output file (stdout if omitted)")

    return parser


def _cmd_ingest(args) -> int:
    asr_path = Path(args.asr)
    seg_bytes = Path(args.segmentation).read_bytes() if args.segmentation else None
    files = sorted(asr_path.glob("*.json")) if asr_path.is_dir() else [asr_path]
    if not files:
        raise ValidationError(f"no ASR JSON files under {asr_path}")
    if args.out is None and len(files) > 1:
        raise ValidationError("--out is required when ingesting a directory")
    for path in files:
        record = parse_asr_session(path.read_bytes(), seg_bytes)
        payload = session_to_json_bytes(record)
        if args.out is None:
            sys.stdout.buffer.write(payload)
        else:
            write_atomic(Path(args.out) / f"{record.speaker_id}.json", payload)
            log.info("ingested %s (%d utterances)", record.speaker_id, len(record.utterances))
    return 0


def _load_sessions(sessions_dir: str):
    paths = sorted(Path(sessions_dir).glob("*.json"))
    if not paths:
        raise ValidationError(f"no session files in {sessions_dir}")
    return [parse_asr_session(p.read_bytes()) for p in paths]


def _cmd_extract_disfluency(args) -> int:
    sessions = _load_sessions(args.sessions)
    lexicon = (
        load_syllable_lexicon(Path(args.cmudict).read_bytes())
        if args.cmudict else EMPTY_LEXICON
    )
    cfg = PauseConfig()
    out = Path(args.out)
    write_atomic(out / "utterances.csv", utterance_csv(sessions, lexicon, cfg).encode())
    write_atomic(out / "summary.csv", summary_csv(sessions, lexicon, cfg).encode())
    log.info("wrote disfluency CSVs for %d sessions to %s", len(sessions), out)
    return 0


def _cmd_extract_contours(args) -> int:
    conllu_dir = Path(args.conllu)
    paths = sorted(conllu_dir.glob("*.conllu"))
    if not paths:
        raise ValidationError(f"no .conllu files in {conllu_dir}")
    if args.registry:
        registry_path = Path(args.registry)
        registry = registry_from_json(
            registry_path.read_bytes(), registry_path.parent,
            default_smoothing=args.smoothing,
        )
    else:
        registry = default_registry(smoothing=args.smoothing)
    cfg = WindowConfig(ws=args.ws, smoothing=args.smoothing)
    contours = []
    for path in paths:
        sentences = parse_conllu(path.read_bytes())
        contours.append(contour(sentences, registry, cfg, speaker_id=path.stem))
    write_atomic(Path(args.out) / "contours.csv", contour_csv(contours).encode())
    log.info("wrote contours for %d speakers to %s", len(contours), args.out)
    return 0


def _cmd_train(args) -> int:
    cfg = load_experiment_config(Path(args.config), args.set)
    if cfg.model.kind not in ("cnn", "logistic"):
        raise ValidationError("train supports model.kind cnn or logistic")
    out_dir = Path(args.out or cfg.out_dir or ".")
    data = load_dataset(cfg)
    speakers = sorted(data.labels)
    if cfg.model.kind == "cnn":
        import numpy as np

        rows = np.vstack([data.features[s] for s in speakers])
        scaler = Scaler.fit(rows)
        samples = [
            (scaler.transform(data.features[s]), data.labels[s]) for s in speakers
        ]
        spec = _cnn_spec(cfg, len(data.feature_names))
        model, losses = cnn_fit(samples, spec, _train_config(cfg, cfg.model.train.get("seed", 0)))
        log.info("final training loss %.6f", losses[-1])
    else:
        import numpy as np

        aggregates = _aggregate_features(data.features)
        X = np.array([aggregates[s] for s in speakers])
        y = np.array([data.labels[s] for s in speakers])
        scaler = Scaler.fit(X)
        model = logistic_fit(scaler.transform(X), y, l2=cfg.model.logistic.get("l2", 0.01))
    save_model(out_dir / "model.cstk", model)
    write_atomic(
        out_dir / "scaler.json",
        (json.dumps(
            {"mean": scaler.mean.tolist(), "sd": scaler.sd.tolist()},
            indent=2, sort_keys=True,
        ) + "\n").encode(),
    )
    log.info("saved model.cstk and scaler.json to %s", out_dir)
    return 0


def _cmd_evaluate(args, require_ensemble: bool = False) -> int:
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"cv.seed={args.seed}")
    if args.out is not None:
        overrides.append(f"out_dir={args.out}")
    cfg = load_experiment_config(Path(args.config), overrides)
    if require_ensemble and not cfg.model.kind.startswith("ensemble_"):
        raise ValidationError(
            f"ensemble requires model.kind ensemble_a/b/c, got {cfg.model.kind!r}"
        )
    report, _manifest = run_experiment(cfg, jobs=args.jobs)
    log.info("mean accuracy %.4f", report.mean.acc)
    if cfg.out_dir is None:
        sys.stdout.buffer.write(render_report(report, "csv"))
    return 0


def _cmd_synth(args) -> int:
    sessions = synth_fixture(args.n, args.separation, args.seed)
    out = Path(args.out)
    for session in sessions:
        write_atomic(out / "sessions" / f"{session.speaker_id}.json",
                     session_to_json_bytes(session))
    labels = ["speaker_id,label"] + [
        f"{s.speaker_id},{INT_TO_LABEL[s.label]}" for s in sessions
    ]
    write_atomic(out / "labels.csv", ("\n".join(labels) + "\n").encode())
    log.info("wrote %d synthetic sessions to %s", len(sessions), out)
    return 0


def _cmd_report(args) -> int:
    report = parse_report_csv(Path(args.input).read_bytes())
    payload = render_report(report, args.format)
    if args.out is None:
        sys.stdout.buffer.write(payload)
    else:
        write_atomic(Path(args.out), payload)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "extract-disfluency": _cmd_extract_disfluency,
    "extract-contours": _cmd_extract_contours,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "synth": _cmd_synth,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        if args.command == "ensemble":
            return _cmd_evaluate(args, require_ensemble=True)
        return _COMMANDS[args.command](args)
    except (ToolkitError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
