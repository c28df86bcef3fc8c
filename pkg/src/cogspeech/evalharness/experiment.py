"""Cross-validated experiments: config loading, per-fold training with
training-fold-only standardization, metric aggregation, and run manifests."""
from __future__ import annotations

import functools
import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import cogspeech
from cogspeech.errors import ValidationError
from cogspeech.contours.contour import FeatureContour, WindowConfig, concat_contours, contour
from cogspeech.contours.registry import MeasureRegistry, default_registry, registry_from_json
from cogspeech.disfluency import CSV_COLUMNS, PauseConfig, session_vectors
from cogspeech.ensemble.bagging import train_bag
from cogspeech.ensemble.external import (
    ExternalPredictions,
    embeddings_by_speaker,
    predictions_to_jsonl,
    read_external_embeddings,
    read_external_predictions,
)
from cogspeech.ensemble.stacking import (
    Scaler,
    stack_fit,
    stack_meta_cv,
    audit_out_of_fold,
)
from cogspeech.ensemble.types import BagSpec, PredictionVector
from cogspeech.ensemble.voting import majority_vote, model_a_predict
from cogspeech.evalharness.folds import fold_plan_to_json, make_folds
from cogspeech.evalharness.metrics import (
    FoldMetrics,
    aggregate,
    compute_metrics,
    render_report,
)
from cogspeech.ingest.asr import parse_asr_session, session_to_json_bytes
from cogspeech.ingest.cmudict import EMPTY_LEXICON, load_syllable_lexicon
from cogspeech.ingest.conllu import parse_conllu
from cogspeech.ingest.tables import load_labels_csv
from cogspeech.ingest.types import SessionRecord
from cogspeech.nn.cnn import CnnSpec, TrainConfig, cnn_fit, cnn_predict
from cogspeech.nn.fusion import FusionSpec, fusion_fit, fusion_predict
from cogspeech.nn.logistic import logistic_fit, logistic_predict

log = logging.getLogger("cogspeech")

MODEL_KINDS = ("cnn", "logistic", "ensemble_a", "ensemble_b", "ensemble_c")


# -- configuration ----------------------------------------------------------

@dataclass(frozen=True)
class DatasetConfig:
    sessions_dir: str
    labels: str | None = None
    conllu_dir: str | None = None
    registry: str | None = None
    cmudict: str | None = None


@dataclass(frozen=True)
class FeatureConfig:
    use_disfluency: bool = True
    use_contours: bool = False

    def __post_init__(self):
        if not (self.use_disfluency or self.use_contours):
            raise ValidationError("at least one feature family must be enabled")


@dataclass(frozen=True)
class CvConfig:
    k: int = 5
    seed: int = 0


@dataclass(frozen=True)
class ExternalConfig:
    predictions: str | None = None
    embeddings: str | None = None
    vote_model_id: str = "ernie"
    embed_model_id: str = "ernie"


@dataclass(frozen=True)
class StackingConfig:
    lr_l2: float = 0.01
    meta_l2: float = 0.01
    external_ids: tuple[str, ...] = ("ernie", "bert")


TIE_BREAK_RULES = ("counts_mean_cn",)  # counts, then mean probability, then CN


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    cnn: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    bag: dict = field(default_factory=dict)
    logistic: dict = field(default_factory=dict)
    fusion: dict = field(default_factory=dict)
    external: ExternalConfig = field(default_factory=ExternalConfig)
    stacking: StackingConfig = field(default_factory=StackingConfig)
    tie_break: str = "counts_mean_cn"

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValidationError(f"model.kind {self.kind!r} not one of {MODEL_KINDS}")
        if self.tie_break not in TIE_BREAK_RULES:
            raise ValidationError(
                f"model.tie_break {self.tie_break!r} not one of {TIE_BREAK_RULES}"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig
    model: ModelConfig
    features: FeatureConfig = field(default_factory=FeatureConfig)
    cv: CvConfig = field(default_factory=CvConfig)
    out_dir: str | None = None


def _strict(obj: dict, where: str, allowed: set[str]) -> None:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown key(s) {sorted(unknown)}")


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply dotted-path key=value overrides; values parse as JSON or string."""
    out = json.loads(json.dumps(config))  # deep copy
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = dotted.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return out


def parse_experiment_config(obj: dict) -> ExperimentConfig:
    _strict(obj, "config", {"dataset", "features", "model", "cv", "out_dir"})
    if "dataset" not in obj or "model" not in obj:
        raise ValidationError("config: dataset and model sections are required")

    ds = obj["dataset"]
    _strict(ds, "dataset", {"sessions_dir", "labels", "conllu_dir", "registry", "cmudict"})
    if "sessions_dir" not in ds:
        raise ValidationError("dataset.sessions_dir is required")
    dataset = DatasetConfig(**ds)

    feats = obj.get("features", {})
    _strict(feats, "features", {"use_disfluency", "use_contours"})
    features = FeatureConfig(**feats)

    cv = obj.get("cv", {})
    _strict(cv, "cv", {"k", "seed"})
    cv_cfg = CvConfig(**cv)

    mo = obj["model"]
    _strict(mo, "model", {"kind", "cnn", "train", "bag", "logistic", "fusion",
                          "external", "stacking", "tie_break"})
    if "kind" not in mo:
        raise ValidationError("model.kind is required")
    _strict(mo.get("cnn", {}), "model.cnn",
            {"filter_heights", "filters_per_height", "dropout_rate"})
    _strict(mo.get("train", {}), "model.train",
            {"learning_rate", "epochs", "batch_size", "l2", "seed"})
    _strict(mo.get("bag", {}), "model.bag", {"n_instances", "base_seed"})
    _strict(mo.get("logistic", {}), "model.logistic", {"l2"})
    _strict(mo.get("fusion", {}), "model.fusion", {"hidden_units"})
    ext = mo.get("external", {})
    _strict(ext, "model.external",
            {"predictions", "embeddings", "vote_model_id", "embed_model_id"})
    stk = mo.get("stacking", {})
    _strict(stk, "model.stacking", {"lr_l2", "meta_l2", "external_ids"})
    if "external_ids" in stk:
        stk = dict(stk, external_ids=tuple(stk["external_ids"]))
    model = ModelConfig(
        kind=mo["kind"],
        cnn=dict(mo.get("cnn", {})),
        train=dict(mo.get("train", {})),
        bag=dict(mo.get("bag", {})),
        logistic=dict(mo.get("logistic", {})),
        fusion=dict(mo.get("fusion", {})),
        external=ExternalConfig(**ext),
        stacking=StackingConfig(**stk),
        tie_break=mo.get("tie_break", "counts_mean_cn"),
    )
    return ExperimentConfig(
        dataset=dataset,
        features=features,
        model=model,
        cv=cv_cfg,
        out_dir=obj.get("out_dir"),
    )


def load_experiment_config(path: Path, overrides: list[str] | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    obj = json.loads(path.read_text())
    if overrides:
        obj = apply_overrides(obj, overrides)
    cfg = parse_experiment_config(obj)
    # resource paths resolve relative to the config file's directory
    base = path.parent
    ds = cfg.dataset

    def resolve(p):
        return None if p is None else str((base / p) if not os.path.isabs(p) else Path(p))

    dataset = DatasetConfig(
        sessions_dir=resolve(ds.sessions_dir),
        labels=resolve(ds.labels),
        conllu_dir=resolve(ds.conllu_dir),
        registry=resolve(ds.registry),
        cmudict=resolve(ds.cmudict),
    )
    ext = cfg.model.external
    external = ExternalConfig(
        predictions=resolve(ext.predictions),
        embeddings=resolve(ext.embeddings),
        vote_model_id=ext.vote_model_id,
        embed_model_id=ext.embed_model_id,
    )
    model = ModelConfig(
        kind=cfg.model.kind, cnn=cfg.model.cnn, train=cfg.model.train,
        bag=cfg.model.bag, logistic=cfg.model.logistic, fusion=cfg.model.fusion,
        external=external, stacking=cfg.model.stacking, tie_break=cfg.model.tie_break,
    )
    out_dir = cfg.out_dir
    if out_dir is not None and not os.path.isabs(out_dir):
        out_dir = str(base / out_dir)
    return ExperimentConfig(dataset=dataset, features=cfg.features, model=model,
                            cv=cfg.cv, out_dir=out_dir)


# -- dataset and features ---------------------------------------------------

@dataclass
class LoadedDataset:
    sessions: dict[str, SessionRecord]
    labels: dict[str, int]
    features: dict[str, np.ndarray]
    feature_names: tuple[str, ...]
    fingerprint: str


def disfluency_contour(session: SessionRecord, lexicon, pause_cfg: PauseConfig) -> FeatureContour:
    """Per-utterance disfluency vectors as a FeatureContour block."""
    rows = tuple(tuple(v.to_row()) for v in session_vectors(session, lexicon, pause_cfg))
    return FeatureContour(
        speaker_id=session.speaker_id, measure_names=CSV_COLUMNS, rows=rows
    )


def build_speaker_features(
    session: SessionRecord,
    conllu_sentences,
    registry: MeasureRegistry | None,
    lexicon,
    pause_cfg: PauseConfig,
    features: FeatureConfig,
) -> FeatureContour:
    """Complexity block (from CoNLL-U) then disfluency block, per utterance."""
    blocks = []
    if features.use_contours:
        if conllu_sentences is None:
            raise ValidationError(
                f"speaker {session.speaker_id!r}: contours requested but no CoNLL-U"
            )
        blocks.append(
            contour(conllu_sentences, registry, WindowConfig(ws=1), session.speaker_id)
        )
    if features.use_disfluency:
        blocks.append(disfluency_contour(session, lexicon, pause_cfg))
    merged = blocks[0]
    for block in blocks[1:]:
        merged = concat_contours(merged, block)
    return merged


def load_dataset(cfg: ExperimentConfig) -> LoadedDataset:
    sessions_dir = Path(cfg.dataset.sessions_dir)
    if not sessions_dir.is_dir():
        raise ValidationError(f"sessions directory not found: {sessions_dir}")
    sessions: dict[str, SessionRecord] = {}
    hasher = hashlib.sha256()
    for path in sorted(sessions_dir.glob("*.json")):
        payload = path.read_bytes()
        record = parse_asr_session(payload)
        if record.speaker_id in sessions:
            raise ValidationError(f"duplicate speaker {record.speaker_id!r}")
        sessions[record.speaker_id] = record
        hasher.update(record.speaker_id.encode())
        hasher.update(hashlib.sha256(session_to_json_bytes(record)).digest())
    if not sessions:
        raise ValidationError(f"no session files in {sessions_dir}")

    if cfg.dataset.labels is not None:
        labels = load_labels_csv(Path(cfg.dataset.labels).read_bytes())
    else:
        labels = {s: r.label for s, r in sessions.items() if r.label is not None}
    missing = sorted(set(sessions) - set(labels))
    if missing:
        raise ValidationError(f"no labels for speakers {missing}")
    labels = {s: labels[s] for s in sorted(sessions)}
    hasher.update(json.dumps(labels, sort_keys=True).encode())

    lexicon = EMPTY_LEXICON
    if cfg.dataset.cmudict is not None:
        lexicon = load_syllable_lexicon(Path(cfg.dataset.cmudict).read_bytes())

    registry = None
    if cfg.features.use_contours:
        if cfg.dataset.registry is not None:
            registry_path = Path(cfg.dataset.registry)
            registry = registry_from_json(registry_path.read_bytes(), registry_path.parent)
        else:
            registry = default_registry()

    pause_cfg = PauseConfig()
    features: dict[str, np.ndarray] = {}
    names: tuple[str, ...] | None = None
    for speaker, session in sessions.items():
        conllu_sents = None
        if cfg.features.use_contours:
            conllu_path = Path(cfg.dataset.conllu_dir or "") / f"{speaker}.conllu"
            if not conllu_path.is_file():
                raise ValidationError(f"no CoNLL-U transcript for speaker {speaker!r}")
            conllu_sents = parse_conllu(conllu_path.read_bytes())
        block = build_speaker_features(
            session, conllu_sents, registry, lexicon, pause_cfg, cfg.features
        )
        if names is None:
            names = block.measure_names
        elif names != block.measure_names:
            raise ValidationError(f"feature columns differ for speaker {speaker!r}")
        features[speaker] = block.to_array()
    return LoadedDataset(
        sessions=sessions,
        labels=labels,
        features=features,
        feature_names=names,
        fingerprint=hasher.hexdigest(),
    )


def fit_fold_scaler(features: dict[str, np.ndarray], train_speakers: list[str]) -> Scaler:
    """Feature standardization statistics from training-fold rows only."""
    rows = np.vstack([features[s] for s in train_speakers])
    return Scaler.fit(rows)


# -- per-fold model runners --------------------------------------------------

def _cnn_spec(cfg: ExperimentConfig, input_dim: int) -> CnnSpec:
    params = cfg.model.cnn
    return CnnSpec(
        input_dim=input_dim,
        filter_heights=tuple(params.get("filter_heights", (2, 3, 4))),
        filters_per_height=params.get("filters_per_height", 8),
        dropout_rate=params.get("dropout_rate", 0.5),
    )


def _train_config(cfg: ExperimentConfig, seed: int) -> TrainConfig:
    params = cfg.model.train
    return TrainConfig(
        learning_rate=params.get("learning_rate", 1e-3),
        epochs=params.get("epochs", 50),
        batch_size=params.get("batch_size", 16),
        l2=params.get("l2", 1e-4),
        seed=seed,
    )


def _bag_spec(cfg: ExperimentConfig, fold: int) -> BagSpec:
    params = cfg.model.bag
    # nearby integer seeds feed SeedSequence, which decorrelates the streams
    return BagSpec(
        n_instances=params.get("n_instances", 1),
        base_seed=params.get("base_seed", 0) + fold,
    )


def _fit_cnn_instance(seed, samples, spec, cfg: ExperimentConfig):
    return cnn_fit(samples, spec, _train_config(cfg, seed))[0]


def _fit_fusion_instance(seed, samples, spec, cfg: ExperimentConfig):
    return fusion_fit(samples, spec, _train_config(cfg, seed))[0]


def _vote_share(votes: list[PredictionVector]) -> tuple[float, float]:
    ad = sum(v.hard_label for v in votes)
    return (1.0 - ad / len(votes), ad / len(votes))


def _run_cnn_fold(cfg, data, plan, fold, jobs) -> dict[str, tuple[int, tuple[float, float]]]:
    train = plan.train_speakers(fold)
    test = plan.speakers_in(fold)
    scaler = fit_fold_scaler(data.features, train)
    spec = _cnn_spec(cfg, len(data.feature_names))
    samples = [(scaler.transform(data.features[s]), data.labels[s]) for s in train]
    bag = _bag_spec(cfg, fold)
    models = train_bag(
        functools.partial(_fit_cnn_instance, samples=samples, spec=spec, cfg=cfg),
        bag, jobs=jobs,
    )
    out = {}
    for s in test:
        x = scaler.transform(data.features[s])
        votes = [
            PredictionVector(
                speaker_id=s, model_id="cnn", instance_id=i,
                probs=tuple(cnn_predict(model, x)), fold=fold,
            )
            for i, model in enumerate(models)
        ]
        label = majority_vote(votes)
        out[s] = (label, _vote_share(votes) if len(votes) > 1 else votes[0].probs)
    return out


def _aggregate_features(features: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {s: x.mean(axis=0) for s, x in features.items()}


def _run_logistic_fold(cfg, data, plan, fold, jobs) -> dict:
    del jobs
    train = plan.train_speakers(fold)
    test = plan.speakers_in(fold)
    aggregates = _aggregate_features(data.features)
    X = np.array([aggregates[s] for s in train])
    y = np.array([data.labels[s] for s in train])
    scaler = Scaler.fit(X)
    model = logistic_fit(scaler.transform(X), y, l2=cfg.model.logistic.get("l2", 0.01))
    out = {}
    for s in test:
        probs = logistic_predict(model, scaler.transform(aggregates[s][None, :])[0])
        out[s] = (0 if probs[0] >= probs[1] else 1, (float(probs[0]), float(probs[1])))
    return out


def _load_external_predictions(cfg) -> ExternalPredictions:
    path = cfg.model.external.predictions
    if path is None:
        raise ValidationError("model.external.predictions is required for this ensemble")
    return read_external_predictions(Path(path).read_bytes())


def _run_model_a_fold(cfg, data, plan, fold, jobs) -> dict:
    train = plan.train_speakers(fold)
    test = plan.speakers_in(fold)
    scaler = fit_fold_scaler(data.features, train)
    spec = _cnn_spec(cfg, len(data.feature_names))
    samples = [(scaler.transform(data.features[s]), data.labels[s]) for s in train]
    bag = _bag_spec(cfg, fold)
    models = train_bag(
        functools.partial(_fit_cnn_instance, samples=samples, spec=spec, cfg=cfg),
        bag, jobs=jobs,
    )
    cnn_votes = [
        PredictionVector(
            speaker_id=s, model_id="cnn", instance_id=i,
            probs=tuple(cnn_predict(model, scaler.transform(data.features[s]))),
            fold=fold,
        )
        for s in test
        for i, model in enumerate(models)
    ]
    external = _load_external_predictions(cfg)
    vote_model = cfg.model.external.vote_model_id
    ext_votes = []
    for s in test:
        rows = [r for r in external.for_speaker(vote_model, s) if r.fold == fold]
        ext_votes.extend(rows)
    labels = model_a_predict(cnn_votes, ext_votes, test)
    pooled: dict[str, list[PredictionVector]] = {s: [] for s in test}
    for v in cnn_votes + ext_votes:
        pooled[v.speaker_id].append(v)
    return {s: (labels[s], _vote_share(pooled[s])) for s in test}


def _run_model_b_fold(cfg, data, plan, fold, jobs) -> dict:
    path = cfg.model.external.embeddings
    if path is None:
        raise ValidationError("model.external.embeddings is required for ensemble_b")
    embeddings = embeddings_by_speaker(
        read_external_embeddings(Path(path).read_bytes()),
        cfg.model.external.embed_model_id,
    )
    missing = sorted(set(plan.assignments) - set(embeddings))
    if missing:
        raise ValidationError(f"no embeddings for speakers {missing}")
    dims = {v.shape[0] for v in embeddings.values()}
    embed_dim = dims.pop()

    train = plan.train_speakers(fold)
    test = plan.speakers_in(fold)
    scaler = fit_fold_scaler(data.features, train)
    spec = FusionSpec(
        cnn=_cnn_spec(cfg, len(data.feature_names)),
        embed_dim=embed_dim,
        hidden_units=cfg.model.fusion.get("hidden_units", 64),
    )
    samples = [
        (scaler.transform(data.features[s]), embeddings[s], data.labels[s]) for s in train
    ]
    bag = _bag_spec(cfg, fold)
    models = train_bag(
        functools.partial(_fit_fusion_instance, samples=samples, spec=spec, cfg=cfg),
        bag, jobs=jobs,
    )
    out = {}
    for s in test:
        x = scaler.transform(data.features[s])
        votes = [
            PredictionVector(
                speaker_id=s, model_id="fusion", instance_id=i,
                probs=tuple(fusion_predict(model, x, embeddings[s])), fold=fold,
            )
            for i, model in enumerate(models)
        ]
        label = majority_vote(votes)
        out[s] = (label, _vote_share(votes) if len(votes) > 1 else votes[0].probs)
    return out


_FOLD_RUNNERS = {
    "cnn": _run_cnn_fold,
    "logistic": _run_logistic_fold,
    "ensemble_a": _run_model_a_fold,
    "ensemble_b": _run_model_b_fold,
}


def _run_model_c(cfg, data, plan) -> tuple[dict, list[str]]:
    internal: dict[str, dict[str, np.ndarray]] = {}
    if cfg.features.use_contours and cfg.features.use_disfluency:
        # split the concatenated block back into its two families
        n_disfl = len(CSV_COLUMNS)
        internal["lr_comp"] = {
            s: x[:, :-n_disfl].mean(axis=0) for s, x in data.features.items()
        }
        internal["lr_disfl"] = {
            s: x[:, -n_disfl:].mean(axis=0) for s, x in data.features.items()
        }
    elif cfg.features.use_contours:
        internal["lr_comp"] = _aggregate_features(data.features)
    else:
        internal["lr_disfl"] = _aggregate_features(data.features)

    external = _load_external_predictions(cfg)
    stacking = cfg.model.stacking
    meta, artifacts = stack_fit(
        internal_features=internal,
        labels=data.labels,
        plan=plan,
        external_predictions=external,
        external_ids=stacking.external_ids,
        lr_l2=stacking.lr_l2,
        meta_l2=stacking.meta_l2,
    )
    violations = audit_out_of_fold(artifacts)
    if violations:
        raise ValidationError(
            "out-of-fold discipline violated: " + "; ".join(violations[:5])
        )
    predictions = stack_meta_cv(artifacts, data.labels, meta_l2=stacking.meta_l2)
    return predictions, violations


# -- experiment driver -------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, jobs: int = 1):
    """Cross-validate the configured model; returns (report, manifest dict).

    Writes report.csv/report.md/manifest.json/fold_plan.json/predictions.jsonl
    into out_dir when configured. Deterministic for fixed config and seeds.
    """
    data = load_dataset(cfg)
    plan = make_folds(data.labels, k=cfg.cv.k, seed=cfg.cv.seed)

    per_speaker: dict[str, tuple[int, tuple[float, float]]] = {}
    if cfg.model.kind == "ensemble_c":
        predictions, _ = _run_model_c(cfg, data, plan)
        per_speaker.update(predictions)
    else:
        runner = _FOLD_RUNNERS[cfg.model.kind]
        for fold in range(plan.k):
            log.info("fold %d/%d", fold + 1, plan.k)
            per_speaker.update(runner(cfg, data, plan, fold, jobs))

    fold_metrics: list[FoldMetrics] = []
    for fold in range(plan.k):
        members = plan.speakers_in(fold)
        predicted = {s: per_speaker[s][0] for s in members}
        actual = {s: data.labels[s] for s in members}
        fold_metrics.append(compute_metrics(predicted, actual))
    report = aggregate(fold_metrics)

    manifest = _build_manifest(cfg, data, plan, fold_metrics, report)
    if cfg.out_dir is not None:
        _write_outputs(cfg, report, manifest, plan, per_speaker)
    return report, manifest


def _config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "dataset": {
            "sessions_dir": cfg.dataset.sessions_dir,
            "labels": cfg.dataset.labels,
            "conllu_dir": cfg.dataset.conllu_dir,
            "registry": cfg.dataset.registry,
            "cmudict": cfg.dataset.cmudict,
        },
        "features": {
            "use_disfluency": cfg.features.use_disfluency,
            "use_contours": cfg.features.use_contours,
        },
        "model": {
            "kind": cfg.model.kind,
            "cnn": cfg.model.cnn,
            "train": cfg.model.train,
            "bag": cfg.model.bag,
            "logistic": cfg.model.logistic,
            "fusion": cfg.model.fusion,
            "external": {
                "predictions": cfg.model.external.predictions,
                "embeddings": cfg.model.external.embeddings,
                "vote_model_id": cfg.model.external.vote_model_id,
                "embed_model_id": cfg.model.external.embed_model_id,
            },
            "stacking": {
                "lr_l2": cfg.model.stacking.lr_l2,
                "meta_l2": cfg.model.stacking.meta_l2,
                "external_ids": list(cfg.model.stacking.external_ids),
            },
            "tie_break": cfg.model.tie_break,
        },
        "cv": {"k": cfg.cv.k, "seed": cfg.cv.seed},
        "out_dir": cfg.out_dir,
    }


def _build_manifest(cfg, data, plan, fold_metrics, report) -> dict:
    resolved = _config_to_dict(cfg)
    config_hash = hashlib.sha256(
        json.dumps(resolved, sort_keys=True).encode()
    ).hexdigest()
    return {
        "package_version": cogspeech.__version__,
        "config": resolved,
        "config_hash": config_hash,
        "dataset_fingerprint": data.fingerprint,
        "n_speakers": len(data.labels),
        "feature_names": list(data.feature_names),
        "cv": {"k": plan.k, "seed": plan.seed},
        "seeds": {
            "cv": plan.seed,
            "train": cfg.model.train.get("seed", 0),
            "bag": cfg.model.bag.get("base_seed", 0),
        },
        "per_fold": [
            {
                "fold": i,
                "n_test": len(plan.speakers_in(i)),
                "accuracy": round(m.acc, 6),
                "zero_division_flags": list(m.zero_division_flags),
            }
            for i, m in enumerate(fold_metrics)
        ],
        "mean_accuracy": round(report.mean.acc, 6),
        "outputs": [
            "report.csv", "report.md", "fold_plan.json", "predictions.jsonl"
        ],
    }


def write_atomic(path: Path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fp:
            fp.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_outputs(cfg, report, manifest, plan, per_speaker) -> None:
    out_dir = Path(cfg.out_dir)
    write_atomic(out_dir / "report.csv", render_report(report, "csv"))
    write_atomic(out_dir / "report.md", render_report(report, "markdown"))
    write_atomic(
        out_dir / "manifest.json",
        (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode(),
    )
    write_atomic(out_dir / "fold_plan.json", fold_plan_to_json(plan))
    records = [
        PredictionVector(
            speaker_id=s,
            model_id=cfg.model.kind,
            instance_id=0,
            probs=per_speaker[s][1],
            fold=plan.fold_of(s),
        )
        for s in sorted(per_speaker)
    ]
    write_atomic(out_dir / "predictions.jsonl", predictions_to_jsonl(records))
