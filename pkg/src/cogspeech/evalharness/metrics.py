"""Accuracy and per-class precision/recall/F1, with fold aggregation and
Table-style rendering (CSV and markdown)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from cogspeech.errors import ParseError, ValidationError

METRIC_COLUMNS = (
    "acc",
    "precision_cn",
    "precision_ad",
    "recall_cn",
    "recall_ad",
    "f1_cn",
    "f1_ad",
)

_CSV_PREAMBLE = "# aggregate: mean and population standard deviation over folds"


@dataclass(frozen=True)
class FoldMetrics:
    acc: float
    precision_cn: float
    precision_ad: float
    recall_cn: float
    recall_ad: float
    f1_cn: float
    f1_ad: float
    zero_division_flags: tuple[str, ...] = ()

    def values(self) -> list[float]:
        return [getattr(self, name) for name in METRIC_COLUMNS]

    def __post_init__(self):
        for name in METRIC_COLUMNS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} = {value} outside [0, 1]")


@dataclass(frozen=True)
class MetricsReport:
    folds: tuple[FoldMetrics, ...]
    mean: FoldMetrics
    sd: tuple[float, ...]

    @property
    def accuracy(self) -> float:
        return self.mean.acc


def compute_metrics(
    predicted: Mapping[str, int], actual: Mapping[str, int]
) -> FoldMetrics:
    """Single-split metrics; zero denominators yield 0 and raise a flag."""
    if set(predicted) != set(actual):
        missing = sorted(set(actual) ^ set(predicted))
        raise ValidationError(f"speaker sets differ, e.g. {missing[:5]}")
    if not actual:
        raise ValidationError("empty speaker set")
    speakers = sorted(actual)
    flags: list[str] = []

    correct = sum(1 for s in speakers if predicted[s] == actual[s])
    acc = correct / len(speakers)

    def prf(cls: int, name: str) -> tuple[float, float, float]:
        tp = sum(1 for s in speakers if predicted[s] == cls and actual[s] == cls)
        fp = sum(1 for s in speakers if predicted[s] == cls and actual[s] != cls)
        fn = sum(1 for s in speakers if predicted[s] != cls and actual[s] == cls)
        if tp + fp == 0:
            precision = 0.0
            flags.append(f"precision_{name}")
        else:
            precision = tp / (tp + fp)
        if tp + fn == 0:
            recall = 0.0
            flags.append(f"recall_{name}")
        else:
            recall = tp / (tp + fn)
        if precision + recall == 0:
            f1 = 0.0
            flags.append(f"f1_{name}")
        else:
            f1 = 2 * precision * recall / (precision + recall)
        return precision, recall, f1

    p_cn, r_cn, f_cn = prf(0, "cn")
    p_ad, r_ad, f_ad = prf(1, "ad")
    return FoldMetrics(
        acc=acc,
        precision_cn=p_cn,
        precision_ad=p_ad,
        recall_cn=r_cn,
        recall_ad=r_ad,
        f1_cn=f_cn,
        f1_ad=f_ad,
        zero_division_flags=tuple(flags),
    )


def aggregate(folds: list[FoldMetrics]) -> MetricsReport:
    """Mean and population SD of every metric across folds."""
    if not folds:
        raise ValidationError("no folds to aggregate")
    n = len(folds)
    means = []
    sds = []
    for j in range(len(METRIC_COLUMNS)):
        values = [f.values()[j] for f in folds]
        mean = sum(values) / n
        sds.append(math.sqrt(sum((v - mean) ** 2 for v in values) / n))
        means.append(mean)
    return MetricsReport(
        folds=tuple(folds),
        mean=FoldMetrics(*means),
        sd=tuple(sds),
    )


def render_report(report: MetricsReport, fmt: str = "csv") -> bytes:
    """Stable column order: Acc, Precision CN/AD, Recall CN/AD, F1 CN/AD."""
    rows = [(f"fold_{i}", fold.values()) for i, fold in enumerate(report.folds)]
    rows.append(("mean", report.mean.values()))
    rows.append(("sd", list(report.sd)))
    if fmt == "csv":
        lines = [_CSV_PREAMBLE, "row," + ",".join(METRIC_COLUMNS)]
        for name, values in rows:
            lines.append(name + "," + ",".join(f"{v:.6f}" for v in values))
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "markdown":
        header = "| row | " + " | ".join(METRIC_COLUMNS) + " |"
        rule = "|" + "---|" * (len(METRIC_COLUMNS) + 1)
        lines = [header, rule]
        for name, values in rows:
            lines.append("| " + name + " | " + " | ".join(f"{v:.6f}" for v in values) + " |")
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValidationError(f"unknown report format {fmt!r}")


def parse_report_csv(data: bytes) -> MetricsReport:
    """Inverse of render_report(..., "csv"); round-trips byte-identically."""
    lines = data.decode("utf-8").splitlines()
    if len(lines) < 4 or lines[0] != _CSV_PREAMBLE:
        raise ParseError("missing report preamble", line=1)
    if lines[1] != "row," + ",".join(METRIC_COLUMNS):
        raise ParseError("unexpected report header", line=2)
    folds = []
    mean = None
    sd = None
    for line_no, line in enumerate(lines[2:], start=3):
        cells = line.split(",")
        if len(cells) != len(METRIC_COLUMNS) + 1:
            raise ParseError("wrong column count", line=line_no)
        name, values = cells[0], [float(v) for v in cells[1:]]
        if name.startswith("fold_"):
            folds.append(FoldMetrics(*values))
        elif name == "mean":
            mean = FoldMetrics(*values)
        elif name == "sd":
            sd = tuple(values)
        else:
            raise ParseError(f"unknown row {name!r}", line=line_no)
    if mean is None or sd is None or not folds:
        raise ParseError("report is missing fold, mean, or sd rows")
    return MetricsReport(folds=tuple(folds), mean=mean, sd=sd)
