"""Data-driven registry of contour measures.

A registry is an ordered list of named measures spanning the four feature
categories (syntactic, lexical, n-gram frequency, information-theoretic).
It can be built in code or loaded from a JSON config that points at the
resource files some measures need (wordlists, n-gram tables).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from cogspeech.errors import ValidationError
from cogspeech.contours import measures as m
from cogspeech.ingest.tables import NgramTable, load_ngram_table, load_wordlist

CATEGORIES = ("SYNTACTIC", "LEXICAL", "NGRAM_FREQ", "INFO_THEORETIC")


@dataclass(frozen=True)
class MeasureId:
    category: str
    name: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValidationError(f"unknown measure category {self.category!r}")


@dataclass(frozen=True)
class Measure:
    id: MeasureId
    fn: Callable[[m.Window], float | None]


class MeasureRegistry:
    """Ordered, name-unique collection of measures."""

    def __init__(self, measures: list[Measure]):
        names = [measure.id.name for measure in measures]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate measure names in registry")
        if not measures:
            raise ValidationError("registry is empty")
        self.measures = tuple(measures)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(measure.id.name for measure in self.measures)

    def __len__(self) -> int:
        return len(self.measures)

    def __iter__(self):
        return iter(self.measures)


def _lexical_measure(name, fn):
    return Measure(
        id=MeasureId(category="LEXICAL", name=name),
        fn=lambda window, _fn=fn: _fn(m.content_tokens(window)),
    )


def _syntactic_measure(name):
    return Measure(
        id=MeasureId(category="SYNTACTIC", name=name),
        fn=lambda window, _n=name: m.syntactic_measures(window)[_n],
    )


def sophistication_measure(wordlist: frozenset[str], name: str = "sophistication") -> Measure:
    return Measure(
        id=MeasureId(category="LEXICAL", name=name),
        fn=lambda window: m.sophistication(m.content_tokens(window), wordlist),
    )


def ngram_measure(table: NgramTable, smoothing: float = 1.0, name: str | None = None) -> Measure:
    if name is None:
        name = f"ngram_logfreq.{table.register}.{table.n}"
    return Measure(
        id=MeasureId(category="NGRAM_FREQ", name=name),
        fn=lambda window: m.ngram_logfreq(
            [[t for t in s.tokens if t.upos != "PUNCT"] for s in window], table, smoothing
        ),
    )


def kolmogorov_measure(view: str, name: str | None = None) -> Measure:
    if name is None:
        name = f"kolmogorov.{view.lower()}"
    return Measure(
        id=MeasureId(category="INFO_THEORETIC", name=name),
        fn=lambda window: m.kolmogorov_deflate(window, view),
    )


def core_measures() -> list[Measure]:
    """Measures needing no external resources: syntactic, lexical, deflate."""
    out = [_syntactic_measure(name) for name in m.SYNTACTIC_MEASURES]
    out.append(_lexical_measure("ttr", m.ttr))
    out.append(_lexical_measure("cttr", m.cttr))
    out.append(_lexical_measure("lexical_density", m.lexical_density))
    out.append(kolmogorov_measure("SURFACE"))
    out.append(kolmogorov_measure("POS"))
    out.append(kolmogorov_measure("MORPH"))
    return out


def default_registry(
    wordlist: frozenset[str] | None = None,
    ngram_tables: list[NgramTable] = (),
    smoothing: float = 1.0,
) -> MeasureRegistry:
    """Core measures plus whichever resource-backed measures are available."""
    out = core_measures()
    if wordlist is not None:
        out.append(sophistication_measure(wordlist))
    for table in ngram_tables:
        out.append(ngram_measure(table, smoothing))
    return MeasureRegistry(out)


_CORE_BY_NAME = {measure.id.name: measure for measure in core_measures()}


def registry_from_json(
    data: bytes, base_dir: Path | None = None, default_smoothing: float = 1.0
) -> MeasureRegistry:
    """Build a registry from a JSON config.

    Schema: {"measures": [{"name": ..., "category": ..., ...params}]}.
    Resource paths are resolved relative to base_dir when given; n-gram
    entries without an explicit smoothing constant use default_smoothing.
    """
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"registry config is not valid JSON: {exc}")
    if not isinstance(obj, dict) or set(obj) != {"measures"}:
        raise ValidationError('registry config must be {"measures": [...]}')

    def resolve(path_str: str) -> Path:
        path = Path(path_str)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return path

    out = []
    for i, entry in enumerate(obj["measures"]):
        if not isinstance(entry, dict) or "name" not in entry or "category" not in entry:
            raise ValidationError(f"measures[{i}]: need name and category")
        name = entry["name"]
        category = entry["category"]
        if name in _CORE_BY_NAME:
            expected = _CORE_BY_NAME[name].id.category
            if category != expected:
                raise ValidationError(f"measures[{i}]: {name} has category {expected}")
            out.append(_CORE_BY_NAME[name])
        elif name == "sophistication" or name.startswith("sophistication."):
            wordlist = load_wordlist(resolve(entry["wordlist"]).read_bytes())
            out.append(sophistication_measure(wordlist, name=name))
        elif name.startswith("ngram_logfreq."):
            table = load_ngram_table(
                resolve(entry["table"]).read_bytes(), int(entry["n"]), entry["register"]
            )
            out.append(
                ngram_measure(
                    table, float(entry.get("smoothing", default_smoothing)), name=name
                )
            )
        elif name.startswith("kolmogorov."):
            out.append(kolmogorov_measure(entry["view"], name=name))
        else:
            raise ValidationError(f"measures[{i}]: unknown measure {name!r}")
    return MeasureRegistry(out)
