"""Sliding-window linguistic complexity contours."""

from cogspeech.contours.contour import (
    FeatureContour,
    WindowConfig,
    concat_contours,
    contour,
    contour_csv,
    windows,
)
from cogspeech.contours.measures import (
    clause_counts,
    cttr,
    deflate_ratio,
    kolmogorov_deflate,
    lexical_density,
    ngram_logfreq,
    sophistication,
    syntactic_measures,
    ttr,
)
from cogspeech.contours.registry import (
    Measure,
    MeasureId,
    MeasureRegistry,
    default_registry,
    registry_from_json,
)

__all__ = [
    "FeatureContour",
    "WindowConfig",
    "concat_contours",
    "contour",
    "contour_csv",
    "windows",
    "clause_counts",
    "cttr",
    "deflate_ratio",
    "kolmogorov_deflate",
    "lexical_density",
    "ngram_logfreq",
    "sophistication",
    "syntactic_measures",
    "ttr",
    "Measure",
    "MeasureId",
    "MeasureRegistry",
    "default_registry",
    "registry_from_json",
]
