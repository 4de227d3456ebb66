"""Per-segment query features.

Each segment contributes its fitted coefficients (alpha_0..alpha_K), its
sample count, and backward-looking relative variations at a configurable
segment delay d:

    var(t) = (value(t) - value(t - d)) / value(t - d)

attached to segment t.  A feature value of None means MISSING: the segment is
among the first d, the variation denominator is within ``epsilon`` of zero,
or the segment carries no coefficient vector (an end-of-stream tail shorter
than degree + 1).

Canonical feature names are ``alpha_k``, ``var_alpha_{k}_{d}``, ``size`` and
``var_size_{d}``.  Friendly aliases used by rule files (average, slope,
curvature, var_average, var_slope, var_curvature, size, var_size) resolve to
canonical names via resolve_feature_name().
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidConfigError, MissingFeatureError
from .segmentation import Segment, Segmentation

_ALIASES = {
    "average": ("alpha", 0),
    "slope": ("alpha", 1),
    "curvature": ("alpha", 2),
    "var_average": ("var_alpha", 0),
    "var_slope": ("var_alpha", 1),
    "var_curvature": ("var_alpha", 2),
    "size": ("size", None),
    "var_size": ("var_size", None),
}

_CANONICAL_RE = re.compile(r"^(alpha_\d+|var_alpha_\d+_\d+|size|var_size_\d+)$")


@dataclass(frozen=True)
class FeatureRecord:
    """Feature values of one segment; None encodes MISSING."""

    segment_index: int
    values: dict[str, float | None]


def _as_segments(segments) -> tuple[Segment, ...]:
    if isinstance(segments, Segmentation):
        return segments.segments
    return tuple(segments)


def _check_delay(d: int) -> None:
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise InvalidConfigError(f"delay must be an integer >= 1, got {d!r}")


def _check_epsilon(epsilon: float) -> None:
    if not epsilon > 0:
        raise InvalidConfigError(f"epsilon must be > 0, got {epsilon}")


def _variations(
    values: Sequence[float | None], d: int, epsilon: float
) -> list[float | None]:
    out: list[float | None] = []
    for t, current in enumerate(values):
        if t < d:
            out.append(None)
            continue
        base = values[t - d]
        if current is None or base is None or abs(base) < epsilon:
            out.append(None)
            continue
        out.append((current - base) / base)
    return out


def coefficient_feature(segments, k: int) -> list[float | None]:
    """alpha_k of each segment; None for segments without a coefficient vector."""
    segs = _as_segments(segments)
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise InvalidConfigError(f"coefficient order must be an integer >= 0, got {k!r}")
    degrees = [s.alpha.degree for s in segs if s.alpha is not None]
    if degrees and k > max(degrees):
        raise InvalidConfigError(
            f"coefficient order {k} out of range for degree {max(degrees)}"
        )
    return [None if s.alpha is None else float(s.alpha.alpha[k]) for s in segs]


def variation_feature(
    segments, k: int, d: int = 1, epsilon: float = 1e-9
) -> list[float | None]:
    """Relative change of alpha_k over a delay of d segments, attached to the later one."""
    _check_delay(d)
    _check_epsilon(epsilon)
    return _variations(coefficient_feature(segments, k), d, epsilon)


def size_features(segments, d: int = 1) -> tuple[list[float], list[float | None]]:
    """Segment sample counts and their relative variations at delay d."""
    _check_delay(d)
    sizes = [float(s.length) for s in _as_segments(segments)]
    return sizes, _variations(sizes, d, 1e-9)


def build_records(segments, d: int = 1, epsilon: float = 1e-9) -> list[FeatureRecord]:
    """All features of every segment, keyed by canonical feature names."""
    _check_delay(d)
    _check_epsilon(epsilon)
    segs = _as_segments(segments)
    degrees = [s.alpha.degree for s in segs if s.alpha is not None]
    degree = max(degrees) if degrees else -1
    sizes, var_sizes = size_features(segs, d)
    columns: dict[str, list[float | None]] = {}
    for k in range(degree + 1):
        columns[f"alpha_{k}"] = coefficient_feature(segs, k)
    for k in range(degree + 1):
        columns[f"var_alpha_{k}_{d}"] = _variations(columns[f"alpha_{k}"], d, epsilon)
    columns["size"] = list(sizes)
    columns[f"var_size_{d}"] = var_sizes
    return [
        FeatureRecord(
            segment_index=i,
            values={name: column[i] for name, column in columns.items()},
        )
        for i in range(len(segs))
    ]


def resolve_feature_name(name: str, degree: int, d: int = 1) -> str:
    """Map a rule-file feature name to the canonical record key.

    Accepts friendly aliases (resolved against the run's delay ``d``) and
    canonical names as-is; raises MissingFeatureError when the name cannot
    exist for the given fit degree or materialized delay.
    """
    _check_delay(d)
    key = name
    if name in _ALIASES:
        family, k = _ALIASES[name]
        if family == "alpha":
            key = f"alpha_{k}"
        elif family == "var_alpha":
            key = f"var_alpha_{k}_{d}"
        elif family == "size":
            key = "size"
        else:
            key = f"var_size_{d}"
    elif not _CANONICAL_RE.match(name):
        raise MissingFeatureError(f"unknown feature name {name!r}")
    match = re.match(r"^alpha_(\d+)$", key)
    if match and int(match.group(1)) > degree:
        raise MissingFeatureError(
            f"feature {name!r} needs coefficient {match.group(1)}, fit degree is {degree}"
        )
    match = re.match(r"^var_alpha_(\d+)_(\d+)$", key)
    if match:
        if int(match.group(1)) > degree:
            raise MissingFeatureError(
                f"feature {name!r} needs coefficient {match.group(1)}, fit degree is {degree}"
            )
        if int(match.group(2)) != d:
            raise MissingFeatureError(
                f"feature {name!r} uses delay {match.group(2)}, this run materialized {d}"
            )
    match = re.match(r"^var_size_(\d+)$", key)
    if match and int(match.group(1)) != d:
        raise MissingFeatureError(
            f"feature {name!r} uses delay {match.group(1)}, this run materialized {d}"
        )
    return key
