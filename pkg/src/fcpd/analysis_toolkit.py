"""Post-segmentation analysis: clustering, score bounds, boundary offsets,
and a seeded synthetic generator for cyclic test series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidConfigError, InvalidDataError
from .segmentation import Segmentation


# ---------------------------------------------------------------------------
# k-means over segment coefficients


@dataclass(frozen=True)
class ClusterResult:
    """Clustering of segments in a 2-D coefficient space.

    segment_indices lists the clustered segments (segments without a
    coefficient vector are excluded and reported); assignments aligns with
    it.  representatives[c] is the segment index closest to centroid c.
    """

    segment_indices: tuple[int, ...]
    assignments: tuple[int, ...]
    centroids: np.ndarray
    representatives: tuple[int, ...]
    inertia: float
    inertia_history: tuple[float, ...]
    excluded: tuple[int, ...] = ()


def _kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[i] = points[rng.integers(n)]
            continue
        centers[i] = points[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def _lloyd(
    points: np.ndarray, centers: np.ndarray, max_iter: int
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    k = centers.shape[0]
    labels = np.full(points.shape[0], -1)
    history: list[float] = []
    for _ in range(max_iter):
        distances = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(distances, axis=1)
        for c in range(k):
            if not np.any(new_labels == c):
                # Re-seed an empty cluster with the point farthest from its center.
                farthest = int(np.argmax(distances[np.arange(len(points)), new_labels]))
                new_labels[farthest] = c
        history.append(float(np.sum((points - centers[new_labels]) ** 2)))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
    inertia = float(np.sum((points - centers[labels]) ** 2))
    history.append(inertia)
    return labels, centers, inertia, history


def kmeans_points(
    points, k: int, seed: int, n_init: int = 10, max_iter: int = 300
) -> tuple[np.ndarray, np.ndarray, float, tuple[float, ...]]:
    """Seeded k-means++ / Lloyd on raw points; deterministic for a fixed seed.

    Convergence is assignment stabilization (or max_iter).  The best of
    n_init restarts by within-cluster sum of squares wins.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidDataError(f"expected a non-empty 2-D point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidDataError("points must be finite")
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise InvalidConfigError(f"k must be an integer >= 1, got {k!r}")
    if k > pts.shape[0]:
        raise InvalidConfigError(f"k={k} exceeds the {pts.shape[0]} available points")
    rng = np.random.default_rng(seed)
    best: tuple[np.ndarray, np.ndarray, float, list[float]] | None = None
    for _ in range(max(1, n_init)):
        centers = _kmeans_plus_plus(pts, k, rng)
        labels, centers, inertia, history = _lloyd(pts, centers.copy(), max_iter)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia, history)
    labels, centers, inertia, history = best
    return labels, centers, inertia, tuple(history)


def kmeans_segments(
    segments,
    k: int,
    seed: int,
    feature_pair: tuple[int, int] = (1, 2),
    n_init: int = 10,
) -> ClusterResult:
    """Cluster segments by a pair of fitted coefficients (default slope/curvature)."""
    segs = segments.segments if isinstance(segments, Segmentation) else tuple(segments)
    a, b = feature_pair
    for order in (a, b):
        if not isinstance(order, int) or isinstance(order, bool) or order < 0:
            raise InvalidConfigError(f"feature_pair entries must be integers >= 0, got {feature_pair!r}")
    usable = [s for s in segs if s.alpha is not None]
    excluded = tuple(s.index for s in segs if s.alpha is None)
    if not usable:
        raise InvalidDataError("no segment carries a coefficient vector")
    degree = min(s.alpha.degree for s in usable)
    if max(a, b) > degree:
        raise InvalidConfigError(
            f"feature_pair {feature_pair} needs degree >= {max(a, b)}, fit degree is {degree}"
        )
    points = np.array([[s.alpha.alpha[a], s.alpha.alpha[b]] for s in usable])
    labels, centers, inertia, history = kmeans_points(points, k, seed, n_init=n_init)
    representatives = []
    for c in range(k):
        members = np.flatnonzero(labels == c)
        distances = np.sum((points[members] - centers[c]) ** 2, axis=1)
        representatives.append(usable[members[int(np.argmin(distances))]].index)
    return ClusterResult(
        segment_indices=tuple(s.index for s in usable),
        assignments=tuple(int(v) for v in labels),
        centroids=centers,
        representatives=tuple(representatives),
        inertia=inertia,
        inertia_history=history,
        excluded=excluded,
    )


# ---------------------------------------------------------------------------
# Sensitivity bounds


@dataclass(frozen=True)
class SensitivityReport:
    """Mean of the best / worst scores (up to 3 each) plus the counts used."""

    mean_upper: float
    mean_lower: float
    upper_count: int
    lower_count: int
    segment_count: int


def sensitivity_bounds(scores, top_n: int = 3, segment_count: int | None = None) -> SensitivityReport:
    """Upper/lower score bounds: means of the best and worst top_n scores.

    With fewer than top_n scores, whatever exists is averaged and the counts
    say so.  segment_count defaults to the number of scores.
    """
    values = [float(s) for s in scores]
    if not values:
        raise InvalidDataError("sensitivity_bounds needs at least one score")
    if any(not math.isfinite(v) for v in values):
        raise InvalidDataError("scores must be finite")
    if top_n < 1:
        raise InvalidConfigError(f"top_n must be >= 1, got {top_n}")
    ordered = sorted(values, reverse=True)
    upper = ordered[:top_n]
    lower = ordered[-top_n:]
    return SensitivityReport(
        mean_upper=sum(upper) / len(upper),
        mean_lower=sum(lower) / len(lower),
        upper_count=len(upper),
        lower_count=len(lower),
        segment_count=len(values) if segment_count is None else int(segment_count),
    )


def aggregate_sensitivity(reports: Sequence[SensitivityReport]) -> SensitivityReport:
    """Average per-series reports into data-set level bounds."""
    if not reports:
        raise InvalidDataError("aggregate_sensitivity needs at least one report")
    return SensitivityReport(
        mean_upper=sum(r.mean_upper for r in reports) / len(reports),
        mean_lower=sum(r.mean_lower for r in reports) / len(reports),
        upper_count=max(r.upper_count for r in reports),
        lower_count=max(r.lower_count for r in reports),
        segment_count=round(sum(r.segment_count for r in reports) / len(reports)),
    )


# ---------------------------------------------------------------------------
# Change-point offsets


@dataclass(frozen=True)
class OffsetResult:
    """Greedy in-order pairing of reference boundaries with candidates.

    offsets[i] = pairs[i][1] - pairs[i][0] (candidate minus reference).
    """

    pairs: tuple[tuple[float, float], ...]
    offsets: tuple[float, ...]
    unmatched_reference: tuple[float, ...]
    unmatched_candidate: tuple[float, ...]


def change_point_offsets(reference, candidate) -> OffsetResult:
    """Per-boundary offsets between a reference and a candidate boundary list.

    Reference points are walked in ascending order; each takes the nearest
    still-unmatched candidate (ties go to the earlier candidate).  An empty
    candidate list yields a no-matches result.
    """
    ref = sorted(float(r) for r in reference)
    cand = sorted(float(c) for c in candidate)
    if any(not math.isfinite(v) for v in ref + cand):
        raise InvalidDataError("boundary indices must be finite")
    available = list(range(len(cand)))
    pairs: list[tuple[float, float]] = []
    unmatched_ref: list[float] = []
    for r in ref:
        if not available:
            unmatched_ref.append(r)
            continue
        best = min(available, key=lambda i: (abs(cand[i] - r), cand[i]))
        available.remove(best)
        pairs.append((r, cand[best]))
    return OffsetResult(
        pairs=tuple(pairs),
        offsets=tuple(c - r for r, c in pairs),
        unmatched_reference=tuple(unmatched_ref),
        unmatched_candidate=tuple(cand[i] for i in available),
    )


# ---------------------------------------------------------------------------
# Synthetic cyclic series


@dataclass(frozen=True)
class NoiseBurst:
    """Adds scale * N(0,1) noise on the inclusive sample interval [start, end]."""

    start: int
    end: int
    scale: float = 1.0


@dataclass(frozen=True)
class LevelShift:
    """Replaces samples on [start, end] with level + scale * N(0,1)."""

    start: int
    end: int
    level: float = 0.5
    scale: float = 0.5


DEFAULT_ANOMALIES: tuple[NoiseBurst | LevelShift, ...] = (
    NoiseBurst(500, 600),
    LevelShift(1400, 1600),
)


def generate_cycle(
    n: int = 2000,
    period: float = 200.0,
    seed: int = 0,
    anomalies: Sequence[NoiseBurst | LevelShift] = DEFAULT_ANOMALIES,
) -> np.ndarray:
    """Normalized sinusoid (mean 0, variance 1 over whole periods) with anomalies.

    Samples outside anomaly intervals equal the pure sinusoid exactly.  The
    draw order is fixed (anomalies in the given order), so output is
    deterministic under the seed.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InvalidConfigError(f"n must be an integer >= 1, got {n!r}")
    if not period > 0:
        raise InvalidConfigError(f"period must be > 0, got {period}")
    x = np.arange(n)
    series = math.sqrt(2.0) * np.sin(2.0 * math.pi * x / period)
    rng = np.random.default_rng(seed)
    for anomaly in anomalies:
        if anomaly.start > anomaly.end:
            raise InvalidConfigError(f"anomaly interval reversed: {anomaly}")
        if anomaly.start < 0 or anomaly.end >= n:
            raise InvalidConfigError(f"anomaly interval outside 0..{n - 1}: {anomaly}")
        span = anomaly.end - anomaly.start + 1
        noise = rng.standard_normal(span)
        if isinstance(anomaly, NoiseBurst):
            series[anomaly.start : anomaly.end + 1] += anomaly.scale * noise
        elif isinstance(anomaly, LevelShift):
            series[anomaly.start : anomaly.end + 1] = anomaly.level + anomaly.scale * noise
        else:
            raise InvalidConfigError(f"unknown anomaly type {anomaly!r}")
    return series
