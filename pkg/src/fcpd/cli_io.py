"""Command-line front end and file I/O for the segmentation/query pipeline.

Subcommands: segment, query, cluster, sensitivity, generate, offsets.
Series files are CSV with one value per line or ``t,value`` rows (optional
header; t must advance by exactly 1).  Exit codes: 0 success, 2 invalid
configuration, 3 malformed data, 4 rule-file errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis_toolkit import (
    aggregate_sensitivity,
    change_point_offsets,
    generate_cycle,
    kmeans_segments,
    sensitivity_bounds,
)
from .errors import (
    FcpdError,
    InsufficientDataError,
    InvalidConfigError,
    InvalidDataError,
    MissingFeatureError,
)
from .features import build_records, resolve_feature_name
from .fuzzy_inference import infer
from .query_dsl import QueryError, parse, to_fis
from .segmentation import (
    Segment,
    Segmentation,
    SegmentationConfig,
    TailPolicy,
    segment_series,
)
from .shape_space import SlopeSignMode, build_basis, evaluate, validate_series

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RULES = 4


# ---------------------------------------------------------------------------
# Ingestion and normalization


def _parse_number(text: str, lineno: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InvalidDataError(f"line {lineno}: {what} {text!r} is not a number") from None
    if not math.isfinite(value):
        raise InvalidDataError(f"line {lineno}: {what} {text!r} is not finite")
    return value


def ingest(source) -> np.ndarray:
    """Read a series from a CSV path, an open file, or '-' (stdin).

    Accepts one value per line or ``t,value`` rows.  A non-numeric first row
    is treated as a header.  The t column must be strictly increasing
    integers advancing by exactly 1.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif source == "-":
        text = sys.stdin.read()
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise InvalidDataError(f"cannot read {source}: {exc}") from None
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) > 2:
            raise InvalidDataError(f"line {lineno}: expected 1 or 2 columns, got {len(parts)}")
        rows.append((lineno, parts))
    if rows:
        first_fields = rows[0][1]
        numeric = True
        for field_text in first_fields:
            try:
                float(field_text)
            except ValueError:
                numeric = False
        if not numeric:
            rows = rows[1:]
    if not rows:
        raise InvalidDataError("no data rows found")
    width = len(rows[0][1])
    values = []
    t_previous: int | None = None
    for lineno, parts in rows:
        if len(parts) != width:
            raise InvalidDataError(
                f"line {lineno}: expected {width} columns, got {len(parts)}"
            )
        if width == 2:
            t_value = _parse_number(parts[0], lineno, "index")
            if not t_value.is_integer():
                raise InvalidDataError(f"line {lineno}: index {parts[0]!r} is not an integer")
            t_int = int(t_value)
            if t_previous is not None and t_int != t_previous + 1:
                raise InvalidDataError(
                    f"line {lineno}: index {t_int} breaks the unit step after {t_previous}"
                )
            t_previous = t_int
        values.append(_parse_number(parts[-1], lineno, "value"))
    return validate_series(values)


def normalize(series) -> np.ndarray:
    """Shift/scale to mean 0 and variance 1 (population variance, divisor N)."""
    y = validate_series(series)
    if y.size < 2:
        raise InsufficientDataError("normalization needs at least 2 samples")
    mean = float(y.mean())
    variance = float(((y - mean) ** 2).mean())
    if variance == 0.0:
        raise InvalidDataError("cannot normalize a zero-variance series")
    return (y - mean) / math.sqrt(variance)


# ---------------------------------------------------------------------------
# Query pipeline


@dataclass(frozen=True)
class RunConfig:
    """One CLI run: segmentation parameters plus pipeline options."""

    degree: int = 5
    th_dpu: float | None = None
    th_sss: int | None = None
    sss_mode: SlopeSignMode = SlopeSignMode.ALPHA1_SIGN
    sss_deadband: float = 0.01
    min_segment_len: int | None = None
    tail_policy: TailPolicy = TailPolicy.EMIT_FLAGGED
    normalize: bool = False
    rules_text: str | None = None
    delay: int = 1
    epsilon: float = 1e-9
    seed: int = 0

    def segmentation_config(self) -> SegmentationConfig:
        return SegmentationConfig(
            degree=self.degree,
            th_dpu=self.th_dpu,
            th_sss=self.th_sss,
            sss_mode=self.sss_mode,
            sss_deadband=self.sss_deadband,
            min_segment_len=self.min_segment_len,
            tail_policy=self.tail_policy,
        )


@dataclass(frozen=True)
class ScoredSegment:
    segment: Segment
    score: float
    degenerate: bool


@dataclass(frozen=True)
class SkippedSegment:
    segment_index: int
    missing: tuple[str, ...]


@dataclass(frozen=True)
class QueryResult:
    """Scored segments (score descending, index ascending) plus skip report."""

    scored: tuple[ScoredSegment, ...]
    skipped: tuple[SkippedSegment, ...]
    segmentation: Segmentation


def run_query(series, config: RunConfig) -> QueryResult:
    """Segment a series, build features, and score every scorable segment.

    Segments whose referenced features are missing are skipped and reported,
    never scored.  Feature names in the rules resolve before any scoring, so
    an unknown name fails the whole run.
    """
    if config.rules_text is None:
        raise InvalidConfigError("run_query needs rules_text")
    y = validate_series(series)
    if config.normalize:
        y = normalize(y)
    segmentation = segment_series(y, config.segmentation_config())
    records = build_records(segmentation, d=config.delay, epsilon=config.epsilon)
    fis = to_fis(parse(config.rules_text))
    key_map = {
        name: resolve_feature_name(name, config.degree, config.delay)
        for name in fis.input_variables_referenced()
    }
    scored: list[ScoredSegment] = []
    skipped: list[SkippedSegment] = []
    for segment, record in zip(segmentation.segments, records):
        inputs: dict[str, float] = {}
        missing: list[str] = []
        for var_name, key in key_map.items():
            value = record.values.get(key)
            if value is None:
                missing.append(key)
            else:
                inputs[var_name] = value
        if missing:
            skipped.append(SkippedSegment(segment.index, tuple(missing)))
            continue
        result = infer(fis, inputs)
        scored.append(ScoredSegment(segment, result.score, result.degenerate))
    scored.sort(key=lambda s: (-s.score, s.segment.index))
    return QueryResult(tuple(scored), tuple(skipped), segmentation)


# ---------------------------------------------------------------------------
# Output helpers


def _fmt(value: float) -> str:
    return repr(float(value))


def _segment_fields(segment: Segment, degree: int) -> list[str]:
    fields = [
        str(segment.index),
        str(segment.start),
        str(segment.end),
        str(segment.length),
        segment.closed_by.value,
    ]
    if segment.alpha is not None:
        fields.extend(_fmt(a) for a in segment.alpha.alpha)
    else:
        fields.extend("" for _ in range(degree + 1))
    return fields


def _segment_json(segment: Segment, degree: int) -> dict:
    alpha = None
    if segment.alpha is not None:
        alpha = [float(a) for a in segment.alpha.alpha]
    return {
        "index": segment.index,
        "start": segment.start,
        "end": segment.end,
        "length": segment.length,
        "closed_by": segment.closed_by.value,
        "alpha": alpha,
    }


def _csv_writer(stream):
    return csv.writer(stream, lineterminator="\n")


def _alpha_header(degree: int) -> list[str]:
    return [f"alpha_{k}" for k in range(degree + 1)]


def _write_plot_data(
    plot_dir: str,
    series: np.ndarray,
    segmentation: Segmentation,
    scores: dict[int, float] | None = None,
) -> None:
    out = Path(plot_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "series.dat", "w") as fh:
        for x, y in enumerate(series):
            fh.write(f"{x} {_fmt(y)}\n")
    with open(out / "boundaries.dat", "w") as fh:
        for cp in segmentation.change_points:
            fh.write(f"{cp}\n")
    with open(out / "fit.dat", "w") as fh:
        for segment in segmentation.segments:
            if segment.alpha is None:
                continue
            basis = build_basis(segment.alpha.window_len, segment.alpha.degree)
            local = np.arange(segment.length, dtype=float)
            fitted = evaluate(segment.alpha, basis, local)
            for x, y in zip(local, fitted):
                fh.write(f"{segment.start + int(x)} {_fmt(y)}\n")
    if scores is not None:
        with open(out / "scores.dat", "w") as fh:
            for index in sorted(scores):
                fh.write(f"{index} {_fmt(scores[index])}\n")


# ---------------------------------------------------------------------------
# Subcommands


def _load_series(args) -> np.ndarray:
    series = ingest(args.input)
    if args.normalize:
        series = normalize(series)
    return series


def _run_config(args, rules_text: str | None = None) -> RunConfig:
    return RunConfig(
        degree=args.degree,
        th_dpu=args.th_dpu,
        th_sss=args.th_sss,
        sss_mode=SlopeSignMode(args.sss_mode),
        sss_deadband=args.sss_deadband,
        min_segment_len=args.min_segment_len,
        tail_policy=TailPolicy(args.tail_policy),
        normalize=args.normalize,
        rules_text=rules_text,
        delay=getattr(args, "delay", 1),
        epsilon=getattr(args, "epsilon", 1e-9),
        seed=_resolve_seed(args),
    )


def _read_rules(args) -> str:
    try:
        return Path(args.rules).read_text()
    except OSError as exc:
        raise InvalidConfigError(f"cannot read rules file {args.rules}: {exc}") from None


def _resolve_seed(args) -> int:
    seed = getattr(args, "seed", None)
    if seed is not None:
        return seed
    env = os.environ.get("FCPD_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InvalidConfigError(f"FCPD_SEED must be an integer, got {env!r}") from None


def _cmd_segment(args) -> int:
    series = _load_series(args)
    config = _run_config(args).segmentation_config()
    segmentation = segment_series(series, config)
    if args.format == "json":
        payload = {
            "segments": [_segment_json(s, config.degree) for s in segmentation.segments],
            "change_points": list(segmentation.change_points),
        }
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        writer = _csv_writer(sys.stdout)
        writer.writerow(["index", "start", "end", "length", "closed_by"] + _alpha_header(config.degree))
        for segment in segmentation.segments:
            writer.writerow(_segment_fields(segment, config.degree))
    if args.plot_dir:
        _write_plot_data(args.plot_dir, series, segmentation)
    return EXIT_OK


def _cmd_query(args) -> int:
    config = _run_config(args, rules_text=_read_rules(args))
    series = ingest(args.input)
    result = run_query(series, config)
    degree = config.degree
    if args.format == "json":
        payload = {
            "segments": [
                {**_segment_json(s.segment, degree), "score": s.score, "degenerate": s.degenerate}
                for s in result.scored
            ],
            "skipped": [
                {"index": s.segment_index, "missing": list(s.missing)} for s in result.skipped
            ],
        }
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        writer = _csv_writer(sys.stdout)
        writer.writerow(
            ["index", "start", "end", "length", "closed_by"] + _alpha_header(degree) + ["score"]
        )
        for scored in result.scored:
            writer.writerow(_segment_fields(scored.segment, degree) + [_fmt(scored.score)])
        for skipped in result.skipped:
            print(
                f"skipped segment {skipped.segment_index}: missing {', '.join(skipped.missing)}",
                file=sys.stderr,
            )
    if args.plot_dir:
        series_used = normalize(series) if args.normalize else series
        _write_plot_data(
            args.plot_dir,
            series_used,
            result.segmentation,
            scores={s.segment.index: s.score for s in result.scored},
        )
    return EXIT_OK


def _cmd_cluster(args) -> int:
    series = _load_series(args)
    config = _run_config(args).segmentation_config()
    segmentation = segment_series(series, config)
    result = kmeans_segments(
        segmentation, k=args.clusters, seed=_resolve_seed(args), feature_pair=(1, 2)
    )
    segments_by_index = {s.index: s for s in segmentation.segments}
    if args.format == "json":
        payload = {
            "segments": [
                {
                    "index": index,
                    "start": segments_by_index[index].start,
                    "end": segments_by_index[index].end,
                    "cluster": cluster,
                    "representative": index in result.representatives,
                }
                for index, cluster in zip(result.segment_indices, result.assignments)
            ],
            "centroids": [[float(v) for v in row] for row in result.centroids],
            "representatives": list(result.representatives),
            "excluded": list(result.excluded),
            "inertia": result.inertia,
        }
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        writer = _csv_writer(sys.stdout)
        writer.writerow(
            ["index", "start", "end", "length", "alpha_1", "alpha_2", "cluster", "representative"]
        )
        for index, cluster in zip(result.segment_indices, result.assignments):
            segment = segments_by_index[index]
            writer.writerow(
                [
                    str(index),
                    str(segment.start),
                    str(segment.end),
                    str(segment.length),
                    _fmt(segment.alpha.alpha[1]),
                    _fmt(segment.alpha.alpha[2]),
                    str(cluster),
                    "1" if index in result.representatives else "0",
                ]
            )
        if result.excluded:
            print(
                f"excluded segments without coefficients: "
                f"{', '.join(str(i) for i in result.excluded)}",
                file=sys.stderr,
            )
    return EXIT_OK


def _sensitivity_one(path: Path, config: RunConfig):
    series = ingest(str(path))
    result = run_query(series, config)
    if not result.scored:
        raise InsufficientDataError(f"{path.name}: no scorable segments")
    report = sensitivity_bounds(
        [s.score for s in result.scored],
        segment_count=len(result.segmentation.segments),
    )
    return path.name, report


def _cmd_sensitivity(args) -> int:
    config = _run_config(args, rules_text=_read_rules(args))
    root = Path(args.input)
    if root.is_dir():
        files = sorted(p for p in root.iterdir() if p.is_file())
        if not files:
            raise InvalidDataError(f"directory {args.input} holds no series files")
    else:
        files = [root]
    if len(files) == 1:
        results = [_sensitivity_one(files[0], config)]
    else:
        with ThreadPoolExecutor(max_workers=min(8, len(files))) as pool:
            results = list(pool.map(lambda p: _sensitivity_one(p, config), files))
    reports = [report for _, report in results]
    overall = aggregate_sensitivity(reports)
    if args.format == "json":
        payload = {
            "series": [
                {
                    "name": name,
                    "mean_upper": r.mean_upper,
                    "mean_lower": r.mean_lower,
                    "upper_count": r.upper_count,
                    "lower_count": r.lower_count,
                    "segments": r.segment_count,
                }
                for name, r in results
            ],
            "aggregate": {
                "mean_upper": overall.mean_upper,
                "mean_lower": overall.mean_lower,
                "mean_segments": overall.segment_count,
            },
        }
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        writer = _csv_writer(sys.stdout)
        writer.writerow(["series", "mean_upper", "mean_lower", "upper_count", "lower_count", "segments"])
        for name, r in results:
            writer.writerow(
                [name, _fmt(r.mean_upper), _fmt(r.mean_lower), str(r.upper_count), str(r.lower_count), str(r.segment_count)]
            )
        writer.writerow(
            ["MEAN", _fmt(overall.mean_upper), _fmt(overall.mean_lower), "", "", str(overall.segment_count)]
        )
    return EXIT_OK


def _cmd_generate(args) -> int:
    anomalies = () if args.no_anomalies else None
    if anomalies is None:
        series = generate_cycle(n=args.length, period=args.period, seed=_resolve_seed(args))
    else:
        series = generate_cycle(
            n=args.length, period=args.period, seed=_resolve_seed(args), anomalies=anomalies
        )
    for value in series:
        sys.stdout.write(f"{_fmt(value)}\n")
    return EXIT_OK


def _read_indices(path: str) -> list[float]:
    values = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidDataError(f"cannot read {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        values.append(_parse_number(line, lineno, "index"))
    return values


def _cmd_offsets(args) -> int:
    result = change_point_offsets(_read_indices(args.reference), _read_indices(args.candidate))
    if args.format == "json":
        payload = {
            "pairs": [[r, c] for r, c in result.pairs],
            "offsets": list(result.offsets),
            "unmatched_reference": list(result.unmatched_reference),
            "unmatched_candidate": list(result.unmatched_candidate),
        }
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        writer = _csv_writer(sys.stdout)
        writer.writerow(["reference", "candidate", "offset"])
        for (ref, cand), offset in zip(result.pairs, result.offsets):
            writer.writerow([_fmt(ref), _fmt(cand), _fmt(offset)])
        for ref in result.unmatched_reference:
            print(f"unmatched reference boundary: {_fmt(ref)}", file=sys.stderr)
        for cand in result.unmatched_candidate:
            print(f"unmatched candidate boundary: {_fmt(cand)}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _add_segmentation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--degree", type=int, default=5, help="fit degree K (default 5)")
    parser.add_argument("--th-dpu", type=float, default=None, help="deviation threshold")
    parser.add_argument("--th-sss", type=int, default=None, help="slope-sign-switch threshold")
    parser.add_argument(
        "--sss-mode",
        choices=[m.value for m in SlopeSignMode],
        default=SlopeSignMode.ALPHA1_SIGN.value,
        help="slope definition for sign switches (default alpha1)",
    )
    parser.add_argument(
        "--sss-deadband", type=float, default=0.01, help="slope deadband (default 0.01)"
    )
    parser.add_argument("--min-segment-len", type=int, default=None)
    parser.add_argument(
        "--tail-policy",
        choices=[p.value for p in TailPolicy],
        default=TailPolicy.EMIT_FLAGGED.value,
        help="emit or drop the unfinished tail segment (default emit)",
    )
    parser.add_argument(
        "--normalize", action="store_true", help="normalize to mean 0 / variance 1 first"
    )


def _add_output_flags(parser: argparse.ArgumentParser, plot: bool = False) -> None:
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    if plot:
        parser.add_argument("--plot-dir", default=None, help="write plot data files here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcpd",
        description="On-line change-point segmentation with fuzzy relevance queries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_segment = sub.add_parser("segment", help="segment a series")
    p_segment.add_argument("input", help="series CSV path, or - for stdin")
    _add_segmentation_flags(p_segment)
    _add_output_flags(p_segment, plot=True)
    p_segment.add_argument("--seed", type=int, default=None)
    p_segment.set_defaults(func=_cmd_segment)

    p_query = sub.add_parser("query", help="segment and score against a rule file")
    p_query.add_argument("input", help="series CSV path, or - for stdin")
    p_query.add_argument("--rules", required=True, help="rule file (.fcq)")
    p_query.add_argument("--delay", type=int, default=1, help="variation delay d (default 1)")
    p_query.add_argument(
        "--epsilon", type=float, default=1e-9, help="variation denominator guard"
    )
    _add_segmentation_flags(p_query)
    _add_output_flags(p_query, plot=True)
    p_query.add_argument("--seed", type=int, default=None)
    p_query.set_defaults(func=_cmd_query)

    p_cluster = sub.add_parser("cluster", help="k-means over segment slope/curvature")
    p_cluster.add_argument("input", help="series CSV path, or - for stdin")
    p_cluster.add_argument("--clusters", type=int, default=4)
    p_cluster.add_argument("--seed", type=int, default=None)
    _add_segmentation_flags(p_cluster)
    _add_output_flags(p_cluster)
    p_cluster.set_defaults(func=_cmd_cluster)

    p_sens = sub.add_parser("sensitivity", help="score bounds for a series file or directory")
    p_sens.add_argument("input", help="series CSV path or a directory of series files")
    p_sens.add_argument("--rules", required=True, help="rule file (.fcq)")
    p_sens.add_argument("--delay", type=int, default=1)
    p_sens.add_argument("--epsilon", type=float, default=1e-9)
    _add_segmentation_flags(p_sens)
    _add_output_flags(p_sens)
    p_sens.add_argument("--seed", type=int, default=None)
    p_sens.set_defaults(func=_cmd_sensitivity)

    p_gen = sub.add_parser("generate", help="emit a seeded synthetic cyclic series")
    p_gen.add_argument("--length", type=int, default=2000)
    p_gen.add_argument("--period", type=float, default=200.0)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--no-anomalies", action="store_true")
    p_gen.set_defaults(func=_cmd_generate)

    p_off = sub.add_parser("offsets", help="pair reference and candidate boundary lists")
    p_off.add_argument("reference", help="file of boundary indices, one per line")
    p_off.add_argument("candidate", help="file of boundary indices, one per line")
    _add_output_flags(p_off)
    p_off.set_defaults(func=_cmd_offsets)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RULES
    except MissingFeatureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RULES
    except InvalidConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidDataError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
