"""Aggregation of per-topic metric rows and plot-ready CSV emission.

Output files use the per-topic table's column order; missing model-backed
values (S-BERT, BH, BT) stay blank in CSVs and are excluded from means
rather than zero-filled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path

from .corpus import Taxonomy
from .lexmetrics import MetricRow
from .probe import ProbeReport
from .providers.base import Embedder

METRIC_COLUMNS = (
    "num_countries", "cr", "r1", "r2", "rl", "rlsum", "novelty",
    "jaccard", "dice", "sbert_sim", "tfidf_sim", "blanc_help", "blanc_tune",
)

SCATTER_METRICS = (
    "num_countries", "r1", "r2", "rl", "rlsum", "novelty", "jaccard",
    "dice", "sbert_sim", "tfidf_sim", "blanc_help", "blanc_tune",
)

TABLE_HEADER = (
    "topic_id", "num_countries", "cr", "r1", "r2", "rl", "rlsum",
    "novelty", "jaccard", "dice", "sbert", "tfidf", "bh", "bt",
)


@dataclass(frozen=True)
class MacroAggregate:
    macro_id: str
    num_countries: float | None = None
    cr: float | None = None
    r1: float | None = None
    r2: float | None = None
    rl: float | None = None
    rlsum: float | None = None
    novelty: float | None = None
    jaccard: float | None = None
    dice: float | None = None
    sbert_sim: float | None = None
    tfidf_sim: float | None = None
    blanc_help: float | None = None
    blanc_tune: float | None = None


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def aggregate(rows: list[MetricRow], taxonomy: Taxonomy) -> list[MacroAggregate]:
    """Per-macro column means; a multi-macro topic contributes to each of its
    macros, and a column's mean skips rows where that value is missing."""
    by_macro: dict[str, list[MetricRow]] = {}
    for row in rows:
        topic = taxonomy.topics.get(row.topic_id)
        if topic is None:
            raise KeyError(f"metric row references unknown topic {row.topic_id!r}")
        for macro_id in topic.macro_ids:
            by_macro.setdefault(macro_id, []).append(row)
    out = []
    for macro_id in taxonomy.macros:
        members = by_macro.get(macro_id)
        if not members:
            continue
        means = {
            column: _mean([
                float(getattr(r, column)) for r in members
                if getattr(r, column) is not None
            ])
            for column in METRIC_COLUMNS
        }
        out.append(MacroAggregate(macro_id=macro_id, **means))
    return out


def scatter_dataset(rows: list[MetricRow]) -> list[tuple[str, float, str, float | None]]:
    """Long-format (topic_id, cr, metric, value) records for CR-vs-criterion plots."""
    records = []
    for row in rows:
        for metric in SCATTER_METRICS:
            value = getattr(row, metric)
            records.append(
                (row.topic_id, row.cr, metric,
                 None if value is None else float(value)))
    return records


def projection_dataset(
    topic_id: str,
    stage1_results: list,
    embedder: Embedder,
    sidecar,
) -> list[tuple[str, float, float]]:
    """Country-level summary embeddings flattened to 2D by the sidecar."""
    if sidecar is None:
        raise RuntimeError(
            f"projection for topic {topic_id!r} needs the sidecar service")
    if len(stage1_results) < 3:
        raise ValueError(
            f"projection for topic {topic_id!r} needs >= 3 countries, "
            f"got {len(stage1_results)}")
    vectors = embedder.embed([r.compressed_text for r in stage1_results])
    coords = sidecar.project(vectors)
    return [
        (r.country, x, y) for r, (x, y) in zip(stage1_results, coords)
    ]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        raise TypeError("boolean is not a metric value")
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _write_csv(path: str | Path, header: tuple[str, ...], rows: list[tuple]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_topic_table(rows: list[MetricRow], path: str | Path) -> None:
    """Per-topic results table (one row per evaluated topic)."""
    _write_csv(path, TABLE_HEADER, [
        (
            r.topic_id, _fmt(r.num_countries), _fmt(r.cr), _fmt(r.r1),
            _fmt(r.r2), _fmt(r.rl), _fmt(r.rlsum), _fmt(r.novelty),
            _fmt(r.jaccard), _fmt(r.dice), _fmt(r.sbert_sim),
            _fmt(r.tfidf_sim), _fmt(r.blanc_help), _fmt(r.blanc_tune),
        )
        for r in rows
    ])


def write_macro_table(aggregates: list[MacroAggregate], path: str | Path) -> None:
    """Per-macro mean table."""
    header = ("macro_id",) + TABLE_HEADER[1:]
    _write_csv(path, header, [
        (
            a.macro_id, _fmt(a.num_countries), _fmt(a.cr), _fmt(a.r1),
            _fmt(a.r2), _fmt(a.rl), _fmt(a.rlsum), _fmt(a.novelty),
            _fmt(a.jaccard), _fmt(a.dice), _fmt(a.sbert_sim),
            _fmt(a.tfidf_sim), _fmt(a.blanc_help), _fmt(a.blanc_tune),
        )
        for a in aggregates
    ])


def write_reference_table(rows: list[MetricRow], path: str | Path) -> None:
    """Reference-mode table: no country counts, no BLANC columns."""
    header = ("topic_id", "cr", "r1", "r2", "rl", "rlsum", "novelty",
              "jaccard", "dice", "sbert", "tfidf")
    _write_csv(path, header, [
        (
            r.topic_id, _fmt(r.cr), _fmt(r.r1), _fmt(r.r2), _fmt(r.rl),
            _fmt(r.rlsum), _fmt(r.novelty), _fmt(r.jaccard), _fmt(r.dice),
            _fmt(r.sbert_sim), _fmt(r.tfidf_sim),
        )
        for r in rows
    ])


def write_scatter(rows: list[MetricRow], path: str | Path) -> None:
    _write_csv(path, ("topic_id", "cr", "metric", "value"), [
        (topic_id, _fmt(cr), metric, _fmt(value))
        for topic_id, cr, metric, value in scatter_dataset(rows)
    ])


def write_projection(
    coords: list[tuple[str, float, float]], path: str | Path
) -> None:
    _write_csv(path, ("country", "x", "y"), [
        (country, _fmt(x), _fmt(y)) for country, x, y in coords
    ])


def write_probe_reports(reports: list[ProbeReport], path: str | Path) -> None:
    """Probe statistics table: one row per macro-topic."""
    header = ("macro_id", "n_actual", "n_generated", "min_sim", "max_sim",
              "mean_sim", "best_topic_id", "least_topic_id")
    rows = []
    for report in reports:
        best = max(report.matches, key=lambda m: m.similarity)
        least = min(report.matches, key=lambda m: m.similarity)
        rows.append((
            report.macro_id, _fmt(report.n_actual), _fmt(report.n_generated),
            _fmt(report.min_sim), _fmt(report.max_sim), _fmt(report.mean_sim),
            best.actual_topic_id, least.actual_topic_id,
        ))
    _write_csv(path, header, rows)


def write_ratings(ratings: list[tuple[str, object]], path: str | Path) -> None:
    """Judge ratings table: (topic_id, QualityRating) pairs."""
    _write_csv(path, ("topic_id", "informative", "quality", "coherence",
                      "attributable", "overall"), [
        (topic_id, _fmt(r.informative), _fmt(r.quality), _fmt(r.coherence),
         _fmt(r.attributable), _fmt(r.overall))
        for topic_id, r in ratings
    ])


def read_csv(path: str | Path) -> tuple[tuple[str, ...], list[tuple[str, ...]]]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        return header, [tuple(row) for row in reader]


def reemit_csv(path: str | Path, out_path: str | Path) -> None:
    """Parse a CSV written by this module and write it back out."""
    header, rows = read_csv(path)
    _write_csv(out_path, header, rows)


def parse_topic_table(path: str | Path) -> list[MetricRow]:
    """Read a per-topic table back into MetricRows (blank cells -> None)."""
    header, rows = read_csv(path)
    if header != TABLE_HEADER:
        raise ValueError(
            f"{path}: expected per-topic header {TABLE_HEADER}, got {header}")
    field_names = ("topic_id",) + tuple(
        {"sbert": "sbert_sim", "tfidf": "tfidf_sim",
         "bh": "blanc_help", "bt": "blanc_tune"}.get(col, col)
        for col in TABLE_HEADER[1:])
    out = []
    for row in rows:
        if len(row) != len(field_names):
            raise ValueError(f"{path}: row has {len(row)} cells, expected {len(field_names)}")
        values: dict = {"topic_id": row[0]}
        for name, cell in zip(field_names[1:], row[1:]):
            if cell == "":
                values[name] = None
            elif name == "num_countries":
                values[name] = int(cell)
            else:
                values[name] = float(cell)
        out.append(MetricRow(**values))
    return out
