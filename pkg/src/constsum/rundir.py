"""Run-directory layout: every artifact a summarization run produces.

    <run-dir>/
      sources/<topic>.txt            concatenated per-country input, merge order
      stage1/<topic>/<country>.txt   compressed text
      stage1/<topic>/<country>.meta.json
      stage2/<topic>.txt             final cross-country summary
      stage2/<topic>.meta.json
      transcript.log                 every chat request/response (replayable)
      ledger.json                    per-call token costs
      run_meta.json                  run parameters (no timestamps)

Nothing here includes wall-clock state, so replaying a transcript rebuilds
the directory byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

from .pipeline import Stage1Result, TopicSummary
from .providers.pricing import CostLedger

TRANSCRIPT_NAME = "transcript.log"
LEDGER_NAME = "ledger.json"
META_NAME = "run_meta.json"


def dump_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def transcript_path(run_dir: str | Path) -> Path:
    return Path(run_dir) / TRANSCRIPT_NAME


def write_topic_artifacts(
    run_dir: str | Path,
    summary: TopicSummary,
    stage1_results: list[Stage1Result],
    source_text: str,
) -> None:
    run_dir = Path(run_dir)
    topic = summary.topic_id
    _write_text(run_dir / "sources" / f"{topic}.txt", source_text)
    for result in stage1_results:
        stem = run_dir / "stage1" / topic / result.country
        _write_text(stem.with_suffix(".txt"), result.compressed_text)
        dump_json(stem.with_suffix(".meta.json"), {
            "country": result.country,
            "topic_id": result.topic_id,
            "model": result.model,
            "keywords": list(result.keywords),
            "keyword_violations": list(result.keyword_violations),
            "chars": len(result.compressed_text),
        })
    _write_text(run_dir / "stage2" / f"{topic}.txt", summary.final_text)
    dump_json(run_dir / "stage2" / f"{topic}.meta.json", {
        "topic_id": topic,
        "countries": list(summary.countries),
        "keyword_union": list(summary.keyword_union),
        "violation_log": list(summary.violation_log),
        "chars": len(summary.final_text),
    })


def write_ledger(run_dir: str | Path, ledger: CostLedger) -> None:
    dump_json(Path(run_dir) / LEDGER_NAME, ledger.as_dict())


def write_run_meta(run_dir: str | Path, meta: dict) -> None:
    dump_json(Path(run_dir) / META_NAME, meta)


def list_topics(run_dir: str | Path) -> list[str]:
    stage2 = Path(run_dir) / "stage2"
    if not stage2.is_dir():
        raise FileNotFoundError(f"{run_dir} has no stage2/ directory")
    return sorted(p.stem for p in stage2.glob("*.txt"))


def read_summary(run_dir: str | Path, topic_id: str) -> str:
    return (Path(run_dir) / "stage2" / f"{topic_id}.txt").read_text(encoding="utf-8")


def read_summary_meta(run_dir: str | Path, topic_id: str) -> dict:
    path = Path(run_dir) / "stage2" / f"{topic_id}.meta.json"
    return json.loads(path.read_text(encoding="utf-8"))


def read_source(run_dir: str | Path, topic_id: str) -> str:
    return (Path(run_dir) / "sources" / f"{topic_id}.txt").read_text(encoding="utf-8")


def read_stage1(run_dir: str | Path, topic_id: str) -> list[Stage1Result]:
    """Rebuild Stage-1 results (minus raw responses) from disk, merge order."""
    meta = read_summary_meta(run_dir, topic_id)
    results = []
    for country in meta["countries"]:
        stem = Path(run_dir) / "stage1" / topic_id / country
        info = json.loads(stem.with_suffix(".meta.json").read_text(encoding="utf-8"))
        results.append(Stage1Result(
            country=country,
            topic_id=topic_id,
            keywords=list(info["keywords"]),
            compressed_text=stem.with_suffix(".txt").read_text(encoding="utf-8"),
            raw_response="",
            keyword_violations=list(info["keyword_violations"]),
            model=info["model"],
        ))
    return results
