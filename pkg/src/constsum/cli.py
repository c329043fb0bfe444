"""Command-line entry point.

Subcommands:
  probe      ask the chat model to enumerate topics per macro-topic
  summarize  run the two-stage summarization over a corpus into a run dir
  evaluate   score run-dir summaries (optionally against references / a judge)
  report     aggregate a metrics CSV into macro tables and plot datasets

Every chat call is recorded to a transcript; `--replay <transcript>` serves
the recorded responses instead of calling any provider, so replayed runs
never touch the network and are byte-reproducible.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__, corpus as corpus_mod, report as report_mod, rundir
from .config import ConfigError, RunConfig, load_config
from .pipeline import ChatSettings, PipelineError, summarize_topic
from .probe import run_probe
from .providers import (
    ChatProvider,
    ChatRequest,
    ChatResponse,
    CostLedger,
    HashEmbedder,
    HttpChatProvider,
    MockMaskedLM,
    ParseError,
    ProviderError,
    ScriptedChatProvider,
    SidecarClient,
    SyntheticChatProvider,
    TranscriptRecorder,
    TranscriptReplayer,
)
from .semeval import compute_metric_row, evaluate_against_reference, qualitative_rate

log = logging.getLogger("constsum.cli")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class _LedgerCharger(ChatProvider):
    """Charges replayed calls to the ledger so replay runs cost-account
    identically to the recorded run."""

    def __init__(self, inner: ChatProvider, ledger: CostLedger):
        self.inner = inner
        self.ledger = ledger

    def chat(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.chat(request)
        self.ledger.add(request.model, response.prompt_tokens, response.completion_tokens)
        return response


def _mode_overrides(args) -> dict:
    overrides: dict = {"modes": {}, "paths": {}}
    if getattr(args, "replay", None):
        overrides["modes"]["transcript"] = "replay"
        overrides["paths"]["replay_transcript"] = args.replay
    elif getattr(args, "record", False):
        overrides["modes"]["transcript"] = "record"
    return overrides


def _build_chat(cfg: RunConfig, ledger: CostLedger, provider_name: str | None = None):
    """Inner chat provider per config; replay mode ignores the provider."""
    if cfg.transcript_mode == "replay":
        replayer = TranscriptReplayer(cfg.replay_path)
        return _LedgerCharger(replayer, ledger), replayer
    name = provider_name or cfg.chat_provider
    if name == "synthetic":
        return SyntheticChatProvider(ledger=ledger), None
    if name == "scripted":
        return ScriptedChatProvider.from_json(cfg.script_path, ledger=ledger), None
    if name == "http":
        api_key = cfg.api_key()
        if not api_key:
            raise ConfigError([
                f"chat.provider 'http' needs the API key in ${cfg.api_key_env}"])
        return HttpChatProvider(cfg.endpoint, api_key=api_key, ledger=ledger), None
    raise ConfigError([f"unknown chat provider {name!r}"])


def _build_embedder(cfg: RunConfig):
    if cfg.embedder == "sidecar":
        return SidecarClient(cfg.sidecar_url)
    return HashEmbedder()


def _build_masked_lm(cfg: RunConfig):
    if cfg.embedder == "sidecar":
        return SidecarClient(cfg.sidecar_url)
    return MockMaskedLM()


def _warn_unconsumed(replayer: TranscriptReplayer | None) -> None:
    if replayer is None:
        return
    try:
        replayer.assert_fully_consumed()
    except ProviderError as exc:
        log.warning("%s", exc)


def _split_ids(value: str) -> list[str]:
    return [part for part in (p.strip() for p in value.split(",")) if part]


def _transcript_out(cfg: RunConfig, explicit: str | None, out: str) -> Path:
    """Where to write this run's transcript; never the replay source itself."""
    path = Path(explicit) if explicit else Path(out).with_suffix(".transcript.log")
    if cfg.replay_path is not None and path.resolve() == cfg.replay_path.resolve():
        raise ConfigError([
            f"transcript output {path} would overwrite the replay source; "
            f"pass a different --transcript"])
    return path


def cmd_probe(args) -> int:
    cfg = load_config(args.config, _mode_overrides(args))
    taxonomy = corpus_mod.load_taxonomy(cfg.taxonomy_path)
    if args.macros == "all":
        macro_ids = list(taxonomy.macros)
    else:
        macro_ids = _split_ids(args.macros)
        unknown = [m for m in macro_ids if m not in taxonomy.macros]
        if unknown:
            raise ConfigError([f"unknown macro id {m!r}" for m in unknown])

    ledger = CostLedger(pricing=dict(cfg.pricing))
    chat, replayer = _build_chat(cfg, ledger)
    embedder = _build_embedder(cfg)
    transcript = _transcript_out(cfg, args.transcript, args.out)
    reports = []
    with TranscriptRecorder(chat, transcript) as recorded:
        for macro_id in macro_ids:
            report = run_probe(
                taxonomy.macros[macro_id], taxonomy, recorded, embedder,
                model=cfg.tiers[0].model,
                system_role=cfg.system_role,
                max_output_tokens=cfg.max_output_tokens,
                strict=cfg.strict_parse,
                direction=cfg.match_direction,
            )
            log.info("probe %s: n=%d n'=%d mean=%.4f", macro_id,
                     report.n_actual, report.n_generated, report.mean_sim)
            reports.append(report)
    _warn_unconsumed(replayer)
    report_mod.write_probe_reports(reports, args.out)
    log.info("wrote %s (%d macro rows); chat cost $%s",
             args.out, len(reports), ledger.total)
    return EXIT_OK


def cmd_summarize(args) -> int:
    overrides = _mode_overrides(args)
    if args.corpus:
        overrides["paths"]["corpus"] = args.corpus
    if args.taxonomy:
        overrides["paths"]["taxonomy"] = args.taxonomy
    if args.provider:
        overrides["chat"] = {"provider": args.provider}
    cfg = load_config(args.config, overrides)
    if cfg.corpus_path is None:
        raise ConfigError(["summarize needs a corpus (--corpus or paths.corpus)"])

    run_dir = Path(args.run_dir)
    if run_dir.exists() and any(run_dir.iterdir()):
        log.error("run directory %s already exists and is not empty", run_dir)
        return EXIT_RUNTIME

    taxonomy = corpus_mod.load_taxonomy(cfg.taxonomy_path)
    rules = corpus_mod.load_rules(cfg.rules_path) if cfg.anonymize else None
    corpus = corpus_mod.load_corpus(cfg.corpus_path, taxonomy, rules=rules)
    if args.topics == "all":
        topic_ids = corpus.topic_ids()
    else:
        topic_ids = _split_ids(args.topics)
        unknown = [t for t in topic_ids if t not in corpus.topic_ids()]
        if unknown:
            raise ConfigError([f"topic {t!r} not present in the corpus" for t in unknown])

    settings = ChatSettings(
        tiers=cfg.tiers,
        max_output_tokens=cfg.max_output_tokens,
        system_role=cfg.system_role,
        strict_parse=cfg.strict_parse,
        retry_on_violation=cfg.retry_on_violation,
    )
    ledger = CostLedger(pricing=dict(cfg.pricing))
    chat, replayer = _build_chat(cfg, ledger, args.provider)

    completed: list[str] = []
    failed: dict[str, str] = {}
    with TranscriptRecorder(chat, rundir.transcript_path(run_dir)) as recorded:
        for topic_id in topic_ids:
            try:
                summary, stage1_results = summarize_topic(
                    topic_id, corpus, recorded, settings)
            except PipelineError as exc:
                log.error("topic %s failed: %s", topic_id, exc)
                failed[topic_id] = str(exc)
                continue
            source_text = "\n".join(
                corpus_mod.collect(country, topic_id, corpus)
                for country in summary.countries)
            rundir.write_topic_artifacts(run_dir, summary, stage1_results, source_text)
            completed.append(topic_id)
            log.info("topic %s: %d countries merged", topic_id, len(summary.countries))
    _warn_unconsumed(replayer)

    rundir.write_ledger(run_dir, ledger)
    rundir.write_run_meta(run_dir, {
        "anonymize": cfg.anonymize,
        "chat_provider": args.provider or cfg.chat_provider,
        "max_output_tokens": cfg.max_output_tokens,
        "package_version": __version__,
        "source_join": "\n",
        "system_role": cfg.system_role,
        "tiers": [[t.model, t.context_tokens] for t in cfg.tiers],
        "topics_completed": completed,
        "topics_failed": failed,
        "topics_requested": list(topic_ids),
    })
    log.info("run directory %s: %d topics, chat cost $%s",
             run_dir, len(completed), ledger.total)
    if failed:
        log.error("%d topic(s) failed: %s", len(failed), ", ".join(sorted(failed)))
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config, _mode_overrides(args))
    stopwords = corpus_mod.load_stopwords(cfg.stopwords_path)
    topics = rundir.list_topics(args.run_dir)
    if args.topics != "all":
        wanted = _split_ids(args.topics)
        missing = [t for t in wanted if t not in topics]
        if missing:
            raise ConfigError([f"topic {t!r} not in run directory" for t in missing])
        topics = wanted

    if args.reference:
        taxonomy = corpus_mod.load_taxonomy(cfg.taxonomy_path)
        references = corpus_mod.load_reference_summaries(args.reference, taxonomy)
        rows = []
        for topic_id in topics:
            if topic_id not in references:
                log.warning("no reference summary for %s; skipped", topic_id)
                continue
            rows.append(evaluate_against_reference(
                references[topic_id], rundir.read_summary(args.run_dir, topic_id),
                stopwords))
        report_mod.write_reference_table(rows, args.out)
        log.info("wrote %s (%d reference rows)", args.out, len(rows))
        return EXIT_OK

    embedder = _build_embedder(cfg)
    masked_lm = _build_masked_lm(cfg)
    tuner = SidecarClient(cfg.sidecar_url) if cfg.sidecar_url else None
    rows = []
    ratings = []
    judge_chat = replayer = None
    recorder = None
    if args.judge_provider:
        ledger = CostLedger(pricing=dict(cfg.pricing))
        judge_chat, replayer = _build_chat(cfg, ledger, args.judge_provider)
        recorder = TranscriptRecorder(
            judge_chat, _transcript_out(cfg, args.transcript, args.out))
    try:
        for topic_id in topics:
            source = rundir.read_source(args.run_dir, topic_id)
            summary = rundir.read_summary(args.run_dir, topic_id)
            meta = rundir.read_summary_meta(args.run_dir, topic_id)
            rows.append(compute_metric_row(
                topic_id, len(meta["countries"]), source, summary, stopwords,
                embedder=embedder, masked_lm=masked_lm,
                blanc_cfg=cfg.blanc, blanc_tuner=tuner,
            ))
            if recorder is not None:
                rating = qualitative_rate(source, summary, recorder, cfg.judge)
                ratings.append((topic_id, rating))
    finally:
        if recorder is not None:
            recorder.close()
    _warn_unconsumed(replayer)

    report_mod.write_topic_table(rows, args.out)
    log.info("wrote %s (%d topic rows)", args.out, len(rows))
    if ratings:
        ratings_path = Path(args.out).with_suffix(".ratings.csv")
        report_mod.write_ratings(ratings, ratings_path)
        log.info("wrote %s (%d judged topics)", ratings_path, len(ratings))
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    taxonomy = corpus_mod.load_taxonomy(cfg.taxonomy_path)
    rows = report_mod.parse_topic_table(args.metrics)
    out_dir = Path(args.out_dir)
    report_mod.write_topic_table(rows, out_dir / "table4.csv")
    report_mod.write_macro_table(
        report_mod.aggregate(rows, taxonomy), out_dir / "table2_right.csv")
    report_mod.write_scatter(rows, out_dir / "fig3_scatter.csv")
    log.info("wrote table4.csv, table2_right.csv, fig3_scatter.csv to %s", out_dir)

    if args.projection_topic:
        if not args.run_dir:
            raise ConfigError(["--projection-topic needs --run-dir for stage-1 texts"])
        sidecar = SidecarClient(cfg.sidecar_url) if cfg.sidecar_url else None
        coords = report_mod.projection_dataset(
            args.projection_topic,
            rundir.read_stage1(args.run_dir, args.projection_topic),
            _build_embedder(cfg), sidecar)
        path = out_dir / f"fig2_projection_{args.projection_topic}.csv"
        report_mod.write_projection(coords, path)
        log.info("wrote %s", path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="constsum",
        description="Constitutional topic summarization pipeline and evaluation.")
    parser.add_argument("--version", action="version", version=f"constsum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_transcript_flags(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--record", action="store_true",
                           help="record chat calls (default mode)")
        group.add_argument("--replay", metavar="TRANSCRIPT",
                           help="serve responses from a recorded transcript; no network")

    p = sub.add_parser("probe", help="enumerate topics per macro-topic via the chat model")
    p.add_argument("--config", help="JSON config file (defaults are built in)")
    p.add_argument("--macros", default="all", help="comma-separated macro ids or 'all'")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--transcript", help="transcript path (default: <out>.transcript.log)")
    add_transcript_flags(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("summarize", help="two-stage summarization into a run directory")
    p.add_argument("--config")
    p.add_argument("--corpus", help="corpus TSV (overrides config paths.corpus)")
    p.add_argument("--taxonomy", help="taxonomy TSV (overrides config paths.taxonomy)")
    p.add_argument("--topics", default="all", help="comma-separated topic ids or 'all'")
    p.add_argument("--provider", choices=("synthetic", "scripted", "http"),
                   help="chat provider (overrides config chat.provider)")
    p.add_argument("--run-dir", required=True, help="output run directory (must be empty)")
    add_transcript_flags(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("evaluate", help="score run-directory summaries")
    p.add_argument("--config")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--topics", default="all")
    p.add_argument("--reference", help="reference summaries TSV; emits the reference table")
    p.add_argument("--judge-provider", choices=("synthetic", "scripted", "http"),
                   help="also collect LLM-judged 1-5 ratings with this provider")
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.add_argument("--transcript", help="judge transcript path")
    add_transcript_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate a metrics CSV into report files")
    p.add_argument("--config")
    p.add_argument("--metrics", required=True, help="per-topic metrics CSV from 'evaluate'")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--run-dir", help="run directory (for --projection-topic)")
    p.add_argument("--projection-topic", help="emit 2D projection CSV for this topic")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("CONSTSUM_LOG", "INFO"),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (ProviderError, ParseError, PipelineError, corpus_mod.ValidationError,
            OSError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
