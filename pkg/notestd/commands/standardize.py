"""Команда standardize: notes.jsonl -> standardized.jsonl, failures.jsonl, stats.csv"""
import argparse
from pathlib import Path

from notestd.commands.common import RunContext, build_mock_backend, read_notes, read_standardized
from notestd.core.config import BackendKind, RunConfig
from notestd.core.models import STAT_METRICS
from notestd.core.resources import load_resources
from notestd.services.llm_backend import LLMBackend
from notestd.services.pipeline import (
    compute_note_stats,
    pending_notes,
    run_standardization,
    standardized_row,
)
from notestd.services.rules_engine import RuleBackend
from notestd.utils.artifacts import write_csv, write_jsonl
from notestd.utils.defaults import FAILURES_FILE, NOTES_FILE, STANDARDIZED_FILE, STATS_FILE
from notestd.utils.exceptions import EXIT_OK, EXIT_PARTIAL
from notestd.utils.logger import log_stage_operation

STATS_CSV_HEADER = ("accession_num",) + STAT_METRICS


def build_backend(config: RunConfig, run_id: str):
    """Бэкенд по RunConfig.backend

    Raises:
        ConfigError: для llm не задан API ключ
    """
    if config.backend == BackendKind.LLM:
        return LLMBackend.from_config(config.llm, run_id=run_id)
    resources = load_resources(config.resources_dir, config.max_edit_distance)
    if config.backend == BackendKind.MOCK:
        return build_mock_backend(config, resources, run_id)
    return RuleBackend(resources)


def register(subparsers, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("standardize", parents=[common], help="стандартизировать заметки выбранным бэкендом")
    parser.add_argument("notes", type=Path, nargs="?", default=None, help=f"по умолчанию <out-dir>/{NOTES_FILE}")
    parser.add_argument("--resume", action="store_true", default=None, help="пропустить заметки, уже записанные в standardized.jsonl")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, context: RunContext) -> int:
    config = context.load_config(args)
    notes = read_notes(context.input_path(args.notes, NOTES_FILE))
    backend = build_backend(config, context.run_id)

    output = config.out_dir / STANDARDIZED_FILE
    done = {}
    if config.resume and output.exists():
        done = dict(read_standardized(output))
        log_stage_operation("standardize", "Продолжение запуска", details={"already_done": len(done)}, run_id=context.run_id)
    todo = pending_notes(notes, set(done))

    corpus_run = run_standardization(todo, backend, parallelism=config.parallelism, run_id=context.run_id)
    results = dict(done)
    results.update({source.accession_num: note for source, note in corpus_run.results})

    # Порядок строк - порядок входа, независимо от параллелизма и продолжения
    ordered = [(source, results[source.accession_num]) for source in notes if source.accession_num in results]
    write_jsonl(context.output_path(STANDARDIZED_FILE), (standardized_row(source, note) for source, note in ordered))
    write_jsonl(context.output_path(FAILURES_FILE), (record.model_dump(mode="json") for record in corpus_run.failures))
    stats_rows = []
    for source, note in ordered:
        stats = compute_note_stats(source, note)
        stats_rows.append([stats.accession_num] + [getattr(stats, metric) for metric in STAT_METRICS])
    write_csv(context.output_path(STATS_FILE), STATS_CSV_HEADER, stats_rows)

    context.counts.update({
        "notes": len(notes),
        "resumed": len(done),
        "standardized": len(ordered),
        "failures": len(corpus_run.failures),
    })
    return EXIT_PARTIAL if corpus_run.failures else EXIT_OK
