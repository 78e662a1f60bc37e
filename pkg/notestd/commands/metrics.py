"""Команда metrics: standardized.jsonl -> summary.json, summary.txt, hist_<metric>.svg"""
import argparse
from pathlib import Path

from notestd.commands.common import RunContext, pair_with_sources, read_notes, read_standardized
from notestd.services.pipeline import aggregate, compute_note_stats
from notestd.services.render import render_histograms, render_report
from notestd.utils.artifacts import write_bytes_atomic
from notestd.utils.defaults import NOTES_FILE, STANDARDIZED_FILE, SUMMARY_FILE, SUMMARY_TEXT_FILE
from notestd.utils.exceptions import EXIT_OK
from notestd.utils.logger import logger


def register(subparsers, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("metrics", parents=[common], help="сводная статистика и гистограммы")
    parser.add_argument("standardized", type=Path, nargs="?", default=None, help=f"по умолчанию <out-dir>/{STANDARDIZED_FILE}")
    parser.add_argument("--notes", type=Path, default=None, help=f"исходные заметки для длины источника, по умолчанию <out-dir>/{NOTES_FILE}")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, context: RunContext) -> int:
    config = context.load_config(args)
    standardized = read_standardized(context.input_path(args.standardized, STANDARDIZED_FILE))
    notes = read_notes(context.input_path(args.notes, NOTES_FILE))

    stats = [compute_note_stats(source, note) for source, note in pair_with_sources(standardized, notes)]
    summary = aggregate(stats, bins=config.bins)

    write_bytes_atomic(context.output_path(SUMMARY_FILE), render_report(summary, "json"))
    text = render_report(summary, "text")
    write_bytes_atomic(context.output_path(SUMMARY_TEXT_FILE), text)
    for name, svg in render_histograms(summary).items():
        write_bytes_atomic(context.output_path(name), svg)

    logger.info(f"Сводка по корпусу:\n{text.decode('utf-8').rstrip()}", extra={"run_id": context.run_id, "stage": "metrics"})
    context.counts.update({"notes": summary.n, "histograms": len(summary.metrics)})
    return EXIT_OK
