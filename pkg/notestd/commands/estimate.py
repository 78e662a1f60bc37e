"""Команда estimate: notes.jsonl -> estimate.json (стоимость и время обработки моделью)"""
import argparse
from pathlib import Path

from notestd.commands.common import RunContext, read_notes
from notestd.services.llm_backend import estimate_cost
from notestd.utils.artifacts import write_json
from notestd.utils.defaults import ESTIMATE_FILE, NOTES_FILE
from notestd.utils.exceptions import EXIT_OK
from notestd.utils.logger import log_stage_operation


def register(subparsers, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("estimate", parents=[common], help="оценить стоимость и время стандартизации моделью")
    parser.add_argument("notes", type=Path, nargs="?", default=None, help=f"по умолчанию <out-dir>/{NOTES_FILE}")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, context: RunContext) -> int:
    config = context.load_config(args)
    notes = read_notes(context.input_path(args.notes, NOTES_FILE))

    estimate = estimate_cost(notes, config.llm, parallelism=config.parallelism)
    write_json(context.output_path(ESTIMATE_FILE), estimate.model_dump(mode="json"))

    log_stage_operation(
        "estimate",
        "Оценка стоимости",
        details={
            "notes": estimate.notes,
            "total_cost_usd": round(estimate.total_cost, 4),
            "serial_time_s": round(estimate.serial_time, 1),
            "parallel_time_s": round(estimate.parallel_time, 1),
            "parallelism": estimate.parallelism,
        },
        run_id=context.run_id,
    )
    context.counts["notes"] = estimate.notes
    return EXIT_OK
