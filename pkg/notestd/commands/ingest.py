"""Команда ingest: CSV выгрузка -> notes.jsonl"""
import argparse
import io
from pathlib import Path
from typing import Dict, List

from notestd.commands.common import RunContext
from notestd.core.models import FilterCriteria
from notestd.services.corpus import corpus_length_stats, filter_notes, parse_corpus_csv, write_notes_jsonl
from notestd.utils.artifacts import write_bytes_atomic
from notestd.utils.defaults import NOTES_FILE
from notestd.utils.exceptions import EXIT_OK, ConfigError
from notestd.utils.logger import log_stage_operation


def parse_column_filters(values: List[str]) -> Dict[str, List[str]]:
    """Флаги --filter COLUMN=V1,V2 -> {column: [v1, v2]}

    Raises:
        ConfigError: нет знака '=' или пустое имя колонки
    """
    filters: Dict[str, List[str]] = {}
    for value in values:
        column, sep, allowed = value.partition("=")
        if not sep or not column.strip():
            raise ConfigError(f"Некорректный фильтр '{value}': ожидается COLUMN=V1,V2")
        filters.setdefault(column.strip(), []).extend(item.strip() for item in allowed.split(",") if item.strip())
    return filters


def register(subparsers, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("ingest", parents=[common], help="загрузить CSV и отобрать заметки")
    parser.add_argument("csv", type=Path, help="CSV выгрузка с колонкой текста заметки")
    parser.add_argument("--text-column", default="note_text", help="колонка с текстом заметки")
    parser.add_argument("--id-column", default=None, help="колонка с номером accession (иначе нумерация строк с 1)")
    parser.add_argument("--kind-column", default="note_kind", help="колонка вида заметки")
    parser.add_argument("--note-kinds", default=None, help="разрешенные виды заметок через запятую")
    parser.add_argument("--filter", dest="filters", action="append", default=[], metavar="COLUMN=V1,V2", help="фильтр по колонке метаданных")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, context: RunContext) -> int:
    config = context.load_config(args)
    csv_path = context.input_path(args.csv, "")

    notes = parse_corpus_csv(csv_path.read_bytes(), text_column=args.text_column, id_column=args.id_column, run_id=context.run_id)
    kinds = frozenset(item.strip() for item in args.note_kinds.split(",") if item.strip()) if args.note_kinds else None
    criteria = FilterCriteria(
        min_chars=config.min_chars,
        allowed_note_kinds=kinds,
        kind_column=args.kind_column,
        column_filters=parse_column_filters(args.filters),
    )
    kept = filter_notes(notes, criteria, run_id=context.run_id)

    buffer = io.BytesIO()
    write_notes_jsonl(kept, buffer)
    write_bytes_atomic(context.output_path(NOTES_FILE), buffer.getvalue())

    context.counts.update({"parsed": len(notes), "kept": len(kept), "dropped": len(notes) - len(kept)})
    log_stage_operation("ingest", "Длина отобранных заметок", details=corpus_length_stats(kept), run_id=context.run_id)
    return EXIT_OK
