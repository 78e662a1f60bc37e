"""Загрузка, отбор и сохранение корпуса исходных заметок"""
import csv
import io
import json
import logging
from typing import BinaryIO, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from notestd.core.models import FilterCriteria, SourceNote
from notestd.utils.artifacts import dumps_compact
from notestd.utils.exceptions import (
    CorpusEncodingError,
    DuplicateAccessionError,
    EmptyCorpusError,
    MalformedLineError,
    MissingColumnError,
)
from notestd.utils.logger import log_note_event, log_stage_operation

# Заметки бывают длиннее стандартного лимита поля модуля csv (128 КБ)
csv.field_size_limit(64 * 1024 * 1024)


def parse_corpus_csv(
    raw: bytes,
    text_column: str = "note_text",
    id_column: Optional[str] = None,
    run_id: Optional[str] = None,
) -> List[SourceNote]:
    """Разбор CSV выгрузки (RFC 4180, первая строка - заголовок)

    Без id_column номера accession присваиваются по порядку строк с "1". Остальные
    колонки сохраняются в metadata для фильтров. Строки с пустым текстом пропускаются
    с записью в лог.

    Raises:
        CorpusEncodingError: байты не декодируются как UTF-8
        MissingColumnError: нет колонки текста или номера
        EmptyCorpusError: нет строк данных
        DuplicateAccessionError: номер accession повторяется
    """
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise CorpusEncodingError(
            f"CSV не декодируется как UTF-8: позиция {e.start}",
            details={"position": e.start, "reason": e.reason},
        )

    reader = csv.DictReader(io.StringIO(text, newline=""))
    header = reader.fieldnames
    if not header:
        raise EmptyCorpusError("CSV пуст: нет заголовка")
    if text_column not in header:
        raise MissingColumnError(text_column, list(header))
    if id_column is not None and id_column not in header:
        raise MissingColumnError(id_column, list(header))

    notes: List[SourceNote] = []
    seen: Dict[str, int] = {}
    rows = 0
    for row_index, row in enumerate(reader, start=1):
        rows += 1
        line_number = reader.line_num
        accession = (row.get(id_column) or "").strip() if id_column else str(row_index)
        if accession in seen:
            raise DuplicateAccessionError(accession, line_number)

        note_text = row.get(text_column) or ""
        metadata = {
            key: value or ""
            for key, value in row.items()
            if key not in (text_column, id_column) and key is not None
        }
        try:
            note = SourceNote(accession_num=accession, note_text=note_text, metadata=metadata)
        except ValidationError as e:
            log_note_event("ingest", accession or f"row {row_index}", "строка пропущена", reason=e.errors()[0]["msg"], level=logging.WARNING, run_id=run_id)
            continue
        seen[accession] = line_number
        notes.append(note)

    if rows == 0:
        raise EmptyCorpusError(details={"header": list(header)})

    log_stage_operation("ingest", "CSV разобран", details={"rows": rows, "notes": len(notes)}, run_id=run_id)
    return notes


def _drop_reason(note: SourceNote, criteria: FilterCriteria) -> Optional[str]:
    length = len(note.note_text)
    if length < criteria.min_chars:
        return f"length={length} < min_chars={criteria.min_chars}"
    if criteria.allowed_note_kinds is not None and criteria.kind_column in note.metadata:
        kind = note.metadata[criteria.kind_column]
        if kind not in criteria.allowed_note_kinds:
            return f"{criteria.kind_column}={kind}"
    for column, allowed in criteria.column_filters.items():
        if column in note.metadata and note.metadata[column] not in allowed:
            return f"{column}={note.metadata[column]}"
    return None


def filter_notes(notes: List[SourceNote], criteria: FilterCriteria, run_id: Optional[str] = None) -> List[SourceNote]:
    """Отбор заметок по длине и необязательным колонкам (порядок сохраняется)

    Предикаты по колонкам применяются только к заметкам, у которых такая колонка есть.
    """
    kept: List[SourceNote] = []
    for note in notes:
        reason = _drop_reason(note, criteria)
        if reason is None:
            kept.append(note)
        else:
            log_note_event("ingest", note.accession_num, "заметка отброшена", reason=reason, run_id=run_id)
    log_stage_operation(
        "ingest",
        "Фильтрация",
        details={"input": len(notes), "kept": len(kept), "dropped": len(notes) - len(kept), "min_chars": criteria.min_chars},
        run_id=run_id,
    )
    return kept


def write_notes_jsonl(notes: List[SourceNote], sink: BinaryIO) -> int:
    """Запись заметок построчно: ключи accession_num и note_text, перевод строки LF"""
    for note in notes:
        sink.write((dumps_compact(note.model_dump()) + "\n").encode("utf-8"))
    return len(notes)


def read_notes_jsonl(source: BinaryIO) -> List[SourceNote]:
    """Чтение заметок из JSONL

    Raises:
        MalformedLineError: строка не JSON объект или без обязательных полей
        DuplicateAccessionError: номер accession повторяется
    """
    notes: List[SourceNote] = []
    seen = set()
    for line_number, raw_line in enumerate(source, start=1):
        try:
            line = raw_line.decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedLineError(line_number, "строка не в UTF-8")
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedLineError(line_number, f"не JSON: {e.msg}")
        if not isinstance(obj, dict) or "accession_num" not in obj or "note_text" not in obj:
            raise MalformedLineError(line_number, "ожидался объект с accession_num и note_text")
        try:
            note = SourceNote(accession_num=obj["accession_num"], note_text=obj["note_text"])
        except ValidationError as e:
            raise MalformedLineError(line_number, e.errors()[0]["msg"])
        if note.accession_num in seen:
            raise DuplicateAccessionError(note.accession_num, line_number)
        seen.add(note.accession_num)
        notes.append(note)
    return notes


def corpus_length_stats(notes: List[SourceNote]) -> Dict[str, float]:
    """Длина заметок в символах: n, среднее, выборочное SD, минимум, максимум"""
    if not notes:
        return {"n": 0, "mean": 0.0, "sd": 0.0, "min": 0, "max": 0}
    lengths = np.array([len(note.note_text) for note in notes], dtype=float)
    sd = float(lengths.std(ddof=1)) if len(lengths) > 1 else 0.0
    return {
        "n": len(notes),
        "mean": float(lengths.mean()),
        "sd": sd,
        "min": int(lengths.min()),
        "max": int(lengths.max()),
    }
