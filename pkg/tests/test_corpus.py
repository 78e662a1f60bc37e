"""Тесты загрузки и отбора корпуса"""
import io

import pytest

from notestd.core.models import FilterCriteria, SourceNote
from notestd.services.corpus import (
    corpus_length_stats,
    filter_notes,
    parse_corpus_csv,
    read_notes_jsonl,
    write_notes_jsonl,
)
from notestd.utils.exceptions import (
    CorpusEncodingError,
    DuplicateAccessionError,
    EmptyCorpusError,
    MalformedLineError,
    MissingColumnError,
)

from tests.conftest import FIXTURES_DIR


@pytest.fixture
def neuro_csv():
    return (FIXTURES_DIR / "neuro.csv").read_bytes()


def test_parse_keeps_multiline_text_and_metadata(neuro_csv):
    """Многострочный текст в кавычках и прочие колонки сохраняются"""
    notes = parse_corpus_csv(neuro_csv, text_column="note_text", id_column="accession")

    assert [note.accession_num for note in notes] == ["A-100", "A-101", "A-102", "A-103"]
    assert notes[0].note_text.startswith("NEUROLOGY CLINIC NOTE\nChief Complaint:")
    assert notes[0].metadata == {"note_kind": "progress", "setting": "outpatient"}


def test_parse_skips_blank_text_rows(neuro_csv):
    """Строка с пустым текстом пропускается, остальные разбираются"""
    notes = parse_corpus_csv(neuro_csv, id_column="accession")
    assert "A-104" not in {note.accession_num for note in notes}


def test_parse_numbers_rows_without_id_column():
    raw = b"note_text\nfirst note\nsecond note\n"
    notes = parse_corpus_csv(raw)
    assert [note.accession_num for note in notes] == ["1", "2"]


def test_parse_accepts_utf8_bom():
    raw = "\ufeffnote_text\nпациент жалуется\n".encode("utf-8")
    assert parse_corpus_csv(raw)[0].note_text == "пациент жалуется"


@pytest.mark.parametrize(
    "raw,error",
    [
        (b"\xff\xfe\x00bad", CorpusEncodingError),
        (b"text\nsome note\n", MissingColumnError),
        (b"note_text\n", EmptyCorpusError),
        (b"", EmptyCorpusError),
        (b"id,note_text\n1,a\n1,b\n", DuplicateAccessionError),
    ],
)
def test_parse_errors(raw, error):
    """Ошибки разбора CSV - типизированные исключения"""
    with pytest.raises(error):
        parse_corpus_csv(raw, id_column="id" if raw.startswith(b"id,") else None)


def test_missing_id_column_is_reported():
    with pytest.raises(MissingColumnError) as exc_info:
        parse_corpus_csv(b"note_text\nabc\n", id_column="accession")
    assert "accession" in exc_info.value.message


def test_filter_by_length_keeps_order(neuro_csv):
    notes = parse_corpus_csv(neuro_csv, id_column="accession")
    kept = filter_notes(notes, FilterCriteria(min_chars=50))
    assert [note.accession_num for note in kept] == ["A-100", "A-101", "A-102"]


def test_filter_min_chars_is_inclusive():
    """Заметка длиной ровно min_chars проходит фильтр"""
    notes = [SourceNote(accession_num="1", note_text="x" * 10), SourceNote(accession_num="2", note_text="x" * 9)]
    kept = filter_notes(notes, FilterCriteria(min_chars=10))
    assert [note.accession_num for note in kept] == ["1"]


def test_filter_by_kind_and_columns(neuro_csv):
    notes = parse_corpus_csv(neuro_csv, id_column="accession")

    by_kind = filter_notes(notes, FilterCriteria(min_chars=0, allowed_note_kinds=frozenset({"progress"})))
    assert [note.accession_num for note in by_kind] == ["A-100", "A-101", "A-103"]

    by_setting = filter_notes(notes, FilterCriteria(min_chars=50, column_filters={"setting": ["outpatient"]}))
    assert [note.accession_num for note in by_setting] == ["A-100", "A-102"]


def test_column_filters_skip_notes_without_column():
    """Предикат по колонке не применяется к заметкам без этой колонки"""
    notes = [SourceNote(accession_num="1", note_text="no metadata here")]
    kept = filter_notes(notes, FilterCriteria(min_chars=0, allowed_note_kinds=frozenset({"progress"})))
    assert kept == notes


def test_jsonl_preserves_notes(sample_notes):
    """Запись и чтение JSONL сохраняют заметки и порядок"""
    buffer = io.BytesIO()
    assert write_notes_jsonl(sample_notes, buffer) == len(sample_notes)

    raw = buffer.getvalue()
    assert raw.endswith(b"\n") and b"\r\n" not in raw
    assert read_notes_jsonl(io.BytesIO(raw)) == sample_notes


def test_jsonl_skips_blank_lines():
    raw = b'{"accession_num": "1", "note_text": "a"}\n\n{"accession_num": "2", "note_text": "b"}\n'
    assert [note.accession_num for note in read_notes_jsonl(io.BytesIO(raw))] == ["1", "2"]


@pytest.mark.parametrize(
    "raw,line_number",
    [
        (b"not json\n", 1),
        (b'{"accession_num": "1", "note_text": "a"}\n[1, 2]\n', 2),
        (b'{"accession_num": "1"}\n', 1),
        (b'{"accession_num": "1", "note_text": "   "}\n', 1),
    ],
)
def test_jsonl_malformed_line(raw, line_number):
    """Некорректная строка JSONL сообщает свой номер"""
    with pytest.raises(MalformedLineError) as exc_info:
        read_notes_jsonl(io.BytesIO(raw))
    assert exc_info.value.line_number == line_number


def test_jsonl_duplicate_accession():
    raw = b'{"accession_num": "1", "note_text": "a"}\n{"accession_num": "1", "note_text": "b"}\n'
    with pytest.raises(DuplicateAccessionError):
        read_notes_jsonl(io.BytesIO(raw))


def test_length_stats():
    notes = [SourceNote(accession_num=str(i), note_text="x" * length) for i, length in enumerate((2, 4, 6))]
    stats = corpus_length_stats(notes)
    assert stats["n"] == 3
    assert stats["mean"] == pytest.approx(4.0)
    assert stats["sd"] == pytest.approx(2.0)
    assert (stats["min"], stats["max"]) == (2, 6)
    assert corpus_length_stats([])["n"] == 0
