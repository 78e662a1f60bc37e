"""Тесты CLI: цепочка стадий, коды выхода, манифест запуска"""
import csv
import io
import json
import math
import shutil

import pytest

from notestd.commands.main import main
from notestd.core.models import CorpusSummary, PlantKind, PlantLedger, SourceNote
from notestd.services.corpus import write_notes_jsonl
from notestd.utils.artifacts import read_jsonl
from notestd.utils.defaults import DEFAULT_PROFILE

from tests.conftest import FIXTURES_DIR


def _read_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def _manifest(out_dir):
    return json.loads((out_dir / "run_manifest.json").read_text(encoding="utf-8"))


def test_full_chain_with_rules(out_dir):
    """ingest -> standardize -> metrics -> extract -> export-fhir -> evaluate -> estimate"""
    common = ["--out-dir", str(out_dir), "--backend", "rules", "--log-level", "WARNING"]

    assert main(["ingest", str(FIXTURES_DIR / "neuro.csv"), "--id-column", "accession", "--min-chars", "50", *common]) == 0
    notes = read_jsonl(out_dir / "notes.jsonl")
    assert [note["accession_num"] for note in notes] == ["A-100", "A-101", "A-102"]
    assert _manifest(out_dir)["counts"] == {"dropped": 1, "kept": 3, "parsed": 4}

    assert main(["standardize", *common]) == 0
    rows = read_jsonl(out_dir / "standardized.jsonl")
    assert [row["accession_num"] for row in rows] == ["A-100", "A-101", "A-102"]
    assert (out_dir / "failures.jsonl").read_bytes() == b""
    stats = _read_csv(out_dir / "stats.csv")
    assert stats[0][0] == "accession_num"
    assert len(stats) == 4

    assert main(["metrics", "--bins", "5", *common]) == 0
    summary = CorpusSummary.model_validate_json((out_dir / "summary.json").read_bytes())
    assert summary.n == 3
    assert len(summary.metrics["source_chars"].histogram.counts) == 5
    assert (out_dir / "hist_source_chars.svg").read_text(encoding="utf-8").lstrip().startswith("<svg")
    assert (out_dir / "summary.txt").exists()

    assert main(["extract", *common]) == 0
    medications = dict((name, int(count)) for name, count in _read_csv(out_dir / "medications.csv")[1:])
    assert medications["ocrelizumab"] == 1
    assert all(count >= 1 for count in medications.values())
    findings = {name for name, _ in _read_csv(out_dir / "findings.csv")[1:]}
    assert {"diplopia", "paresthesias"} <= findings

    assert main(["export-fhir", *common]) == 0
    bundle = json.loads((out_dir / "bundle.json").read_bytes())
    assert len(bundle["entry"]) == len(read_jsonl(out_dir / "mentions.jsonl"))
    assert _read_csv(out_dir / "unmapped_terms.csv")[0] == ["term", "kind", "count"]

    assert main(["evaluate", "--review-n", "2", *common]) == 0
    ratings = _read_csv(out_dir / "ratings.csv")
    assert len(ratings) == 4
    assert [row[0] for row in _read_csv(out_dir / "ratings_summary.csv")[1:]] == [
        "Text Organization",
        "Spelling and Grammar",
        "Abbreviation Expansion",
        "Terminology Standardization",
        "Completeness",
    ]
    assert all(not row["missing_tokens"] for row in read_jsonl(out_dir / "content_diffs.jsonl"))
    assert len(read_jsonl(out_dir / "review_sample.jsonl")) == 2

    assert main(["estimate", "--parallelism", "2", *common]) == 0
    estimate = json.loads((out_dir / "estimate.json").read_bytes())
    assert estimate["notes"] == 3
    assert estimate["parallel_time"] <= estimate["serial_time"]


def test_standardize_is_reproducible(out_dir, sample_notes):
    """Повторный запуск дает те же байты standardized.jsonl при любом параллелизме"""
    buffer = io.BytesIO()
    write_notes_jsonl(sample_notes, buffer)
    (out_dir / "notes.jsonl").write_bytes(buffer.getvalue())

    assert main(["standardize", "--out-dir", str(out_dir), "--parallelism", "1"]) == 0
    first = (out_dir / "standardized.jsonl").read_bytes()
    first_hash = _manifest(out_dir)["config_hash"]
    assert main(["standardize", "--out-dir", str(out_dir), "--parallelism", "4"]) == 0
    assert (out_dir / "standardized.jsonl").read_bytes() == first
    assert _manifest(out_dir)["config_hash"] == first_hash


def test_mock_backend_partial_failure(out_dir, sample_notes):
    """Отказы модели по части заметок - код 1 и failures.jsonl"""
    buffer = io.BytesIO()
    write_notes_jsonl(sample_notes, buffer)
    (out_dir / "notes.jsonl").write_bytes(buffer.getvalue())

    code = main([
        "standardize",
        "--out-dir", str(out_dir),
        "--backend", "mock",
        "--mock-transcripts", str(FIXTURES_DIR / "mock_transcripts.json"),
        "--parallelism", "3",
    ])
    assert code == 1

    assert [row["accession_num"] for row in read_jsonl(out_dir / "standardized.jsonl")] == ["N-1", "N-5"]
    failures = {row["accession_num"]: row["failure"] for row in read_jsonl(out_dir / "failures.jsonl")}
    assert failures == {"N-2": "Transport", "N-3": "Unparseable", "N-4": "Transport"}
    manifest = _manifest(out_dir)
    assert manifest["exit_code"] == 1
    assert manifest["counts"]["failures"] == 3


def test_resume_skips_done_notes(out_dir, sample_notes):
    buffer = io.BytesIO()
    write_notes_jsonl(sample_notes, buffer)
    (out_dir / "notes.jsonl").write_bytes(buffer.getvalue())
    transcripts = str(FIXTURES_DIR / "mock_transcripts.json")

    assert main(["standardize", "--out-dir", str(out_dir), "--backend", "mock", "--mock-transcripts", transcripts]) == 1
    assert main(["standardize", "--out-dir", str(out_dir), "--resume"]) == 0

    assert [row["accession_num"] for row in read_jsonl(out_dir / "standardized.jsonl")] == ["N-1", "N-2", "N-3", "N-4", "N-5"]
    assert _manifest(out_dir)["counts"]["resumed"] == 2


def test_llm_backend_without_key(out_dir, sample_notes):
    """Нет API ключа - ошибка конфигурации, ключ не попадает в манифест"""
    buffer = io.BytesIO()
    write_notes_jsonl(sample_notes, buffer)
    (out_dir / "notes.jsonl").write_bytes(buffer.getvalue())

    assert main(["standardize", "--out-dir", str(out_dir), "--backend", "llm"]) == 2
    assert not (out_dir / "standardized.jsonl").exists()
    assert _manifest(out_dir)["exit_code"] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["standardize"],
        ["ingest", "missing.csv"],
        ["metrics"],
    ],
)
def test_missing_inputs_are_config_errors(out_dir, argv):
    assert main([*argv, "--out-dir", str(out_dir)]) == 2


def test_review_sample_larger_than_corpus(out_dir):
    common = ["--out-dir", str(out_dir)]
    assert main(["ingest", str(FIXTURES_DIR / "neuro.csv"), "--id-column", "accession", "--min-chars", "0", *common]) == 0
    assert main(["standardize", *common]) == 0
    assert main(["evaluate", "--review-n", "10", *common]) == 2


def test_bad_arguments(out_dir):
    assert main(["standardize", "--out-dir", str(out_dir), "--parallelism", "0"]) == 2
    assert main(["no-such-command"]) == 2


def test_config_file_and_flags(out_dir, tmp_path):
    """TOML конфигурация, флаги командной строки поверх нее"""
    config = tmp_path / "run.toml"
    config.write_text('min_chars = 5000\nseed = 3\n\n[llm]\nrequests_per_minute = 30\n', encoding="utf-8")
    args = ["ingest", str(FIXTURES_DIR / "neuro.csv"), "--id-column", "accession", "--out-dir", str(out_dir), "--config", str(config)]

    assert main(args) == 0
    assert read_jsonl(out_dir / "notes.jsonl") == []
    assert main([*args, "--min-chars", "0"]) == 0
    assert len(read_jsonl(out_dir / "notes.jsonl")) == 4

    config.write_text("min_chars = -1\n", encoding="utf-8")
    assert main(args) == 2


def test_max_edit_distance_flag(out_dir, neuro_note):
    """--max-edit-distance доходит до словаря и входит в config_hash"""
    note = SourceNote(accession_num="N-1", note_text=neuro_note.note_text.replace("with new lesions.", "with new lesions, no vscalar disease."))
    buffer = io.BytesIO()
    write_notes_jsonl([note], buffer)
    (out_dir / "notes.jsonl").write_bytes(buffer.getvalue())
    common = ["standardize", "--out-dir", str(out_dir), "--log-level", "WARNING"]

    assert main([*common, "--max-edit-distance", "1"]) == 0
    assert b"vscalar disease" in (out_dir / "standardized.jsonl").read_bytes()
    narrow_hash = _manifest(out_dir)["config_hash"]

    assert main([*common, "--max-edit-distance", "2"]) == 0
    assert b"vascular disease" in (out_dir / "standardized.jsonl").read_bytes()
    assert _manifest(out_dir)["config_hash"] != narrow_hash

    assert main([*common, "--max-edit-distance", "3"]) == 2


def test_fixtures_generate(out_dir, tmp_path, resources):
    profile = tmp_path / "profile.json"
    profile.write_text(json.dumps({"length": [2500.0, 0.0]}), encoding="utf-8")

    code = main(["fixtures", "generate", "--n", "2", "--seed", "9", "--profile", str(profile), "--out-dir", str(out_dir)])
    assert code == 0
    notes = read_jsonl(out_dir / "notes.jsonl")
    ledgers = read_jsonl(out_dir / "ledger.jsonl")
    assert [note["accession_num"] for note in notes] == ["SYN-000001", "SYN-000002"]
    assert [ledger["accession_num"] for ledger in ledgers] == ["SYN-000001", "SYN-000002"]
    assert _manifest(out_dir)["command"] == "fixtures generate"

    assert main(["fixtures", "generate", "--n", "0", "--out-dir", str(out_dir)]) == 2


# ============================================
# Синтетический корпус целиком
# ============================================

LEDGER_COLUMNS = {
    "grammatical_errors": PlantKind.GRAMMAR_RULE,
    "spelling_errors": PlantKind.SPELLING,
    "non_standard_terms": PlantKind.NON_STANDARD_TERM,
    "abbreviations_expanded": PlantKind.ABBREVIATION,
}

PROFILE_KEYS = {
    "grammatical_errors": "grammar",
    "spelling_errors": "spelling",
    "non_standard_terms": "terms",
    "abbreviations_expanded": "abbreviations",
}


@pytest.fixture(scope="module")
def planted_dir(tmp_path_factory):
    """Фикстура каталога с корпусом из 200 синтетических заметок и ledger"""
    path = tmp_path_factory.mktemp("planted")
    assert main(["fixtures", "generate", "--n", "200", "--seed", "2024", "--out-dir", str(path), "--log-level", "WARNING"]) == 0
    return path


def _run_rules_chain(out_dir, notes_path, parallelism):
    shutil.copy(notes_path, out_dir / "notes.jsonl")
    common = ["--out-dir", str(out_dir), "--backend", "rules", "--log-level", "WARNING"]
    assert main(["standardize", "--parallelism", str(parallelism), *common]) == 0
    standardize_hash = _manifest(out_dir)["config_hash"]
    for command in ("metrics", "extract", "export-fhir"):
        assert main([command, *common]) == 0
    return standardize_hash


def test_planted_corpus_matches_ledger(out_dir, planted_dir):
    """200 синтетических заметок: счетчики Metrics равны ledger без единого расхождения"""
    shutil.copy(planted_dir / "notes.jsonl", out_dir / "notes.jsonl")
    assert main(["standardize", "--out-dir", str(out_dir), "--log-level", "WARNING"]) == 0

    header, *rows = _read_csv(out_dir / "stats.csv")
    stats = {row[0]: dict(zip(header[1:], (int(value) for value in row[1:]))) for row in rows}
    ledgers = [PlantLedger.model_validate(row) for row in read_jsonl(planted_dir / "ledger.jsonl")]
    assert len(ledgers) == len(stats) == 200

    mismatches = [
        (ledger.accession_num, column, stats[ledger.accession_num][column], ledger.count(kind))
        for ledger in ledgers
        for column, kind in LEDGER_COLUMNS.items()
        if stats[ledger.accession_num][column] != ledger.count(kind)
    ]
    assert mismatches == []


def test_chain_is_byte_identical_across_parallelism(tmp_path, planted_dir):
    """Цепочка на правилах при parallelism 1 и 8 дает одинаковые байты артефактов"""
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    serial.mkdir()
    parallel.mkdir()

    serial_hash = _run_rules_chain(serial, planted_dir / "notes.jsonl", 1)
    parallel_hash = _run_rules_chain(parallel, planted_dir / "notes.jsonl", 8)

    assert serial_hash == parallel_hash
    for name in ("standardized.jsonl", "stats.csv", "summary.json", "mentions.jsonl", "bundle.json"):
        assert (serial / name).read_bytes() == (parallel / name).read_bytes(), name


def test_profile_means_on_large_corpus(out_dir):
    """1000 заметок с профилем по умолчанию: средние metrics в пределах 10% от целевых

    Допуск не меньше трех стандартных ошибок среднего (выборочное SD профиля / sqrt(n)).
    """
    n = 1000
    common = ["--out-dir", str(out_dir), "--log-level", "WARNING"]
    assert main(["fixtures", "generate", "--n", str(n), "--seed", "11", *common]) == 0
    assert main(["standardize", "--parallelism", "4", *common]) == 0
    assert main(["metrics", *common]) == 0

    summary = CorpusSummary.model_validate_json((out_dir / "summary.json").read_bytes())
    assert summary.n == n
    for column, key in PROFILE_KEYS.items():
        target_mean, target_sd = DEFAULT_PROFILE[key]
        tolerance = max(0.1 * target_mean, 3 * target_sd / math.sqrt(n))
        assert abs(summary.metrics[column].mean - target_mean) <= tolerance, (column, summary.metrics[column].mean)
