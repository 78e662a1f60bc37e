"""Pytest конфигурация и фикстуры"""
import json
from pathlib import Path

import pytest

from notestd.core.config import DATA_DIR
from notestd.core.models import MentionKind, SourceNote
from notestd.core.resources import (
    load_concept_map,
    load_gazetteer,
    load_rating_thresholds,
    load_resources,
)

FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"

# Короткая заметка невролога: заголовки, сокращения, опечатки и нестандартные термины
NEURO_NOTE = """NEUROLOGY CLINIC NOTE
Chief Complaint: Follow up for relapsing MS.
Interim History:
Patient reprots double vision and pins and needles in both feet since March.
She has been taking her medication as prescribed
Vital Signs:
BP 128/76.
Examination:
Mental Status: alert and oriented.
Motor: strength 5/5 in all extremities.
Reflexes: upgoing toe on the left.
Radiology:
MRI brain with new enhancing lesions.
Impression:
Relapsing MS with new lesions.
Plan:
Continue ocrelizumab every six months.
Start gabapentin for paresthesias.
Return Visit: Return in three months.
"""

SHORT_NEURO_NOTE = """NEUROLOGY CLINIC NOTE
Chief Complaint: New onset of double vision.
History: History of optic neuritis and numbness.
Examination: Increased reflexes. Babinski sign.
             Internuclear ophthalmoplegia.
Impression: Probable multiple sclerosis.
Plan: MRI of brain.
      Start intravenous methlylprednisolone.
"""


@pytest.fixture(scope="session")
def resources():
    """Фикстура ресурсов детерминированного бэкенда из поставки"""
    return load_resources(DATA_DIR)


@pytest.fixture(scope="session")
def medications():
    return load_gazetteer(DATA_DIR / "medications.json", MentionKind.MEDICATION)


@pytest.fixture(scope="session")
def findings():
    return load_gazetteer(DATA_DIR / "findings.json", MentionKind.FINDING)


@pytest.fixture(scope="session")
def concept_map():
    return load_concept_map(DATA_DIR / "concept_map.json")


@pytest.fixture(scope="session")
def thresholds():
    return load_rating_thresholds(DATA_DIR / "rating_thresholds.json")


@pytest.fixture
def neuro_note():
    """Фикстура исходной заметки с ошибками всех видов"""
    return SourceNote(accession_num="N-1", note_text=NEURO_NOTE)


@pytest.fixture
def short_neuro_note():
    """Фикстура короткой заметки с опечаткой в названии препарата"""
    return SourceNote(accession_num="1", note_text=SHORT_NEURO_NOTE)


@pytest.fixture
def sample_notes():
    """Фикстура небольшого корпуса с разными accession"""
    return [
        SourceNote(accession_num=f"N-{i}", note_text=NEURO_NOTE.replace("three months", f"{i + 2} months"))
        for i in range(1, 6)
    ]


@pytest.fixture
def out_dir(tmp_path):
    """Фикстура каталога артефактов запуска"""
    path = tmp_path / "out"
    path.mkdir()
    return path


@pytest.fixture
def mock_transcripts():
    """Фикстура сценариев MockBackend из tests/fixtures"""
    with open(FIXTURES_DIR / "mock_transcripts.json", "r", encoding="utf-8") as fh:
        return json.load(fh)["transcripts"]


@pytest.fixture(autouse=True)
def _no_api_key(monkeypatch):
    """Тесты не должны видеть настоящий ключ из окружения"""
    monkeypatch.delenv("NOTESTD_API_KEY", raising=False)
