"""Модели данных"""
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator


# ============================================
# Корпус
# ============================================

class SourceNote(BaseModel):
    """Исходная заметка: номер accession и неформатированный текст"""

    model_config = ConfigDict(frozen=True)

    accession_num: str
    note_text: str
    # Остальные колонки CSV (для фильтров по метаданным), в JSONL не пишутся
    metadata: Dict[str, str] = Field(default_factory=dict, exclude=True)

    @field_validator("accession_num")
    @classmethod
    def _check_accession(cls, value: str) -> str:
        if not value or not value.strip():
            raise ValueError("accession_num не может быть пустым")
        return value

    @field_validator("note_text")
    @classmethod
    def _check_text(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("note_text пуст после удаления пробелов")
        return value


class FilterCriteria(BaseModel):
    """Критерии отбора заметок (длина и необязательные предикаты по колонкам)"""

    min_chars: int = Field(default=2000, ge=0)
    allowed_note_kinds: Optional[FrozenSet[str]] = None
    kind_column: str = "note_kind"
    # Например {"setting": ["outpatient"], "clinic": ["Neurology"], "author_role": ["physician"]}
    column_filters: Dict[str, List[str]] = Field(default_factory=dict)


# ============================================
# Стандартизированная заметка (внешние ключи - как в выходной схеме)
# ============================================

class _NoteSection(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")


class SectionHistory(_NoteSection):
    chief_complaint: str = Field(default="", alias="Chief Complaint")
    interim_history: str = Field(default="", alias="Interim History")


class SectionVitals(_NoteSection):
    blood_pressure: str = Field(default="", alias="Blood Pressure")
    pulse: str = Field(default="", alias="Pulse")
    temperature: str = Field(default="", alias="Temperature")
    weight: str = Field(default="", alias="Weight")


class SectionExam(_NoteSection):
    mental_status: str = Field(default="", alias="Mental Status")
    cranial_nerves: str = Field(default="", alias="Cranial Nerves")
    motor: str = Field(default="", alias="Motor")
    sensory: str = Field(default="", alias="Sensory")
    reflexes: str = Field(default="", alias="Reflexes")
    coordination: str = Field(default="", alias="Coordination")
    gait_and_station: str = Field(default="", alias="Gait and Station")


class SectionImpression(_NoteSection):
    assessment: str = Field(default="", alias="Assessment")


class EducationProvided(_NoteSection):
    instructions: str = Field(default="", alias="Instructions")
    barriers_to_learning: str = Field(default="", alias="Barriers to Learning")
    content: str = Field(default="", alias="Content")
    outcome: str = Field(default="", alias="Outcome")


class SectionPlan(_NoteSection):
    testing: str = Field(default="", alias="Testing")
    education_provided: EducationProvided = Field(default_factory=EducationProvided, alias="Education Provided")
    return_visit: str = Field(default="", alias="Return Visit")


class NoteMetrics(_NoteSection):
    grammatical_errors: int = Field(default=0, ge=0, alias="Grammatical Errors")
    abbreviations_expanded: List[str] = Field(default_factory=list, alias="Abbreviations Expanded")
    spelling_errors: List[str] = Field(default_factory=list, alias="Spelling Errors")
    non_standard_terms: List[str] = Field(default_factory=list, alias="Non-Standard Terms")

    @field_validator("abbreviations_expanded", "spelling_errors", "non_standard_terms")
    @classmethod
    def _check_entries(cls, value: List[str]) -> List[str]:
        if any(not entry for entry in value):
            raise ValueError("элементы списка метрик должны быть непустыми строками")
        return value


class StandardizedNote(_NoteSection):
    """Каноническая заметка: семь разделов и блок Metrics"""

    history: SectionHistory = Field(default_factory=SectionHistory, alias="HISTORY")
    vital_signs: SectionVitals = Field(default_factory=SectionVitals, alias="VITAL SIGNS")
    examination: SectionExam = Field(default_factory=SectionExam, alias="EXAMINATION")
    labs: str = Field(default="", alias="LABS")
    radiology: str = Field(default="", alias="RADIOLOGY")
    impression: SectionImpression = Field(default_factory=SectionImpression, alias="IMPRESSION")
    plan: SectionPlan = Field(default_factory=SectionPlan, alias="PLAN")
    metrics: NoteMetrics = Field(default_factory=NoteMetrics, alias="Metrics")


# Канонические разделы в порядке схемы
CANONICAL_SECTIONS = ("HISTORY", "VITAL SIGNS", "EXAMINATION", "LABS", "RADIOLOGY", "IMPRESSION", "PLAN")


def _alias_tree(model: type) -> Dict[str, object]:
    tree: Dict[str, object] = {}
    for name, field in model.model_fields.items():
        annotation = field.annotation
        if isinstance(annotation, type) and issubclass(annotation, _NoteSection) and annotation is not NoteMetrics:
            tree[field.alias] = _alias_tree(annotation)
        else:
            tree[field.alias] = name
    return tree


# Дерево внешних ключей: раздел -> подраздел -> имя поля (строковые листья)
NOTE_SCHEMA_TREE: Dict[str, object] = {k: v for k, v in _alias_tree(StandardizedNote).items() if k != "Metrics"}

METRICS_KEYS = tuple(field.alias for field in NoteMetrics.model_fields.values())


def _walk_keys(tree: Dict[str, object]) -> Iterator[str]:
    for key, value in tree.items():
        yield key
        if isinstance(value, dict):
            yield from _walk_keys(value)


# Все внешние ключи сериализованной заметки (разделы, подразделы, Metrics и его поля)
NOTE_EXTERNAL_KEYS: Tuple[str, ...] = tuple(_walk_keys(NOTE_SCHEMA_TREE)) + ("Metrics",) + METRICS_KEYS


def leaf_paths(tree: Optional[Dict[str, object]] = None, prefix: str = "") -> List[str]:
    """Пути всех строковых листьев в порядке схемы: 'HISTORY/Chief Complaint', 'LABS', ..."""
    tree = NOTE_SCHEMA_TREE if tree is None else tree
    paths: List[str] = []
    for key, value in tree.items():
        path = f"{prefix}/{key}" if prefix else key
        if isinstance(value, dict):
            paths.extend(leaf_paths(value, path))
        else:
            paths.append(path)
    return paths


LEAF_PATHS: Tuple[str, ...] = tuple(leaf_paths())


def serialize_note(note: StandardizedNote) -> dict:
    """JSON-совместимый объект с внешними ключами схемы"""
    return note.model_dump(by_alias=True, mode="json")


def deserialize_note(obj: dict) -> StandardizedNote:
    return StandardizedNote.model_validate(obj)


def note_leaves(note: StandardizedNote) -> List[Tuple[str, str]]:
    """Пары (путь раздела, текст) для всех листьев заметки в порядке схемы"""
    data = serialize_note(note)
    result = []
    for path in LEAF_PATHS:
        node = data
        for part in path.split("/"):
            node = node[part]
        result.append((path, node))
    return result


def note_from_leaves(leaves: Dict[str, str], metrics: Optional[NoteMetrics] = None) -> StandardizedNote:
    """Сборка заметки из словаря 'путь -> текст' (отсутствующие листья - пустые строки)"""
    data: Dict[str, object] = {}
    for path in LEAF_PATHS:
        parts = path.split("/")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = leaves.get(path, "")
    data["Metrics"] = (metrics or NoteMetrics()).model_dump(by_alias=True)
    return StandardizedNote.model_validate(data)


# ============================================
# Проверка схемы
# ============================================

class ViolationKind(str, Enum):
    MISSING_KEY = "MissingKey"
    WRONG_TYPE = "WrongType"
    UNKNOWN_KEY = "UnknownKey"
    BAD_VALUE = "BadValue"


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: str
    kind: ViolationKind
    detail: str = ""


class ValidationReport(BaseModel):
    violations: List[Violation] = Field(default_factory=list)

    @computed_field
    @property
    def valid(self) -> bool:
        return not self.violations


# ============================================
# LLM бэкенд
# ============================================

class FailureKind(str, Enum):
    TRANSPORT = "Transport"
    RATE_LIMITED = "RateLimited"
    UNPARSEABLE = "Unparseable"
    SCHEMA_INVALID = "SchemaInvalid"


class BackendOutcome(BaseModel):
    """Результат обработки одной заметки бэкендом"""

    note: Optional[StandardizedNote] = None
    raw_response: str = ""
    attempts: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    latency: float = 0.0
    failure: Optional[FailureKind] = None
    detail: str = ""

    @model_validator(mode="after")
    def _note_xor_failure(self) -> "BackendOutcome":
        if (self.note is None) == (self.failure is None):
            raise ValueError("должно быть задано ровно одно из: note, failure")
        return self


# ============================================
# Статистика корпуса
# ============================================

class NoteStats(BaseModel):
    accession_num: str
    source_chars: int = Field(ge=0)
    standardized_chars: int = Field(ge=0)
    grammatical_errors: int = Field(ge=0)
    spelling_errors: int = Field(ge=0)
    abbreviations_expanded: int = Field(ge=0)
    non_standard_terms: int = Field(ge=0)


# Метрики заметки в порядке вывода отчетов
STAT_METRICS = (
    "source_chars",
    "standardized_chars",
    "grammatical_errors",
    "spelling_errors",
    "non_standard_terms",
    "abbreviations_expanded",
)


class Histogram(BaseModel):
    bin_edges: List[float]
    counts: List[int]

    @model_validator(mode="after")
    def _check_shape(self) -> "Histogram":
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ValueError("число границ должно быть на 1 больше числа корзин")
        if any(b <= a for a, b in zip(self.bin_edges, self.bin_edges[1:])):
            raise ValueError("границы корзин должны строго возрастать")
        if any(c < 0 for c in self.counts):
            raise ValueError("счетчики корзин неотрицательны")
        return self


class MetricSummary(BaseModel):
    mean: float
    sd: float = Field(ge=0)
    min: float
    max: float
    histogram: Histogram


class CorpusSummary(BaseModel):
    n: int = Field(ge=1)
    metrics: Dict[str, MetricSummary]


# ============================================
# Извлечение
# ============================================

class MentionKind(str, Enum):
    MEDICATION = "Medication"
    FINDING = "Finding"


FINDING_SECTIONS = ("HISTORY", "EXAMINATION", "IMPRESSION")


class Mention(BaseModel):
    model_config = ConfigDict(frozen=True)

    accession_num: str
    kind: MentionKind
    surface: str
    normalized: str
    section_path: str

    @model_validator(mode="after")
    def _check_confinement(self) -> "Mention":
        top = self.section_path.split("/")[0]
        if self.kind == MentionKind.MEDICATION and top != "PLAN":
            raise ValueError(f"лекарство вне раздела PLAN: {self.section_path}")
        if self.kind == MentionKind.FINDING and top not in FINDING_SECTIONS:
            raise ValueError(f"признак вне HISTORY/EXAMINATION/IMPRESSION: {self.section_path}")
        return self


class FrequencyRow(BaseModel):
    normalized: str
    count: int = Field(ge=0)


class FrequencyTable(BaseModel):
    rows: List[FrequencyRow] = Field(default_factory=list)
    total_mentions: int = 0


# ============================================
# Интероперабельность
# ============================================

class OntologySystem(str, Enum):
    SNOMED_CT = "SNOMED-CT"
    RXNORM = "RxNorm"
    LOINC = "LOINC"
    ICD = "ICD"


class ConceptMapEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    normalized_term: str
    system: OntologySystem
    code: str = Field(min_length=1)
    display: str


class Unmapped(BaseModel):
    model_config = ConfigDict(frozen=True)

    term: str


class ResourceType(str, Enum):
    OBSERVATION = "Observation"
    MEDICATION_STATEMENT = "MedicationStatement"


class Coding(BaseModel):
    system: str
    code: str
    display: str


class InteropResource(BaseModel):
    resource_type: ResourceType
    resource_id: str
    subject_ref: str
    coding: Optional[Coding] = None
    text: str
    section_provenance: str

    @computed_field
    @property
    def unmapped(self) -> bool:
        return self.coding is None


# ============================================
# Оценка качества
# ============================================

# Метрики оценки в порядке строк итоговой таблицы
RATING_METRICS = (
    ("text_organization", "Text Organization"),
    ("spelling_and_grammar", "Spelling and Grammar"),
    ("abbreviation_expansion", "Abbreviation Expansion"),
    ("terminology_standardization", "Terminology Standardization"),
    ("completeness", "Completeness"),
)


class QualityRatings(BaseModel):
    text_organization: int = Field(ge=1, le=5)
    spelling_and_grammar: int = Field(ge=1, le=5)
    abbreviation_expansion: int = Field(ge=1, le=5)
    terminology_standardization: int = Field(ge=1, le=5)
    completeness: int = Field(ge=1, le=5)


class RatingRow(BaseModel):
    metric: str
    mean: float
    sd: float


class ContentDiff(BaseModel):
    missing_tokens: List[str] = Field(default_factory=list)
    added_tokens: List[str] = Field(default_factory=list)
    ledger_explained: int = 0


# ============================================
# Синтетический корпус
# ============================================

class PlantKind(str, Enum):
    SPELLING = "Spelling"
    ABBREVIATION = "Abbreviation"
    NON_STANDARD_TERM = "NonStandardTerm"
    GRAMMAR_RULE = "GrammarRule"


class PlantedEvent(BaseModel):
    kind: PlantKind
    before: str
    after: str
    position: int = Field(ge=0)


class PlantLedger(BaseModel):
    accession_num: str
    planted: List[PlantedEvent] = Field(default_factory=list)

    def count(self, kind: PlantKind) -> int:
        return sum(1 for event in self.planted if event.kind == kind)

    def events(self, kind: PlantKind) -> List[str]:
        """События вида 'before -> after' в порядке позиции"""
        selected = sorted((e for e in self.planted if e.kind == kind), key=lambda e: e.position)
        return [f"{e.before} -> {e.after}" for e in selected]
