"""Загрузка и проверка ресурсов стандартизации

Ресурсы - это данные, а не код: лексикон сокращений, карта терминов, словарь для
проверки орфографии, синонимы заголовков, газеттиры и таблица онтологий.
Все файлы проверяются при загрузке, нарушение инвариантов -> ResourceError.
"""
import json
import re
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from notestd.core.models import CANONICAL_SECTIONS, LEAF_PATHS, ConceptMapEntry, MentionKind
from notestd.utils.exceptions import ResourceError
from notestd.utils.logger import logger

_ABBREV_RE = re.compile(r"^[A-Z][A-Za-z0-9]*$")
_WORD_RE = re.compile(r"[A-Za-z]+")


def phrase_words(phrase: str) -> List[str]:
    """Слова фразы в нижнем регистре"""
    return [w.lower() for w in _WORD_RE.findall(phrase)]


# ============================================
# Лексикон сокращений
# ============================================

class AbbreviationExpansion(BaseModel):
    model_config = ConfigDict(frozen=True)

    expansion: str = Field(min_length=1)
    context_cues: List[str] = Field(default_factory=list)
    priority: int = 0

    @field_validator("context_cues")
    @classmethod
    def _lowercase_cues(cls, value: List[str]) -> List[str]:
        if any(cue != cue.lower() or not cue.strip() for cue in value):
            raise ValueError("контекстные подсказки должны быть непустыми строками в нижнем регистре")
        return value


class AbbreviationEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    abbrev: str
    expansions: List[AbbreviationExpansion] = Field(min_length=1)
    retain_original_in_parens: bool = False

    @field_validator("abbrev")
    @classmethod
    def _check_abbrev(cls, value: str) -> str:
        if not _ABBREV_RE.match(value):
            raise ValueError(f"сокращение должно быть одним токеном с заглавной буквы: {value!r}")
        return value

    @model_validator(mode="after")
    def _check_ambiguity(self) -> "AbbreviationEntry":
        if len(self.expansions) < 2:
            return self
        seen: set = set()
        for item in self.expansions:
            cues = set(item.context_cues)
            if not cues:
                raise ValueError(f"{self.abbrev}: у неоднозначного сокращения каждое раскрытие требует подсказок")
            if cues & seen:
                raise ValueError(f"{self.abbrev}: подсказки раскрытий пересекаются: {sorted(cues & seen)}")
            seen |= cues
        priorities = sorted((item.priority for item in self.expansions), reverse=True)
        if priorities[0] == priorities[1]:
            raise ValueError(f"{self.abbrev}: раскрытие по умолчанию (наивысший приоритет) должно быть единственным")
        return self

    @property
    def ambiguous(self) -> bool:
        return len(self.expansions) > 1

    @property
    def default(self) -> AbbreviationExpansion:
        return max(self.expansions, key=lambda item: item.priority)

    def render(self, expansion: str) -> str:
        """Текст подстановки: 'expansion' или 'expansion (ABBREV)'"""
        if self.retain_original_in_parens:
            return f"{expansion} ({self.abbrev})"
        return expansion


class AbbreviationLexicon(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: List[AbbreviationEntry] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_unique(self) -> "AbbreviationLexicon":
        index: Dict[str, AbbreviationEntry] = {}
        for entry in self.entries:
            if entry.abbrev in index:
                raise ValueError(f"повторяющееся сокращение: {entry.abbrev}")
            index[entry.abbrev] = entry
        # Раскрытие не должно содержать сокращений (иначе повторный проход раскроет его снова)
        for entry in self.entries:
            for item in entry.expansions:
                nested = [word for word in re.findall(r"[A-Za-z0-9]+", item.expansion) if word in index]
                if nested:
                    raise ValueError(f"{entry.abbrev}: раскрытие '{item.expansion}' содержит сокращения {nested}")
        return self

    @cached_property
    def by_abbrev(self) -> Dict[str, AbbreviationEntry]:
        return {entry.abbrev: entry for entry in self.entries}

    def get(self, abbrev: str) -> Optional[AbbreviationEntry]:
        return self.by_abbrev.get(abbrev)

    def __contains__(self, abbrev: str) -> bool:
        return abbrev in self.by_abbrev


# ============================================
# Карта нестандартных терминов
# ============================================

class TermPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    nonstandard: str = Field(min_length=1)
    standard: str = Field(min_length=1)

    @model_validator(mode="after")
    def _check_not_identity(self) -> "TermPair":
        if self.nonstandard.strip().lower() == self.standard.strip().lower():
            raise ValueError(f"термин отображается сам в себя: {self.nonstandard}")
        return self


class TermMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    pairs: Tuple[TermPair, ...] = ()

    @field_validator("pairs")
    @classmethod
    def _check_unique(cls, value: Tuple[TermPair, ...]) -> Tuple[TermPair, ...]:
        seen = set()
        for pair in value:
            key = " ".join(pair.nonstandard.lower().split())
            if key in seen:
                raise ValueError(f"повторяющийся нестандартный термин: {pair.nonstandard}")
            seen.add(key)
        return value

    @cached_property
    def by_phrase(self) -> Dict[str, str]:
        return {" ".join(pair.nonstandard.lower().split()): pair.standard for pair in self.pairs}

    def lookup(self, surface: str) -> Optional[str]:
        return self.by_phrase.get(" ".join(surface.lower().split()))


# ============================================
# Словарь орфографии
# ============================================

class SpellLexicon(BaseModel):
    model_config = ConfigDict(frozen=True)

    vocabulary: FrozenSet[str]
    max_edit_distance: int = 1
    protected_terms: FrozenSet[str] = frozenset()

    @field_validator("vocabulary")
    @classmethod
    def _check_vocabulary(cls, value: FrozenSet[str]) -> FrozenSet[str]:
        if not value:
            raise ValueError("словарь пуст")
        return frozenset(word.lower() for word in value)

    @field_validator("protected_terms")
    @classmethod
    def _lower_protected(cls, value: FrozenSet[str]) -> FrozenSet[str]:
        return frozenset(word.lower() for word in value)

    @field_validator("max_edit_distance")
    @classmethod
    def _check_distance(cls, value: int) -> int:
        if value not in (1, 2):
            raise ValueError("max_edit_distance должен быть 1 или 2")
        return value


# ============================================
# Синонимы заголовков
# ============================================

class HeadingPattern(BaseModel):
    model_config = ConfigDict(frozen=True)

    pattern: str = Field(min_length=1)
    canonical_section: str
    canonical_subsection: Optional[str] = None

    @field_validator("canonical_section")
    @classmethod
    def _check_section(cls, value: str) -> str:
        if value not in CANONICAL_SECTIONS:
            raise ValueError(f"неизвестный канонический раздел: {value}")
        return value

    @property
    def target(self) -> str:
        """Путь назначения: лист ('PLAN/Testing') или раздел ('EXAMINATION')"""
        if self.canonical_subsection:
            return f"{self.canonical_section}/{self.canonical_subsection}"
        return self.canonical_section


class HeadingSynonyms(BaseModel):
    model_config = ConfigDict(frozen=True)

    mapping: List[HeadingPattern]
    # раздел -> подраздел -> слова-подсказки для разнесения предложений
    subsection_cues: Dict[str, Dict[str, List[str]]] = Field(default_factory=dict)
    default_subsections: Dict[str, str] = Field(default_factory=dict)
    # Строки-титулы ("NEUROLOGY CLINIC NOTE"), которые поглощаются как заголовки
    title_lines: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_mapping(self) -> "HeadingSynonyms":
        seen = set()
        for item in self.mapping:
            key = item.pattern.lower()
            if key in seen:
                raise ValueError(f"повторяющийся шаблон заголовка: {item.pattern}")
            seen.add(key)
            target = item.target
            if target not in LEAF_PATHS and target not in CANONICAL_SECTIONS:
                raise ValueError(f"шаблон '{item.pattern}' указывает на несуществующий путь {target}")
        reachable = {item.canonical_section for item in self.mapping}
        missing = [section for section in CANONICAL_SECTIONS if section not in reachable]
        if missing:
            raise ValueError(f"разделы недостижимы ни одним заголовком: {missing}")
        for section, subsection in self.default_subsections.items():
            if f"{section}/{subsection}" not in LEAF_PATHS:
                raise ValueError(f"подраздел по умолчанию не существует: {section}/{subsection}")
        for section, cues in self.subsection_cues.items():
            for subsection in cues:
                if f"{section}/{subsection}" not in LEAF_PATHS:
                    raise ValueError(f"подсказки для несуществующего подраздела: {section}/{subsection}")
        return self

    @cached_property
    def label_pattern(self) -> re.Pattern:
        """Строка-заголовок: метка в начале строки, затем двоеточие с текстом или конец строки"""
        labels = sorted({item.pattern for item in self.mapping}, key=lambda p: (-len(p), p.lower()))
        alternatives = "|".join(r"[ \t]+".join(re.escape(word) for word in label.split()) for label in labels)
        return re.compile(rf"^[ \t]*(?P<label>{alternatives})[ \t]*(?::(?P<rest>.*)|[ \t]*)$", re.IGNORECASE)

    @cached_property
    def by_label(self) -> Dict[str, HeadingPattern]:
        return {" ".join(item.pattern.lower().split()): item for item in self.mapping}

    @cached_property
    def titles(self) -> FrozenSet[str]:
        return frozenset(" ".join(title.lower().split()) for title in self.title_lines)

    def default_leaf(self, section: str) -> str:
        """Лист, в который попадает содержимое раздела без подходящих подсказок"""
        if section in LEAF_PATHS:
            return section
        subsection = self.default_subsections.get(section)
        if subsection:
            return f"{section}/{subsection}"
        return next(path for path in LEAF_PATHS if path.startswith(section + "/"))


class StandardizationResources(BaseModel):
    """Набор ресурсов детерминированного бэкенда (неизменяемый после загрузки)"""

    model_config = ConfigDict(frozen=True)

    abbreviations: AbbreviationLexicon
    terms: TermMap
    spelling: SpellLexicon
    headings: HeadingSynonyms


# ============================================
# Газеттиры и таблица онтологий
# ============================================

class GazetteerEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    synonyms: Tuple[str, ...] = ()


class Gazetteer(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: MentionKind
    entries: Tuple[GazetteerEntry, ...] = ()

    def surface_forms(self) -> List[Tuple[str, str]]:
        """Пары (форма, каноническое имя в нижнем регистре), сначала длинные"""
        forms: Dict[str, str] = {}
        for entry in self.entries:
            canonical = entry.name.lower()
            for form in [entry.name, *entry.synonyms]:
                forms.setdefault(" ".join(form.lower().split()), canonical)
        return sorted(forms.items(), key=lambda item: (-len(item[0]), item[0]))


class RatingThresholds(BaseModel):
    """Пороги эвристической оценки: список (верхняя граница доли, оценка) по возрастанию границы"""

    completeness: List[Tuple[float, int]]
    spelling_and_grammar: List[Tuple[float, int]]
    abbreviation_expansion: List[Tuple[float, int]]
    terminology_standardization: List[Tuple[float, int]]
    text_organization: List[Tuple[float, int]]

    @model_validator(mode="after")
    def _check_tables(self) -> "RatingThresholds":
        for name in type(self).model_fields:
            table = getattr(self, name)
            bounds = [bound for bound, _ in table]
            if bounds != sorted(bounds):
                raise ValueError(f"{name}: границы должны возрастать")
            if any(not 1 <= rating <= 5 for _, rating in table):
                raise ValueError(f"{name}: оценки должны быть в диапазоне 1..5")
        return self


class SentenceBank(BaseModel):
    """Чистые предложения синтетического корпуса по листам схемы"""

    model_config = ConfigDict(frozen=True)

    title: str = ""
    leaves: Dict[str, Tuple[str, ...]]

    @field_validator("leaves")
    @classmethod
    def _check_leaves(cls, value: Dict[str, Tuple[str, ...]]) -> Dict[str, Tuple[str, ...]]:
        unknown = [path for path in value if path not in LEAF_PATHS]
        if unknown:
            raise ValueError(f"предложения для несуществующих листов: {unknown}")
        empty = [path for path in LEAF_PATHS if not value.get(path)]
        if empty:
            raise ValueError(f"нет предложений для листов: {empty}")
        return value


# ============================================
# Загрузка
# ============================================

def _read_json(path: Path) -> object:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ResourceError(f"Файл ресурса не найден: {path}", details={"path": str(path)})
    except json.JSONDecodeError as e:
        raise ResourceError(f"Файл ресурса не разбирается как JSON: {path}", details={"path": str(path), "error": str(e)})


def _validated(model: type, data: object, path: Path):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        errors = [f"{'.'.join(str(loc) for loc in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ResourceError(f"Ресурс нарушает инварианты: {path}", details={"path": str(path), "errors": errors})


def load_vocabulary(path: Path) -> FrozenSet[str]:
    """Словарь: одно слово на строку, строки с # - комментарии"""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            words = {line.strip().lower() for line in fh if line.strip() and not line.startswith("#")}
    except FileNotFoundError:
        raise ResourceError(f"Файл словаря не найден: {path}", details={"path": str(path)})
    return frozenset(words)


def load_resources(resources_dir: Path, max_edit_distance: int = 1) -> StandardizationResources:
    """Загрузка ресурсов детерминированного бэкенда из каталога

    Слова раскрытий и стандартных терминов добавляются в словарь, сами сокращения и
    слова нестандартных терминов защищены от исправления.
    """
    resources_dir = Path(resources_dir)
    abbreviations = _validated(AbbreviationLexicon, _read_json(resources_dir / "abbreviations.json"), resources_dir / "abbreviations.json")
    terms = _validated(TermMap, _read_json(resources_dir / "terms.json"), resources_dir / "terms.json")
    headings = _validated(HeadingSynonyms, _read_json(resources_dir / "headings.json"), resources_dir / "headings.json")

    vocabulary = set(load_vocabulary(resources_dir / "vocabulary.txt"))
    protected = {entry.abbrev.lower() for entry in abbreviations.entries}
    for entry in abbreviations.entries:
        for item in entry.expansions:
            vocabulary.update(phrase_words(item.expansion))
    for pair in terms.pairs:
        vocabulary.update(phrase_words(pair.standard))
        protected.update(phrase_words(pair.nonstandard))
    spelling = _validated(
        SpellLexicon,
        {"vocabulary": vocabulary, "max_edit_distance": max_edit_distance, "protected_terms": protected},
        resources_dir / "vocabulary.txt",
    )

    logger.debug(
        f"Ресурсы | Загружено | abbreviations={len(abbreviations.entries)} | terms={len(terms.pairs)} "
        f"| vocabulary={len(spelling.vocabulary)} | headings={len(headings.mapping)}"
    )
    return StandardizationResources(abbreviations=abbreviations, terms=terms, spelling=spelling, headings=headings)


def load_gazetteer(path: Path, kind: MentionKind) -> Gazetteer:
    data = _read_json(Path(path))
    return _validated(Gazetteer, {"kind": kind, "entries": data.get("entries", []) if isinstance(data, dict) else data}, Path(path))


def load_concept_map(path: Path) -> List[ConceptMapEntry]:
    """Таблица онтологий: (normalized_term, system) уникальны"""
    path = Path(path)
    data = _read_json(path)
    raw_entries = data.get("entries", []) if isinstance(data, dict) else data
    entries = []
    seen = set()
    for raw in raw_entries:
        entry = _validated(ConceptMapEntry, raw, path)
        key = (entry.normalized_term.lower(), entry.system)
        if key in seen:
            raise ResourceError(
                f"Повторяющаяся пара (термин, система) в таблице онтологий: {entry.normalized_term} / {entry.system.value}",
                details={"path": str(path)},
            )
        seen.add(key)
        entries.append(entry)
    return entries


def load_rating_thresholds(path: Path) -> RatingThresholds:
    return _validated(RatingThresholds, _read_json(Path(path)), Path(path))


def load_sentence_bank(path: Path) -> SentenceBank:
    return _validated(SentenceBank, _read_json(Path(path)), Path(path))
