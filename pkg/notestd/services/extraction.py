"""Полуструктурированный поиск по стандартизированным заметкам

Лекарства ищутся только в разделе PLAN, признаки и симптомы - только в HISTORY,
EXAMINATION и IMPRESSION. Детерминированный режим - газеттир (самое длинное совпадение
без учета регистра), режим LLM использует тот же клиент, что и стандартизация.
Отрицания не распознаются: "denies fatigue" тоже считается упоминанием.
"""
import re
from collections import Counter
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from notestd.core.config import DATA_DIR
from notestd.core.models import (
    FINDING_SECTIONS,
    LEAF_PATHS,
    FrequencyRow,
    FrequencyTable,
    Mention,
    MentionKind,
    StandardizedNote,
    note_leaves,
)
from notestd.core.resources import Gazetteer
from notestd.utils.exceptions import UnrepairableJSONError
from notestd.utils.json_repair import repair_json
from notestd.utils.logger import log_note_event, logger
from notestd.utils.templates import load_template

EXTRACTION_PROMPT_PATH = DATA_DIR / "extraction_prompt.txt"

# Разделы поиска для каждого вида упоминаний
SEARCH_SECTIONS: Dict[MentionKind, Tuple[str, ...]] = {
    MentionKind.MEDICATION: ("PLAN",),
    MentionKind.FINDING: FINDING_SECTIONS,
}

COUNT_MODES = ("presence", "raw")


class GazetteerMatcher:
    """Скомпилированный газеттир: одно регулярное выражение, длинные формы первыми"""

    def __init__(self, gazetteer: Gazetteer):
        self.kind = gazetteer.kind
        forms = gazetteer.surface_forms()
        self._canonical = dict(forms)
        if forms:
            alternatives = "|".join(r"\s+".join(re.escape(word) for word in form.split()) for form, _ in forms)
            self._pattern: Optional[re.Pattern] = re.compile(rf"(?<![A-Za-z0-9])(?:{alternatives})(?![A-Za-z0-9])", re.IGNORECASE)
        else:
            self._pattern = None

    def find(self, text: str) -> List[Tuple[str, str]]:
        """Пары (найденная форма, каноническое имя) слева направо без перекрытий"""
        if self._pattern is None or not text:
            return []
        found = []
        for match in self._pattern.finditer(text):
            surface = match.group()
            found.append((surface, self._canonical[" ".join(surface.lower().split())]))
        return found


@lru_cache(maxsize=16)
def get_matcher(gazetteer: Gazetteer) -> GazetteerMatcher:
    return GazetteerMatcher(gazetteer)


def _section_leaves(note: StandardizedNote, sections: Sequence[str]) -> List[Tuple[str, str]]:
    return [(path, text) for path, text in note_leaves(note) if path.split("/")[0] in sections and text]


def _extract(
    note: StandardizedNote,
    gazetteer: Gazetteer,
    kind: MentionKind,
    accession_num: str,
    dedupe_by_section: bool,
    dedupe: bool,
) -> List[Mention]:
    matcher = get_matcher(gazetteer)
    mentions: List[Mention] = []
    seen = set()
    for path, text in _section_leaves(note, SEARCH_SECTIONS[kind]):
        for surface, normalized in matcher.find(text):
            key = (normalized, path) if dedupe_by_section else normalized
            if dedupe and key in seen:
                continue
            seen.add(key)
            mentions.append(Mention(accession_num=accession_num, kind=kind, surface=surface, normalized=normalized, section_path=path))
    return mentions


def extract_medications(note: StandardizedNote, gazetteer: Gazetteer, accession_num: str = "-", dedupe: bool = True) -> List[Mention]:
    """Лекарства из подразделов PLAN; одно упоминание на (заметку, имя) при dedupe"""
    return _extract(note, gazetteer, MentionKind.MEDICATION, accession_num, dedupe_by_section=False, dedupe=dedupe)


def extract_findings(note: StandardizedNote, gazetteer: Gazetteer, accession_num: str = "-", dedupe: bool = True) -> List[Mention]:
    """Признаки из HISTORY, EXAMINATION, IMPRESSION; одно упоминание на (заметку, имя, путь) при dedupe"""
    return _extract(note, gazetteer, MentionKind.FINDING, accession_num, dedupe_by_section=True, dedupe=dedupe)


async def extract_mentions_llm(
    accession_num: str,
    note: StandardizedNote,
    kind: MentionKind,
    client,
    template_path: Path = EXTRACTION_PROMPT_PATH,
    run_id: Optional[str] = None,
) -> List[Mention]:
    """Извлечение упоминаний моделью по отдельному промпту

    Ответ - JSON массив объектов {surface, normalized, section}. Упоминания вне
    разрешенных разделов отбрасываются с записью в лог; отказ модели дает пустой список.
    """
    sections = _section_leaves(note, SEARCH_SECTIONS[kind])
    if not sections:
        return []
    target = "medication" if kind == MentionKind.MEDICATION else "clinical sign or symptom"
    prompt = load_template(template_path).render(target=target, sections=sections)
    completion = await client.complete(prompt, request_id=f"extract:{kind.value}:{accession_num}")
    if completion.failure is not None:
        log_note_event("extract", accession_num, "отказ модели при извлечении", reason=f"{completion.failure.value} {completion.detail}".strip(), run_id=run_id)
        return []
    try:
        items = repair_json(completion.text, container="array")
    except UnrepairableJSONError:
        log_note_event("extract", accession_num, "ответ модели не разобран", reason="unparseable", run_id=run_id)
        return []

    allowed_paths = {path for path, _ in sections}
    mentions: List[Mention] = []
    seen = set()
    for item in items:
        if not isinstance(item, dict):
            continue
        surface = str(item.get("surface", "")).strip()
        normalized = " ".join(str(item.get("normalized", "") or surface).lower().split())
        path = str(item.get("section", "")).strip()
        if not surface or not normalized:
            continue
        if path not in allowed_paths:
            reason = "unknown section" if path not in LEAF_PATHS else "section not permitted"
            log_note_event("extract", accession_num, f"упоминание '{surface}' отброшено", reason=f"{reason}: {path}", run_id=run_id)
            continue
        key = (normalized, path) if kind == MentionKind.FINDING else normalized
        if key in seen:
            continue
        try:
            mention = Mention(accession_num=accession_num, kind=kind, surface=surface, normalized=normalized, section_path=path)
        except ValidationError:
            continue
        seen.add(key)
        mentions.append(mention)
    logger.debug(f"Извлечение LLM | Заметка {accession_num} | {kind.value}: {len(mentions)}")
    return mentions


def frequency_table(mentions: Sequence[Mention], kind: MentionKind, mode: str = "presence") -> FrequencyTable:
    """Частоты по каноническим именам

    presence - число заметок с упоминанием (пары accession, имя), raw - все упоминания.
    Строки по убыванию частоты, при равенстве по алфавиту.
    """
    if mode not in COUNT_MODES:
        raise ValueError(f"Неизвестный режим подсчета: {mode}")
    selected = [mention for mention in mentions if mention.kind == kind]
    if mode == "presence":
        counts = Counter(normalized for _, normalized in {(m.accession_num, m.normalized) for m in selected})
    else:
        counts = Counter(m.normalized for m in selected)
    rows = [FrequencyRow(normalized=name, count=count) for name, count in sorted(counts.items(), key=lambda item: (-item[1], item[0]))]
    return FrequencyTable(rows=rows, total_mentions=sum(counts.values()))
