"""Детерминированный бэкенд стандартизации

Для каждого листа после разбиения на разделы: орфография -> термины -> сокращения ->
грамматика. Metrics заполняется точными списками событий этапов.
"""
import time
from typing import Dict, List

from pydantic import BaseModel, Field

from notestd.core.models import LEAF_PATHS, BackendOutcome, NoteMetrics, SourceNote, StandardizedNote, note_from_leaves
from notestd.core.resources import StandardizationResources
from notestd.services.abbreviations import expand_abbreviations
from notestd.services.grammar import count_grammar_fixes
from notestd.services.sections import segment_sections
from notestd.services.spelling import correct_spelling
from notestd.services.terminology import substitute_nonstandard_terms
from notestd.utils.logger import logger


class SectionResult(BaseModel):
    """Итог обработки текста одного листа"""

    text: str
    spelling: List[str] = Field(default_factory=list)
    terms: List[str] = Field(default_factory=list)
    abbreviations: List[str] = Field(default_factory=list)
    grammar: int = 0


def standardize_text(text: str, resources: StandardizationResources) -> SectionResult:
    """Четыре этапа над текстом одного листа"""
    spelled = correct_spelling(text, resources.spelling)
    termed = substitute_nonstandard_terms(spelled.text, resources.terms)
    expanded = expand_abbreviations(termed.text, resources.abbreviations)
    fixed = count_grammar_fixes(expanded.text)
    return SectionResult(
        text=fixed.text,
        spelling=spelled.corrections,
        terms=termed.substituted,
        abbreviations=expanded.expanded,
        grammar=fixed.count,
    )


def standardize_rule_based(note: SourceNote, resources: StandardizationResources) -> StandardizedNote:
    """Стандартизация заметки правилами (чистая функция от заметки и ресурсов)"""
    segments = segment_sections(note.note_text, resources.headings)

    leaves: Dict[str, str] = {}
    spelling: List[str] = []
    terms: List[str] = []
    abbreviations: List[str] = []
    grammar = 0
    for path in LEAF_PATHS:
        text = segments[path]
        if not text:
            continue
        result = standardize_text(text, resources)
        leaves[path] = result.text
        spelling.extend(result.spelling)
        terms.extend(result.terms)
        abbreviations.extend(result.abbreviations)
        grammar += result.grammar

    metrics = NoteMetrics(
        grammatical_errors=grammar,
        abbreviations_expanded=abbreviations,
        spelling_errors=spelling,
        non_standard_terms=terms,
    )
    return note_from_leaves(leaves, metrics)


class RuleBackend:
    """Детерминированный бэкенд с общим интерфейсом бэкендов пайплайна"""

    name = "rules"

    def __init__(self, resources: StandardizationResources):
        self.resources = resources

    async def standardize(self, note: SourceNote) -> BackendOutcome:
        started = time.perf_counter()
        standardized = standardize_rule_based(note, self.resources)
        latency = time.perf_counter() - started
        logger.trace(f"Правила | Заметка {note.accession_num} стандартизирована за {latency * 1000:.1f}ms")
        return BackendOutcome(note=standardized, attempts=1, latency=latency)

    async def aclose(self) -> None:
        return None
