"""Сравнение исходной и стандартизированной заметки

Проверка полноты (пропавшие токены после переписывания событиями Metrics),
оценка качества по пяти метрикам (эвристика или модель-судья), случайная
выборка для ревью и итоговая таблица оценок.
"""
import asyncio
import json
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from notestd.core.config import DATA_DIR
from notestd.core.models import (
    RATING_METRICS,
    ContentDiff,
    QualityRatings,
    RatingRow,
    SourceNote,
    StandardizedNote,
    note_leaves,
    serialize_note,
)
from notestd.core.resources import HeadingSynonyms, RatingThresholds, StandardizationResources
from notestd.services.abbreviations import expand_abbreviations
from notestd.services.grammar import count_grammar_fixes
from notestd.services.pipeline import mean_sd, standardized_text
from notestd.services.sections import segment_sections, strip_headings
from notestd.services.spelling import correct_spelling
from notestd.services.terminology import substitute_nonstandard_terms
from notestd.utils.artifacts import dumps_pretty
from notestd.utils.completeness_checker import diff_tokens, line_tokens
from notestd.utils.defaults import STOP_WORDS
from notestd.utils.exceptions import BackendResponseError, EmptyInputError, SampleTooLargeError, UnparseableResponseError, UnrepairableJSONError
from notestd.utils.json_repair import repair_json
from notestd.utils.templates import load_template

JUDGE_PROMPT_PATH = DATA_DIR / "judge_prompt.txt"

RATING_MODES = ("heuristic", "llm-judge")

RATINGS_CSV_HEADER = ("accession_num",) + tuple(name for name, _ in RATING_METRICS)
RATINGS_SUMMARY_CSV_HEADER = ("metric", "mean", "sd")

_SENTENCE_END = ".!?"


# ============================================
# Полнота
# ============================================

def ledger_events(standardized: StandardizedNote) -> List[str]:
    """События Metrics в порядке этапов правил: орфография, термины, сокращения"""
    metrics = standardized.metrics
    return [*metrics.spelling_errors, *metrics.non_standard_terms, *metrics.abbreviations_expanded]


def completeness_check(
    source: SourceNote,
    standardized: StandardizedNote,
    synonyms: HeadingSynonyms,
    stop_words: FrozenSet[str] = STOP_WORDS,
) -> ContentDiff:
    """Токены источника, пропавшие в стандартизированной заметке

    Метки заголовков считаются структурой и из источника удаляются.
    """
    return diff_tokens(
        strip_headings(source.note_text, synonyms),
        standardized_text(standardized),
        ledger_events(standardized),
        stop_words,
    )


def content_token_count(source: SourceNote, synonyms: HeadingSynonyms, stop_words: FrozenSet[str] = STOP_WORDS) -> int:
    return sum(1 for token in line_tokens(strip_headings(source.note_text, synonyms)) if token not in stop_words)


# ============================================
# Эвристическая оценка
# ============================================

def rating_for(value: float, table: Sequence[Tuple[float, int]]) -> int:
    """Оценка по первой границе таблицы, не меньшей значения; за последней границей - 1"""
    for bound, rating in table:
        if value <= bound:
            return rating
    return 1


def _residual_ratio(residual: int, baseline: int) -> float:
    if baseline == 0:
        return 0.0 if residual == 0 else 1.0
    return residual / baseline


def _populated_sections(leaves: Sequence[Tuple[str, str]]) -> int:
    return len({path.split("/")[0] for path, text in leaves if text.strip()})


def _sentence_count(texts: Sequence[str]) -> int:
    count = 0
    for text in texts:
        for line in text.splitlines():
            stripped = line.strip()
            if stripped:
                count += max(1, sum(stripped.count(mark) for mark in _SENTENCE_END))
    return count


def heuristic_proxies(
    source: SourceNote,
    standardized: StandardizedNote,
    resources: StandardizationResources,
    diff: Optional[ContentDiff] = None,
) -> Dict[str, float]:
    """Измеримые доли по метрикам (0 - идеально)

    text_organization - доля разделов источника, не заполненных в результате;
    spelling_and_grammar - остаточные исправимые опечатки на слово плюс срабатывания
    правил грамматики на предложение; abbreviation_expansion и terminology_standardization -
    остаток относительно числа в источнике; completeness - пропавшие токены на токен содержимого.
    """
    leaves = [(path, text) for path, text in note_leaves(standardized) if text]
    texts = [text for _, text in leaves]
    source_segments = segment_sections(source.note_text, resources.headings)

    populated_source = _populated_sections(list(source_segments.items()))
    populated_result = _populated_sections(leaves)
    organization = 0.0 if populated_source == 0 else max(0.0, 1.0 - populated_result / populated_source)

    words = sum(len(text.split()) for text in texts)
    misspelled = sum(len(correct_spelling(text, resources.spelling).corrections) for text in texts)
    grammar_hits = sum(count_grammar_fixes(text).count for text in texts)
    spelling_and_grammar = misspelled / max(1, words) + grammar_hits / max(1, _sentence_count(texts))

    source_abbreviations = len(expand_abbreviations(source.note_text, resources.abbreviations).expanded)
    residual_abbreviations = sum(len(expand_abbreviations(text, resources.abbreviations).expanded) for text in texts)

    source_terms = len(substitute_nonstandard_terms(source.note_text, resources.terms).substituted)
    residual_terms = sum(len(substitute_nonstandard_terms(text, resources.terms).substituted) for text in texts)

    if diff is None:
        diff = completeness_check(source, standardized, resources.headings)
    content_tokens = content_token_count(source, resources.headings)

    return {
        "text_organization": organization,
        "spelling_and_grammar": spelling_and_grammar,
        "abbreviation_expansion": _residual_ratio(residual_abbreviations, source_abbreviations),
        "terminology_standardization": _residual_ratio(residual_terms, source_terms),
        "completeness": len(diff.missing_tokens) / max(1, content_tokens),
    }


def rate_quality_heuristic(
    source: SourceNote,
    standardized: StandardizedNote,
    resources: StandardizationResources,
    thresholds: RatingThresholds,
    diff: Optional[ContentDiff] = None,
) -> QualityRatings:
    proxies = heuristic_proxies(source, standardized, resources, diff)
    return QualityRatings(**{name: rating_for(value, getattr(thresholds, name)) for name, value in proxies.items()})


# ============================================
# Модель-судья
# ============================================

def build_judge_prompt(source: SourceNote, standardized: StandardizedNote, template_path: Path = JUDGE_PROMPT_PATH) -> str:
    return load_template(template_path).render(
        metrics=[title for _, title in RATING_METRICS],
        source_text=source.note_text,
        standardized_json=json.dumps(serialize_note(standardized), ensure_ascii=False, indent=3),
    )


def parse_judge_reply(raw: str) -> QualityRatings:
    """JSON массив из пяти чисел -> оценки, приведенные к диапазону 1..5

    Raises:
        UnparseableResponseError: нет массива или в нем не пять чисел
    """
    try:
        values = repair_json(raw, container="array")
    except UnrepairableJSONError as e:
        raise UnparseableResponseError("Ответ судьи не содержит JSON массива", details=e.details)
    if len(values) != len(RATING_METRICS):
        raise UnparseableResponseError(f"Ожидалось {len(RATING_METRICS)} оценок, получено {len(values)}")
    ratings = {}
    for (name, _), value in zip(RATING_METRICS, values):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise UnparseableResponseError(f"Оценка {name} не число: {value!r}")
        ratings[name] = min(5, max(1, int(round(value))))
    return QualityRatings(**ratings)


async def judge_quality(
    accession_num: str,
    source: SourceNote,
    standardized: StandardizedNote,
    client,
    template_path: Path = JUDGE_PROMPT_PATH,
) -> QualityRatings:
    """Оценка моделью по рубрике

    Raises:
        BackendResponseError: отказ транспорта или лимита запросов
        UnparseableResponseError: ответ не разобран
    """
    completion = await client.complete(build_judge_prompt(source, standardized, template_path), request_id=f"judge:{accession_num}")
    if completion.failure is not None:
        raise BackendResponseError(
            f"Судья не ответил для заметки {accession_num}",
            details={"failure": completion.failure.value, "detail": completion.detail},
        )
    return parse_judge_reply(completion.text)


def rate_quality(
    source: SourceNote,
    standardized: StandardizedNote,
    mode: str = "heuristic",
    resources: Optional[StandardizationResources] = None,
    thresholds: Optional[RatingThresholds] = None,
    client=None,
) -> QualityRatings:
    """Оценки 1..5 по пяти метрикам в выбранном режиме"""
    if mode == "heuristic":
        if resources is None or thresholds is None:
            raise ValueError("Эвристическому режиму нужны ресурсы и пороги")
        return rate_quality_heuristic(source, standardized, resources, thresholds)
    if mode == "llm-judge":
        if client is None:
            raise ValueError("Режиму llm-judge нужен клиент модели")
        return asyncio.run(judge_quality(source.accession_num, source, standardized, client))
    raise ValueError(f"Неизвестный режим оценки: {mode}; доступны {', '.join(RATING_MODES)}")


# ============================================
# Выборка и агрегация
# ============================================

def sample_for_review(notes: Sequence, n: int = 20, seed: int = 0) -> List:
    """Равномерная выборка без возвращения, воспроизводимая по seed

    Raises:
        SampleTooLargeError: n больше числа заметок
    """
    if n < 0:
        raise ValueError("Размер выборки не может быть отрицательным")
    if n > len(notes):
        raise SampleTooLargeError(n, len(notes))
    if n == 0:
        return []
    rng = np.random.Generator(np.random.PCG64(seed))
    indices = rng.choice(len(notes), size=n, replace=False)
    return [notes[int(i)] for i in indices]


def review_row(source: SourceNote, standardized: StandardizedNote) -> dict:
    return {
        "accession_num": source.accession_num,
        "source_text": source.note_text,
        "standardized_note": dumps_pretty(serialize_note(standardized)),
    }


def aggregate_ratings(ratings: Sequence[QualityRatings]) -> List[RatingRow]:
    """Среднее и выборочное SD по каждой метрике в порядке итоговой таблицы

    Raises:
        EmptyInputError: нет оценок
    """
    if not ratings:
        raise EmptyInputError("Нет оценок для агрегации")
    rows = []
    for name, title in RATING_METRICS:
        mean, sd = mean_sd([float(getattr(item, name)) for item in ratings])
        rows.append(RatingRow(metric=title, mean=mean, sd=sd))
    return rows
