"""Стандартизация корпуса любым бэкендом и агрегация метрик"""
import asyncio
import math
import time
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field

from notestd.core.models import (
    STAT_METRICS,
    BackendOutcome,
    CorpusSummary,
    FailureKind,
    Histogram,
    MetricSummary,
    NoteStats,
    SourceNote,
    StandardizedNote,
    deserialize_note,
    note_leaves,
    serialize_note,
)
from notestd.utils.exceptions import EmptyInputError, MalformedLineError
from notestd.utils.logger import log_error, log_note_event, log_stage_operation


class StandardizationBackend(Protocol):
    name: str

    async def standardize(self, note: SourceNote) -> BackendOutcome: ...

    async def aclose(self) -> None: ...


class FailureRecord(BaseModel):
    """Отказ по заметке; сырой ответ сохраняется в failures.jsonl для разбора"""

    accession_num: str
    failure: FailureKind
    detail: str = ""
    attempts: int = 0
    raw_response: str = ""


class CorpusRun(BaseModel):
    results: List[Tuple[SourceNote, StandardizedNote]] = Field(default_factory=list)
    failures: List[FailureRecord] = Field(default_factory=list)


async def standardize_corpus(
    notes: Sequence[SourceNote],
    backend: StandardizationBackend,
    parallelism: int = 1,
    run_id: Optional[str] = None,
) -> CorpusRun:
    """Обработка заметок с ограниченным параллелизмом

    Результаты идут в порядке входа независимо от порядка завершения; отказ заметки
    не прерывает пакет.
    """
    if parallelism < 1:
        raise ValueError("parallelism должен быть >= 1")

    semaphore = asyncio.Semaphore(parallelism)
    started = time.perf_counter()

    async def run_one(note: SourceNote) -> BackendOutcome:
        async with semaphore:
            try:
                return await backend.standardize(note)
            except Exception as e:
                # Бэкенды возвращают отказы данными; сюда попадают только непредвиденные ошибки
                log_error(e, context=f"Бэкенд {backend.name}", details={"accession_num": note.accession_num}, run_id=run_id, stage="standardize")
                return BackendOutcome(failure=FailureKind.TRANSPORT, detail=f"{type(e).__name__}: {e}")

    outcomes = await asyncio.gather(*(run_one(note) for note in notes))

    run = CorpusRun()
    for note, outcome in zip(notes, outcomes):
        if outcome.note is not None:
            run.results.append((note, outcome.note))
            continue
        run.failures.append(FailureRecord(
            accession_num=note.accession_num,
            failure=outcome.failure,
            detail=outcome.detail,
            attempts=outcome.attempts,
            raw_response=outcome.raw_response,
        ))
        log_note_event("standardize", note.accession_num, "отказ бэкенда", reason=f"{outcome.failure.value} {outcome.detail}".strip(), run_id=run_id)

    log_stage_operation(
        "standardize",
        f"Корпус обработан бэкендом {backend.name}",
        details={"notes": len(notes), "results": len(run.results), "failures": len(run.failures), "parallelism": parallelism},
        run_id=run_id,
        duration_ms=(time.perf_counter() - started) * 1000,
    )
    return run


def run_standardization(
    notes: Sequence[SourceNote],
    backend: StandardizationBackend,
    parallelism: int = 1,
    run_id: Optional[str] = None,
) -> CorpusRun:
    """Синхронная обертка: запуск цикла событий и закрытие бэкенда"""

    async def main() -> CorpusRun:
        try:
            return await standardize_corpus(notes, backend, parallelism, run_id)
        finally:
            await backend.aclose()

    return asyncio.run(main())


def pending_notes(notes: Iterable[SourceNote], done: Set[str]) -> List[SourceNote]:
    """Заметки, которых еще нет в выходном файле (продолжение прерванного запуска)"""
    return [note for note in notes if note.accession_num not in done]


# ============================================
# Строки standardized.jsonl
# ============================================

def standardized_row(source: SourceNote, note: StandardizedNote) -> dict:
    return {"accession_num": source.accession_num, "standardized_note": serialize_note(note)}


def parse_standardized_row(obj: object, line_number: int = 0) -> Tuple[str, StandardizedNote]:
    """Строка standardized.jsonl -> (accession, заметка)

    Raises:
        MalformedLineError: нет полей или заметка не проходит схему
    """
    if not isinstance(obj, dict) or "accession_num" not in obj or "standardized_note" not in obj:
        raise MalformedLineError(line_number, "ожидался объект с accession_num и standardized_note")
    try:
        return str(obj["accession_num"]), deserialize_note(obj["standardized_note"])
    except ValueError as e:
        raise MalformedLineError(line_number, f"заметка не соответствует схеме: {e}")


# ============================================
# Статистика
# ============================================

def standardized_text(note: StandardizedNote) -> str:
    """Содержимое всех листьев заметки (по строке на непустой лист)"""
    return "\n".join(text for _, text in note_leaves(note) if text)


def compute_note_stats(source: SourceNote, standardized: StandardizedNote) -> NoteStats:
    """Счетчики заметки - длины списков Metrics; длины в символах Unicode"""
    metrics = standardized.metrics
    return NoteStats(
        accession_num=source.accession_num,
        source_chars=len(source.note_text),
        standardized_chars=len(standardized_text(standardized)),
        grammatical_errors=metrics.grammatical_errors,
        spelling_errors=len(metrics.spelling_errors),
        abbreviations_expanded=len(metrics.abbreviations_expanded),
        non_standard_terms=len(metrics.non_standard_terms),
    )


def mean_sd(values: Sequence[float]) -> Tuple[float, float]:
    """Среднее и выборочное SD (знаменатель n-1, при n=1 SD=0)

    math.fsum дает точно округленную сумму, поэтому результат не зависит от порядка.
    """
    n = len(values)
    if n == 0:
        raise EmptyInputError()
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    variance = math.fsum((value - mean) ** 2 for value in values) / (n - 1)
    return mean, math.sqrt(variance)


def build_histogram(values: Sequence[float], bins: int) -> Histogram:
    """Равные корзины на [min, max], последняя закрыта справа; при min == max - [v-0.5, v+0.5]"""
    data = np.asarray(values, dtype=float)
    low, high = float(data.min()), float(data.max())
    if low == high:
        low, high = low - 0.5, high + 0.5
    counts, edges = np.histogram(data, bins=bins, range=(low, high))
    return Histogram(bin_edges=[float(edge) for edge in edges], counts=[int(count) for count in counts])


def aggregate(stats: Sequence[NoteStats], bins: int = 20) -> CorpusSummary:
    """Сводка по метрикам корпуса: среднее, SD, минимум, максимум, гистограмма

    Raises:
        EmptyInputError: нет ни одной заметки
    """
    if not stats:
        raise EmptyInputError("Нет статистики заметок для агрегации")
    if bins < 1:
        raise ValueError("bins должен быть >= 1")

    metrics: Dict[str, MetricSummary] = {}
    for metric in STAT_METRICS:
        values = [float(getattr(item, metric)) for item in stats]
        mean, sd = mean_sd(values)
        metrics[metric] = MetricSummary(
            mean=mean,
            sd=sd,
            min=min(values),
            max=max(values),
            histogram=build_histogram(values, bins),
        )
    return CorpusSummary(n=len(stats), metrics=metrics)
