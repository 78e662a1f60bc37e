"""Тесты стандартизации корпуса и агрегации метрик"""
import asyncio
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from notestd.core.models import STAT_METRICS, FailureKind, NoteMetrics, SourceNote, StandardizedNote, note_from_leaves
from notestd.services.pipeline import (
    aggregate,
    build_histogram,
    compute_note_stats,
    mean_sd,
    parse_standardized_row,
    pending_notes,
    run_standardization,
    standardized_row,
    standardized_text,
)
from notestd.services.rules_engine import RuleBackend, standardize_rule_based
from notestd.utils.exceptions import EmptyInputError, MalformedLineError


class ShuffledBackend(RuleBackend):
    """Бэкенд правил, завершающий ранние заметки позже поздних"""

    name = "shuffled"

    def __init__(self, resources, notes):
        super().__init__(resources)
        self.delays = {note.accession_num: 0.002 * (len(notes) - i) for i, note in enumerate(notes)}

    async def standardize(self, note):
        await asyncio.sleep(self.delays[note.accession_num])
        return await super().standardize(note)


class ExplodingBackend(RuleBackend):
    name = "exploding"

    async def standardize(self, note):
        if note.accession_num == "N-3":
            raise RuntimeError("boom")
        return await super().standardize(note)


# ============================================
# Стандартизация корпуса
# ============================================


def test_results_follow_input_order(resources, sample_notes):
    """Порядок результатов совпадает с порядком входа при любом параллелизме"""
    serial = run_standardization(sample_notes, RuleBackend(resources), parallelism=1)
    parallel = run_standardization(sample_notes, ShuffledBackend(resources, sample_notes), parallelism=8)

    assert [source.accession_num for source, _ in parallel.results] == [note.accession_num for note in sample_notes]
    assert parallel.results == serial.results
    assert serial.failures == parallel.failures == []


def test_unexpected_backend_error_becomes_failure(resources, sample_notes):
    """Исключение бэкенда по одной заметке не прерывает пакет"""
    run = run_standardization(sample_notes, ExplodingBackend(resources), parallelism=2)

    assert [source.accession_num for source, _ in run.results] == ["N-1", "N-2", "N-4", "N-5"]
    assert len(run.failures) == 1
    assert run.failures[0].accession_num == "N-3"
    assert run.failures[0].failure == FailureKind.TRANSPORT
    assert "boom" in run.failures[0].detail


def test_invalid_parallelism(resources, sample_notes):
    with pytest.raises(ValueError):
        run_standardization(sample_notes, RuleBackend(resources), parallelism=0)


def test_pending_notes_skips_done(sample_notes):
    pending = pending_notes(sample_notes, {"N-1", "N-4"})
    assert [note.accession_num for note in pending] == ["N-2", "N-3", "N-5"]


# ============================================
# Строки standardized.jsonl
# ============================================


def test_standardized_row_is_readable(resources, neuro_note):
    note = standardize_rule_based(neuro_note, resources)
    row = standardized_row(neuro_note, note)

    assert row["accession_num"] == "N-1"
    assert "HISTORY" in row["standardized_note"]
    assert parse_standardized_row(row) == ("N-1", note)


@pytest.mark.parametrize(
    "row",
    [
        [],
        {"accession_num": "1"},
        {"standardized_note": {}},
        {"accession_num": "1", "standardized_note": {"HISTORY": "headache"}},
        {"accession_num": "1", "standardized_note": {"Summary": ""}},
    ],
)
def test_parse_standardized_row_errors(row):
    with pytest.raises(MalformedLineError) as exc_info:
        parse_standardized_row(row, line_number=7)
    assert exc_info.value.line_number == 7


# ============================================
# Статистика заметки
# ============================================


def test_note_stats_count_metric_lists(resources, neuro_note):
    """Счетчики равны длинам списков Metrics, длины в символах"""
    note = standardize_rule_based(neuro_note, resources)
    stats = compute_note_stats(neuro_note, note)

    assert stats.source_chars == len(neuro_note.note_text)
    assert stats.standardized_chars == len(standardized_text(note))
    assert stats.spelling_errors == len(note.metrics.spelling_errors)
    assert stats.abbreviations_expanded == len(note.metrics.abbreviations_expanded)
    assert stats.non_standard_terms == len(note.metrics.non_standard_terms)
    assert stats.grammatical_errors == note.metrics.grammatical_errors


def test_standardized_text_joins_non_empty_leaves():
    note = note_from_leaves({"LABS": "Normal.", "PLAN/Testing": "MRI brain."}, NoteMetrics())
    assert standardized_text(note) == "Normal.\nMRI brain."
    assert standardized_text(StandardizedNote()) == ""


def test_unicode_lengths_are_characters():
    source = SourceNote(accession_num="u", note_text="ёжик")
    stats = compute_note_stats(source, StandardizedNote())
    assert stats.source_chars == 4


# ============================================
# Агрегация
# ============================================


def test_mean_sd_sample_deviation():
    mean, sd = mean_sd([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0])
    assert mean == pytest.approx(5.0)
    assert sd == pytest.approx(math.sqrt(32 / 7))


def test_mean_sd_single_and_empty():
    assert mean_sd([3.5]) == (3.5, 0.0)
    with pytest.raises(EmptyInputError):
        mean_sd([])


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=2, max_size=50))
def test_mean_sd_matches_numpy(values):
    """Совпадает с numpy (ddof=1) и не зависит от порядка значений"""
    mean, sd = mean_sd(values)
    assert mean == pytest.approx(float(np.mean(values)), rel=1e-9, abs=1e-6)
    assert sd == pytest.approx(float(np.std(values, ddof=1)), rel=1e-6, abs=1e-6)
    assert mean_sd(list(reversed(values)))[0] == mean


def test_histogram_bins():
    histogram = build_histogram([1.0, 2.0, 3.0, 4.0], bins=3)
    assert histogram.bin_edges == pytest.approx([1.0, 2.0, 3.0, 4.0])
    # Правая граница последней корзины включена
    assert histogram.counts == [1, 1, 2]


def test_histogram_degenerate_range():
    histogram = build_histogram([5.0, 5.0], bins=2)
    assert histogram.bin_edges == pytest.approx([4.5, 5.0, 5.5])
    assert sum(histogram.counts) == 2


@given(st.lists(st.integers(min_value=0, max_value=10_000), min_size=1, max_size=60), st.integers(min_value=1, max_value=25))
def test_histogram_counts_sum_to_n(values, bins):
    histogram = build_histogram([float(v) for v in values], bins)
    assert len(histogram.counts) == bins
    assert sum(histogram.counts) == len(values)


def test_aggregate_corpus(resources, sample_notes):
    run = run_standardization(sample_notes, RuleBackend(resources))
    stats = [compute_note_stats(source, note) for source, note in run.results]

    summary = aggregate(stats, bins=20)
    assert summary.n == len(sample_notes)
    assert set(summary.metrics) == set(STAT_METRICS)
    for name, metric in summary.metrics.items():
        values = [getattr(item, name) for item in stats]
        assert metric.min == min(values)
        assert metric.max == max(values)
        assert sum(metric.histogram.counts) == len(stats)
        assert len(metric.histogram.counts) == 20


def test_aggregate_empty():
    with pytest.raises(EmptyInputError):
        aggregate([])
