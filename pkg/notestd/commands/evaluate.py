"""Команда evaluate: notes.jsonl + standardized.jsonl -> оценки, разности содержимого, выборка для ревью"""
import argparse
import asyncio
from pathlib import Path
from typing import List, Optional, Tuple

from notestd.commands.common import RunContext, build_llm_client, pair_with_sources, read_notes, read_standardized
from notestd.core.models import RATING_METRICS, QualityRatings, SourceNote, StandardizedNote
from notestd.core.resources import load_rating_thresholds, load_resources
from notestd.services.evaluation import (
    RATING_MODES,
    RATINGS_CSV_HEADER,
    RATINGS_SUMMARY_CSV_HEADER,
    aggregate_ratings,
    completeness_check,
    judge_quality,
    rate_quality_heuristic,
    review_row,
    sample_for_review,
)
from notestd.utils.artifacts import write_csv, write_jsonl
from notestd.utils.defaults import (
    CONTENT_DIFFS_FILE,
    NOTES_FILE,
    PUBLISHED_RATINGS,
    RATINGS_FILE,
    RATINGS_SUMMARY_FILE,
    REVIEW_SAMPLE_FILE,
    STANDARDIZED_FILE,
)
from notestd.utils.exceptions import EXIT_OK, EXIT_PARTIAL, BackendResponseError
from notestd.utils.logger import log_note_event, log_stage_operation

Pair = Tuple[SourceNote, StandardizedNote]


def _with_reference(metric: str, mean: float, sd: float) -> str:
    reference = PUBLISHED_RATINGS.get(metric)
    text = f"{mean:.2f} ± {sd:.2f}"
    if reference is not None:
        text += f" (справочно {reference[0]:.2f} ± {reference[1]:.2f})"
    return text


def register(subparsers, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("evaluate", parents=[common], help="полнота, оценки качества и выборка для ревью")
    parser.add_argument("notes", type=Path, nargs="?", default=None, help=f"по умолчанию <out-dir>/{NOTES_FILE}")
    parser.add_argument("standardized", type=Path, nargs="?", default=None, help=f"по умолчанию <out-dir>/{STANDARDIZED_FILE}")
    parser.add_argument("--rating-mode", dest="rating_mode", choices=RATING_MODES, default=None, help="эвристика или модель-судья")
    parser.add_argument("--review-n", dest="review_n", type=int, default=None, help="размер случайной выборки для ревью")
    parser.set_defaults(handler=run)


def _judge_all(pairs: List[Pair], client, run_id: str, parallelism: int = 1) -> List[Optional[QualityRatings]]:
    """Оценки моделью-судьей не более чем по parallelism заметкам одновременно, в порядке входа"""
    async def main() -> List[Optional[QualityRatings]]:
        semaphore = asyncio.Semaphore(parallelism)

        async def judge_one(source: SourceNote, note: StandardizedNote) -> Optional[QualityRatings]:
            async with semaphore:
                try:
                    return await judge_quality(source.accession_num, source, note, client)
                except BackendResponseError as e:
                    log_note_event("evaluate", source.accession_num, "оценка моделью не получена", reason=e.message, run_id=run_id)
                    return None

        try:
            return list(await asyncio.gather(*(judge_one(source, note) for source, note in pairs)))
        finally:
            await client.aclose()

    return asyncio.run(main())


def run(args: argparse.Namespace, context: RunContext) -> int:
    config = context.load_config(args)
    notes = read_notes(context.input_path(args.notes, NOTES_FILE))
    standardized = read_standardized(context.input_path(args.standardized, STANDARDIZED_FILE))
    pairs = pair_with_sources(standardized, notes)
    resources = load_resources(config.resources_dir, config.max_edit_distance)

    diffs = [completeness_check(source, note, resources.headings) for source, note in pairs]
    if config.rating_mode == "llm-judge":
        ratings = _judge_all(pairs, build_llm_client(config, context.run_id, resources), context.run_id, config.parallelism)
    else:
        context.inputs.append(config.rating_thresholds_path)
        thresholds = load_rating_thresholds(config.rating_thresholds_path)
        ratings = [rate_quality_heuristic(source, note, resources, thresholds, diff) for (source, note), diff in zip(pairs, diffs)]

    write_jsonl(
        context.output_path(CONTENT_DIFFS_FILE),
        ({"accession_num": source.accession_num, **diff.model_dump()} for (source, _), diff in zip(pairs, diffs)),
    )
    rated = [(source, rating) for (source, _), rating in zip(pairs, ratings) if rating is not None]
    write_csv(
        context.output_path(RATINGS_FILE),
        RATINGS_CSV_HEADER,
        ([source.accession_num] + [getattr(rating, name) for name, _ in RATING_METRICS] for source, rating in rated),
    )
    if rated:
        summary_rows = aggregate_ratings([rating for _, rating in rated])
        write_csv(context.output_path(RATINGS_SUMMARY_FILE), RATINGS_SUMMARY_CSV_HEADER, ((row.metric, row.mean, row.sd) for row in summary_rows))
        log_stage_operation("evaluate", "Оценки качества", details={row.metric: _with_reference(row.metric, row.mean, row.sd) for row in summary_rows}, run_id=context.run_id)

    sample = sample_for_review(pairs, n=config.review_n, seed=config.seed)
    write_jsonl(context.output_path(REVIEW_SAMPLE_FILE), (review_row(source, note) for source, note in sample))

    unrated = len(pairs) - len(rated)
    context.counts.update({
        "notes": len(pairs),
        "rated": len(rated),
        "unrated": unrated,
        "notes_with_missing_tokens": sum(1 for diff in diffs if diff.missing_tokens),
        "review_sample": len(sample),
    })
    return EXIT_PARTIAL if unrated else EXIT_OK
