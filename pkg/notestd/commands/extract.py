"""Команда extract: standardized.jsonl -> mentions.jsonl, medications.csv, findings.csv"""
import argparse
import asyncio
from pathlib import Path
from typing import List, Tuple

from notestd.commands.common import RunContext, build_llm_client, read_standardized
from notestd.core.models import Mention, MentionKind, StandardizedNote
from notestd.core.resources import load_gazetteer
from notestd.services.extraction import (
    COUNT_MODES,
    extract_findings,
    extract_medications,
    extract_mentions_llm,
    frequency_table,
)
from notestd.utils.artifacts import write_csv, write_jsonl
from notestd.utils.defaults import FINDINGS_FILE, MEDICATIONS_FILE, MENTIONS_FILE, STANDARDIZED_FILE
from notestd.utils.exceptions import EXIT_OK

EXTRACTORS = ("gazetteer", "llm")
FREQUENCY_CSV_HEADER = ("normalized", "count")


def register(subparsers, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("extract", parents=[common], help="лекарства из PLAN и признаки из HISTORY/EXAMINATION/IMPRESSION")
    parser.add_argument("standardized", type=Path, nargs="?", default=None, help=f"по умолчанию <out-dir>/{STANDARDIZED_FILE}")
    parser.add_argument("--count-mode", dest="count_mode", choices=COUNT_MODES, default=None, help="presence - заметки с упоминанием, raw - все упоминания")
    parser.add_argument("--extractor", choices=EXTRACTORS, default="gazetteer", help="газеттир или модель (--backend llm/mock)")
    parser.set_defaults(handler=run)


def _extract_gazetteer(standardized: List[Tuple[str, StandardizedNote]], config, raw: bool) -> List[Mention]:
    medications = load_gazetteer(config.medications_path, MentionKind.MEDICATION)
    findings = load_gazetteer(config.findings_path, MentionKind.FINDING)
    mentions: List[Mention] = []
    for accession_num, note in standardized:
        mentions.extend(extract_medications(note, medications, accession_num, dedupe=not raw))
        mentions.extend(extract_findings(note, findings, accession_num, dedupe=not raw))
    return mentions


def _extract_llm(standardized: List[Tuple[str, StandardizedNote]], client, run_id: str) -> List[Mention]:
    async def main() -> List[Mention]:
        mentions: List[Mention] = []
        try:
            for accession_num, note in standardized:
                for kind in (MentionKind.MEDICATION, MentionKind.FINDING):
                    mentions.extend(await extract_mentions_llm(accession_num, note, kind, client, run_id=run_id))
        finally:
            await client.aclose()
        return mentions

    return asyncio.run(main())


def run(args: argparse.Namespace, context: RunContext) -> int:
    config = context.load_config(args)
    standardized = read_standardized(context.input_path(args.standardized, STANDARDIZED_FILE))

    if args.extractor == "llm":
        mentions = _extract_llm(standardized, build_llm_client(config, context.run_id), context.run_id)
    else:
        context.inputs.extend([config.medications_path, config.findings_path])
        mentions = _extract_gazetteer(standardized, config, raw=config.count_mode == "raw")

    write_jsonl(context.output_path(MENTIONS_FILE), (mention.model_dump(mode="json") for mention in mentions))
    for kind, name in ((MentionKind.MEDICATION, MEDICATIONS_FILE), (MentionKind.FINDING, FINDINGS_FILE)):
        table = frequency_table(mentions, kind, mode=config.count_mode)
        write_csv(context.output_path(name), FREQUENCY_CSV_HEADER, ((row.normalized, row.count) for row in table.rows))
        context.counts[f"{kind.value.lower()}_mentions"] = table.total_mentions
        context.counts[f"{kind.value.lower()}_names"] = len(table.rows)
    context.counts["notes"] = len(standardized)
    return EXIT_OK
