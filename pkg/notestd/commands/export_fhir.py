"""Команда export-fhir: mentions.jsonl -> bundle.json, unmapped_terms.csv"""
import argparse
from collections import Counter
from pathlib import Path

from pydantic import ValidationError

from notestd.commands.common import RunContext
from notestd.core.models import ConceptMapEntry, Mention, OntologySystem
from notestd.core.resources import load_concept_map
from notestd.services.interop import (
    UNMAPPED_CSV_HEADER,
    ConceptIndex,
    bundle,
    map_to_ontology,
    to_resource,
    unmapped_report,
)
from notestd.utils.artifacts import iter_jsonl, write_bytes_atomic, write_csv
from notestd.utils.defaults import BUNDLE_FILE, MENTIONS_FILE, UNMAPPED_FILE
from notestd.utils.exceptions import EXIT_OK, MalformedLineError


def register(subparsers, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("export-fhir", parents=[common], help="сопоставить упоминания с онтологиями и выгрузить FHIR Bundle")
    parser.add_argument("mentions", type=Path, nargs="?", default=None, help=f"по умолчанию <out-dir>/{MENTIONS_FILE}")
    parser.add_argument(
        "--preferred-system",
        dest="preferred_system",
        choices=[system.value for system in OntologySystem],
        default=None,
        help="система, в которой термин ищется первым",
    )
    parser.set_defaults(handler=run)


def read_mentions(path: Path) -> list:
    mentions = []
    for line_number, obj in iter_jsonl(path):
        try:
            mentions.append(Mention.model_validate(obj))
        except ValidationError as e:
            raise MalformedLineError(line_number, f"{path.name}: {e.errors()[0]['msg']}")
    return mentions


def run(args: argparse.Namespace, context: RunContext) -> int:
    config = context.load_config(args)
    mentions = read_mentions(context.input_path(args.mentions, MENTIONS_FILE))
    context.inputs.append(config.concept_map_path)
    index = ConceptIndex(load_concept_map(config.concept_map_path))
    preferred = OntologySystem(config.preferred_system)

    mappings = [map_to_ontology(mention, index, preferred) for mention in mentions]
    # Повторы одного термина в одном разделе (режим raw) различаются порядковым номером
    ordinals: Counter = Counter()
    resources = []
    for mention, mapping in zip(mentions, mappings):
        key = (mention.accession_num, mention.normalized, mention.section_path)
        resources.append(to_resource(mention, mapping, ordinals[key]))
        ordinals[key] += 1

    write_bytes_atomic(context.output_path(BUNDLE_FILE), bundle(resources))
    report = unmapped_report(mentions, mappings)
    write_csv(context.output_path(UNMAPPED_FILE), UNMAPPED_CSV_HEADER, report)

    mapped = sum(1 for mapping in mappings if isinstance(mapping, ConceptMapEntry))
    context.counts.update({"mentions": len(mentions), "mapped": mapped, "unmapped": len(mentions) - mapped, "unmapped_terms": len(report)})
    return EXIT_OK
