"""Команда fixtures generate: синтетический корпус с ledger внесенных ошибок"""
import argparse
from pathlib import Path

from notestd.commands.common import RunContext
from notestd.core.resources import load_resources
from notestd.services.corpus_generator import generate_corpus, load_profile
from notestd.utils.artifacts import write_jsonl
from notestd.utils.defaults import LEDGER_FILE, NOTES_FILE
from notestd.utils.exceptions import EXIT_OK, ConfigError


def register(subparsers, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("fixtures", help="синтетические корпуса")
    actions = parser.add_subparsers(dest="action", required=True)
    generate = actions.add_parser("generate", parents=[common], help="сгенерировать notes.jsonl и ledger.jsonl")
    generate.add_argument("--n", type=int, required=True, help="число заметок")
    generate.add_argument("--profile", type=Path, default=None, help="JSON профиль: {\"grammar\": [mean, sd], ...}")
    generate.add_argument("--noise", action="store_true", help="добавить токены вне лексиконов (не попадают в ledger)")
    generate.set_defaults(handler=run)


def run(args: argparse.Namespace, context: RunContext) -> int:
    config = context.load_config(args)
    if args.n < 1:
        raise ConfigError("--n должно быть >= 1", details={"n": args.n})
    profile = None
    if args.profile is not None:
        profile = load_profile(context.input_path(args.profile, ""))

    notes, ledgers = generate_corpus(args.n, config.seed, profile=profile, noise=args.noise, resources=load_resources(config.resources_dir, config.max_edit_distance))
    write_jsonl(context.output_path(NOTES_FILE), (note.model_dump() for note in notes))
    write_jsonl(context.output_path(LEDGER_FILE), (ledger.model_dump(mode="json") for ledger in ledgers))

    context.counts.update({"notes": len(notes), "planted": sum(len(ledger.planted) for ledger in ledgers)})
    return EXIT_OK
