"""Точка входа CLI: разбор аргументов, логирование, коды выхода, манифест запуска

Коды выхода: 0 - успех, 1 - часть заметок не обработана, 2 - ошибка конфигурации.
"""
import argparse
import sys
import time
from typing import List, Optional

from notestd import __version__
from notestd.commands import estimate, evaluate, export_fhir, extract, fixtures, ingest, metrics, standardize
from notestd.commands.common import RunContext, common_parser
from notestd.core.config import settings
from notestd.utils.exceptions import EXIT_PARTIAL, handle_cli_exception
from notestd.utils.logger import configure_logging, generate_run_id, log_error, log_stage_operation

# Порядок команд соответствует порядку стадий пайплайна
COMMANDS = (ingest, standardize, metrics, extract, export_fhir, evaluate, estimate, fixtures)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="notestd",
        description="Стандартизация клинических заметок: правила или LLM, метрики, извлечение, FHIR",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = common_parser()
    for module in COMMANDS:
        module.register(subparsers, common)
    return parser


def _command_name(args: argparse.Namespace) -> str:
    action = getattr(args, "action", None)
    return f"{args.command} {action}" if action else args.command


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse завершает процесс с кодом 2 при ошибке аргументов и 0 для --help
        return int(e.code or 0)

    configure_logging(settings, args.log_level)
    context = RunContext(command=_command_name(args), run_id=generate_run_id())
    started = time.perf_counter()
    log_stage_operation(context.command, "Запуск команды", run_id=context.run_id)

    try:
        exit_code = args.handler(args, context)
    except Exception as exc:
        exit_code = handle_cli_exception(exc, context=f"Команда {context.command}", run_id=context.run_id)

    try:
        context.write_manifest(exit_code)
    except OSError as e:
        log_error(e, context="Запись манифеста", run_id=context.run_id, stage=context.command)
        exit_code = max(exit_code, EXIT_PARTIAL)

    log_stage_operation(
        context.command,
        "Команда завершена",
        details={"exit_code": exit_code, **context.counts},
        run_id=context.run_id,
        duration_ms=(time.perf_counter() - started) * 1000,
    )
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
