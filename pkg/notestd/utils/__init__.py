"""Утилиты: логирование, исключения, артефакты, восстановление JSON, значения по умолчанию

Модули, зависящие от notestd.core (validation, completeness_checker, templates),
импортируются напрямую, чтобы не создавать циклов при загрузке конфигурации.
"""
from notestd.utils.logger import (
    configure_logging, generate_run_id, log_backend_call, log_error,
    log_note_event, log_stage_operation, logger
)
from notestd.utils.exceptions import (
    EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL,
    NoteStdError, CorpusError, MissingColumnError, CorpusEncodingError, EmptyCorpusError,
    MalformedLineError, DuplicateAccessionError, UnrepairableJSONError, CoercionFailedError,
    UnknownAbbreviationError, ResourceError, ConfigError, EmptyInputError, SampleTooLargeError,
    InteropError, BackendResponseError, UnparseableResponseError, SchemaInvalidError,
    handle_cli_exception
)
from notestd.utils.artifacts import (
    build_manifest, csv_bytes, dumps_compact, dumps_pretty, iter_jsonl, jsonl_bytes, read_jsonl,
    sha256_bytes, sha256_file, write_bytes_atomic, write_csv, write_json, write_jsonl, write_text_atomic
)
from notestd.utils.json_repair import repair_json

__all__ = [
    # Logger
    'configure_logging', 'generate_run_id', 'log_backend_call', 'log_error',
    'log_note_event', 'log_stage_operation', 'logger',
    # Exceptions
    'EXIT_CONFIG', 'EXIT_OK', 'EXIT_PARTIAL',
    'NoteStdError', 'CorpusError', 'MissingColumnError', 'CorpusEncodingError', 'EmptyCorpusError',
    'MalformedLineError', 'DuplicateAccessionError', 'UnrepairableJSONError', 'CoercionFailedError',
    'UnknownAbbreviationError', 'ResourceError', 'ConfigError', 'EmptyInputError', 'SampleTooLargeError',
    'InteropError', 'BackendResponseError', 'UnparseableResponseError', 'SchemaInvalidError',
    'handle_cli_exception',
    # Artifacts
    'build_manifest', 'csv_bytes', 'dumps_compact', 'dumps_pretty', 'iter_jsonl', 'jsonl_bytes', 'read_jsonl',
    'sha256_bytes', 'sha256_file', 'write_bytes_atomic', 'write_csv', 'write_json', 'write_jsonl', 'write_text_atomic',
    # JSON repair
    'repair_json',
]
