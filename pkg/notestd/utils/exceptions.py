"""Централизованная обработка исключений и ошибок"""
from typing import Optional

from notestd.utils.logger import log_error

# Коды возврата CLI
EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


class NoteStdError(Exception):
    """Базовое исключение приложения"""
    def __init__(self, message: str, exit_code: int = EXIT_PARTIAL, details: Optional[dict] = None):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class CorpusError(NoteStdError):
    """Ошибка чтения или записи корпуса"""
    def __init__(self, message: str = "Ошибка корпуса", details: Optional[dict] = None):
        super().__init__(message, exit_code=EXIT_CONFIG, details=details)


class MissingColumnError(CorpusError):
    """В CSV нет указанной колонки"""
    def __init__(self, column: str, header: Optional[list] = None):
        super().__init__(f"Колонка '{column}' отсутствует в заголовке CSV", details={"column": column, "header": header or []})
        self.column = column


class CorpusEncodingError(CorpusError):
    """Байты не декодируются как UTF-8"""


class EmptyCorpusError(CorpusError):
    """CSV содержит только заголовок"""
    def __init__(self, message: str = "Корпус пуст: в CSV нет строк данных", details: Optional[dict] = None):
        super().__init__(message, details=details)


class MalformedLineError(CorpusError):
    """Строка JSONL не разбирается"""
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"Некорректная строка {line_number}: {reason}", details={"line": line_number})
        self.line_number = line_number


class DuplicateAccessionError(CorpusError):
    """Номер accession встречается повторно"""
    def __init__(self, accession_num: str, line_number: Optional[int] = None):
        details = {"accession_num": accession_num}
        if line_number is not None:
            details["line"] = line_number
        super().__init__(f"Повторяющийся accession_num: {accession_num}", details=details)
        self.accession_num = accession_num


class UnrepairableJSONError(NoteStdError):
    """Ответ модели не удалось привести к JSON объекту"""
    def __init__(self, message: str = "Не удалось восстановить JSON", details: Optional[dict] = None):
        super().__init__(message, details=details)


class CoercionFailedError(NoteStdError):
    """Структура заметки повреждена сильнее, чем отсутствие листовых ключей"""
    def __init__(self, message: str = "Не удалось привести заметку к схеме", details: Optional[dict] = None):
        super().__init__(message, details=details)


class UnknownAbbreviationError(NoteStdError):
    """Сокращение отсутствует в лексиконе"""
    def __init__(self, abbrev: str):
        super().__init__(f"Сокращение не найдено в лексиконе: {abbrev}", details={"abbrev": abbrev})


class ResourceError(NoteStdError):
    """Файл ресурса не найден или нарушает инварианты"""
    def __init__(self, message: str = "Ошибка ресурса", details: Optional[dict] = None):
        super().__init__(message, exit_code=EXIT_CONFIG, details=details)


class ConfigError(NoteStdError):
    """Ошибка конфигурации запуска"""
    def __init__(self, message: str = "Ошибка конфигурации", details: Optional[dict] = None):
        super().__init__(message, exit_code=EXIT_CONFIG, details=details)


class EmptyInputError(NoteStdError):
    """Агрегация по пустому набору"""
    def __init__(self, message: str = "Пустой вход для агрегации", details: Optional[dict] = None):
        super().__init__(message, details=details)


class SampleTooLargeError(NoteStdError):
    """Размер выборки больше числа заметок"""
    def __init__(self, requested: int, available: int):
        super().__init__(
            f"Запрошено {requested} заметок для ревью, доступно {available}",
            exit_code=EXIT_CONFIG,
            details={"requested": requested, "available": available},
        )


class InteropError(NoteStdError):
    """Ресурс или Bundle не проходит структурную проверку FHIR"""
    def __init__(self, message: str = "Некорректный FHIR ресурс", details: Optional[dict] = None):
        super().__init__(message, details=details)


class BackendResponseError(NoteStdError):
    """Ответ бэкенда не превратился в стандартизированную заметку"""


class UnparseableResponseError(BackendResponseError):
    """В ответе нет разбираемого JSON объекта"""
    def __init__(self, message: str = "Ответ модели не содержит JSON объекта", details: Optional[dict] = None):
        super().__init__(message, details=details)


class SchemaInvalidError(BackendResponseError):
    """JSON разобран, но не соответствует схеме заметки"""
    def __init__(self, report, message: str = "Ответ модели не соответствует схеме заметки"):
        super().__init__(message, details={"violations": [v.path for v in report.violations]})
        self.report = report


def handle_cli_exception(exc: Exception, context: str = "", run_id: Optional[str] = None) -> int:
    """Обработчик исключений CLI: логирует и возвращает код выхода"""
    if isinstance(exc, NoteStdError):
        log_error(exc, context=context, details=exc.details, run_id=run_id, exc_info=False)
        return exc.exit_code
    # Неожиданные ошибки логируем с полным стеком
    log_error(exc, context=context, run_id=run_id)
    return EXIT_PARTIAL
