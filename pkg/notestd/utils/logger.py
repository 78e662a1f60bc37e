"""Модуль для логирования операций пайплайна"""
import json
import logging
import socket
import uuid
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Optional

# Добавляем уровень TRACE (ниже DEBUG)
TRACE_LEVEL = 5
logging.addLevelName(TRACE_LEVEL, "TRACE")


def trace(self, message, *args, **kws):
    """Метод для логирования на уровне TRACE"""
    if self.isEnabledFor(TRACE_LEVEL):
        self._log(TRACE_LEVEL, message, args, **kws)


logging.Logger.trace = trace

# Получаем hostname
try:
    hostname = socket.gethostname()
except Exception:
    hostname = "unknown"

# Заполняются в configure_logging()
_service_name = "notestd"
_environment = "development"

_CONTEXT_FIELDS = ("run_id", "stage", "accession_num")
_METRIC_FIELDS = ("duration_ms", "attempts", "input_tokens", "output_tokens")


class ContextFilter(logging.Filter):
    """Фильтр для добавления контекста в логи"""
    def filter(self, record):
        for field in _CONTEXT_FIELDS:
            if not hasattr(record, field):
                setattr(record, field, "-")
        if not hasattr(record, "hostname"):
            record.hostname = hostname
        if not hasattr(record, "service_name"):
            record.service_name = _service_name
        if not hasattr(record, "environment"):
            record.environment = _environment
        return True


class TextFormatter(logging.Formatter):
    """Текстовый форматтер с поддержкой контекста"""
    def format(self, record):
        # Логи httpx форматируем стандартно
        if record.name.startswith("httpx"):
            return super().format(record)

        try:
            original_msg = record.getMessage()
        except Exception:
            original_msg = str(record.msg) if record.msg else ""

        context_parts = []
        if getattr(record, "run_id", "-") != "-":
            context_parts.append(f"RunID={record.run_id}")
        if getattr(record, "stage", "-") != "-":
            context_parts.append(f"Stage={record.stage}")
        if getattr(record, "accession_num", "-") != "-":
            context_parts.append(f"Note={record.accession_num}")
        if getattr(record, "hostname", "unknown") != "unknown":
            context_parts.append(f"Host={record.hostname}")
        if hasattr(record, "service_name"):
            context_parts.append(f"Service={record.service_name}")
        if hasattr(record, "environment"):
            context_parts.append(f"Env={record.environment}")
        context_str = " | ".join(context_parts)

        metrics = []
        if getattr(record, "duration_ms", None) is not None:
            metrics.append(f"Duration: {record.duration_ms:.2f}ms")
        if getattr(record, "attempts", None) is not None:
            metrics.append(f"Attempts: {record.attempts}")
        if getattr(record, "input_tokens", None) is not None:
            metrics.append(f"Tokens: {record.input_tokens}/{getattr(record, 'output_tokens', 0)}")

        original_msg_stored = record.msg
        original_args_stored = record.args
        record.args = None
        record.msg = original_msg
        if context_str:
            record.msg = f"[{context_str}] {original_msg}"
        if metrics:
            record.msg = f"{record.msg} | {' | '.join(metrics)}"

        try:
            result = super().format(record)
        finally:
            record.msg = original_msg_stored
            record.args = original_args_stored
        return result


_STANDARD_ATTRS = {
    "name", "msg", "args", "created", "filename", "funcName",
    "levelname", "levelno", "lineno", "module", "msecs",
    "message", "pathname", "process", "processName", "relativeCreated",
    "thread", "threadName", "exc_info", "exc_text", "stack_info", "taskName",
    "hostname", "service_name", "environment",
}


class JSONFormatter(logging.Formatter):
    """JSON форматтер для интеграции с ELK"""
    def format(self, record):
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
            "hostname": getattr(record, "hostname", hostname),
            "service_name": getattr(record, "service_name", _service_name),
            "environment": getattr(record, "environment", _environment),
        }

        # Контекст и метрики, затем дополнительные поля из extra
        for key, value in record.__dict__.items():
            if key in _STANDARD_ATTRS or key.startswith("_"):
                continue
            if key in _CONTEXT_FIELDS and value == "-":
                continue
            if key in _METRIC_FIELDS and value is None:
                continue
            log_entry[key] = value

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_entry, ensure_ascii=False, default=str)


# Преобразуем строковый уровень в числовой
LOG_LEVELS = {
    "TRACE": TRACE_LEVEL,
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}

logger = logging.getLogger("notestd")


def configure_logging(settings, level: Optional[str] = None) -> None:
    """Настройка handlers (вызывается из CLI, не при импорте)"""
    global _service_name, _environment
    _service_name = settings.log_service_name
    _environment = settings.log_environment

    if settings.log_format.lower() == "json":
        formatter = JSONFormatter()
    else:
        formatter = TextFormatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    log_level = LOG_LEVELS.get((level or settings.log_level).upper(), logging.INFO)

    handlers = []
    if settings.log_enable_file:
        log_dir = Path("logs")
        log_dir.mkdir(exist_ok=True)
        file_handler = RotatingFileHandler(
            log_dir / f"notestd_{datetime.now().strftime('%Y-%m')}.log",
            maxBytes=settings.log_file_max_size_mb * 1024 * 1024,
            backupCount=settings.log_file_backup_count,
            encoding="utf-8",
        )
        handlers.append(file_handler)
    if settings.log_enable_console:
        handlers.append(logging.StreamHandler())  # stderr

    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    for handler in handlers:
        handler.setFormatter(formatter)
        handler.setLevel(log_level)
        handler.addFilter(ContextFilter())
        logger.addHandler(handler)
    logger.setLevel(log_level)
    logger.propagate = False  # Предотвращаем дублирование через корневой logger

    # httpx пишет каждый запрос на INFO - оставляем только предупреждения
    logging.getLogger("httpx").setLevel(logging.WARNING)


def generate_run_id() -> str:
    """Генерирует уникальный ID запуска"""
    return str(uuid.uuid4())[:8]


def log_stage_operation(
    stage: str,
    operation: str,
    details: Optional[Dict[str, Any]] = None,
    run_id: Optional[str] = None,
    duration_ms: Optional[float] = None,
):
    """Логирование операций этапа пайплайна с контекстом"""
    extra = {"run_id": run_id or "-", "stage": stage, "duration_ms": duration_ms}
    log_msg = f"{stage} | {operation}"
    if details:
        log_msg += f" | Детали: {details}"
    logger.info(log_msg, extra=extra)


def log_note_event(
    stage: str,
    accession_num: str,
    event: str,
    reason: str = "",
    level: int = logging.INFO,
    run_id: Optional[str] = None,
):
    """Логирование события по отдельной заметке (отброшена, пропущена, ошибка)"""
    extra = {"run_id": run_id or "-", "stage": stage, "accession_num": accession_num}
    log_msg = f"Заметка {accession_num} | {event}"
    if reason:
        log_msg += f" | reason={reason}"
    logger.log(level, log_msg, extra=extra)


def log_backend_call(
    accession_num: str,
    success: bool,
    attempts: int,
    failure: Optional[str] = None,
    input_tokens: Optional[int] = None,
    output_tokens: Optional[int] = None,
    duration_ms: Optional[float] = None,
    run_id: Optional[str] = None,
):
    """Логирование обращения к LLM бэкенду (без промпта и ключа)"""
    extra = {
        "run_id": run_id or "-",
        "stage": "llm",
        "accession_num": accession_num,
        "attempts": attempts,
        "input_tokens": input_tokens,
        "output_tokens": output_tokens,
        "duration_ms": duration_ms,
    }
    status = "УСПЕХ" if success else "ОШИБКА"
    log_msg = f"LLM | {status}"
    if failure:
        log_msg += f" | failure={failure}"
    if success:
        logger.info(log_msg, extra=extra)
    else:
        logger.warning(log_msg, extra=extra)


def log_error(
    error: Exception,
    context: str = "",
    details: Optional[Dict[str, Any]] = None,
    run_id: Optional[str] = None,
    stage: Optional[str] = None,
    exc_info: bool = True,
):
    """Логирование ошибок с контекстом"""
    extra = {"run_id": run_id or "-", "stage": stage or "-"}
    log_msg = f"ОШИБКА | {context} | {type(error).__name__}: {str(error)}"
    if details:
        log_msg += f" | Детали: {details}"
    logger.error(log_msg, exc_info=exc_info, extra=extra)
