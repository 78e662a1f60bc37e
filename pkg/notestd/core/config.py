"""Конфигурация пайплайна

ВСЕ НАСТРОЙКИ В ОДНОМ МЕСТЕ - config.py

Как это работает:
- Общие настройки (логирование, имя переменной с API ключом, эндпоинт по умолчанию)
  задаются значениями по умолчанию в этом файле ИЛИ переменными окружения системы
- Настройки конкретного запуска (RunConfig) читаются из TOML файла (--config)
  и перекрываются флагами командной строки
- .env файл НЕ используется
"""
import hashlib
import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field, SecretStr, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from notestd.utils.exceptions import ConfigError

# Каталог с поставляемыми ресурсами (лексиконы, газеттиры, шаблоны промптов)
DATA_DIR = Path(__file__).resolve().parent.parent / "data"


class Settings(BaseSettings):
    """Настройки приложения

    Меняйте значения по умолчанию или используйте переменные окружения.
    """

    model_config = SettingsConfigDict(case_sensitive=False)  # LOG_LEVEL = log_level

    # ============================================
    # Logging Configuration (Настройки логирования)
    # ============================================
    log_level: str = "INFO"  # Уровень логирования: TRACE, DEBUG, INFO, WARNING, ERROR, CRITICAL
    log_format: str = "text"  # Формат логов: "text" (обычный) или "json" (для ELK/Kibana)
    log_service_name: str = "notestd"  # Название сервиса (для идентификации в логах)
    log_environment: str = "development"  # Окружение: "development", "staging", "production"
    log_file_max_size_mb: int = 100  # Максимальный размер лог-файла в МБ (перед ротацией)
    log_file_backup_count: int = 5  # Количество резервных копий лог-файлов (при ротации)
    log_enable_file: bool = False  # Включить логирование в файл (logs/notestd_YYYY-MM.log)
    log_enable_console: bool = True  # Включить логирование в консоль (stderr)

    # ============================================
    # LLM Configuration (ОПЦИОНАЛЬНО, только для --backend llm)
    # ============================================
    llm_endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    llm_model_id: str = "gpt-4"
    llm_wire_format: str = "openai-chat"  # "openai-chat" или "simple-json"
    api_key_env: str = "NOTESTD_API_KEY"  # Имя переменной окружения с API ключом

    # ============================================
    # Resources (лексиконы и газеттиры)
    # ============================================
    resources_dir: Path = DATA_DIR


settings = Settings()


class BackendKind(str, Enum):
    """Бэкенды стандартизации"""
    RULES = "rules"
    LLM = "llm"
    MOCK = "mock"


class BackendConfig(BaseModel):
    """Параметры удаленного LLM бэкенда (неизменяемые после загрузки)"""

    model_config = {"frozen": True}

    endpoint_url: str = Field(default_factory=lambda: settings.llm_endpoint_url)
    model_id: str = Field(default_factory=lambda: settings.llm_model_id)
    wire_format: str = Field(default_factory=lambda: settings.llm_wire_format)
    temperature: float = 0.0
    max_output_tokens: int = 4096
    max_retries: int = 3
    requests_per_minute: float = 60.0
    # Тарифы в USD за токен (по умолчанию $0.01/1K вход, $0.03/1K выход)
    cost_per_input_token: float = 0.00001
    cost_per_output_token: float = 0.00003
    request_timeout: float = 120.0
    backoff_base: float = 2.0
    api_key_env: str = Field(default_factory=lambda: settings.api_key_env)

    @field_validator("max_retries")
    @classmethod
    def _check_retries(cls, value: int) -> int:
        if value < 0:
            raise ValueError("max_retries должен быть >= 0")
        return value

    @field_validator("requests_per_minute")
    @classmethod
    def _check_rpm(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("requests_per_minute должен быть > 0")
        return value

    @field_validator("temperature")
    @classmethod
    def _check_temperature(cls, value: float) -> float:
        if not 0.0 <= value <= 2.0:
            raise ValueError("temperature должна быть в диапазоне [0, 2]")
        return value

    @field_validator("wire_format")
    @classmethod
    def _check_wire_format(cls, value: str) -> str:
        if value not in ("openai-chat", "simple-json"):
            raise ValueError(f"Неизвестный формат запроса: {value}")
        return value

    def read_api_key(self) -> Optional[SecretStr]:
        """API ключ из переменной окружения (никогда не логируется и не сериализуется)"""
        value = os.environ.get(self.api_key_env, "").strip()
        return SecretStr(value) if value else None


class RunConfig(BaseModel):
    """Настройки одного запуска CLI"""

    backend: BackendKind = BackendKind.RULES
    parallelism: int = 1
    resources_dir: Path = Field(default_factory=lambda: settings.resources_dir)
    medications_path: Optional[Path] = None
    findings_path: Optional[Path] = None
    concept_map_path: Optional[Path] = None
    rating_thresholds_path: Optional[Path] = None
    mock_transcripts_path: Optional[Path] = None
    out_dir: Path = Path("out")
    seed: int = 0
    bins: int = 20
    min_chars: int = 2000
    max_edit_distance: int = 1
    review_n: int = 20
    preferred_system: str = "SNOMED-CT"
    count_mode: str = "presence"
    rating_mode: str = "heuristic"
    resume: bool = False
    llm: BackendConfig = Field(default_factory=BackendConfig)

    @field_validator("parallelism", "bins")
    @classmethod
    def _check_positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("значение должно быть >= 1")
        return value

    @field_validator("min_chars", "review_n")
    @classmethod
    def _check_non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("значение должно быть >= 0")
        return value

    @field_validator("max_edit_distance")
    @classmethod
    def _check_edit_distance(cls, value: int) -> int:
        if value not in (1, 2):
            raise ValueError("max_edit_distance: 1 или 2")
        return value

    @field_validator("count_mode")
    @classmethod
    def _check_count_mode(cls, value: str) -> str:
        if value not in ("presence", "raw"):
            raise ValueError("count_mode: presence или raw")
        return value

    @field_validator("rating_mode")
    @classmethod
    def _check_rating_mode(cls, value: str) -> str:
        if value not in ("heuristic", "llm-judge"):
            raise ValueError("rating_mode: heuristic или llm-judge")
        return value

    @model_validator(mode="after")
    def _fill_resource_paths(self) -> "RunConfig":
        # Пути по умолчанию берутся из каталога ресурсов
        base = self.resources_dir
        if self.medications_path is None:
            self.medications_path = base / "medications.json"
        if self.findings_path is None:
            self.findings_path = base / "findings.json"
        if self.concept_map_path is None:
            self.concept_map_path = base / "concept_map.json"
        if self.rating_thresholds_path is None:
            self.rating_thresholds_path = base / "rating_thresholds.json"
        return self

    def check_paths(self) -> None:
        """Проверка, что все указанные пути существуют"""
        paths = {
            "resources_dir": self.resources_dir,
            "medications_path": self.medications_path,
            "findings_path": self.findings_path,
            "concept_map_path": self.concept_map_path,
            "rating_thresholds_path": self.rating_thresholds_path,
        }
        if self.mock_transcripts_path is not None:
            paths["mock_transcripts_path"] = self.mock_transcripts_path
        missing = {name: str(path) for name, path in paths.items() if not Path(path).exists()}
        if missing:
            raise ConfigError("Указанные пути не существуют", details=missing)

    def config_hash(self) -> str:
        """SHA-256 от параметров, влияющих на результат (без parallelism, out_dir и секретов)"""
        payload = self.model_dump(mode="json", exclude={"parallelism", "out_dir", "resume"})
        canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_run_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Загрузка RunConfig: TOML файл (если указан), затем флаги командной строки поверх

    Raises:
        ConfigError: файл не найден, не разбирается или значения не проходят валидацию
    """
    values: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                values = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"Файл конфигурации не найден: {path}")
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Ошибка разбора TOML: {e}", details={"path": str(path)})

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key.startswith("llm."):
            values.setdefault("llm", {})[key[4:]] = value
        else:
            values[key] = value

    try:
        config = RunConfig.model_validate(values)
    except ValidationError as e:
        errors = [f"{'.'.join(str(loc) for loc in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigError("Некорректная конфигурация запуска", details={"errors": errors})
    config.check_paths()
    return config
