"""Общие части команд: флаги, загрузка конфигурации, контекст запуска, манифест"""
import argparse
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from notestd.core.config import BackendKind, RunConfig, load_run_config
from notestd.core.models import SourceNote, StandardizedNote
from notestd.core.resources import StandardizationResources, load_resources
from notestd.services.corpus import read_notes_jsonl
from notestd.services.llm_backend import LLMBackend, LLMClient, MockBackend, load_transcripts
from notestd.services.pipeline import parse_standardized_row
from notestd.utils.artifacts import build_manifest, iter_jsonl, write_json
from notestd.utils.defaults import MANIFEST_FILE
from notestd.utils.exceptions import ConfigError, CorpusError
from notestd.utils.logger import log_stage_operation

# Атрибуты argparse, которые перекрывают поля RunConfig (None - флаг не указан)
CONFIG_FLAGS = (
    "backend",
    "parallelism",
    "min_chars",
    "max_edit_distance",
    "seed",
    "bins",
    "out_dir",
    "resources_dir",
    "mock_transcripts_path",
    "count_mode",
    "rating_mode",
    "review_n",
    "preferred_system",
    "resume",
)


def common_parser() -> argparse.ArgumentParser:
    """Родительский парсер с флагами, общими для всех команд"""
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group("общие параметры")
    group.add_argument("--config", type=Path, default=None, help="TOML файл конфигурации запуска")
    group.add_argument("--backend", choices=[kind.value for kind in BackendKind], default=None, help="бэкенд стандартизации")
    group.add_argument("--parallelism", type=int, default=None, help="число одновременно обрабатываемых заметок")
    group.add_argument("--min-chars", dest="min_chars", type=int, default=None, help="минимальная длина заметки в символах")
    group.add_argument("--max-edit-distance", dest="max_edit_distance", type=int, choices=(1, 2), default=None, help="максимальное расстояние правки при исправлении орфографии")
    group.add_argument("--seed", type=int, default=None, help="seed для выборок и генератора")
    group.add_argument("--bins", type=int, default=None, help="число корзин гистограмм")
    group.add_argument("--out-dir", dest="out_dir", type=Path, default=None, help="каталог артефактов")
    group.add_argument("--resources-dir", dest="resources_dir", type=Path, default=None, help="каталог лексиконов и газеттиров")
    group.add_argument("--mock-transcripts", dest="mock_transcripts_path", type=Path, default=None, help="сценарии ответов для --backend mock")
    group.add_argument("--log-level", dest="log_level", default=None, help="TRACE, DEBUG, INFO, WARNING, ERROR")
    return parser


def config_overrides(args: argparse.Namespace) -> Dict[str, object]:
    return {name: getattr(args, name) for name in CONFIG_FLAGS if getattr(args, name, None) is not None}


@dataclass
class RunContext:
    """Состояние одного запуска команды для манифеста"""

    command: str
    run_id: str
    config: Optional[RunConfig] = None
    inputs: List[Path] = field(default_factory=list)
    outputs: List[Path] = field(default_factory=list)
    counts: Dict[str, int] = field(default_factory=dict)

    @property
    def out_dir(self) -> Path:
        return self.config.out_dir if self.config is not None else Path("out")

    def load_config(self, args: argparse.Namespace) -> RunConfig:
        self.config = load_run_config(args.config, config_overrides(args))
        if args.config is not None:
            self.inputs.append(Path(args.config))
        log_stage_operation(self.command, "Конфигурация загружена", details={"config_hash": self.config.config_hash()[:12]}, run_id=self.run_id)
        return self.config

    def input_path(self, value: Optional[Path], default_name: str) -> Path:
        """Путь входного артефакта: явный аргумент или файл предыдущей стадии в out_dir

        Raises:
            ConfigError: файла нет
        """
        path = Path(value) if value is not None else self.out_dir / default_name
        if not path.exists():
            raise ConfigError(f"Входной файл не найден: {path}", details={"path": str(path)})
        self.inputs.append(path)
        return path

    def output_path(self, name: str) -> Path:
        path = self.out_dir / name
        self.outputs.append(path)
        return path

    def write_manifest(self, exit_code: int) -> Optional[Path]:
        """run_manifest.json без ключа и временных меток; без загруженной конфигурации не пишется"""
        if self.config is None:
            return None
        manifest = build_manifest(
            command=self.command,
            config_hash=self.config.config_hash(),
            inputs=self.inputs,
            outputs=self.outputs,
            counts=self.counts,
            exit_code=exit_code,
        )
        return write_json(self.out_dir / MANIFEST_FILE, manifest)


# ============================================
# Чтение артефактов предыдущих стадий
# ============================================

def read_notes(path: Path) -> List[SourceNote]:
    with open(path, "rb") as fh:
        return read_notes_jsonl(fh)


def read_standardized(path: Path) -> List[Tuple[str, StandardizedNote]]:
    """Пары (accession, заметка) из standardized.jsonl в порядке строк"""
    return [parse_standardized_row(obj, line_number) for line_number, obj in iter_jsonl(path)]


def pair_with_sources(
    standardized: List[Tuple[str, StandardizedNote]],
    notes: List[SourceNote],
) -> List[Tuple[SourceNote, StandardizedNote]]:
    """Сопоставление стандартизированных заметок с исходными по accession

    Raises:
        CorpusError: для стандартизированной заметки нет исходной
    """
    by_accession = {note.accession_num: note for note in notes}
    pairs = []
    for accession_num, note in standardized:
        source = by_accession.get(accession_num)
        if source is None:
            raise CorpusError(f"Нет исходной заметки для accession {accession_num}", details={"accession_num": accession_num})
        pairs.append((source, note))
    return pairs


# ============================================
# Бэкенды
# ============================================

def build_mock_backend(config: RunConfig, resources: StandardizationResources, run_id: str) -> MockBackend:
    transcripts = load_transcripts(config.mock_transcripts_path) if config.mock_transcripts_path else {}
    return MockBackend(transcripts, resources, run_id=run_id)


def build_llm_client(config: RunConfig, run_id: str, resources: Optional[StandardizationResources] = None) -> LLMClient:
    """Клиент модели для извлечения и оценки: удаленный (llm) или сценарный (mock)

    Raises:
        ConfigError: выбран бэкенд rules или не задан API ключ
    """
    if config.backend == BackendKind.LLM:
        return LLMBackend.from_config(config.llm, run_id=run_id).client
    if config.backend == BackendKind.MOCK:
        return build_mock_backend(config, resources or load_resources(config.resources_dir, config.max_edit_distance), run_id).client
    raise ConfigError("Режиму с моделью нужен --backend llm или --backend mock", details={"backend": config.backend.value})
