"""Запись артефактов стадий: атомарная запись, JSONL, CSV, хеши"""
import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from notestd.utils.exceptions import MalformedLineError
from notestd.utils.logger import logger


def write_bytes_atomic(path: Path, data: bytes) -> Path:
    """Запись через временный файл в том же каталоге и os.replace"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Артефакт записан: {path} ({len(data)} байт)")
    return path


def write_text_atomic(path: Path, text: str) -> Path:
    return write_bytes_atomic(path, text.encode("utf-8"))


def dumps_compact(obj: Any) -> str:
    """Компактный JSON для строк JSONL (порядок ключей сохраняется)"""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def dumps_pretty(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=4)


def write_json(path: Path, obj: Any, pretty: bool = True) -> Path:
    text = dumps_pretty(obj) if pretty else dumps_compact(obj)
    return write_text_atomic(path, text + "\n")


def jsonl_bytes(rows: Iterable[Any]) -> bytes:
    return "".join(dumps_compact(row) + "\n" for row in rows).encode("utf-8")


def write_jsonl(path: Path, rows: Iterable[Any]) -> int:
    """Запись JSONL, возвращает число строк"""
    rows = list(rows)
    write_bytes_atomic(path, jsonl_bytes(rows))
    return len(rows)


def iter_jsonl(path: Path) -> Iterator[Tuple[int, Any]]:
    """Пары (номер строки, объект); пустые строки пропускаются

    Raises:
        MalformedLineError: строка не разбирается как JSON
    """
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield line_number, json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedLineError(line_number, f"{path.name}: {e.msg}")


def read_jsonl(path: Path) -> List[Any]:
    return [obj for _, obj in iter_jsonl(Path(path))]


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue().encode("utf-8")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return write_bytes_atomic(path, csv_bytes(header, rows))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(
    command: str,
    config_hash: str,
    inputs: Iterable[Path],
    outputs: Iterable[Path],
    counts: Dict[str, int],
    exit_code: int,
    extra: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """Манифест запуска без временных меток: одинаковые запуски дают одинаковый файл"""
    manifest: Dict[str, Any] = {
        "command": command,
        "config_hash": config_hash,
        "inputs": {Path(p).name: sha256_file(Path(p)) for p in inputs if Path(p).exists()},
        "outputs": {Path(p).name: sha256_file(Path(p)) for p in outputs if Path(p).exists()},
        "counts": dict(sorted(counts.items())),
        "exit_code": exit_code,
    }
    if extra:
        manifest.update(extra)
    return manifest
