"""Проверка и приведение стандартизированной заметки к схеме

Пути нарушений - JSON pointer по внешним ключам схемы ("/Metrics/Grammatical Errors").
Все проблемы возвращаются записями отчета, исключение бросает только coerce_note.
"""
import copy
from typing import Any, Dict, List

from pydantic import ValidationError

from notestd.core.models import (
    METRICS_KEYS,
    NOTE_SCHEMA_TREE,
    StandardizedNote,
    ValidationReport,
    Violation,
    ViolationKind,
)
from notestd.utils.exceptions import CoercionFailedError

GRAMMAR_KEY = "Grammatical Errors"
METRICS_LIST_KEYS = tuple(key for key in METRICS_KEYS if key != GRAMMAR_KEY)


def json_pointer(*parts: Any) -> str:
    """JSON pointer из частей пути (экранирование ~ и / по RFC 6901)"""
    escaped = [str(part).replace("~", "~0").replace("/", "~1") for part in parts]
    return "".join(f"/{part}" for part in escaped)


def _type_name(value: Any) -> str:
    return type(value).__name__


def _check_tree(node: Any, tree: Dict[str, object], parts: List[str], violations: List[Violation]) -> None:
    for key, expected in tree.items():
        path = parts + [key]
        if key not in node:
            violations.append(Violation(path=json_pointer(*path), kind=ViolationKind.MISSING_KEY, detail="ключ отсутствует"))
            continue
        value = node[key]
        if isinstance(expected, dict):
            if not isinstance(value, dict):
                violations.append(Violation(path=json_pointer(*path), kind=ViolationKind.WRONG_TYPE, detail=f"ожидался объект, получен {_type_name(value)}"))
                continue
            _check_tree(value, expected, path, violations)
        elif not isinstance(value, str):
            violations.append(Violation(path=json_pointer(*path), kind=ViolationKind.WRONG_TYPE, detail=f"ожидалась строка, получен {_type_name(value)}"))

    for key in node:
        if key not in tree and not (not parts and key == "Metrics"):
            violations.append(Violation(path=json_pointer(*parts, key), kind=ViolationKind.UNKNOWN_KEY, detail="ключ не входит в схему"))


def _check_metrics(metrics: Any, violations: List[Violation]) -> None:
    if not isinstance(metrics, dict):
        violations.append(Violation(path=json_pointer("Metrics"), kind=ViolationKind.WRONG_TYPE, detail=f"ожидался объект, получен {_type_name(metrics)}"))
        return

    if GRAMMAR_KEY not in metrics:
        violations.append(Violation(path=json_pointer("Metrics", GRAMMAR_KEY), kind=ViolationKind.MISSING_KEY, detail="ключ отсутствует"))
    else:
        value = metrics[GRAMMAR_KEY]
        # bool - подкласс int, но в схеме это не число
        if isinstance(value, bool) or not isinstance(value, int):
            violations.append(Violation(path=json_pointer("Metrics", GRAMMAR_KEY), kind=ViolationKind.WRONG_TYPE, detail=f"ожидалось целое, получен {_type_name(value)}"))
        elif value < 0:
            violations.append(Violation(path=json_pointer("Metrics", GRAMMAR_KEY), kind=ViolationKind.BAD_VALUE, detail="отрицательное число"))

    for key in METRICS_LIST_KEYS:
        if key not in metrics:
            violations.append(Violation(path=json_pointer("Metrics", key), kind=ViolationKind.MISSING_KEY, detail="ключ отсутствует"))
            continue
        value = metrics[key]
        if not isinstance(value, list):
            violations.append(Violation(path=json_pointer("Metrics", key), kind=ViolationKind.WRONG_TYPE, detail=f"ожидался список, получен {_type_name(value)}"))
            continue
        for index, entry in enumerate(value):
            if not isinstance(entry, str):
                violations.append(Violation(path=json_pointer("Metrics", key, index), kind=ViolationKind.WRONG_TYPE, detail=f"ожидалась строка, получен {_type_name(entry)}"))
            elif not entry:
                violations.append(Violation(path=json_pointer("Metrics", key, index), kind=ViolationKind.BAD_VALUE, detail="пустая строка"))

    for key in metrics:
        if key not in METRICS_KEYS:
            violations.append(Violation(path=json_pointer("Metrics", key), kind=ViolationKind.UNKNOWN_KEY, detail="ключ не входит в схему"))


def validate_note(candidate: Any) -> ValidationReport:
    """Структурная проверка разобранного JSON против схемы заметки"""
    if not isinstance(candidate, dict):
        return ValidationReport(violations=[
            Violation(path="", kind=ViolationKind.WRONG_TYPE, detail=f"ожидался объект, получен {_type_name(candidate)}")
        ])

    violations: List[Violation] = []
    _check_tree(candidate, NOTE_SCHEMA_TREE, [], violations)
    if "Metrics" not in candidate:
        violations.append(Violation(path=json_pointer("Metrics"), kind=ViolationKind.MISSING_KEY, detail="ключ отсутствует"))
    else:
        _check_metrics(candidate["Metrics"], violations)
    return ValidationReport(violations=violations)


def _leaf_pointers() -> Dict[str, Any]:
    """Отсутствующие листья, которые можно заполнить значением по умолчанию"""
    defaults: Dict[str, Any] = {}

    def walk(tree: Dict[str, object], parts: List[str]) -> None:
        for key, value in tree.items():
            if isinstance(value, dict):
                walk(value, parts + [key])
            else:
                defaults[json_pointer(*parts, key)] = ""

    walk(NOTE_SCHEMA_TREE, [])
    defaults[json_pointer("Metrics", GRAMMAR_KEY)] = 0
    for key in METRICS_LIST_KEYS:
        defaults[json_pointer("Metrics", key)] = []
    return defaults


LEAF_DEFAULTS = _leaf_pointers()


def coerce_note(candidate: Any) -> StandardizedNote:
    """Заметка из JSON, отличающегося от схемы только отсутствующими листьями

    Отсутствующие строки становятся "", списки Metrics - [], счетчик ошибок - 0.

    Raises:
        CoercionFailedError: есть нарушения кроме отсутствующих листьев
    """
    report = validate_note(candidate)
    fatal = [v for v in report.violations if not (v.kind == ViolationKind.MISSING_KEY and v.path in LEAF_DEFAULTS)]
    if fatal:
        raise CoercionFailedError(
            "Структура заметки повреждена",
            details={"violations": [f"{v.kind.value} {v.path}" for v in fatal]},
        )

    filled = copy.deepcopy(candidate)
    for violation in report.violations:
        parts = violation.path.lstrip("/").split("/")
        node = filled
        for part in parts[:-1]:
            node = node[part.replace("~1", "/").replace("~0", "~")]
        node[parts[-1].replace("~1", "/").replace("~0", "~")] = copy.deepcopy(LEAF_DEFAULTS[violation.path])

    try:
        return StandardizedNote.model_validate(filled)
    except ValidationError as e:
        raise CoercionFailedError("Заметка не прошла проверку модели", details={"errors": [err["msg"] for err in e.errors()]})
