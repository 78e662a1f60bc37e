"""Восстановление почти-JSON из ответов LLM

Проходы применяются по порядку, от самого осторожного, и останавливаются на первом
успешном разборе:
  1. снятие обертки ```json ... ```
  2. обрезка текста до первой открывающей и последней закрывающей скобки
  3. удаление висячих запятых вне строк
"""
import json
import re
from typing import Any, Callable, List, Optional

from notestd.utils.exceptions import UnrepairableJSONError

_FENCE_RE = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\n?(.*?)```", re.DOTALL)

_BRACKETS = {"object": ("{", "}", dict), "array": ("[", "]", list)}


def strip_code_fence(text: str) -> str:
    match = _FENCE_RE.search(text)
    return match.group(1) if match else text


def trim_to_brackets(text: str, opening: str = "{", closing: str = "}") -> str:
    start = text.find(opening)
    end = text.rfind(closing)
    if start == -1 or end <= start:
        return text
    return text[start:end + 1]


def remove_trailing_commas(text: str) -> str:
    """Удаление запятых перед } или ] (содержимое строковых литералов не трогается)"""
    out: List[str] = []
    in_string = False
    escaped = False
    i = 0
    while i < len(text):
        char = text[i]
        if in_string:
            out.append(char)
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == '"':
                in_string = False
        elif char == '"':
            in_string = True
            out.append(char)
        elif char == ",":
            j = i + 1
            while j < len(text) and text[j] in " \t\r\n":
                j += 1
            if j >= len(text) or text[j] not in "}]":
                out.append(char)
        else:
            out.append(char)
        i += 1
    return "".join(out)


def _try_parse(text: str, expected: type) -> Optional[Any]:
    try:
        value = json.loads(text)
    except (json.JSONDecodeError, ValueError):
        return None
    return value if isinstance(value, expected) else None


def repair_json(raw: str, container: str = "object") -> Any:
    """Первый разбираемый JSON объект (или массив при container="array")

    Raises:
        UnrepairableJSONError: ни один проход не дал разбираемого значения
    """
    if container not in _BRACKETS:
        raise ValueError(f"Неизвестный тип контейнера: {container}")
    opening, closing, expected = _BRACKETS[container]

    if not raw or not raw.strip():
        raise UnrepairableJSONError("Пустой ответ", details={"length": len(raw or "")})

    passes: List[Callable[[str], str]] = [
        strip_code_fence,
        lambda text: trim_to_brackets(text, opening, closing),
        remove_trailing_commas,
    ]
    candidate = raw.strip()
    parsed = _try_parse(candidate, expected)
    if parsed is not None:
        return parsed
    for repair_pass in passes:
        candidate = repair_pass(candidate).strip()
        parsed = _try_parse(candidate, expected)
        if parsed is not None:
            return parsed

    raise UnrepairableJSONError(
        "Ответ не удалось привести к JSON",
        details={"container": container, "sample": raw[:200]},
    )
