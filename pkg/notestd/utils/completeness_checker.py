"""Сравнение мультимножеств токенов исходной и стандартизированной заметки

Токены - последовательности [a-z0-9] в нижнем регистре; подряд идущие повторы внутри
строки схлопываются (правило повтора слова убирает их без записи в Metrics). События
Metrics вида "a -> b" переписывают исходную сторону: токены a забираются, токены b
добавляются.
"""
import re
from collections import Counter
from typing import FrozenSet, Iterable, List, Tuple

from notestd.core.models import ContentDiff

_TOKEN_RE = re.compile(r"[a-z0-9]+")
EVENT_SEPARATOR = " -> "


def tokenize(text: str) -> List[str]:
    return _TOKEN_RE.findall(text.lower())


def line_tokens(text: str) -> List[str]:
    """Токены текста с удалением подряд идущих повторов в пределах строки"""
    tokens: List[str] = []
    for line in text.splitlines():
        previous = None
        for token in tokenize(line):
            if token != previous:
                tokens.append(token)
            previous = token
    return tokens


def split_event(event: str) -> Tuple[str, str]:
    """'before -> after' -> (before, after); без разделителя событие считается пустым"""
    before, separator, after = event.partition(EVENT_SEPARATOR)
    if not separator:
        return "", ""
    return before, after


def apply_rewrites(counter: Counter, events: Iterable[str]) -> int:
    """Переписывание мультимножества событиями Metrics, возвращает число примененных событий

    Событие применяется, если все токены левой части есть в мультимножестве.
    """
    applied = 0
    for event in events:
        before, after = split_event(event)
        consumed = Counter(tokenize(before))
        if not consumed or any(counter[token] < count for token, count in consumed.items()):
            continue
        counter.subtract(consumed)
        counter.update(tokenize(after))
        applied += 1
    return applied


def diff_tokens(
    source_text: str,
    standardized_text: str,
    events: Iterable[str],
    stop_words: FrozenSet[str],
) -> ContentDiff:
    """Пропавшие и добавленные токены после переписывания событиями (без стоп-слов)"""
    source = Counter(line_tokens(source_text))
    applied = apply_rewrites(source, events)
    standardized = Counter(line_tokens(standardized_text))

    for word in stop_words:
        source.pop(word, None)
        standardized.pop(word, None)

    missing = sorted((source - standardized).elements())
    added = sorted((standardized - source).elements())
    return ContentDiff(missing_tokens=missing, added_tokens=added, ledger_explained=applied)
