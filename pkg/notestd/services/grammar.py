"""Фиксированный набор грамматических правил

Правила применяются по порядку, каждое применение считается одной ошибкой:
  1. пробел перед знаком препинания ("gait ." -> "gait.")
  2. повтор слова подряд без учета регистра ("the the" -> "the")
  3. заглавная буква в начале предложения (начало строки и после [.!?] с пробелом)
  4. точка в конце строки-предложения (не меньше двух слов, нет завершающего знака)
"""
import re
from typing import List

from pydantic import BaseModel

_SPACE_BEFORE_PUNCT_RE = re.compile(r"(?<=\S)[ \t]+([,.;:!?])(?=\s|$)")
_DUPLICATE_WORD_RE = re.compile(r"(?<![A-Za-z0-9])([A-Za-z]+)[ \t]+\1(?![A-Za-z0-9])", re.IGNORECASE)
_SENTENCE_START_RE = re.compile(r"(^[ \t]*|(?<=[.!?])[ \t]+)([a-z])", re.MULTILINE)
_ALPHA_WORD_RE = re.compile(r"[A-Za-z]+")

TERMINAL_MARKS = ".!?:;,"


class GrammarResult(BaseModel):
    text: str
    count: int = 0


def _fix_spacing(text: str) -> tuple:
    return _SPACE_BEFORE_PUNCT_RE.subn(r"\1", text)


def _fix_duplicates(text: str) -> tuple:
    total = 0
    while True:
        text, count = _DUPLICATE_WORD_RE.subn(r"\1", text)
        if not count:
            return text, total
        total += count


def _fix_capitalization(text: str) -> tuple:
    return _SENTENCE_START_RE.subn(lambda m: m.group(1) + m.group(2).upper(), text)


def _fix_terminal_punctuation(text: str) -> tuple:
    lines: List[str] = []
    count = 0
    for line in text.split("\n"):
        stripped = line.rstrip()
        if stripped and stripped[-1] not in TERMINAL_MARKS and len(_ALPHA_WORD_RE.findall(stripped)) >= 2:
            lines.append(stripped + ".")
            count += 1
        else:
            lines.append(line)
    return "\n".join(lines), count


def count_grammar_fixes(text: str) -> GrammarResult:
    """Применение правил к тексту и подсчет исправлений"""
    total = 0
    for rule in (_fix_spacing, _fix_duplicates, _fix_capitalization, _fix_terminal_punctuation):
        text, count = rule(text)
        total += count
    return GrammarResult(text=text, count=total)
