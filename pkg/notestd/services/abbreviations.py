"""Раскрытие сокращений с разрешением неоднозначности по контексту"""
import re
from typing import List

from pydantic import BaseModel, Field

from notestd.core.resources import AbbreviationLexicon
from notestd.utils.exceptions import UnknownAbbreviationError

# Ширина окна контекста (токенов в каждую сторону)
CONTEXT_WINDOW = 10

_TOKEN_RE = re.compile(r"(?<![A-Za-z0-9])[A-Za-z][A-Za-z0-9]*(?![A-Za-z0-9])")
_WINDOW_WORD_RE = re.compile(r"[a-z0-9]+")


class ExpansionResult(BaseModel):
    text: str
    expanded: List[str] = Field(default_factory=list)


def disambiguate(abbrev: str, window: str, lexicon: AbbreviationLexicon) -> str:
    """Выбор раскрытия по подсказкам в окне контекста

    Кандидаты - раскрытия, чьи подсказки встречаются в окне; среди них побеждает
    наибольший приоритет. Нет совпадений -> раскрытие по умолчанию.
    """
    entry = lexicon.get(abbrev)
    if entry is None:
        raise UnknownAbbreviationError(abbrev)
    if not entry.ambiguous:
        return entry.expansions[0].expansion

    lowered = window.lower()
    words = set(_WINDOW_WORD_RE.findall(lowered))
    padded = " " + " ".join(_WINDOW_WORD_RE.findall(lowered)) + " "

    def matches(cue: str) -> bool:
        if " " in cue:
            return f" {cue} " in padded
        return cue in words

    candidates = [item for item in entry.expansions if any(matches(cue) for cue in item.context_cues)]
    if not candidates:
        return entry.default.expansion
    return max(candidates, key=lambda item: item.priority).expansion


def _is_parenthesized(text: str, start: int, end: int) -> bool:
    return start > 0 and end < len(text) and text[start - 1] == "(" and text[end] == ")"


def expand_abbreviations(text: str, lexicon: AbbreviationLexicon) -> ExpansionResult:
    """Замена целых токенов-сокращений на раскрытия

    Токены в скобках ("(MRI)") не раскрываются: это форма, которую оставляет
    retain_original_in_parens, поэтому повторный проход ничего не меняет.
    """
    tokens = list(_TOKEN_RE.finditer(text))
    if not tokens:
        return ExpansionResult(text=text)

    pieces: List[str] = []
    expanded: List[str] = []
    cursor = 0
    for i, match in enumerate(tokens):
        entry = lexicon.get(match.group())
        if entry is None or _is_parenthesized(text, match.start(), match.end()):
            continue
        if entry.ambiguous:
            left = tokens[max(0, i - CONTEXT_WINDOW)].start()
            right = tokens[min(len(tokens) - 1, i + CONTEXT_WINDOW)].end()
            expansion = disambiguate(entry.abbrev, text[left:right], lexicon)
        else:
            expansion = entry.expansions[0].expansion
        replacement = entry.render(expansion)
        pieces.append(text[cursor:match.start()])
        pieces.append(replacement)
        cursor = match.end()
        expanded.append(f"{entry.abbrev} -> {replacement}")

    pieces.append(text[cursor:])
    return ExpansionResult(text="".join(pieces), expanded=expanded)
