"""Замена нестандартных терминов на стандартные"""
import re
from functools import lru_cache
from typing import List, Optional

from pydantic import BaseModel, Field

from notestd.core.resources import TermMap


class TermResult(BaseModel):
    text: str
    substituted: List[str] = Field(default_factory=list)


@lru_cache(maxsize=8)
def _compile(term_map: TermMap) -> Optional[re.Pattern]:
    # Длинные фразы первыми: альтернатива regex выбирает первую подходящую
    phrases = sorted({" ".join(pair.nonstandard.split()) for pair in term_map.pairs}, key=lambda p: (-len(p), p))
    if not phrases:
        return None
    alternatives = "|".join(r"[ \t]+".join(re.escape(word) for word in phrase.split()) for phrase in phrases)
    return re.compile(rf"(?<![A-Za-z0-9])(?:{alternatives})(?![A-Za-z0-9])", re.IGNORECASE)


def substitute_nonstandard_terms(text: str, term_map: TermMap) -> TermResult:
    """Замена фраз по карте терминов (самое длинное совпадение, без учета регистра)

    Если найденная фраза начинается с заглавной буквы, стандартный термин тоже.
    """
    pattern = _compile(term_map)
    if pattern is None:
        return TermResult(text=text)

    substituted: List[str] = []

    def replace(match: re.Match) -> str:
        surface = match.group()
        standard = term_map.lookup(surface)
        if standard is None:
            return surface
        if surface[:1].isupper():
            standard = standard[:1].upper() + standard[1:]
        substituted.append(f"{surface} -> {standard}")
        return standard

    return TermResult(text=pattern.sub(replace, text), substituted=substituted)
