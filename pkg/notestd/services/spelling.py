"""Исправление орфографии по словарю

Кандидаты - слова словаря на минимальном расстоянии Дамерау (оптимальное выравнивание
строк) не больше max_edit_distance. Исправление выполняется только при единственном
кандидате: между двумя клиническими словами не угадываем.
"""
import re
import string
from functools import lru_cache
from typing import Dict, List, Optional, Set

from pydantic import BaseModel, Field

from notestd.core.resources import SpellLexicon

MIN_TOKEN_LENGTH = 3
SUGGEST_CACHE_SIZE = 65536

_TOKEN_RE = re.compile(r"(?<![A-Za-z0-9'])[A-Za-z]+(?![A-Za-z0-9'])")


class SpellingResult(BaseModel):
    text: str
    corrections: List[str] = Field(default_factory=list)


def damerau_distance(a: str, b: str) -> int:
    """Расстояние Дамерау-Левенштейна (вариант оптимального выравнивания строк)"""
    rows = len(a) + 1
    cols = len(b) + 1
    dist = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        dist[i][0] = i
    for j in range(cols):
        dist[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dist[i][j] = min(dist[i - 1][j] + 1, dist[i][j - 1] + 1, dist[i - 1][j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                dist[i][j] = min(dist[i][j], dist[i - 2][j - 2] + 1)
    return dist[-1][-1]


def edits1(word: str) -> Set[str]:
    """Все строки на расстоянии 1: удаление, перестановка соседних, замена, вставка"""
    letters = string.ascii_lowercase
    splits = [(word[:i], word[i:]) for i in range(len(word) + 1)]
    deletes = [left + right[1:] for left, right in splits if right]
    transposes = [left + right[1] + right[0] + right[2:] for left, right in splits if len(right) > 1]
    replaces = [left + c + right[1:] for left, right in splits if right for c in letters]
    inserts = [left + c + right for left, right in splits for c in letters]
    return set(deletes + transposes + replaces + inserts)


class SpellChecker:
    """Поиск кандидатов по словарю с ограниченным LRU кешем результатов"""

    def __init__(self, lexicon: SpellLexicon, cache_size: int = SUGGEST_CACHE_SIZE):
        self.lexicon = lexicon
        self._by_length: Dict[int, List[str]] = {}
        for word in lexicon.vocabulary:
            self._by_length.setdefault(len(word), []).append(word)
        self._suggest = lru_cache(maxsize=cache_size)(self._unique_candidate)

    def known(self, word: str) -> bool:
        return word.lower() in self.lexicon.vocabulary

    def should_check(self, token: str) -> bool:
        """Токен подлежит проверке: не короткий, не аббревиатура, не защищен, не в словаре"""
        if len(token) < MIN_TOKEN_LENGTH or token.isupper():
            return False
        lowered = token.lower()
        return lowered not in self.lexicon.protected_terms and lowered not in self.lexicon.vocabulary

    def candidates(self, word: str) -> List[str]:
        """Слова словаря на минимальном расстоянии (не больше max_edit_distance)"""
        word = word.lower()
        found = sorted(edits1(word) & self.lexicon.vocabulary)
        if found or self.lexicon.max_edit_distance < 2:
            return found
        result = []
        for length in range(len(word) - 2, len(word) + 3):
            for candidate in self._by_length.get(length, ()):
                if damerau_distance(word, candidate) <= 2:
                    result.append(candidate)
        return sorted(result)

    def _unique_candidate(self, lowered: str) -> Optional[str]:
        found = self.candidates(lowered)
        return found[0] if len(found) == 1 else None

    def suggest(self, word: str) -> Optional[str]:
        """Единственное исправление в нижнем регистре или None"""
        return self._suggest(word.lower())

    def cache_info(self):
        return self._suggest.cache_info()


@lru_cache(maxsize=8)
def get_spell_checker(lexicon: SpellLexicon) -> SpellChecker:
    return SpellChecker(lexicon)


def _match_case(source: str, corrected: str) -> str:
    if source[:1].isupper():
        return corrected[:1].upper() + corrected[1:]
    return corrected


def correct_spelling(text: str, lexicon: SpellLexicon) -> SpellingResult:
    """Замена слов вне словаря на единственного кандидата

    События 'misspelled -> corrected' в порядке появления; регистр первой буквы
    сохраняется.
    """
    checker = get_spell_checker(lexicon)
    corrections: List[str] = []

    def replace(match: re.Match) -> str:
        token = match.group()
        if not checker.should_check(token):
            return token
        suggestion = checker.suggest(token)
        if suggestion is None:
            return token
        corrected = _match_case(token, suggestion)
        corrections.append(f"{token} -> {corrected}")
        return corrected

    corrected_text = _TOKEN_RE.sub(replace, text)
    return SpellingResult(text=corrected_text, corrections=corrections)
