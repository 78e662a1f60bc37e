"""Разбиение заметки на канонические разделы

Заголовок - метка из headings.json в начале строки с двоеточием (текст после двоеточия
остается содержимым) либо строка, состоящая только из метки. Текст до первого
заголовка попадает в HISTORY/Interim History. Содержимое заголовка уровня раздела
("Examination:") разносится по подразделам по словам-подсказкам, предложения одной
строки остаются на одной строке.
"""
import re
from typing import Dict, List, Optional, Tuple

from notestd.core.models import LEAF_PATHS
from notestd.core.resources import HeadingSynonyms

PREAMBLE_LEAF = "HISTORY/Interim History"

_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")
_WORD_RE = re.compile(r"[a-z0-9]+")

# Результат разбора строки: (цель заголовка или None, содержимое, строка поглощена как титул)
LineClass = Tuple[Optional[str], str, bool]


def classify_line(line: str, synonyms: HeadingSynonyms) -> LineClass:
    """Разбор одной строки: заголовок, титул или содержимое"""
    if " ".join(line.lower().split()) in synonyms.titles:
        return None, "", True
    match = synonyms.label_pattern.match(line)
    if match is None:
        return None, line.strip(), False
    heading = synonyms.by_label[" ".join(match.group("label").lower().split())]
    return heading.target, (match.group("rest") or "").strip(), False


def strip_headings(text: str, synonyms: HeadingSynonyms) -> str:
    """Текст заметки без меток заголовков и строк-титулов"""
    kept = []
    for line in text.splitlines():
        _, content, _ = classify_line(line, synonyms)
        if content:
            kept.append(content)
    return "\n".join(kept)


def route_sentence(sentence: str, section: str, synonyms: HeadingSynonyms) -> str:
    """Подраздел для предложения по словам-подсказкам (первый подходящий по порядку таблицы)"""
    lowered = _WORD_RE.findall(sentence.lower())
    words = set(lowered)
    padded = " " + " ".join(lowered) + " "
    for subsection, cues in synonyms.subsection_cues.get(section, {}).items():
        for cue in cues:
            if (" " in cue and f" {cue} " in padded) or cue in words:
                return f"{section}/{subsection}"
    return synonyms.default_leaf(section)


def segment_sections(text: str, synonyms: HeadingSynonyms) -> Dict[str, str]:
    """Текст каждого листа схемы (все листья присутствуют, пустые - пустая строка)"""
    lines_by_leaf: Dict[str, List[str]] = {path: [] for path in LEAF_PATHS}
    current = PREAMBLE_LEAF

    for raw_line in text.splitlines():
        target, content, is_title = classify_line(raw_line, synonyms)
        if is_title:
            continue
        if target is not None:
            current = target
        if not content:
            continue
        if current in lines_by_leaf:
            lines_by_leaf[current].append(content)
            continue
        # Заголовок уровня раздела: разносим предложения строки по подразделам
        pieces: Dict[str, List[str]] = {}
        for sentence in _SENTENCE_SPLIT_RE.split(content):
            if sentence:
                pieces.setdefault(route_sentence(sentence, current, synonyms), []).append(sentence)
        for leaf, sentences in pieces.items():
            lines_by_leaf[leaf].append(" ".join(sentences))

    return {path: "\n".join(lines) for path, lines in lines_by_leaf.items()}
