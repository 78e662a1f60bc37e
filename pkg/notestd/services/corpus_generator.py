"""Синтетический корпус с ledger внесенных ошибок

Заметка собирается из чистых предложений банка (по одному на строку под заголовком
листа), затем в строки вносятся исправимые ошибки: сокращения вместо раскрытий,
нестандартные термины, опечатки и нарушения грамматических правил. Каждая правка
принимается, только если правила на этой строке восстанавливают чистый текст ровно
с ожидаемыми событиями, поэтому ledger совпадает с Metrics детерминированного бэкенда.

Генератор - numpy PCG64; каждая заметка получает свой дочерний SeedSequence, так что
заметка i зависит только от (seed, i).
"""
import json
import re
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError, field_validator

from notestd.core.config import DATA_DIR
from notestd.core.models import LEAF_PATHS, PlantedEvent, PlantKind, PlantLedger, SourceNote
from notestd.core.resources import HeadingSynonyms, SentenceBank, StandardizationResources, load_resources, load_sentence_bank
from notestd.services.rules_engine import standardize_text
from notestd.services.sections import classify_line
from notestd.services.spelling import MIN_TOKEN_LENGTH, get_spell_checker
from notestd.utils.defaults import DEFAULT_PROFILE, MIN_GENERATED_CHARS
from notestd.utils.exceptions import ConfigError
from notestd.utils.logger import logger

SENTENCE_BANK_PATH = DATA_DIR / "sentence_bank.json"

ACCESSION_PREFIX = "SYN"
MAX_ATTEMPTS_PER_EVENT = 40
MAX_EXTRA_SENTENCES = 200
NOISE_TOKEN_LENGTH = 7

# Листы, которые в реальных заметках длинные: сюда идут добавочные предложения
FILLER_LEAVES = ("HISTORY/Interim History", "IMPRESSION/Assessment", "PLAN/Testing", "EXAMINATION/Motor")

LETTERS = "abcdefghijklmnopqrstuvwxyz"
NOISE_LETTERS = "bcdfghjklmnpqrstvwxz"

_WORD_RE = re.compile(r"[A-Za-z]+")
_PUNCT_SITE_RE = re.compile(r"(?<=[A-Za-z0-9)])[,.;:](?=\s|$)")

MeanSd = Tuple[float, float]

# Порядок внесения: грамматика последней, так как меняет регистр и пунктуацию
PLANT_ORDER = (PlantKind.ABBREVIATION, PlantKind.NON_STANDARD_TERM, PlantKind.SPELLING, PlantKind.GRAMMAR_RULE)


class GenerationProfile(BaseModel):
    """Целевые (среднее, SD) числа событий на заметку и длины заметки в символах"""

    grammar: MeanSd = DEFAULT_PROFILE["grammar"]
    spelling: MeanSd = DEFAULT_PROFILE["spelling"]
    terms: MeanSd = DEFAULT_PROFILE["terms"]
    abbreviations: MeanSd = DEFAULT_PROFILE["abbreviations"]
    length: MeanSd = DEFAULT_PROFILE["length"]

    @field_validator("grammar", "spelling", "terms", "abbreviations", "length")
    @classmethod
    def _check_moments(cls, value: MeanSd) -> MeanSd:
        mean, sd = value
        if mean < 0 or sd < 0:
            raise ValueError("среднее и SD не могут быть отрицательными")
        return value

    @classmethod
    def zero(cls) -> "GenerationProfile":
        """Профиль без ошибок: чистые заметки и пустые ledger"""
        return cls(grammar=(0.0, 0.0), spelling=(0.0, 0.0), terms=(0.0, 0.0), abbreviations=(0.0, 0.0))

    def target(self, kind: PlantKind) -> MeanSd:
        return {
            PlantKind.GRAMMAR_RULE: self.grammar,
            PlantKind.SPELLING: self.spelling,
            PlantKind.NON_STANDARD_TERM: self.terms,
            PlantKind.ABBREVIATION: self.abbreviations,
        }[kind]


def load_profile(path: Path) -> GenerationProfile:
    """Профиль из JSON файла: {"grammar": [mean, sd], ...}; отсутствующие ключи - по умолчанию

    Raises:
        ConfigError: файл не найден или нарушает схему профиля
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return GenerationProfile.model_validate(json.load(fh))
    except FileNotFoundError:
        raise ConfigError(f"Файл профиля не найден: {path}", details={"path": str(path)})
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"Некорректный профиль генератора: {path}", details={"path": str(path), "error": str(e)})


def draw_count(rng: np.random.Generator, mean: float, sd: float) -> int:
    """Неотрицательное целое с заданными средним и SD

    Дисперсия меньше среднего - биномиальное, больше - отрицательное биномиальное,
    равна - пуассоновское распределение.
    """
    if mean <= 0:
        return 0
    variance = sd * sd
    if variance < mean:
        p = 1.0 - variance / mean
        trials = max(1, int(round(mean / p)))
        return int(rng.binomial(trials, min(1.0, mean / trials)))
    if variance > mean:
        return int(rng.negative_binomial(mean * mean / (variance - mean), mean / variance))
    return int(rng.poisson(mean))


def leaf_labels(headings: HeadingSynonyms) -> Dict[str, str]:
    """Метка заголовка для каждого листа: первый шаблон, указывающий прямо на лист"""
    labels: Dict[str, str] = {}
    for item in headings.mapping:
        if item.target in LEAF_PATHS:
            labels.setdefault(item.target, item.pattern)
    return labels


# ============================================
# Строка заметки с внесенными правками
# ============================================

class _PlantedLine:
    """Чистое предложение, его текущий текст и правки с позициями в текущем тексте"""

    def __init__(self, leaf: str, clean: str):
        self.leaf = leaf
        self.clean = clean
        self.text = clean
        # (вид, before, after, начало, конец)
        self.plants: List[Tuple[PlantKind, str, str, int, int]] = []

    def overlaps(self, start: int, end: int) -> bool:
        return any(start <= plant_end and plant_start <= end for _, _, _, plant_start, plant_end in self.plants)

    def events(self, kind: PlantKind) -> List[str]:
        return [f"{before} -> {after}" for plant_kind, before, after, _, _ in self.plants if plant_kind == kind]

    def grammar_count(self) -> int:
        return sum(1 for plant in self.plants if plant[0] == PlantKind.GRAMMAR_RULE)

    def apply(self, kind: PlantKind, start: int, end: int, replacement: str, before: str, after: str) -> None:
        delta = len(replacement) - (end - start)
        shifted = []
        for plant_kind, plant_before, plant_after, plant_start, plant_end in self.plants:
            if plant_start >= end:
                plant_start, plant_end = plant_start + delta, plant_end + delta
            shifted.append((plant_kind, plant_before, plant_after, plant_start, plant_end))
        shifted.append((kind, before, after, start, start + len(replacement)))
        self.plants = shifted
        self.text = self.text[:start] + replacement + self.text[end:]


# Кандидат правки: (начало, конец, замена, before, after)
Edit = Tuple[int, int, str, str, str]


class CorpusGenerator:
    """Сборка заметок из банка предложений и внесение проверенных правок"""

    def __init__(
        self,
        resources: StandardizationResources,
        bank: SentenceBank,
        profile: Optional[GenerationProfile] = None,
        noise: bool = False,
    ):
        self.resources = resources
        self.profile = profile or GenerationProfile()
        self.noise = noise
        self.title = bank.title
        self.checker = get_spell_checker(resources.spelling)
        self.labels = leaf_labels(resources.headings)

        # Только однозначные сокращения: раскрытие неоднозначных зависит от соседних строк
        self._abbreviations = []
        for entry in resources.abbreviations.entries:
            if entry.ambiguous:
                continue
            render = entry.render(entry.expansions[0].expansion)
            pattern = re.compile(rf"(?<![A-Za-z0-9]){re.escape(render)}(?![A-Za-z0-9])")
            self._abbreviations.append((pattern, entry.abbrev, render))
        alternatives: Dict[str, List[str]] = {}
        for pair in resources.terms.pairs:
            alternatives.setdefault(pair.standard, []).append(pair.nonstandard)
        self._terms = [
            (re.compile(r"(?<![A-Za-z0-9])" + r"[ \t]+".join(re.escape(w) for w in standard.split()) + r"(?![A-Za-z0-9])", re.IGNORECASE), standard, tuple(nonstandard))
            for standard, nonstandard in sorted(alternatives.items())
        ]

        self.sentences: Dict[str, List[str]] = {}
        rejected = 0
        for leaf in LEAF_PATHS:
            if leaf not in self.labels:
                continue
            clean = [sentence for sentence in bank.leaves.get(leaf, ()) if self._is_clean(sentence)]
            rejected += len(bank.leaves.get(leaf, ())) - len(clean)
            if clean:
                self.sentences[leaf] = clean
        if rejected:
            logger.warning(f"Генератор | {rejected} предложений банка изменяются правилами и исключены")
        # Кандидаты сокращений и терминов для каждого чистого предложения
        self._abbreviation_index: Dict[str, list] = {}
        self._term_index: Dict[str, list] = {}
        for pool in self.sentences.values():
            for sentence in pool:
                self._abbreviation_index[sentence] = [item for item in self._abbreviations if item[0].search(sentence)]
                self._term_index[sentence] = [item for item in self._terms if item[0].search(sentence)]

    # ---------- проверки ----------

    def _is_plain_line(self, text: str) -> bool:
        target, content, is_title = classify_line(text, self.resources.headings)
        return target is None and not is_title and content == text.strip()

    def _is_clean(self, sentence: str) -> bool:
        result = standardize_text(sentence, self.resources)
        return (
            self._is_plain_line(sentence)
            and result.text == sentence
            and not (result.spelling or result.terms or result.abbreviations or result.grammar)
        )

    def _replays(self, line: _PlantedLine, text: str, kind: PlantKind, before: str, after: str) -> bool:
        """Правила восстанавливают чистую строку ровно с ожидаемыми событиями"""
        if not self._is_plain_line(text):
            return False
        result = standardize_text(text, self.resources)
        if result.text != line.clean:
            return False
        expected = {k: line.events(k) for k in (PlantKind.SPELLING, PlantKind.NON_STANDARD_TERM, PlantKind.ABBREVIATION)}
        grammar = line.grammar_count()
        if kind == PlantKind.GRAMMAR_RULE:
            grammar += 1
        else:
            expected[kind].append(f"{before} -> {after}")
        return (
            result.grammar == grammar
            and sorted(result.spelling) == sorted(expected[PlantKind.SPELLING])
            and sorted(result.terms) == sorted(expected[PlantKind.NON_STANDARD_TERM])
            and sorted(result.abbreviations) == sorted(expected[PlantKind.ABBREVIATION])
        )

    # ---------- кандидаты правок ----------

    def _abbreviation_edits(self, line: _PlantedLine, rng: np.random.Generator) -> List[Edit]:
        edits = []
        for pattern, abbrev, render in self._abbreviation_index.get(line.clean, ()):
            for match in pattern.finditer(line.text):
                edits.append((match.start(), match.end(), abbrev, abbrev, render))
        return edits

    def _term_edits(self, line: _PlantedLine, rng: np.random.Generator) -> List[Edit]:
        edits = []
        for pattern, standard, nonstandard in self._term_index.get(line.clean, ()):
            for match in pattern.finditer(line.text):
                surface = match.group()
                replacement = nonstandard[int(rng.integers(len(nonstandard)))]
                # Заглавная от начала предложения, а не от самого стандартного термина
                if surface[:1].isupper() and standard[:1].islower():
                    replacement = replacement[:1].upper() + replacement[1:]
                edits.append((match.start(), match.end(), replacement, replacement, surface))
        return edits

    def _corrupt(self, word: str, rng: np.random.Generator) -> Optional[str]:
        """Одна случайная правка слова, однозначно исправляемая обратно"""
        lowered = word.lower()
        operation = int(rng.integers(4))
        i = int(rng.integers(len(lowered)))
        letter = LETTERS[int(rng.integers(len(LETTERS)))]
        if operation == 0 and len(lowered) > MIN_TOKEN_LENGTH + 1:
            corrupted = lowered[:i] + lowered[i + 1:]
        elif operation == 1 and i < len(lowered) - 1 and lowered[i] != lowered[i + 1]:
            corrupted = lowered[:i] + lowered[i + 1] + lowered[i] + lowered[i + 2:]
        elif operation == 2:
            corrupted = lowered[:i] + letter + lowered[i + 1:]
        else:
            corrupted = lowered[:i] + letter + lowered[i:]
        if corrupted == lowered:
            return None
        if word[:1].isupper():
            corrupted = corrupted[:1].upper() + corrupted[1:]
        if not self.checker.should_check(corrupted) or self.checker.suggest(corrupted) != lowered:
            return None
        return corrupted

    def _spelling_edits(self, line: _PlantedLine, rng: np.random.Generator) -> List[Edit]:
        words = [
            match for match in _WORD_RE.finditer(line.text)
            if len(match.group()) > MIN_TOKEN_LENGTH
            and not match.group().isupper()
            and self.checker.known(match.group())
            and match.group().lower() not in self.resources.spelling.protected_terms
        ]
        if not words:
            return []
        match = words[int(rng.integers(len(words)))]
        corrupted = self._corrupt(match.group(), rng)
        if corrupted is None:
            return []
        return [(match.start(), match.end(), corrupted, corrupted, match.group())]

    def _grammar_edits(self, line: _PlantedLine, rng: np.random.Generator) -> List[Edit]:
        text = line.text
        edits: List[Edit] = []
        first = _WORD_RE.match(text)
        if first and text[0].isupper() and not first.group().isupper():
            word = first.group()
            edits.append((0, 1, text[0].lower(), text[0].lower() + word[1:], word))
        if len(text) > 1 and text.endswith(".") and not text[-2].isspace():
            last = text.split()[-1]
            edits.append((len(text) - 1, len(text), "", last[:-1], last))
        for match in _WORD_RE.finditer(text):
            word = match.group()
            if word.islower():
                edits.append((match.start(), match.end(), f"{word} {word}", f"{word} {word}", word))
        for match in _PUNCT_SITE_RE.finditer(text):
            edits.append((match.start(), match.start(), " ", f" {match.group()}", match.group()))
        return edits

    def _edits(self, kind: PlantKind, line: _PlantedLine, rng: np.random.Generator) -> List[Edit]:
        builders = {
            PlantKind.ABBREVIATION: self._abbreviation_edits,
            PlantKind.NON_STANDARD_TERM: self._term_edits,
            PlantKind.SPELLING: self._spelling_edits,
            PlantKind.GRAMMAR_RULE: self._grammar_edits,
        }
        return [edit for edit in builders[kind](line, rng) if not line.overlaps(edit[0], edit[1])]

    # ---------- сборка заметки ----------

    def _new_line(self, leaf: str, rng: np.random.Generator) -> _PlantedLine:
        pool = self.sentences[leaf]
        return _PlantedLine(leaf, pool[int(rng.integers(len(pool)))])

    def _filler_leaf(self, rng: np.random.Generator) -> str:
        leaves = [leaf for leaf in FILLER_LEAVES if leaf in self.sentences] or list(self.sentences)
        return leaves[int(rng.integers(len(leaves)))]

    def _try_plant(self, kind: PlantKind, lines: List[_PlantedLine], rng: np.random.Generator) -> bool:
        for _ in range(MAX_ATTEMPTS_PER_EVENT):
            line = lines[int(rng.integers(len(lines)))]
            edits = self._edits(kind, line, rng)
            if not edits:
                continue
            start, end, replacement, before, after = edits[int(rng.integers(len(edits)))]
            candidate = line.text[:start] + replacement + line.text[end:]
            if self._replays(line, candidate, kind, before, after):
                line.apply(kind, start, end, replacement, before, after)
                return True
        return False

    def _plant(self, kind: PlantKind, count: int, lines: List[_PlantedLine], rng: np.random.Generator) -> int:
        planted = 0
        extra = 0
        while planted < count:
            if self._try_plant(kind, lines, rng):
                planted += 1
                continue
            if extra >= MAX_EXTRA_SENTENCES:
                break
            # Мест для правки не хватило: добавляем предложение
            lines.append(self._new_line(self._filler_leaf(rng), rng))
            extra += 1
        return planted

    def _noise_line(self, rng: np.random.Generator) -> _PlantedLine:
        """Строка из слова вне словаря, которое правила не исправляют (в ledger не входит)"""
        while True:
            token = "".join(NOISE_LETTERS[int(rng.integers(len(NOISE_LETTERS)))] for _ in range(NOISE_TOKEN_LENGTH))
            sentence = token.capitalize() + "."
            if self.checker.should_check(token) and self.checker.suggest(token) is None and self._is_clean(sentence):
                return _PlantedLine("HISTORY/Interim History", sentence)

    def generate_note(self, index: int, rng: np.random.Generator) -> Tuple[SourceNote, PlantLedger]:
        accession_num = f"{ACCESSION_PREFIX}-{index + 1:06d}"
        length_mean, length_sd = self.profile.length
        target_chars = max(float(MIN_GENERATED_CHARS), float(rng.normal(length_mean, length_sd)) if length_sd > 0 else length_mean)
        counts = {kind: draw_count(rng, *self.profile.target(kind)) for kind in PLANT_ORDER}

        lines = [self._new_line(leaf, rng) for leaf in LEAF_PATHS if leaf in self.sentences]
        chars = sum(len(line.clean) + 1 for line in lines)
        while chars < target_chars:
            line = self._new_line(self._filler_leaf(rng), rng)
            lines.append(line)
            chars += len(line.clean) + 1

        for kind in PLANT_ORDER:
            planted = self._plant(kind, counts[kind], lines, rng)
            if planted < counts[kind]:
                logger.debug(f"Генератор | Заметка {accession_num} | {kind.value}: внесено {planted} из {counts[kind]}")

        if self.noise:
            lines.extend(self._noise_line(rng) for _ in range(1 + int(rng.poisson(1.0))))

        return self._assemble(accession_num, lines)

    def _assemble(self, accession_num: str, lines: Sequence[_PlantedLine]) -> Tuple[SourceNote, PlantLedger]:
        by_leaf: Dict[str, List[_PlantedLine]] = {}
        for line in lines:
            by_leaf.setdefault(line.leaf, []).append(line)

        text_lines: List[str] = [self.title] if self.title else []
        tokens_before = len(self.title.split())
        events: List[PlantedEvent] = []
        for leaf in LEAF_PATHS:
            if leaf not in by_leaf:
                continue
            if text_lines:
                text_lines.append("")
            heading = f"{self.labels[leaf]}:"
            text_lines.append(heading)
            tokens_before += len(heading.split())
            for line in by_leaf[leaf]:
                line_tokens = len(line.text.split())
                for kind, before, after, start, _ in line.plants:
                    offset = min(len(line.text[:start].split()), max(0, line_tokens - 1))
                    events.append(PlantedEvent(kind=kind, before=before, after=after, position=tokens_before + offset))
                text_lines.append(line.text)
                tokens_before += line_tokens

        events.sort(key=lambda event: event.position)
        note = SourceNote(accession_num=accession_num, note_text="\n".join(text_lines))
        return note, PlantLedger(accession_num=accession_num, planted=events)


def generate_corpus(
    n: int,
    seed: int,
    profile: Optional[GenerationProfile] = None,
    noise: bool = False,
    resources: Optional[StandardizationResources] = None,
    bank: Optional[SentenceBank] = None,
) -> Tuple[List[SourceNote], List[PlantLedger]]:
    """n заметок и их ledger, детерминированно от seed

    Raises:
        ValueError: n < 1
    """
    if n < 1:
        raise ValueError("n должно быть >= 1")
    generator = CorpusGenerator(
        resources or load_resources(DATA_DIR),
        bank or load_sentence_bank(SENTENCE_BANK_PATH),
        profile,
        noise,
    )
    notes: List[SourceNote] = []
    ledgers: List[PlantLedger] = []
    for index, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        note, ledger = generator.generate_note(index, np.random.Generator(np.random.PCG64(child)))
        notes.append(note)
        ledgers.append(ledger)
    logger.debug(f"Генератор | Создано заметок: {n} | seed={seed} | noise={noise}")
    return notes, ledgers
