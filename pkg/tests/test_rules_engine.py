"""Тесты детерминированного бэкенда: орфография, термины, сокращения, грамматика, разделы"""
import asyncio

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from notestd.core.config import DATA_DIR
from notestd.core.models import SourceNote, note_leaves
from notestd.core.resources import SpellLexicon, load_resources
from notestd.services.abbreviations import disambiguate, expand_abbreviations
from notestd.services.grammar import count_grammar_fixes
from notestd.services.rules_engine import RuleBackend, standardize_rule_based, standardize_text
from notestd.services.sections import classify_line, segment_sections, strip_headings
from notestd.services.spelling import SpellChecker, correct_spelling, damerau_distance, edits1, get_spell_checker
from notestd.services.terminology import substitute_nonstandard_terms
from notestd.utils.exceptions import UnknownAbbreviationError

# ============================================
# Орфография
# ============================================


def test_spelling_unique_candidate(resources):
    """Опечатка с единственным кандидатом исправляется, регистр первой буквы сохраняется"""
    result = correct_spelling("Patinet reprots headahce", resources.spelling)
    assert result.text == "Patient reports headache"
    assert result.corrections == ["Patinet -> Patient", "reprots -> reports", "headahce -> headache"]


def test_spelling_ambiguous_token_is_left(resources):
    """Несколько кандидатов на одном расстоянии - токен не трогается"""
    result = correct_spelling("She has ben taking it", resources.spelling)
    assert result.text == "She has ben taking it"
    assert result.corrections == []


@pytest.mark.parametrize("text", ["EDSS 3.0", "MS relapse", "upgoing toe", "pt is ok", "Known diagnosis"])
def test_spelling_skips_protected_tokens(resources, text):
    """Сокращения, защищенные слова, короткие и словарные токены не проверяются"""
    assert correct_spelling(text, resources.spelling).corrections == []


@pytest.mark.parametrize(
    "text,expected,events",
    [
        ("methlylprednisolone", "methylprednisolone", ["methlylprednisolone -> methylprednisolone"]),
        ("normal exam", "normal exam", []),
    ],
)
def test_spelling_examples(resources, text, expected, events):
    result = correct_spelling(text, resources.spelling)
    assert result.text == expected
    assert result.corrections == events


def test_spell_checker_helpers(resources):
    checker = get_spell_checker(resources.spelling)
    assert checker.suggest("strenght") == "strength"
    assert checker.should_check("strenght")
    assert not checker.should_check("MRI")
    assert damerau_distance("patinet", "patient") == 1
    assert damerau_distance("abc", "abc") == 0
    assert damerau_distance("kitten", "sitting") == 3
    assert "patient" in edits1("patinet")


def test_spelling_distance_two():
    """При max_edit_distance=2 опечатка из двух правок исправляется, при 1 остается"""
    wide = load_resources(DATA_DIR, max_edit_distance=2)
    result = correct_spelling("vscalar disease", wide.spelling)
    assert result.text == "vascular disease"
    assert result.corrections == ["vscalar -> vascular"]

    narrow = load_resources(DATA_DIR)
    assert narrow.spelling.max_edit_distance == 1
    assert correct_spelling("vscalar disease", narrow.spelling).corrections == []


def test_distance_two_prefers_nearest_candidates():
    """Кандидаты на расстоянии 1 не смешиваются с более далекими"""
    checker = get_spell_checker(load_resources(DATA_DIR, max_edit_distance=2).spelling)
    assert checker.suggest("strenght") == "strength"
    assert checker.candidates("vscalar") == ["vascular"]


@settings(max_examples=25)
@given(st.lists(st.text(alphabet="abcdefghij", min_size=3, max_size=8), min_size=1, max_size=60))
def test_suggest_cache_is_bounded(words):
    """Кеш исправлений не растет сверх заданного размера, ответы не зависят от вытеснения"""
    lexicon = SpellLexicon(vocabulary=frozenset({"headache", "abide", "faced"}))
    checker = SpellChecker(lexicon, cache_size=8)
    first = [checker.suggest(word) for word in words]
    assert checker.cache_info().currsize <= 8
    assert [checker.suggest(word) for word in reversed(words)] == first[::-1]
    assert checker.suggest("headahce") == "headache"


# ============================================
# Нестандартные термины
# ============================================


@pytest.mark.parametrize(
    "text,expected,events",
    [
        ("Has high blood pressure.", "Has hypertension.", ["high blood pressure -> hypertension"]),
        ("Double vision since May.", "Diplopia since May.", ["Double vision -> Diplopia"]),
        ("Reports pins and Needles.", "Reports paresthesias.", ["pins and Needles -> paresthesias"]),
        ("Feels worn out and has weak legs.", "Feels fatigued and has leg weakness.", ["worn out -> fatigued", "weak legs -> leg weakness"]),
        ("Upgoing toe on the right.", "Babinski sign on the right.", ["Upgoing toe -> Babinski sign"]),
        ("prior heart attack", "prior myocardial infarction", ["heart attack -> myocardial infarction"]),
        ("feeling blue for weeks", "symptoms of depression for weeks", ["feeling blue -> symptoms of depression"]),
        ("upgoing toe noted", "Babinski sign noted", ["upgoing toe -> Babinski sign"]),
        ("Tinnitus, no vertigo.", "Tinnitus, no vertigo.", []),
    ],
)
def test_term_substitution(resources, text, expected, events):
    """Самое длинное совпадение без учета регистра, заглавная буква сохраняется"""
    result = substitute_nonstandard_terms(text, resources.terms)
    assert result.text == expected
    assert result.substituted == events


def test_terms_match_whole_words_only(resources):
    assert substitute_nonstandard_terms("The headpain clinic", resources.terms).substituted == []


# ============================================
# Сокращения
# ============================================


def test_unambiguous_abbreviations(resources):
    result = expand_abbreviations("BP stable, MRI ordered, IV fluids.", resources.abbreviations)
    assert result.text == "blood pressure stable, magnetic resonance imaging (MRI) ordered, intravenous fluids."
    assert result.expanded == [
        "BP -> blood pressure",
        "MRI -> magnetic resonance imaging (MRI)",
        "IV -> intravenous",
    ]


def test_ou_expands_to_both_eyes(resources):
    result = expand_abbreviations("OU with pain", resources.abbreviations)
    assert result.text == "both eyes with pain"
    assert result.expanded == ["OU -> both eyes"]
    assert expand_abbreviations("", resources.abbreviations).expanded == []


def test_expansion_is_not_repeated(resources):
    """Повторный проход по результату ничего не раскрывает"""
    first = expand_abbreviations("MRI shows relapsing MS lesions.", resources.abbreviations)
    second = expand_abbreviations(first.text, resources.abbreviations)
    assert second.text == first.text
    assert second.expanded == []


def test_abbreviations_are_case_sensitive_tokens(resources):
    """Токен внутри слова и слово в нижнем регистре не раскрываются"""
    assert expand_abbreviations("BPM and bp and MRIs", resources.abbreviations).expanded == []


def test_unknown_abbreviation(resources):
    with pytest.raises(UnknownAbbreviationError):
        disambiguate("XYZ", "any context", resources.abbreviations)


MS_CONTEXTS = [
    # рассеянный склероз
    ("Patient with relapsing MS on ocrelizumab.", "multiple sclerosis"),
    ("MS diagnosed after optic neuritis in 2015.", "multiple sclerosis"),
    ("New enhancing lesions consistent with active MS.", "multiple sclerosis"),
    ("Secondary progressive MS with gait decline.", "multiple sclerosis"),
    ("Started natalizumab for highly active MS.", "multiple sclerosis"),
    ("MS flare treated with steroids.", "multiple sclerosis"),
    ("Family history of MS in her sister.", "multiple sclerosis"),
    ("MS relapse last spring.", "multiple sclerosis"),
    ("Demyelinating MS with new lesions.", "multiple sclerosis"),
    ("Switched from interferon to fingolimod for MS.", "multiple sclerosis"),
    # психический статус
    ("MS: alert and oriented to person, place and time.", "mental status"),
    ("MS exam notable for slowed responses.", "mental status"),
    ("Attention intact on MS testing.", "mental status"),
    ("MS somnolent but arousable.", "mental status"),
    ("Intermittent confusion noted on MS evaluation.", "mental status"),
    ("MS with impaired orientation to date.", "mental status"),
    ("MS awake, follows commands.", "mental status"),
    ("MS lethargic after seizure.", "mental status"),
    # морфина сульфат
    ("Given MS 4 mg for breakthrough pain.", "morphine sulfate"),
    ("MS IV every four hours as needed.", "morphine sulfate"),
    ("Opioid regimen includes MS extended release tablet.", "morphine sulfate"),
    ("Switch MS dose to twice daily.", "morphine sulfate"),
    ("MS for analgesia after surgery.", "morphine sulfate"),
    ("Morphine: MS prn.", "morphine sulfate"),
    # без подсказок - раскрытие по умолчанию
    ("MS.", "multiple sclerosis"),
    ("Discussed MS with the family today.", "multiple sclerosis"),
    ("Known MS.", "multiple sclerosis"),
]


@pytest.mark.parametrize("context,expansion", MS_CONTEXTS)
def test_ms_disambiguation(resources, context, expansion):
    """MS раскрывается по подсказкам окна контекста"""
    result = expand_abbreviations(context, resources.abbreviations)
    ms_events = [event for event in result.expanded if event.startswith("MS -> ")]
    assert ms_events == [f"MS -> {expansion} (MS)"]
    assert f"{expansion} (MS)" in result.text


def test_ms_context_suite_covers_every_expansion():
    assert len(MS_CONTEXTS) >= 20
    assert {expansion for _, expansion in MS_CONTEXTS} == {"multiple sclerosis", "mental status", "morphine sulfate"}


def test_context_window_is_bounded(resources):
    """Подсказка дальше окна в 10 токенов не влияет на выбор"""
    far = "morphine " + "word " * 12 + "MS"
    near = "morphine " + "word " * 5 + "MS"
    assert disambiguate("MS", far, resources.abbreviations) == "morphine sulfate"
    assert expand_abbreviations(far, resources.abbreviations).expanded == ["MS -> multiple sclerosis (MS)"]
    assert expand_abbreviations(near, resources.abbreviations).expanded == ["MS -> morphine sulfate (MS)"]


# ============================================
# Грамматика
# ============================================


@pytest.mark.parametrize(
    "text,expected,count",
    [
        ("Patient denies fever .", "Patient denies fever.", 1),
        ("the the the patient is stable.", "The patient is stable.", 3),
        ("the the patient walks", "The patient walks.", 3),
        ("patient improved", "Patient improved.", 2),
        ("Patient is stable.", "Patient is stable.", 0),
        ("Stable. follow up in May.", "Stable. Follow up in May.", 1),
        ("No acute distress", "No acute distress.", 1),
        ("Stable", "Stable", 0),
        ("Blood pressure 128/76.", "Blood pressure 128/76.", 0),
        ("alert\nno acute distress", "Alert\nNo acute distress.", 3),
    ],
)
def test_grammar_rules(text, expected, count):
    """Каждое срабатывание правила - одна ошибка, в том числе точка в конце строки"""
    result = count_grammar_fixes(text)
    assert result.text == expected
    assert result.count == count


def test_grammar_is_idempotent():
    once = count_grammar_fixes("the the patient  is stable\nseen today .")
    twice = count_grammar_fixes(once.text)
    assert twice.text == once.text
    assert twice.count == 0


# ============================================
# Разделы
# ============================================


def test_classify_line(resources):
    headings = resources.headings
    assert classify_line("Neurology Progress Note", headings) == (None, "", True)
    assert classify_line("Plan: continue baclofen", headings) == ("PLAN", "continue baclofen", False)
    assert classify_line("REFLEXES:", headings) == ("EXAMINATION/Reflexes", "", False)
    assert classify_line("Planning to return", headings) == (None, "Planning to return", False)


def test_segment_neuro_note(resources, neuro_note):
    segments = segment_sections(neuro_note.note_text, resources.headings)
    assert segments["HISTORY/Chief Complaint"] == "Follow up for relapsing MS."
    assert segments["VITAL SIGNS/Blood Pressure"] == "BP 128/76."
    assert segments["EXAMINATION/Reflexes"] == "upgoing toe on the left."
    assert segments["PLAN/Testing"] == "Continue ocrelizumab every six months.\nStart gabapentin for paresthesias."
    assert segments["PLAN/Return Visit"] == "Return in three months."
    assert segments["LABS"] == ""


def test_preamble_goes_to_interim_history(resources):
    segments = segment_sections("Seen today for follow-up.\nPlan: MRI brain.", resources.headings)
    assert segments["HISTORY/Interim History"] == "Seen today for follow-up."
    assert segments["PLAN/Testing"] == "MRI brain."


def test_section_heading_routes_sentences(resources):
    """Предложения под заголовком раздела разносятся по подразделам по подсказкам"""
    segments = segment_sections("Examination: Alert and oriented. Strength 5/5. Gait is normal.", resources.headings)
    assert segments["EXAMINATION/Mental Status"] == "Alert and oriented."
    assert segments["EXAMINATION/Motor"] == "Strength 5/5."
    assert segments["EXAMINATION/Gait and Station"] == "Gait is normal."


def test_strip_headings(resources):
    text = "NEUROLOGY CLINIC NOTE\nChief Complaint: headache\nPlan:\nrest"
    assert strip_headings(text, resources.headings) == "headache\nrest"


# ============================================
# Заметка целиком
# ============================================


def test_standardize_neuro_note(resources, neuro_note):
    """Листья и Metrics заметки невролога"""
    note = standardize_rule_based(neuro_note, resources)
    leaves = {path: text for path, text in note_leaves(note) if text}

    assert leaves == {
        "HISTORY/Chief Complaint": "Follow up for relapsing multiple sclerosis (MS).",
        "HISTORY/Interim History": (
            "Patient reports diplopia and paresthesias in both feet since March.\n"
            "She has been taking her medication as prescribed."
        ),
        "VITAL SIGNS/Blood Pressure": "Blood pressure 128/76.",
        "EXAMINATION/Mental Status": "Alert and oriented.",
        "EXAMINATION/Motor": "Strength 5/5 in all extremities.",
        "EXAMINATION/Reflexes": "Babinski sign on the left.",
        "RADIOLOGY": "Magnetic resonance imaging (MRI) brain with new enhancing lesions.",
        "IMPRESSION/Assessment": "Relapsing multiple sclerosis (MS) with new lesions.",
        "PLAN/Testing": "Continue ocrelizumab every six months.\nStart gabapentin for paresthesias.",
        "PLAN/Return Visit": "Return in three months.",
    }
    assert note.metrics.spelling_errors == ["reprots -> reports"]
    assert note.metrics.non_standard_terms == [
        "double vision -> diplopia",
        "pins and needles -> paresthesias",
        "upgoing toe -> Babinski sign",
    ]
    assert note.metrics.abbreviations_expanded == [
        "MS -> multiple sclerosis (MS)",
        "BP -> blood pressure",
        "MRI -> magnetic resonance imaging (MRI)",
        "MS -> multiple sclerosis (MS)",
    ]
    assert note.metrics.grammatical_errors == 5


def test_standardize_is_deterministic(resources, neuro_note):
    assert standardize_rule_based(neuro_note, resources) == standardize_rule_based(neuro_note, resources)


def test_short_note_sections(resources, short_neuro_note):
    """Заключение короткой заметки попадает в IMPRESSION/Assessment, жалоба - в Chief Complaint"""
    leaves = segment_sections(short_neuro_note.note_text, resources.headings)
    assert leaves["IMPRESSION/Assessment"] == "Probable multiple sclerosis."
    assert leaves["HISTORY/Chief Complaint"] == "New onset of double vision."
    assert "Internuclear ophthalmoplegia." in leaves["EXAMINATION/Cranial Nerves"]


def test_standardize_short_note(resources, short_neuro_note):
    """Опечатка в названии препарата исправляется, заключение не меняется"""
    note = standardize_rule_based(short_neuro_note, resources)
    leaves = dict(note_leaves(note))

    assert "methlylprednisolone -> methylprednisolone" in note.metrics.spelling_errors
    assert "Start intravenous methylprednisolone." in leaves["PLAN/Testing"]
    assert leaves["IMPRESSION/Assessment"] == "Probable multiple sclerosis."
    assert leaves["HISTORY/Chief Complaint"] == "New onset of diplopia."
    assert "double vision -> diplopia" in note.metrics.non_standard_terms
    assert "MRI -> magnetic resonance imaging (MRI)" in note.metrics.abbreviations_expanded


def test_standardize_text_stage_order(resources):
    """Орфография до терминов и сокращений: исправленное слово участвует в следующих этапах"""
    result = standardize_text("patinet has high blood pressure, BP 150/90", resources)
    assert result.text == "Patient has hypertension, blood pressure 150/90."
    assert result.spelling == ["patinet -> patient"]
    assert result.terms == ["high blood pressure -> hypertension"]
    assert result.abbreviations == ["BP -> blood pressure"]
    assert result.grammar == 2


def test_rule_backend_outcome(resources, neuro_note):
    outcome = asyncio.run(RuleBackend(resources).standardize(neuro_note))
    assert outcome.failure is None
    assert outcome.note == standardize_rule_based(neuro_note, resources)


def test_clean_note_has_empty_metrics(resources):
    note = standardize_rule_based(
        SourceNote(accession_num="1", note_text="Chief Complaint: Headache.\nPlan: Return in three months."),
        resources,
    )
    assert note.metrics.grammatical_errors == 0
    assert note.metrics.spelling_errors == []
    assert note.metrics.abbreviations_expanded == []
    assert note.metrics.non_standard_terms == []
