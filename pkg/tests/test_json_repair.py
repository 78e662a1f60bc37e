"""Тесты восстановления JSON из ответа модели"""
import pytest

from notestd.utils.exceptions import UnrepairableJSONError
from notestd.utils.json_repair import remove_trailing_commas, repair_json, strip_code_fence, trim_to_brackets


@pytest.mark.parametrize(
    "raw",
    [
        '{"a": 1, "b": [1, 2]}',
        '```json\n{"a": 1, "b": [1, 2]}\n```',
        '```\n{"a": 1, "b": [1, 2]}\n```',
        'Here is the standardized note:\n{"a": 1, "b": [1, 2]}\nLet me know if you need anything else.',
        '{"a": 1, "b": [1, 2,],}',
        '```json\nSure! {"a": 1, "b": [1, 2,],}\n```',
    ],
)
def test_repair_variants(raw):
    """Ограждения, текст вокруг и висячие запятые убираются"""
    assert repair_json(raw) == {"a": 1, "b": [1, 2]}


def test_trailing_comma_inside_string_is_kept():
    assert repair_json('{"a": "x,}", "b": 2,}') == {"a": "x,}", "b": 2}
    assert remove_trailing_commas('{"a": "1,]"}') == '{"a": "1,]"}'


def test_array_container():
    assert repair_json("Scores: [5, 4, 5, 5, 4]", container="array") == [5, 4, 5, 5, 4]
    assert repair_json("[5, 4, 5, 5, 4,]", container="array") == [5, 4, 5, 5, 4]


def test_wrong_container_type_is_not_accepted():
    """Массив не принимается там, где ожидается объект"""
    with pytest.raises(UnrepairableJSONError):
        repair_json("[1, 2, 3]")


@pytest.mark.parametrize("raw", ["", "   ", "I'm sorry, I can't help with that.", '{"a": 1', "{'a': 1}"])
def test_unrepairable(raw):
    with pytest.raises(UnrepairableJSONError):
        repair_json(raw)


def test_unknown_container():
    with pytest.raises(ValueError):
        repair_json("{}", container="tuple")


def test_passes_individually():
    assert strip_code_fence("```json\n{}\n```").strip() == "{}"
    assert strip_code_fence("no fence") == "no fence"
    assert trim_to_brackets("prefix {\"a\": {}} suffix") == '{"a": {}}'
