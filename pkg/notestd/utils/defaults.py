"""Значения по умолчанию: профиль генератора, стоп-слова, опубликованные оценки"""

# Стоп-слова для сравнения полноты (50 слов). Отрицания (no, not) и числа не входят:
# их исчезновение меняет клинический смысл
STOP_WORDS = frozenset("""
a an the and or but of to in on at for with by from as into about
is are was were be been being it its this that these those
he she his her him they their them we our you your i
has have had do does did
""".split())

# Профиль синтетического корпуса: (среднее, стандартное отклонение) на заметку
DEFAULT_PROFILE = {
    "grammar": (4.9, 1.8),
    "spelling": (3.3, 5.2),
    "terms": (3.1, 3.0),
    "abbreviations": (15.8, 9.1),
    "length": (6420.0, 3691.0),
}

# Минимальная целевая длина синтетической заметки (порог фильтра корпуса)
MIN_GENERATED_CHARS = 2000

# Справочные оценки качества (среднее, SD) по пятибалльной шкале, строки в порядке итоговой
# таблицы. Выводятся рядом с оценками в логе evaluate, не цель тестов
PUBLISHED_RATINGS = {
    "Text Organization": (4.93, 0.43),
    "Spelling and Grammar": (4.96, 0.39),
    "Abbreviation Expansion": (4.74, 0.56),
    "Terminology Standardization": (4.81, 0.52),
    "Completeness": (4.04, 0.53),
}

# Оценка времени обработки: ~20 секунд на заметку средней длины
REFERENCE_SECONDS_PER_NOTE = 20.0
REFERENCE_NOTE_CHARS = 6420
MIN_SECONDS_PER_NOTE = 5.0
MAX_SECONDS_PER_NOTE = 120.0

# Имена выходных файлов стадий
NOTES_FILE = "notes.jsonl"
STANDARDIZED_FILE = "standardized.jsonl"
FAILURES_FILE = "failures.jsonl"
STATS_FILE = "stats.csv"
SUMMARY_FILE = "summary.json"
SUMMARY_TEXT_FILE = "summary.txt"
MENTIONS_FILE = "mentions.jsonl"
MEDICATIONS_FILE = "medications.csv"
FINDINGS_FILE = "findings.csv"
BUNDLE_FILE = "bundle.json"
UNMAPPED_FILE = "unmapped_terms.csv"
RATINGS_FILE = "ratings.csv"
RATINGS_SUMMARY_FILE = "ratings_summary.csv"
CONTENT_DIFFS_FILE = "content_diffs.jsonl"
REVIEW_SAMPLE_FILE = "review_sample.jsonl"
ESTIMATE_FILE = "estimate.json"
LEDGER_FILE = "ledger.jsonl"
MANIFEST_FILE = "run_manifest.json"
