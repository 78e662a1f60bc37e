"""Сервисы пайплайна: корпус, правила, LLM, агрегация, извлечение, FHIR, оценка, генератор"""
from notestd.services.corpus import (
    parse_corpus_csv, filter_notes, write_notes_jsonl, read_notes_jsonl, corpus_length_stats
)
from notestd.services.abbreviations import disambiguate, expand_abbreviations
from notestd.services.spelling import correct_spelling, damerau_distance, get_spell_checker
from notestd.services.terminology import substitute_nonstandard_terms
from notestd.services.sections import classify_line, segment_sections, strip_headings
from notestd.services.grammar import count_grammar_fixes
from notestd.services.rules_engine import RuleBackend, standardize_rule_based, standardize_text
from notestd.services.llm_backend import (
    LLMBackend, LLMClient, MockBackend, RateLimiter, Completion, CostEstimate,
    build_prompt, estimate_cost, load_transcripts, parse_response
)
from notestd.services.pipeline import (
    CorpusRun, FailureRecord, aggregate, compute_note_stats, mean_sd, parse_standardized_row,
    pending_notes, run_standardization, standardize_corpus, standardized_row, standardized_text
)
from notestd.services.render import REPORT_FORMATS, render_histograms, render_report
from notestd.services.extraction import (
    COUNT_MODES, extract_findings, extract_medications, extract_mentions_llm, frequency_table
)
from notestd.services.interop import (
    ConceptIndex, bundle, map_to_ontology, parse_bundle, resource_to_fhir, to_resource, unmapped_report
)
from notestd.services.evaluation import (
    aggregate_ratings, completeness_check, judge_quality, rate_quality, rate_quality_heuristic,
    review_row, sample_for_review
)
from notestd.services.corpus_generator import GenerationProfile, draw_count, generate_corpus, load_profile

__all__ = [
    # Corpus
    'parse_corpus_csv', 'filter_notes', 'write_notes_jsonl', 'read_notes_jsonl', 'corpus_length_stats',
    # Rules engine
    'disambiguate', 'expand_abbreviations', 'correct_spelling', 'damerau_distance', 'get_spell_checker',
    'substitute_nonstandard_terms', 'classify_line', 'segment_sections', 'strip_headings',
    'count_grammar_fixes', 'RuleBackend', 'standardize_rule_based', 'standardize_text',
    # LLM backend
    'LLMBackend', 'LLMClient', 'MockBackend', 'RateLimiter', 'Completion', 'CostEstimate',
    'build_prompt', 'estimate_cost', 'load_transcripts', 'parse_response',
    # Pipeline
    'CorpusRun', 'FailureRecord', 'aggregate', 'compute_note_stats', 'mean_sd', 'parse_standardized_row',
    'pending_notes', 'run_standardization', 'standardize_corpus', 'standardized_row', 'standardized_text',
    'REPORT_FORMATS', 'render_histograms', 'render_report',
    # Extraction
    'COUNT_MODES', 'extract_findings', 'extract_medications', 'extract_mentions_llm', 'frequency_table',
    # Interop
    'ConceptIndex', 'bundle', 'map_to_ontology', 'parse_bundle', 'resource_to_fhir', 'to_resource', 'unmapped_report',
    # Evaluation
    'aggregate_ratings', 'completeness_check', 'judge_quality', 'rate_quality', 'rate_quality_heuristic',
    'review_row', 'sample_for_review',
    # Fixtures
    'GenerationProfile', 'draw_count', 'generate_corpus', 'load_profile',
]
