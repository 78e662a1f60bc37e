"""Ядро: конфигурация, модели данных, загрузка ресурсов"""
from notestd.core.config import (
    DATA_DIR, Settings, settings, BackendKind, BackendConfig, RunConfig, load_run_config
)
from notestd.core.models import (
    SourceNote, FilterCriteria, StandardizedNote, NoteMetrics,
    CANONICAL_SECTIONS, METRICS_KEYS, NOTE_EXTERNAL_KEYS, LEAF_PATHS,
    serialize_note, deserialize_note, note_leaves, note_from_leaves,
    ViolationKind, Violation, ValidationReport, FailureKind, BackendOutcome,
    NoteStats, STAT_METRICS, Histogram, MetricSummary, CorpusSummary,
    MentionKind, FINDING_SECTIONS, Mention, FrequencyRow, FrequencyTable,
    OntologySystem, ConceptMapEntry, Unmapped, ResourceType, Coding, InteropResource,
    RATING_METRICS, QualityRatings, RatingRow, ContentDiff,
    PlantKind, PlantedEvent, PlantLedger
)
from notestd.core.resources import (
    StandardizationResources, Gazetteer, RatingThresholds, SentenceBank,
    load_resources, load_gazetteer, load_concept_map, load_rating_thresholds, load_sentence_bank
)

__all__ = [
    # Config
    'DATA_DIR', 'Settings', 'settings', 'BackendKind', 'BackendConfig', 'RunConfig', 'load_run_config',
    # Models
    'SourceNote', 'FilterCriteria', 'StandardizedNote', 'NoteMetrics',
    'CANONICAL_SECTIONS', 'METRICS_KEYS', 'NOTE_EXTERNAL_KEYS', 'LEAF_PATHS',
    'serialize_note', 'deserialize_note', 'note_leaves', 'note_from_leaves',
    'ViolationKind', 'Violation', 'ValidationReport', 'FailureKind', 'BackendOutcome',
    'NoteStats', 'STAT_METRICS', 'Histogram', 'MetricSummary', 'CorpusSummary',
    'MentionKind', 'FINDING_SECTIONS', 'Mention', 'FrequencyRow', 'FrequencyTable',
    'OntologySystem', 'ConceptMapEntry', 'Unmapped', 'ResourceType', 'Coding', 'InteropResource',
    'RATING_METRICS', 'QualityRatings', 'RatingRow', 'ContentDiff',
    'PlantKind', 'PlantedEvent', 'PlantLedger',
    # Resources
    'StandardizationResources', 'Gazetteer', 'RatingThresholds', 'SentenceBank',
    'load_resources', 'load_gazetteer', 'load_concept_map', 'load_rating_thresholds', 'load_sentence_bank',
]
