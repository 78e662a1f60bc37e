"""Сопоставление упоминаний с онтологиями и выгрузка в FHIR R4B

Таблица онтологий - локальный файл, коды в поставке иллюстративные. Ресурсы
проверяются моделями fhir.resources, идентификаторы детерминированы (UUIDv5),
поэтому повторный запуск дает тот же bundle.json байт в байт.
"""
import json
import uuid
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from fhir.resources.R4B import get_fhir_model_class
from pydantic import ValidationError

from notestd.core.models import (
    Coding,
    ConceptMapEntry,
    InteropResource,
    Mention,
    MentionKind,
    OntologySystem,
    ResourceType,
    Unmapped,
)
from notestd.utils.artifacts import dumps_pretty
from notestd.utils.exceptions import InteropError

# Порядок поиска после предпочтительной системы
FALLBACK_ORDER = (OntologySystem.SNOMED_CT, OntologySystem.RXNORM, OntologySystem.LOINC, OntologySystem.ICD)

SYSTEM_URIS: Dict[OntologySystem, str] = {
    OntologySystem.SNOMED_CT: "http://snomed.info/sct",
    OntologySystem.RXNORM: "http://www.nlm.nih.gov/research/umls/rxnorm",
    OntologySystem.LOINC: "http://loinc.org",
    OntologySystem.ICD: "http://hl7.org/fhir/sid/icd-10-cm",
}

PROVENANCE_EXTENSION_URL = "urn:notestd:section-provenance"
TAG_SYSTEM = "urn:notestd:tags"
UNMAPPED_TAG = "unmapped"
RESOURCE_STATUS = "unknown"

# Пространство имен для детерминированных идентификаторов
NOTESTD_NAMESPACE = uuid.uuid5(uuid.NAMESPACE_URL, "urn:notestd")

UNMAPPED_CSV_HEADER = ("term", "kind", "count")


def stable_id(*parts: object) -> str:
    return str(uuid.uuid5(NOTESTD_NAMESPACE, "|".join(str(part) for part in parts)))


def subject_reference(accession_num: str) -> str:
    """Псевдо-идентификатор пациента, производный от accession (сам номер в bundle не попадает)"""
    return f"Patient/{stable_id('subject', accession_num)}"


# ============================================
# Сопоставление
# ============================================

class ConceptIndex:
    """Индекс таблицы онтологий: (термин в нижнем регистре, система) -> запись"""

    def __init__(self, entries: Iterable[ConceptMapEntry]):
        self._entries: Dict[Tuple[str, OntologySystem], ConceptMapEntry] = {}
        for entry in entries:
            self._entries.setdefault((" ".join(entry.normalized_term.lower().split()), entry.system), entry)

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, term: str, system: OntologySystem) -> Optional[ConceptMapEntry]:
        return self._entries.get((" ".join(term.lower().split()), system))


def search_order(preferred_system: Optional[OntologySystem]) -> List[OntologySystem]:
    order = list(FALLBACK_ORDER)
    if preferred_system is not None:
        order.remove(preferred_system)
        order.insert(0, preferred_system)
    return order


def map_to_ontology(
    mention: Mention,
    table: Union[ConceptIndex, Sequence[ConceptMapEntry]],
    preferred_system: Optional[OntologySystem] = OntologySystem.SNOMED_CT,
) -> Union[ConceptMapEntry, Unmapped]:
    """Точный поиск нормализованного термина: сначала в предпочтительной системе, затем по FALLBACK_ORDER"""
    index = table if isinstance(table, ConceptIndex) else ConceptIndex(table)
    for system in search_order(preferred_system):
        entry = index.get(mention.normalized, system)
        if entry is not None:
            return entry
    return Unmapped(term=mention.normalized)


# ============================================
# Ресурсы
# ============================================

def to_resource(mention: Mention, mapping: Union[ConceptMapEntry, Unmapped], ordinal: int = 0) -> InteropResource:
    """Признак -> Observation, лекарство -> MedicationStatement

    ordinal различает повторные упоминания одного термина в режиме raw.
    """
    resource_type = ResourceType.OBSERVATION if mention.kind == MentionKind.FINDING else ResourceType.MEDICATION_STATEMENT
    coding = None
    if isinstance(mapping, ConceptMapEntry):
        coding = Coding(system=SYSTEM_URIS[mapping.system], code=mapping.code, display=mapping.display)
    return InteropResource(
        resource_type=resource_type,
        resource_id=stable_id(resource_type.value, mention.accession_num, mention.normalized, mention.section_path, ordinal),
        subject_ref=subject_reference(mention.accession_num),
        coding=coding,
        text=mention.surface,
        section_provenance=mention.section_path,
    )


def resource_to_fhir(resource: InteropResource) -> dict:
    """JSON представление ресурса в форме R4B с проверкой моделью fhir.resources

    Raises:
        InteropError: ресурс не проходит структурную проверку
    """
    code: dict = {"text": resource.text}
    if resource.coding is not None:
        code = {"coding": [resource.coding.model_dump()], "text": resource.text}
    data: dict = {"resourceType": resource.resource_type.value, "id": resource.resource_id}
    if resource.unmapped:
        data["meta"] = {"tag": [{"system": TAG_SYSTEM, "code": UNMAPPED_TAG}]}
    data["extension"] = [{"url": PROVENANCE_EXTENSION_URL, "valueString": resource.section_provenance}]
    data["status"] = RESOURCE_STATUS
    if resource.resource_type == ResourceType.OBSERVATION:
        data["code"] = code
    else:
        data["medicationCodeableConcept"] = code
    data["subject"] = {"reference": resource.subject_ref}

    try:
        get_fhir_model_class(resource.resource_type.value).model_validate(data)
    except (ValidationError, ValueError) as e:
        raise InteropError(
            f"{resource.resource_type.value} не проходит проверку R4B",
            details={"resource_id": resource.resource_id, "error": str(e)},
        )
    return data


def bundle(resources: Sequence[InteropResource]) -> bytes:
    """Bundle типа collection, записи в порядке входа (пустой список - Bundle без entry)"""
    entries = [{"fullUrl": f"urn:uuid:{r.resource_id}", "resource": resource_to_fhir(r)} for r in resources]
    data: dict = {
        "resourceType": "Bundle",
        "id": stable_id("bundle", *(r.resource_id for r in resources)),
        "type": "collection",
    }
    if entries:
        data["entry"] = entries
    try:
        get_fhir_model_class("Bundle").model_validate(data)
    except (ValidationError, ValueError) as e:
        raise InteropError("Bundle не проходит проверку R4B", details={"error": str(e)})
    return (dumps_pretty(data) + "\n").encode("utf-8")


def _resource_code(resource: dict) -> Tuple[Optional[str], str]:
    concept = resource.get("code") or resource.get("medicationCodeableConcept") or {}
    codings = concept.get("coding") or []
    return (codings[0].get("code") if codings else None), concept.get("text", "")


def _provenance(resource: dict) -> str:
    for extension in resource.get("extension") or []:
        if extension.get("url") == PROVENANCE_EXTENSION_URL:
            return extension.get("valueString", "")
    return ""


def parse_bundle(raw: Union[bytes, str]) -> List[Tuple[Optional[str], str, str]]:
    """Тройки (код или None, текст, путь раздела) в порядке записей

    Raises:
        InteropError: документ не JSON или не Bundle
    """
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise InteropError("bundle.json не разбирается как JSON", details={"error": str(e)})
    if not isinstance(data, dict) or data.get("resourceType") != "Bundle":
        raise InteropError("Документ не является FHIR Bundle")
    triples = []
    for entry in data.get("entry") or []:
        resource = entry.get("resource") or {}
        code, text = _resource_code(resource)
        triples.append((code, text, _provenance(resource)))
    return triples


def unmapped_report(mentions: Sequence[Mention], mappings: Sequence[Union[ConceptMapEntry, Unmapped]]) -> List[Tuple[str, str, int]]:
    """Строки (термин, вид, число упоминаний) для несопоставленных терминов, по убыванию числа"""
    counts: Counter = Counter()
    for mention, mapping in zip(mentions, mappings):
        if isinstance(mapping, Unmapped):
            counts[(mapping.term, mention.kind.value)] += 1
    return [(term, kind, count) for (term, kind), count in sorted(counts.items(), key=lambda item: (-item[1], item[0]))]
