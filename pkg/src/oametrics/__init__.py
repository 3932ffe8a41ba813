"""Open-access classification and institutional OA indicators."""

from .classifier import ClassifiedPublication, classify, classify_stream
from .gold_models import GoldModelRow, gold_country_model, resolve_journal_country
from .indicators import (
    CountryMedianRow,
    FieldSummaryRow,
    OverlapMatrix,
    RegionMedianRow,
    count_full,
    field_profile,
    field_summary,
    median_share_by_country,
    merge_counts,
    overlap_matrix,
    region_rollup,
    university_indicators,
)
from .ingest import (
    IssueSummary,
    ParseIssue,
    ParseStats,
    parse_evidence_stream,
    parse_publications,
    parse_registries,
)
from .models import (
    ALL_SCIENCES,
    ANY_OA,
    MAIN_FIELDS,
    OA_TYPES,
    TYPE_ORDER,
    IndicatorCell,
    Institution,
    JournalRecord,
    OAEvidenceRecord,
    OALocation,
    OATypeSet,
    PipelineConfig,
    PublicationRecord,
    normalize_doi,
)
from .repositories import (
    PMCRow,
    RepoMatch,
    RepoShareRow,
    detect_pmc,
    match_repository,
    normalize_url,
    pmc_overlap_table,
    repo_share_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_SCIENCES",
    "ANY_OA",
    "MAIN_FIELDS",
    "OA_TYPES",
    "TYPE_ORDER",
    "ClassifiedPublication",
    "CountryMedianRow",
    "FieldSummaryRow",
    "GoldModelRow",
    "IndicatorCell",
    "Institution",
    "IssueSummary",
    "JournalRecord",
    "OAEvidenceRecord",
    "OALocation",
    "OATypeSet",
    "OverlapMatrix",
    "ParseIssue",
    "ParseStats",
    "PipelineConfig",
    "PMCRow",
    "PublicationRecord",
    "RegionMedianRow",
    "RepoMatch",
    "RepoShareRow",
    "classify",
    "classify_stream",
    "count_full",
    "detect_pmc",
    "field_profile",
    "field_summary",
    "gold_country_model",
    "match_repository",
    "median_share_by_country",
    "merge_counts",
    "normalize_doi",
    "normalize_url",
    "overlap_matrix",
    "parse_evidence_stream",
    "parse_publications",
    "parse_registries",
    "pmc_overlap_table",
    "region_rollup",
    "repo_share_bounds",
    "resolve_journal_country",
    "university_indicators",
]
