"""
Report records and their serialization.

Every record is a pydantic model. Trials and checks are written as
newline-delimited JSON with sorted keys and no timestamps, so identical runs
produce byte-identical files; campaign summaries can also be written as CSV.
"""

import csv
import json
import logging
from typing import IO, Any, Dict, Iterable, List, Optional

from pydantic import BaseModel, Field

from .attack_engine import AttackOutcome, StructureReport
from .case_detector import DetectionResult
from .fault_model import CaseLabel
from .trivium_core import Key, bits_to_hex

logger = logging.getLogger(__name__)


class DetectionRecord(BaseModel):
    """One detect_case run, optionally paired with the ground truth."""

    true_case: Optional[str] = Field(None, description="Case decided by P_L")
    detected_label: str = Field(..., description="Label returned by the detector")
    features: List[Optional[bool]] = Field(..., description="Features 1..6")
    keystream_bits_consumed: int = Field(..., ge=0)
    ambiguous: bool = Field(False, description="Features 5 and 6 both held")

    @classmethod
    def from_result(
        cls, result: DetectionResult, true_case: Optional[CaseLabel] = None
    ) -> "DetectionRecord":
        return cls(
            true_case=true_case.value if true_case is not None else None,
            detected_label=result.label.value,
            features=list(result.features),
            keystream_bits_consumed=result.keystream_bits_consumed,
            ambiguous=result.ambiguous,
        )


def structure_to_dict(report: StructureReport) -> Dict[str, Any]:
    profile = None
    if report.degree_profile is not None:
        profile = {str(d): list(span) for d, span in report.degree_profile.items()}
    return {
        "case": report.case.value,
        "variant": report.variant.value,
        "width": report.width,
        "reversible": report.reversible,
        "omitted": list(report.omitted),
        "iv_witness": [list(flips) for flips in report.iv_witness],
        "degree_profile": profile,
        "notes": list(report.notes),
    }


class AttackReport(BaseModel):
    """Outcome of the attack matching a detected case, scored against the key."""

    case: str
    recovered_bits: str = Field("", description="Hex of known bits, unknown as 0")
    known_mask: str = Field("", description="Hex mask of the known bits")
    bits_known: int = 0
    residual_relations: List[str] = Field(default_factory=list)
    candidates_before_filter: Optional[int] = None
    rank_observed: Optional[int] = None
    success: Optional[bool] = None
    failure_stage: Optional[str] = None
    error: Optional[str] = None
    a_sequence: Optional[str] = Field(None, description="a1..a92 as hex")
    structure: Optional[Dict[str, Any]] = None
    diagnostics: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_outcome(cls, outcome: AttackOutcome, key: Key) -> "AttackReport":
        report = cls(case=outcome.case.value, success=outcome.succeeded(key))
        knowledge = outcome.knowledge
        if knowledge is not None:
            diagnostics = dict(knowledge.diagnostics)
            report.recovered_bits = knowledge.value_hex()
            report.known_mask = knowledge.known_mask_hex()
            report.bits_known = knowledge.bits_known
            report.residual_relations = knowledge.residual_relations()
            report.candidates_before_filter = diagnostics.pop(
                "candidates_before_filter", None
            )
            report.rank_observed = diagnostics.pop("rank_observed", None)
            report.diagnostics = diagnostics
        if outcome.a_sequence is not None:
            report.a_sequence = bits_to_hex(outcome.a_sequence.values)
        if outcome.structure is not None:
            report.structure = structure_to_dict(outcome.structure)
        if outcome.failure is not None:
            report.error = str(outcome.failure)
            report.failure_stage = getattr(outcome.failure, "stage", None)
        return report


class TrialRecord(BaseModel):
    """One campaign trial."""

    index: int = Field(..., ge=0)
    mask: str
    key: str
    true_case: str
    detection: DetectionRecord
    attack: Optional[AttackReport] = None


class CaseSummary(BaseModel):
    """Per ground-truth case aggregate of a campaign."""

    case: str
    count: int
    frequency: float
    stderr: float
    expected: Optional[float] = None
    detection_accuracy: Optional[float] = None
    attack_success_rate: Optional[float] = None


class CampaignSummary(BaseModel):
    """Campaign aggregate written after the trial records."""

    model: str
    trials: int
    seed: int
    cases: List[CaseSummary]
    mismatches: List[int] = Field(
        default_factory=list, description="Case 1..4 trials the detector got wrong"
    )
    case5or6_labels: int = 0
    case5or6_mistake_rate: Optional[float] = None
    feature_false_positive_rates: Dict[str, Optional[float]] = Field(
        default_factory=dict
    )
    attack_success_rates: Dict[str, Optional[float]] = Field(default_factory=dict)


class CheckReport(BaseModel):
    """Result of one verify check."""

    check_id: str
    passed: bool
    trials: int
    counterexample: Optional[str] = None
    details: Dict[str, Any] = Field(default_factory=dict)


def to_json_line(record: BaseModel) -> str:
    """Serialize with sorted keys; identical records give identical lines."""
    return json.dumps(record.model_dump(mode="json"), sort_keys=True)


def write_ndjson(records: Iterable[BaseModel], stream: IO[str]) -> int:
    count = 0
    for record in records:
        stream.write(to_json_line(record) + "\n")
        count += 1
    logger.debug(f"Wrote {count} records")
    return count


SUMMARY_FIELDS = [
    "case",
    "count",
    "frequency",
    "stderr",
    "expected",
    "detection_accuracy",
    "attack_success_rate",
]


def write_summary_csv(summary: CampaignSummary, stream: IO[str]) -> None:
    """One row per ground-truth case."""
    writer = csv.DictWriter(stream, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    writer.writeheader()
    for case in summary.cases:
        row = case.model_dump()
        writer.writerow({k: "" if row[k] is None else row[k] for k in SUMMARY_FIELDS})
