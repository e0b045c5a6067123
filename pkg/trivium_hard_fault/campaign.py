"""
Monte Carlo campaigns: sample a fault, detect it blind, optionally attack.

Trial ``i`` draws everything from ``numpy.random.default_rng(seed + i)``, so the
records do not depend on how trials are scheduled across workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Literal, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .attack_engine import run_attack
from .case_detector import FaultedMachine, detect_case
from .exceptions import InvalidInputError
from .fault_model import (
    CaseLabel,
    InjectionModel,
    KWithinRegister,
    SingleUniform,
    case_probability,
    ground_truth_case,
    parse_injection_model,
)
from .reports import (
    AttackReport,
    CampaignSummary,
    CaseSummary,
    DetectionRecord,
    TrialRecord,
)
from .trivium_core import Key

logger = logging.getLogger(__name__)

# Ground-truth cases each feature is meant to hold for
FEATURE_CASES: Dict[int, Set[str]] = {
    1: {CaseLabel.CASE1.value},
    2: {CaseLabel.CASE2.value},
    3: {CaseLabel.CASE3.value},
    4: {CaseLabel.CASE4.value},
    5: {CaseLabel.CASE5.value, CaseLabel.CASE6.value},
    6: {CaseLabel.CASE5.value, CaseLabel.CASE6.value},
}

# Cases the detector must never get wrong
_STRICT_CASES = {"Case1", "Case2", "Case3", "Case4"}


class CampaignConfig(BaseModel):
    """Settings of one campaign run."""

    model_config = ConfigDict(frozen=True)

    trials: int = Field(..., ge=1, description="Number of trials")
    model: str = Field("single", description="single, k:<n> or bernoulli:<p>")
    seed: int = Field(..., description="Master seed; trial i uses seed + i")
    attack: bool = Field(False, description="Run the matching attack per trial")
    resolve_case5: bool = Field(False, description="Report Case5or6 as Case5")
    workers: int = Field(1, ge=1, description="Worker threads")
    out: Optional[str] = Field(None, description="Output path; stdout when unset")
    format: Literal["json", "csv"] = Field("json", description="Summary format")

    @field_validator("model")
    @classmethod
    def _known_model(cls, value: str) -> str:
        try:
            parse_injection_model(value)
        except InvalidInputError as exc:
            raise ValueError(exc.message) from exc
        return value

    @property
    def injection_model(self) -> InjectionModel:
        return parse_injection_model(self.model)


def run_trial(config: CampaignConfig, index: int) -> TrialRecord:
    """Run trial ``index``: mask, key, blind detection, optional attack."""
    rng = np.random.default_rng(config.seed + index)
    mask = config.injection_model.sample(rng)
    key = Key.random(rng)
    truth = ground_truth_case(mask)
    machine = FaultedMachine(key, mask)
    detection = detect_case(machine, config.resolve_case5)
    attack = None
    if config.attack:
        outcome = run_attack(machine, detection.label)
        attack = AttackReport.from_outcome(outcome, key)
    return TrialRecord(
        index=index,
        mask=str(mask),
        key=key.to_hex(),
        true_case=truth.value,
        detection=DetectionRecord.from_result(detection, truth),
        attack=attack,
    )


def label_matches(truth: str, label: str) -> bool:
    """Whether a detector label is right for a ground-truth case."""
    if truth == CaseLabel.CASE5.value:
        return label in (CaseLabel.CASE5.value, CaseLabel.CASE5_OR_6.value)
    if truth == CaseLabel.CASE6.value:
        return label == CaseLabel.CASE5_OR_6.value
    return truth == label


def _rate(hits: int, total: int) -> Optional[float]:
    return hits / total if total else None


def summarize(config: CampaignConfig, records: List[TrialRecord]) -> CampaignSummary:
    """
    Aggregate trial records.

    Frequencies carry binomial standard errors; ``expected`` is filled for
    models with a closed-form case probability. Detector mismatches in
    Cases 1..4 are logged as warnings and listed by trial index.
    """
    total = len(records)
    model = config.injection_model
    expected: Dict[CaseLabel, Optional[float]] = {}
    closed_form = isinstance(model, (SingleUniform, KWithinRegister))
    exact = case_probability(model) if closed_form else {}
    for label in CaseLabel.ground_truth_labels():
        expected[label] = exact[label].estimate if label in exact else None

    cases: List[CaseSummary] = []
    attack_rates: Dict[str, Optional[float]] = {}
    for label in CaseLabel.ground_truth_labels():
        mine = [r for r in records if r.true_case == label.value]
        p = len(mine) / total
        correct = sum(
            label_matches(r.true_case, r.detection.detected_label) for r in mine
        )
        attacked = [r.attack for r in mine if r.attack and r.attack.success is not None]
        succeeded = sum(1 for a in attacked if a.success)
        attack_rates[label.value] = _rate(succeeded, len(attacked))
        cases.append(
            CaseSummary(
                case=label.value,
                count=len(mine),
                frequency=p,
                stderr=math.sqrt(p * (1.0 - p) / total),
                expected=expected[label],
                detection_accuracy=_rate(correct, len(mine)),
                attack_success_rate=attack_rates[label.value],
            )
        )

    mismatches = []
    for r in records:
        if r.true_case in _STRICT_CASES and r.true_case != r.detection.detected_label:
            logger.warning(
                f"Trial {r.index}: mask {r.mask} is {r.true_case} "
                f"but was detected as {r.detection.detected_label}"
            )
            mismatches.append(r.index)

    ambiguous = [r for r in records if r.detection.ambiguous]
    mistakes = sum(1 for r in ambiguous if r.true_case == CaseLabel.CASE6.value)

    false_positives: Dict[str, Optional[float]] = {}
    for feature, own in FEATURE_CASES.items():
        evaluated = [
            r.detection.features[feature - 1]
            for r in records
            if r.true_case not in own and r.detection.features[feature - 1] is not None
        ]
        held = sum(1 for outcome in evaluated if outcome)
        false_positives[f"feature{feature}"] = _rate(held, len(evaluated))

    return CampaignSummary(
        model=model.describe(),
        trials=total,
        seed=config.seed,
        cases=cases,
        mismatches=mismatches,
        case5or6_labels=len(ambiguous),
        case5or6_mistake_rate=_rate(mistakes, len(ambiguous)),
        feature_false_positive_rates=false_positives,
        attack_success_rates=attack_rates,
    )


def run_campaign(config: CampaignConfig) -> Tuple[List[TrialRecord], CampaignSummary]:
    """Run every trial (in index order in the result) and summarize."""
    logger.info(
        f"Campaign: {config.trials} trials, model {config.model}, "
        f"seed {config.seed}, {config.workers} worker(s)"
    )
    if config.workers == 1:
        records = [run_trial(config, i) for i in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            records = list(
                executor.map(lambda i: run_trial(config, i), range(config.trials))
            )
    summary = summarize(config, records)
    logger.info(f"Campaign done: {len(summary.mismatches)} Case 1..4 mismatches")
    return records, summary
