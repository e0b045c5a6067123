"""
Trivium Hard-Fault Workbench

Simulates Trivium under stuck-at-0 faults, detects the fault case from
keystream alone and recovers key material for each case.
"""

from .attack_engine import (
    ASequence,
    AttackOutcome,
    BSequence,
    StructureReport,
    a_sequence_from_run,
    attack_case1,
    b_sequence_from_run,
    build_case1_system,
    build_case2_system,
    build_case3_system,
    case3_partial_key,
    run_attack,
    solve_case2,
    solve_case3,
    structural_report,
)
from .campaign import CampaignConfig, run_campaign, run_trial
from .case_detector import (
    DetectionResult,
    FaultedMachine,
    check_feature,
    detect_case,
)
from .exceptions import (
    AttackFailureError,
    ClassificationError,
    DomainError,
    InconsistentSystemError,
    InvalidInputError,
    IrreversibleRenewalError,
    ResourceCapError,
    SolutionOverflowError,
    TriviumHardFaultError,
    UnknownCheckError,
    WrongCaseError,
)
from .fault_model import (
    BernoulliWithinRegister,
    CaseLabel,
    FaultMask,
    InjectionModel,
    KWithinRegister,
    Register,
    SingleUniform,
    case_probability,
    classify_case,
    parse_injection_model,
    sample_fault_mask,
)
from .gf2_algebra import (
    AffineSolutionSet,
    AnfPoly,
    Gf2System,
    enumerate_solutions,
    gaussian_eliminate,
    symbolic_keystream_degrees,
)
from .key_knowledge import KeyKnowledge, KeyRelation
from .trivium_core import (
    DegradedState,
    Iv,
    Key,
    Keystream,
    MachineVariant,
    State,
    degrade,
    degraded_inverse,
    degraded_keystream,
    degraded_update,
    initialize,
    keystream,
    load_input_state,
    output_bit,
    recover_key_from_case5_state,
    state_update,
)
from .verification import CHECKS, run_check

__version__ = "0.1.0"
__all__ = [
    # Cipher
    "Key",
    "Iv",
    "State",
    "Keystream",
    "load_input_state",
    "state_update",
    "output_bit",
    "initialize",
    "keystream",
    # Degraded machines
    "MachineVariant",
    "DegradedState",
    "degrade",
    "degraded_update",
    "degraded_inverse",
    "degraded_keystream",
    "recover_key_from_case5_state",
    # Faults
    "FaultMask",
    "Register",
    "CaseLabel",
    "InjectionModel",
    "SingleUniform",
    "KWithinRegister",
    "BernoulliWithinRegister",
    "parse_injection_model",
    "sample_fault_mask",
    "classify_case",
    "case_probability",
    # GF(2) and ANF
    "Gf2System",
    "AffineSolutionSet",
    "gaussian_eliminate",
    "enumerate_solutions",
    "AnfPoly",
    "symbolic_keystream_degrees",
    # Detection
    "FaultedMachine",
    "DetectionResult",
    "check_feature",
    "detect_case",
    # Attacks
    "KeyKnowledge",
    "KeyRelation",
    "ASequence",
    "BSequence",
    "a_sequence_from_run",
    "b_sequence_from_run",
    "build_case1_system",
    "attack_case1",
    "build_case2_system",
    "solve_case2",
    "build_case3_system",
    "solve_case3",
    "case3_partial_key",
    "StructureReport",
    "structural_report",
    "AttackOutcome",
    "run_attack",
    # Experiments
    "CampaignConfig",
    "run_trial",
    "run_campaign",
    "CHECKS",
    "run_check",
    # Exceptions
    "TriviumHardFaultError",
    "InvalidInputError",
    "UnknownCheckError",
    "ClassificationError",
    "DomainError",
    "IrreversibleRenewalError",
    "InconsistentSystemError",
    "SolutionOverflowError",
    "ResourceCapError",
    "WrongCaseError",
    "AttackFailureError",
]
