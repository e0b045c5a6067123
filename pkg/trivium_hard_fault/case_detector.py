"""
Keystream-feature case detection.

The attacker only sees keystream. A FaultedMachine hides a key and a fault
mask behind an ``observe(iv, n)`` oracle, and detect_case walks the six
features in order to name the fault case without ever reading the mask.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .exceptions import InvalidInputError
from .fault_model import CaseLabel, FaultMask
from .trivium_core import Iv, Key, Keystream, State, initialize, run_keystream

logger = logging.getLogger(__name__)

# Keystream periods checked by Features 1..3 (IV = 0)
FEATURE_PERIODS: Dict[int, int] = {1: 69, 2: 3588, 3: 4524}

# IV bit flipped by Features 4..6
FEATURE_IV_FLIPS: Dict[int, int] = {4: 70, 5: 79, 6: 80}

# Prefix compared by Features 4..6
FLIP_WINDOW = 288


class FaultedMachine:
    """
    Attacker-facing oracle with a hidden key and a fixed fault mask.

    Keystreams are cached per IV and extended on demand, so asking for a
    longer prefix never re-runs initialization.
    """

    def __init__(self, key: Key, mask: FaultMask):
        self._key = key
        self._mask = mask
        self._streams: Dict[Tuple[int, ...], Tuple[List[int], State]] = {}
        self._consumed: Dict[Tuple[int, ...], int] = {}

    def observe(self, iv: Iv, n: int) -> Keystream:
        """Keystream z0..z_{n-1} under ``iv``."""
        if n < 0:
            raise InvalidInputError("Cannot observe a negative number of bits")
        cached = self._streams.get(iv.bits)
        if cached is None:
            bits: List[int] = []
            state = initialize(self._key, iv, self._mask)
        else:
            bits, state = cached
        if len(bits) < n:
            extra, state = run_keystream(state, self._mask, n - len(bits))
            bits = bits + list(extra.bits)
        self._streams[iv.bits] = (bits, state)
        self._consumed[iv.bits] = max(self._consumed.get(iv.bits, 0), n)
        return Keystream(tuple(bits[:n]))

    @property
    def bits_observed(self) -> int:
        """Distinct keystream bits handed out so far, summed over IVs."""
        return sum(self._consumed.values())

    def reset_accounting(self) -> None:
        self._consumed.clear()

    def unblind(self) -> Tuple[Key, FaultMask]:
        """Reveal key and mask; used only for scoring, never by the detector."""
        return self._key, self._mask


def check_feature(machine: FaultedMachine, which: int) -> bool:
    """
    Evaluate one keystream feature.

    Features 1..3 compare z0..z_{P-1} with z_P..z_{2P-1} at IV = 0 for
    P = 69, 3588, 4524. Features 4..6 flip IV70, IV79 or IV80 and compare
    z0..z287 with the IV = 0 run.

    Raises:
        InvalidInputError: If ``which`` is not in 1..6.
    """
    zero = Iv.zero()
    if which in FEATURE_PERIODS:
        period = FEATURE_PERIODS[which]
        return machine.observe(zero, 2 * period).has_period(period)
    if which in FEATURE_IV_FLIPS:
        flipped = zero.with_bit(FEATURE_IV_FLIPS[which], 1)
        base = machine.observe(zero, FLIP_WINDOW)
        return machine.observe(flipped, FLIP_WINDOW).bits == base.bits
    raise InvalidInputError(f"Unknown feature {which}; expected 1..6")


@dataclass(frozen=True)
class DetectionResult:
    """
    Outcome of one detection run.

    Attributes:
        label: Detected case (Case5or6 unless resolved).
        features: Outcome of Features 1..6; None for features never evaluated.
        keystream_bits_consumed: Keystream bits read across all IVs.
        ambiguous: Features 5 and 6 both held.
    """

    label: CaseLabel
    features: Tuple[Optional[bool], ...]
    keystream_bits_consumed: int
    ambiguous: bool = False


def detect_case(
    machine: FaultedMachine, resolve_case5: bool = False
) -> DetectionResult:
    """
    Name the fault case from keystream features.

    Features are evaluated lazily in the order 1, 2, 3, 4, 5, 6; the first
    of Features 1..4 that holds decides Case 1..4. Features 5 and 6 both
    holding gives Case5or6 (or Case5 with ``resolve_case5``), Feature 5 alone
    gives Case5, and everything else falls through to Case7.
    """
    features: List[Optional[bool]] = [None] * 6
    label: Optional[CaseLabel] = None
    ambiguous = False
    ordered = (CaseLabel.CASE1, CaseLabel.CASE2, CaseLabel.CASE3, CaseLabel.CASE4)
    for which, case in enumerate(ordered, start=1):
        features[which - 1] = check_feature(machine, which)
        if features[which - 1]:
            label = case
            break
    if label is None:
        features[4] = check_feature(machine, 5)
        if features[4]:
            features[5] = check_feature(machine, 6)
            if features[5]:
                ambiguous = True
                label = CaseLabel.CASE5 if resolve_case5 else CaseLabel.CASE5_OR_6
            else:
                label = CaseLabel.CASE5
        else:
            label = CaseLabel.CASE7
    logger.debug(f"Detected {label.value} with features {features}")
    return DetectionResult(label, tuple(features), machine.bits_observed, ambiguous)
