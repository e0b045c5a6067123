"""
Hard-fault masks, injection models and case classification.

A FaultMask is the set of stuck-at-0 positions produced by one injection. All
positions of a mask lie in a single register, and its lowest position P_L
alone decides which attack case applies.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

import numpy as np

from .exceptions import ClassificationError, InvalidInputError
from .trivium_core import NFSR1, NFSR2, NFSR3, STATE_SIZE, bits_to_hex, hex_to_bits

logger = logging.getLogger(__name__)


class Register(Enum):
    """The three nonlinear feedback shift registers."""

    NFSR1 = NFSR1
    NFSR2 = NFSR2
    NFSR3 = NFSR3

    @property
    def positions(self) -> range:
        return self.value  # type: ignore[no-any-return]

    @property
    def length(self) -> int:
        return len(self.value)

    @classmethod
    def of(cls, position: int) -> "Register":
        for register in cls:
            if position in register.positions:
                return register
        raise InvalidInputError(f"Position {position} outside 1..{STATE_SIZE}")


class CaseLabel(str, Enum):
    """Attack case decided by P_L, plus the detector-only Case5or6 label."""

    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"
    CASE4 = "Case4"
    CASE5 = "Case5"
    CASE6 = "Case6"
    CASE7 = "Case7"
    CASE5_OR_6 = "Case5or6"

    @classmethod
    def ground_truth_labels(cls) -> Tuple["CaseLabel", ...]:
        return tuple(c for c in cls if c is not cls.CASE5_OR_6)


CASE_POSITIONS: Dict[CaseLabel, Tuple[int, ...]] = {
    CaseLabel.CASE1: tuple(range(94, 163)),
    CaseLabel.CASE2: tuple(range(178, 244)),
    CaseLabel.CASE3: tuple(range(1, 67)),
    CaseLabel.CASE4: tuple(range(163, 172)),
    CaseLabel.CASE5: tuple(range(172, 177)),
    CaseLabel.CASE6: (177,),
    CaseLabel.CASE7: tuple(range(67, 94)) + tuple(range(244, 289)),
}

_CASE_BY_POSITION: Dict[int, CaseLabel] = {
    p: label for label, positions in CASE_POSITIONS.items() for p in positions
}


@dataclass(frozen=True)
class FaultMask:
    """
    Stuck-at-0 positions of one hard-fault injection.

    Attributes:
        positions: Faulted positions in 1..288, all inside one register.
    """

    positions: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        positions = frozenset(int(p) for p in self.positions)
        for p in positions:
            if not 1 <= p <= STATE_SIZE:
                raise InvalidInputError(f"Fault position {p} outside 1..{STATE_SIZE}")
        if len({Register.of(p) for p in positions}) > 1:
            raise InvalidInputError(
                "All faulted positions must lie in one register",
                {"positions": ",".join(map(str, sorted(positions)))},
            )
        object.__setattr__(self, "positions", positions)

    @classmethod
    def of(cls, positions: Iterable[int]) -> "FaultMask":
        return cls(frozenset(positions))

    @classmethod
    def parse(cls, spec: Optional[str]) -> "FaultMask":
        """
        Parse a comma-separated position list such as ``"100"`` or ``"200,250"``.

        Inclusive ranges ``"94-100"`` are accepted; an empty string or
        ``"none"`` gives the empty mask. A ``0x`` prefix selects the 72-digit
        hex form of :meth:`to_hex`, s1 being the top bit of the first digit.
        """
        if spec is None or spec.strip().lower() in ("", "none"):
            return cls()
        if spec.strip().lower().startswith("0x"):
            bits = hex_to_bits(spec, STATE_SIZE)
            return cls(frozenset(p for p, b in enumerate(bits, start=1) if b))
        positions = set()
        for item in spec.split(","):
            item = item.strip()
            try:
                if "-" in item:
                    low, high = (int(x) for x in item.split("-", 1))
                    positions.update(range(low, high + 1))
                else:
                    positions.add(int(item))
            except ValueError as exc:
                raise InvalidInputError(f"Malformed mask item {item!r}") from exc
        return cls(frozenset(positions))

    def to_hex(self) -> str:
        """72 hex digits with bit p set for every faulted position p."""
        flags = [int(p in self.positions) for p in range(1, STATE_SIZE + 1)]
        return bits_to_hex(flags)

    @property
    def is_empty(self) -> bool:
        return not self.positions

    @property
    def p_low(self) -> int:
        if not self.positions:
            raise ClassificationError("The empty mask has no P_L")
        return min(self.positions)

    @property
    def p_high(self) -> int:
        if not self.positions:
            raise ClassificationError("The empty mask has no P_H")
        return max(self.positions)

    @property
    def register(self) -> Optional[Register]:
        return Register.of(self.p_low) if self.positions else None

    def __contains__(self, position: object) -> bool:
        return position in self.positions

    def __str__(self) -> str:
        return ",".join(str(p) for p in sorted(self.positions))


def classify_case(mask: FaultMask) -> CaseLabel:
    """
    Case of a non-empty mask, decided by P_L.

    Raises:
        ClassificationError: For the empty mask.
    """
    if mask.is_empty:
        raise ClassificationError("Cannot classify the empty mask")
    return _CASE_BY_POSITION[mask.p_low]


def ground_truth_case(mask: FaultMask) -> CaseLabel:
    """Like :func:`classify_case`, mapping the fault-free machine to Case 7."""
    return CaseLabel.CASE7 if mask.is_empty else classify_case(mask)


class InjectionModel:
    """Base class for hard-fault injection models."""

    def sample(self, rng: np.random.Generator) -> FaultMask:
        """Draw one mask."""
        raise NotImplementedError("Subclasses must implement sample method")

    def describe(self) -> str:
        raise NotImplementedError("Subclasses must implement describe method")

    def _pick_register(self, rng: np.random.Generator) -> Register:
        # Probability proportional to register length
        position = int(rng.integers(1, STATE_SIZE + 1))
        return Register.of(position)

    def __str__(self) -> str:
        return self.describe()


class SingleUniform(InjectionModel):
    """One position, uniform over 1..288."""

    def sample(self, rng: np.random.Generator) -> FaultMask:
        return FaultMask(frozenset({int(rng.integers(1, STATE_SIZE + 1))}))

    def describe(self) -> str:
        return "single"


class KWithinRegister(InjectionModel):
    """k distinct uniform positions inside a length-weighted random register."""

    def __init__(self, k: int):
        if not 1 <= k <= Register.NFSR2.length:
            raise InvalidInputError(
                f"k must lie in 1..{Register.NFSR2.length}", {"k": k}
            )
        self.k = k

    def sample(self, rng: np.random.Generator) -> FaultMask:
        register = self._pick_register(rng)
        chosen = rng.choice(np.array(register.positions), size=self.k, replace=False)
        return FaultMask(frozenset(int(p) for p in chosen))

    def describe(self) -> str:
        return f"k:{self.k}"


class BernoulliWithinRegister(InjectionModel):
    """Each bit of a length-weighted random register faulted with probability p."""

    def __init__(self, p: float):
        if not 0.0 < p < 1.0:
            raise InvalidInputError("p must lie strictly between 0 and 1", {"p": p})
        self.p = p

    def sample(self, rng: np.random.Generator) -> FaultMask:
        while True:
            register = self._pick_register(rng)
            hits = rng.random(register.length) < self.p
            if hits.any():
                start = register.positions.start
                faulted = (start + int(i) for i in np.flatnonzero(hits))
                return FaultMask(frozenset(faulted))

    def describe(self) -> str:
        return f"bernoulli:{self.p}"


def parse_injection_model(spec: str) -> InjectionModel:
    """
    Parse ``single``, ``k:<n>`` or ``bernoulli:<p>``.

    Raises:
        InvalidInputError: On an unknown model name or malformed parameter.
    """
    name, _, arg = spec.strip().lower().partition(":")
    try:
        if name == "single" and not arg:
            return SingleUniform()
        if name == "k":
            return KWithinRegister(int(arg))
        if name == "bernoulli":
            return BernoulliWithinRegister(float(arg))
    except ValueError as exc:
        raise InvalidInputError(f"Malformed model parameter in {spec!r}") from exc
    raise InvalidInputError(
        f"Unknown injection model {spec!r}; expected single, k:<n> or bernoulli:<p>"
    )


def sample_fault_mask(model: InjectionModel, seed: int) -> FaultMask:
    """Draw a mask deterministically from ``seed``."""
    return model.sample(np.random.default_rng(seed))


def sample_case_mask(case: CaseLabel, rng: np.random.Generator) -> FaultMask:
    """One uniform position from the positions whose P_L gives ``case``."""
    if case not in CASE_POSITIONS:
        raise InvalidInputError(f"{case.value} is not a ground-truth case")
    positions = CASE_POSITIONS[case]
    return FaultMask(frozenset({positions[int(rng.integers(len(positions)))]}))


def _k_within_register_fractions(k: int) -> Dict[CaseLabel, Fraction]:
    # P_L = p needs p faulted and the other k-1 positions above it in the register
    totals = {label: Fraction(0) for label in CaseLabel.ground_truth_labels()}
    for register in Register:
        weight = Fraction(register.length, STATE_SIZE)
        draws = math.comb(register.length, k)
        last = register.positions[-1]
        for p in register.positions:
            ways = math.comb(last - p, k - 1)
            if ways:
                totals[_CASE_BY_POSITION[p]] += weight * Fraction(ways, draws)
    return totals


@dataclass(frozen=True)
class CaseProbability:
    """Probability of one case: exact for closed-form models, else estimated."""

    estimate: float
    stderr: float = 0.0
    exact: Optional[Fraction] = None


def case_probability(
    model: InjectionModel, samples: int = 100_000, seed: int = 0
) -> Dict[CaseLabel, CaseProbability]:
    """
    Probability of each ground-truth case under ``model``.

    SingleUniform and KWithinRegister return exact rationals. Bernoulli
    injection is estimated from ``samples`` seeded draws with binomial
    standard errors.
    """
    labels = CaseLabel.ground_truth_labels()
    if isinstance(model, (SingleUniform, KWithinRegister)):
        k = model.k if isinstance(model, KWithinRegister) else 1
        exact = _k_within_register_fractions(k)
        return {
            label: CaseProbability(estimate=float(exact[label]), exact=exact[label])
            for label in labels
        }
    if samples < 1:
        raise InvalidInputError("Monte Carlo estimation needs at least one sample")
    rng = np.random.default_rng(seed)
    counts = {label: 0 for label in labels}
    for _ in range(samples):
        counts[classify_case(model.sample(rng))] += 1
    logger.debug(f"Case counts for {model}: {counts}")
    result = {}
    for label in labels:
        p = counts[label] / samples
        result[label] = CaseProbability(
            estimate=p, stderr=math.sqrt(p * (1.0 - p) / samples)
        )
    return result
