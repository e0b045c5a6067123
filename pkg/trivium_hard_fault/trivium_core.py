"""
Bit-exact Trivium simulator with permanent stuck-at-0 faults.

This module implements the 288-bit Trivium state machine, the hard-fault mask
semantics (a faulted cell always reads 0 and can no longer be written), and
the reduced-state machines that a fault in positions 163..177 degrades the
cipher into.

Key Features:
    - Key/Iv/Keystream value types with a single hex convention (k1 is the
      most significant bit of the first hex digit)
    - Loading, masking, renewal, initialization and keystream generation
    - Renewal and output functions written against ``^`` and ``&`` only, so the
      same code drives integer bits and symbolic ANF polynomials
    - Case 4 / Case 5 / Case 6 degraded machines with forward renewal and,
      where it exists, the inverse renewal
    - Case 5 settle time and key readout from the state at time 14

Usage:
    Clean keystream:
        state = initialize(Key.from_hex("00" * 10), Iv.zero())
        z = keystream(state, None, 64)

    Faulted keystream:
        mask = FaultMask.parse("100")
        z = keystream(initialize(key, Iv.zero(), mask), mask, 138)

Positions are 1-based throughout the public API (s1..s288); internally the
state is a list where index ``p - 1`` holds position ``p``.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import (
    TYPE_CHECKING,
    ClassVar,
    FrozenSet,
    List,
    Optional,
    Sequence,
    Tuple,
    Type,
    TypeVar,
    Union,
    overload,
)

import numpy as np

from .config import CASE5_LOOKAHEAD, KEYSTREAM_CAP
from .exceptions import DomainError, InvalidInputError, IrreversibleRenewalError

if TYPE_CHECKING:
    from .fault_model import FaultMask
    from .key_knowledge import KeyKnowledge

logger = logging.getLogger(__name__)

STATE_SIZE = 288
KEY_SIZE = 80
IV_SIZE = 80
INIT_ROUNDS = 1152

NFSR1 = range(1, 94)
NFSR2 = range(94, 178)
NFSR3 = range(178, 289)

# Taps of the keystream output, 1-based
OUTPUT_TAPS = (66, 93, 162, 177, 243, 288)

B = TypeVar("B")
BlockT = TypeVar("BlockT", bound="_BitBlock")


def bits_to_hex(bits: Sequence[int]) -> str:
    """
    Serialize bits as hex, first bit in the most significant position.

    A bit count that is not a multiple of four is padded with trailing zeros.
    """
    padded = list(bits) + [0] * (-len(bits) % 4)
    digits = []
    for i in range(0, len(padded), 4):
        a, b, c, d = padded[i : i + 4]
        digits.append(f"{(a << 3) | (b << 2) | (c << 1) | d:x}")
    return "".join(digits)


def hex_to_bits(text: str, width: Optional[int] = None) -> Tuple[int, ...]:
    """
    Parse hex produced by :func:`bits_to_hex`.

    Args:
        text: Hex digits, optionally prefixed with ``0x``; ``_`` and spaces
              are ignored.
        width: Expected bit count. The text must then have exactly
               ``ceil(width / 4)`` digits and zero padding bits.

    Raises:
        InvalidInputError: On non-hex characters or a length mismatch.
    """
    cleaned = text.strip().lower().replace("_", "").replace(" ", "")
    if cleaned.startswith("0x"):
        cleaned = cleaned[2:]
    try:
        bits = tuple(int(b) for ch in cleaned for b in f"{int(ch, 16):04b}")
    except ValueError as exc:
        raise InvalidInputError(f"Not a hex string: {text!r}") from exc
    if width is None:
        return bits
    if len(cleaned) != -(-width // 4):
        raise InvalidInputError(
            f"Expected {-(-width // 4)} hex digits for {width} bits",
            {"received": len(cleaned)},
        )
    if any(bits[width:]):
        raise InvalidInputError("Padding bits beyond the declared width must be 0")
    return bits[:width]


def _checked_bits(bits: Sequence[int], length: int, label: str) -> Tuple[int, ...]:
    values = tuple(int(b) for b in bits)
    if len(values) != length:
        raise InvalidInputError(
            f"{label} must have exactly {length} bits", {"received": len(values)}
        )
    if any(b not in (0, 1) for b in values):
        raise InvalidInputError(f"{label} bits must be 0 or 1")
    return values


@dataclass(frozen=True)
class _BitBlock:
    """Fixed-width block of bits with 1-based indexing."""

    bits: Tuple[int, ...]

    LENGTH: ClassVar[int] = KEY_SIZE
    LABEL: ClassVar[str] = "k"

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "bits", _checked_bits(self.bits, self.LENGTH, type(self).__name__)
        )

    @classmethod
    def zero(cls: Type[BlockT]) -> BlockT:
        return cls((0,) * cls.LENGTH)

    @classmethod
    def from_hex(cls: Type[BlockT], text: str) -> BlockT:
        return cls(hex_to_bits(text, cls.LENGTH))

    @classmethod
    def random(cls: Type[BlockT], rng: np.random.Generator) -> BlockT:
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=cls.LENGTH)))

    def bit(self, index: int) -> int:
        if not 1 <= index <= self.LENGTH:
            raise InvalidInputError(f"{self.LABEL}{index} outside 1..{self.LENGTH}")
        return self.bits[index - 1]

    def with_bit(self: BlockT, index: int, value: int) -> BlockT:
        self.bit(index)
        bits = list(self.bits)
        bits[index - 1] = value & 1
        return type(self)(tuple(bits))

    def to_hex(self) -> str:
        return bits_to_hex(self.bits)

    def __str__(self) -> str:
        return self.to_hex()


@dataclass(frozen=True)
class Key(_BitBlock):
    """80-bit secret key k1..k80."""


@dataclass(frozen=True)
class Iv(_BitBlock):
    """80-bit initialization vector IV1..IV80."""

    LENGTH: ClassVar[int] = IV_SIZE
    LABEL: ClassVar[str] = "IV"


@dataclass(frozen=True)
class State:
    """
    The 288-bit register bank at a given time.

    Attributes:
        bits: s1..s288 as a tuple (index ``p - 1`` holds position ``p``).
        time: Number of renewals applied since loading (1152 = initial state).
    """

    bits: Tuple[int, ...]
    time: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", _checked_bits(self.bits, STATE_SIZE, "State"))
        if self.time < 0:
            raise InvalidInputError("State time must be non-negative")

    def bit(self, position: int) -> int:
        if not 1 <= position <= STATE_SIZE:
            raise InvalidInputError(f"Position {position} outside 1..{STATE_SIZE}")
        return self.bits[position - 1]

    def window(self, first: int, last: int) -> Tuple[int, ...]:
        """Positions first..last inclusive."""
        return self.bits[first - 1 : last]

    def to_dump(self) -> str:
        """288 characters '0'/'1' ordered s1..s288."""
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_dump(cls, text: str, time: int = 0) -> "State":
        cleaned = text.strip()
        if set(cleaned) - {"0", "1"}:
            raise InvalidInputError("State dump must contain only '0' and '1'")
        return cls(tuple(int(c) for c in cleaned), time)


@dataclass(frozen=True)
class Keystream:
    """Keystream bits z0, z1, ... (index ``m`` holds ``z_m``)."""

    bits: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.bits)

    @overload
    def __getitem__(self, index: int) -> int: ...

    @overload
    def __getitem__(self, index: slice) -> Tuple[int, ...]: ...

    def __getitem__(self, index: Union[int, slice]) -> Union[int, Tuple[int, ...]]:
        return self.bits[index]

    def to_hex(self) -> str:
        return bits_to_hex(self.bits)

    @classmethod
    def from_hex(cls, text: str, n: int) -> "Keystream":
        return cls(hex_to_bits(text, n))

    def has_period(self, period: int) -> bool:
        """True when z_{m+period} = z_m over the whole observed window."""
        if period <= 0 or len(self.bits) < 2 * period:
            raise InvalidInputError(
                f"Need at least {2 * period} bits to test period {period}",
                {"available": len(self.bits)},
            )
        return self.bits[period:] == self.bits[: len(self.bits) - period]


# Renewal and output, generic over the bit algebra (ints or ANF polynomials).


def clean_renewal(s: Sequence[B]) -> List[B]:
    """One unmasked renewal step: shift right, feed t3/t1/t2 into 1/94/178."""
    t1 = s[65] ^ (s[90] & s[91]) ^ s[92] ^ s[170]
    t2 = s[161] ^ (s[174] & s[175]) ^ s[176] ^ s[263]
    t3 = s[242] ^ (s[285] & s[286]) ^ s[287] ^ s[68]
    return [t3, *s[0:92], t1, *s[93:176], t2, *s[177:287]]


def output_bit(s: Sequence[B]) -> B:
    return s[65] ^ s[92] ^ s[161] ^ s[176] ^ s[242] ^ s[287]


def _mask_indices(mask: Optional["FaultMask"]) -> Tuple[int, ...]:
    if mask is None:
        return ()
    return tuple(sorted(p - 1 for p in mask.positions))


def _advance(bits: List[int], zeroed: Tuple[int, ...]) -> List[int]:
    nxt = clean_renewal(bits)
    for i in zeroed:
        nxt[i] = 0
    return nxt


def load_input_state(key: Key, iv: Iv) -> State:
    """
    Load key and IV into the time-0 state.

    (s1..s93) = (k1..k80, 0x13), (s94..s177) = (IV1..IV80, 0x4),
    (s178..s288) = (0x108, 1, 1, 1).
    """
    bits = (*key.bits, *(0,) * 13, *iv.bits, *(0,) * 4, *(0,) * 108, 1, 1, 1)
    return State(bits, 0)


def apply_mask(state: State, mask: Optional["FaultMask"]) -> State:
    """Zero every masked position; other positions are unchanged."""
    zeroed = _mask_indices(mask)
    if not zeroed:
        return state
    bits = list(state.bits)
    for i in zeroed:
        bits[i] = 0
    return State(tuple(bits), state.time)


def state_update(state: State, mask: Optional["FaultMask"] = None) -> State:
    """Apply one renewal step and re-apply the mask."""
    return State(tuple(_advance(list(state.bits), _mask_indices(mask))), state.time + 1)


def initialize(key: Key, iv: Iv, mask: Optional["FaultMask"] = None) -> State:
    """Return the state at time 1152 (just before z0 is produced)."""
    zeroed = _mask_indices(mask)
    bits = list(apply_mask(load_input_state(key, iv), mask).bits)
    for _ in range(INIT_ROUNDS):
        bits = _advance(bits, zeroed)
    return State(tuple(bits), INIT_ROUNDS)


def state_trajectory(
    key: Key, iv: Iv, mask: Optional["FaultMask"], until: int
) -> List[State]:
    """
    Every state from time 0 through ``until`` inclusive.

    Used by ground-truth oracles that need s_(t, j) at early times.
    """
    if until < 0:
        raise InvalidInputError("Trajectory end time must be non-negative")
    zeroed = _mask_indices(mask)
    bits = list(apply_mask(load_input_state(key, iv), mask).bits)
    states = [State(tuple(bits), 0)]
    for t in range(1, until + 1):
        bits = _advance(bits, zeroed)
        states.append(State(tuple(bits), t))
    return states


def run_keystream(
    state: State, mask: Optional["FaultMask"], n: int
) -> Tuple[Keystream, State]:
    """Produce ``n`` keystream bits and return them with the advanced state."""
    if state.time < INIT_ROUNDS:
        raise DomainError(
            "Keystream is only defined from the initial state onward",
            {"time": state.time},
        )
    if not 0 <= n <= KEYSTREAM_CAP:
        raise InvalidInputError(
            f"Keystream length must be within 0..{KEYSTREAM_CAP}", {"requested": n}
        )
    zeroed = _mask_indices(mask)
    bits = list(state.bits)
    out = []
    for _ in range(n):
        out.append(output_bit(bits))
        bits = _advance(bits, zeroed)
    return Keystream(tuple(out)), State(tuple(bits), state.time + n)


def keystream(state: State, mask: Optional["FaultMask"], n: int) -> Keystream:
    """The first ``n`` keystream bits of a faulted state at time 1152 or later."""
    return run_keystream(state, mask, n)[0]


# Degraded machines


class MachineVariant(str, Enum):
    """Clean Trivium or one of the reduced machines a fault degrades it into."""

    CLEAN = "clean"
    CASE4 = "case4"
    CASE5 = "case5"
    CASE6 = "case6"

    @property
    def omitted(self) -> FrozenSet[int]:
        return _OMITTED[self]

    @property
    def live_positions(self) -> Tuple[int, ...]:
        return tuple(p for p in range(1, STATE_SIZE + 1) if p not in self.omitted)

    @property
    def width(self) -> int:
        return STATE_SIZE - len(self.omitted)

    @property
    def reversible(self) -> bool:
        return self is not MachineVariant.CASE6


_OMITTED = {
    MachineVariant.CLEAN: frozenset(),
    MachineVariant.CASE4: frozenset(range(163, 178)),
    MachineVariant.CASE5: frozenset(range(163, 178)),
    MachineVariant.CASE6: frozenset({177}),
}


def variant_renewal(variant: MachineVariant, s: Sequence[B], zero: B) -> List[B]:
    """
    One renewal step of ``variant`` on a full-length 288 list.

    Omitted positions must hold ``zero`` and stay ``zero``.
    """
    if variant is MachineVariant.CLEAN:
        return clean_renewal(s)
    t3 = s[242] ^ (s[285] & s[286]) ^ s[287] ^ s[68]
    if variant is MachineVariant.CASE6:
        t1 = s[65] ^ (s[90] & s[91]) ^ s[92] ^ s[170]
        t2 = s[161] ^ (s[174] & s[175]) ^ s[263]
        return [t3, *s[0:92], t1, *s[93:175], zero, t2, *s[177:287]]
    t1 = s[65] ^ (s[90] & s[91]) ^ s[92]
    if variant is MachineVariant.CASE5:
        t1 = t1 ^ s[185] ^ s[272]
    t2 = s[161] ^ s[263]
    return [t3, *s[0:92], t1, *s[93:161], *[zero] * 15, t2, *s[177:287]]


def variant_inverse(variant: MachineVariant, s: Sequence[B], zero: B) -> List[B]:
    """Inverse of :func:`variant_renewal` for the Case 4 and Case 5 machines."""
    if not variant.reversible or variant is MachineVariant.CLEAN:
        raise IrreversibleRenewalError(
            f"The {variant.value} renewal has no inverse in this workbench"
        )
    s93 = s[66] ^ (s[91] & s[92]) ^ s[93]
    if variant is MachineVariant.CASE5:
        s93 = s93 ^ s[186] ^ s[273]
    s162 = s[177] ^ s[264]
    s288 = s[243] ^ (s[286] & s[287]) ^ s[0] ^ s[69]
    return [*s[1:93], s93, *s[94:162], s162, *[zero] * 15, *s[178:288], s288]


@dataclass(frozen=True)
class DegradedState:
    """
    State of a reduced machine.

    Attributes:
        variant: CASE4 (273 bits), CASE5 (273 bits) or CASE6 (287 bits).
        bits: Values of ``variant.live_positions`` in increasing order.
        time: Time index of the equivalent full faulted machine.
        m: Case 5 only; earliest time from which (s176, s177) stays (0, 0).
    """

    variant: MachineVariant
    bits: Tuple[int, ...]
    time: int
    m: Optional[int] = None

    def __post_init__(self) -> None:
        if self.variant is MachineVariant.CLEAN:
            raise InvalidInputError("A degraded state needs a Case 4/5/6 variant")
        object.__setattr__(
            self,
            "bits",
            _checked_bits(self.bits, self.variant.width, f"{self.variant.value} state"),
        )
        if self.variant is MachineVariant.CASE5 and self.m is None:
            raise InvalidInputError("Case 5 degraded states must record m")

    @classmethod
    def from_full(
        cls,
        variant: MachineVariant,
        full: Sequence[int],
        time: int,
        m: Optional[int] = None,
    ) -> "DegradedState":
        return cls(variant, tuple(full[p - 1] for p in variant.live_positions), time, m)

    def expand(self) -> List[int]:
        """Full 288-position list, omitted positions reading 0."""
        full = [0] * STATE_SIZE
        for p, b in zip(self.variant.live_positions, self.bits):
            full[p - 1] = b
        return full

    def bit(self, position: int) -> int:
        if position in self.variant.omitted or not 1 <= position <= STATE_SIZE:
            raise DomainError(
                f"Position {position} is not part of the {self.variant.value} state"
            )
        return self.expand()[position - 1]


def degrade(
    state: State, variant: MachineVariant, m: Optional[int] = None
) -> DegradedState:
    """Project a full faulted state onto the live positions of ``variant``."""
    return DegradedState.from_full(variant, state.bits, state.time, m)


def _check_case5_time(state: DegradedState, time: int) -> None:
    assert state.m is not None
    if time < state.m + 9:
        raise DomainError(
            "Case 5 renewal is only valid from time m+9",
            {"time": time, "m": state.m},
        )


def degraded_update(state: DegradedState) -> DegradedState:
    """One renewal of the reduced machine; Case 5 needs time at least m+9."""
    if state.variant is MachineVariant.CASE5:
        _check_case5_time(state, state.time)
    nxt = variant_renewal(state.variant, state.expand(), 0)
    return DegradedState.from_full(state.variant, nxt, state.time + 1, state.m)


def degraded_inverse(state: DegradedState) -> DegradedState:
    """
    Step a reversible reduced machine back one time unit.

    Raises:
        IrreversibleRenewalError: For the Case 6 machine.
        DomainError: At time 0, or below time m+10 for Case 5.
    """
    if not state.variant.reversible:
        raise IrreversibleRenewalError(
            "The Case 6 renewal is irreversible", {"time": state.time}
        )
    if state.time == 0:
        raise DomainError("Cannot step back from time 0")
    if state.variant is MachineVariant.CASE5:
        _check_case5_time(state, state.time - 1)
    prev = variant_inverse(state.variant, state.expand(), 0)
    return DegradedState.from_full(state.variant, prev, state.time - 1, state.m)


def degraded_keystream(state: DegradedState, n: int) -> Keystream:
    """Keystream of the reduced machine, bit for bit that of the faulted cipher."""
    if not 0 <= n <= KEYSTREAM_CAP:
        raise InvalidInputError(
            f"Keystream length must be within 0..{KEYSTREAM_CAP}", {"requested": n}
        )
    if state.variant is MachineVariant.CASE5:
        _check_case5_time(state, state.time)
    bits = state.expand()
    out = []
    for _ in range(n):
        out.append(output_bit(bits))
        bits = variant_renewal(state.variant, bits, 0)
    return Keystream(tuple(out))


def case5_settle_time(
    key: Key,
    iv: Iv,
    mask: "FaultMask",
    lookahead: int = CASE5_LOOKAHEAD,
) -> int:
    """
    Earliest time m from which (s176, s177) stays (0, 0).

    The pair is watched through ``5 + lookahead`` steps; a Case 5 mask always
    settles by time 5.

    Raises:
        DomainError: If the pair is still non-zero after time 5.
    """
    states = state_trajectory(key, iv, mask, 5 + lookahead)
    m = 0
    for state in states:
        if state.bit(176) or state.bit(177):
            m = state.time + 1
    if m > 5:
        raise DomainError(
            "(s176, s177) did not settle by time 5; not a Case 5 mask",
            {"m": m, "mask": str(mask)},
        )
    logger.debug(f"Case 5 settle time m={m} for mask {mask}")
    return m


def recover_key_from_case5_state(state: DegradedState, m: int) -> "KeyKnowledge":
    """
    Read the key from the Case 5 degraded state at time 14.

    k1..k79 sit at positions 15..93. When m < 5 one inverse renewal step is
    valid at time 13 and gives k80 = s67 + s92*s93 + s94 + s187 + s274.

    Args:
        state: Case 5 degraded state at time 14.
        m: Settle time of the fault (at most 5).

    Returns:
        KeyKnowledge with 80 bits, or 79 bits and k80 flagged undetermined.

    Raises:
        DomainError: For a wrong variant, wrong time or m above 5.
    """
    from .key_knowledge import KeyKnowledge

    if state.variant is not MachineVariant.CASE5:
        raise DomainError("Key readout needs a Case 5 degraded state")
    if state.time != 14:
        raise DomainError(
            "Key readout needs the state at time 14", {"time": state.time}
        )
    if not 0 <= m <= 5:
        raise DomainError("Case 5 settle time must lie in 0..5", {"m": m})
    s = state.expand()
    knowledge = KeyKnowledge()
    for j in range(1, KEY_SIZE):
        knowledge.learn(j, s[13 + j], f"s(14,{14 + j})")
    if m < 5:
        k80 = s[66] ^ (s[91] & s[92]) ^ s[93] ^ s[186] ^ s[273]
        knowledge.learn(80, k80, "inverse renewal at time 13")
    else:
        knowledge.diagnostics["k80"] = "undetermined for m = 5"
    knowledge.diagnostics["m"] = m
    return knowledge
