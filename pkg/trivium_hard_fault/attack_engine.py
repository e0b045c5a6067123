"""
Per-case key recovery from faulted keystream.

Key Features:
    - attack_case1: register 1 degenerates into a 69-bit rotation whose
      content is (k67+1, k68+1, k69, k1..k66); the keystream pins that window
      up to three residue-class parities
    - build_case2_system / solve_case2: 216-variable linear model of the Case 2
      keystream, widened with 69 linearized products and the fixed windows of
      the time-27 state, then a product-constrained search that leaves the
      full 80-bit key
    - build_case3_system / solve_case3: 243-variable model of the Case 3
      keystream, b-relations and the zero block, then the a-sequence read from
      the time-98 state and turned into partial key knowledge
    - structural_report: degraded-machine facts for Cases 4..6
    - run_attack: dispatch from a detected case label to the matching attack

Ground-truth oracles (case2_ground_truth, case3_ground_truth and the a/b
sequence readers) simulate the faulted machine directly and are what tests and
the verify catalog compare attack output against.

Usage:
    ks = machine.observe(Iv.zero(), 7176)
    knowledge = solve_case2(ks)
    assert knowledge.full_key() == key
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .case_detector import FaultedMachine
from .config import ENUMERATION_CAP
from .exceptions import (
    AttackFailureError,
    DomainError,
    InconsistentSystemError,
    InvalidInputError,
    SolutionOverflowError,
    TriviumHardFaultError,
    WrongCaseError,
)
from .fault_model import CaseLabel, FaultMask
from .gf2_algebra import (
    AffineSolutionSet,
    Gf2System,
    ProductConstraint,
    gaussian_eliminate,
    refine_with_products,
    rows_from_masks,
)
from .key_knowledge import KeyKnowledge, KeyRelation
from .trivium_core import (
    INIT_ROUNDS,
    KEY_SIZE,
    Iv,
    Key,
    Keystream,
    MachineVariant,
    State,
    initialize,
    keystream,
    state_trajectory,
)

logger = logging.getLogger(__name__)

CASE1_PERIOD = 69
CASE2_PERIOD = 3588
CASE3_PERIOD = 4524

# Ranks quoted for the original construction; observed ranks are lower
EXPECTED_RANKS: Dict[str, int] = {"case2": 210, "case3": 237, "case3-reduced": 86}

# Any register-3 fault at or below 243 yields the same Case 2 keystream
CASE2_REFERENCE_MASK = FaultMask.of([243])

_SideConstraints = Tuple[np.ndarray, np.ndarray, Tuple[ProductConstraint, ...]]

# Keystream read by run_attack for each case
ATTACK_KEYSTREAM_BITS: Dict[CaseLabel, int] = {
    CaseLabel.CASE1: 2 * CASE1_PERIOD,
    CaseLabel.CASE2: 2 * CASE2_PERIOD,
    CaseLabel.CASE3: 2 * CASE3_PERIOD,
}


def _rep(value: int, low: int, period: int) -> int:
    """Representative of ``value`` modulo ``period`` in low..low+period-1."""
    return low + (value - low) % period


def _unit(column: int) -> int:
    return 1 << column


def _a_bit(state: State) -> int:
    return state.bit(66) ^ (state.bit(91) & state.bit(92)) ^ state.bit(93)


def _b_bit(state: State) -> int:
    return state.bit(162) ^ (state.bit(175) & state.bit(176)) ^ state.bit(177)


def _require_bits(ks: Keystream, needed: int, label: str) -> None:
    if len(ks) < needed:
        raise InvalidInputError(
            f"{label} needs at least {needed} keystream bits",
            {"available": len(ks)},
        )


def _check_period(ks: Keystream, period: int, label: str) -> None:
    if len(ks) >= 2 * period and not ks.has_period(period):
        raise WrongCaseError(
            f"Keystream is not {period}-periodic; not a {label} run",
            {"period": period},
        )


def _eliminate(system: Gf2System, label: str) -> AffineSolutionSet:
    try:
        return gaussian_eliminate(system)
    except InconsistentSystemError as exc:
        raise WrongCaseError(
            f"{label} keystream equations are inconsistent", exc.details
        ) from exc


def _check_rank(name: str, rank: int) -> None:
    expected = EXPECTED_RANKS[name]
    if rank != expected:
        logger.warning(f"{name}: observed rank {rank}, quoted rank {expected}")


# Sequences


class SequenceContext(str, Enum):
    """Which fault case an a-sequence was read under."""

    CASE2 = "case2"
    CASE3 = "case3"


_A_LENGTH = {SequenceContext.CASE2: 96, SequenceContext.CASE3: 92}


@dataclass(frozen=True)
class ASequence:
    """
    a_{t+1} = s(t,66) + s(t,91)*s(t,92) + s(t,93).

    Case 2 context stores a1..a96 with a1..a27 = a70..a96 and period 69 from
    a28 on. Case 3 context stores a1..a92; later terms are 0.
    """

    context: SequenceContext
    values: Tuple[int, ...]

    def __post_init__(self) -> None:
        expected = _A_LENGTH[self.context]
        if len(self.values) != expected:
            raise InvalidInputError(
                f"{self.context.value} a-sequence needs {expected} values",
                {"given": len(self.values)},
            )
        object.__setattr__(self, "values", tuple(int(v) & 1 for v in self.values))

    @classmethod
    def from_case2_window(cls, window: Sequence[int]) -> "ASequence":
        """Build from a28..a96."""
        if len(window) != CASE1_PERIOD:
            raise InvalidInputError("Case 2 window a28..a96 needs 69 values")
        window = tuple(window)
        return cls(SequenceContext.CASE2, window[42:] + window)

    def value(self, index: int) -> int:
        """a_index; Case 2 indices reduce mod 69 into a28..a96 in both directions."""
        if self.context is SequenceContext.CASE2:
            return self.values[_rep(index, 28, CASE1_PERIOD) - 1]
        if not 1 <= index <= 92:
            return 0
        return self.values[index - 1]

    def window(self, first: int, last: int) -> Tuple[int, ...]:
        return tuple(self.value(i) for i in range(first, last + 1))


@dataclass(frozen=True)
class BSequence:
    """b_{t+1} = s(t,162) + s(t,175)*s(t,176) + s(t,177); values b75..b176."""

    values: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.values) != 102:
            raise InvalidInputError("b-sequence needs b75..b176 (102 values)")
        object.__setattr__(self, "values", tuple(int(v) & 1 for v in self.values))

    @classmethod
    def from_window(cls, window: Sequence[int]) -> "BSequence":
        """Build from b99..b176 using b_i = b_{i+78} below 99."""
        window = tuple(window)
        if len(window) != 78:
            raise InvalidInputError("b window b99..b176 needs 78 values")
        return cls(window[54:] + window)

    def value(self, index: int) -> int:
        """b_index, reduced mod 78 into b99..b176."""
        return self.values[_rep(index, 99, 78) - 75]


def a_sequence_from_run(
    key: Key, mask: FaultMask, context: SequenceContext
) -> ASequence:
    """Read the a-sequence of the IV = 0 faulted run."""
    if context is SequenceContext.CASE2:
        states = state_trajectory(key, Iv.zero(), mask, 95)
        return ASequence.from_case2_window([_a_bit(s) for s in states[27:96]])
    states = state_trajectory(key, Iv.zero(), mask, 91)
    return ASequence(context, tuple(_a_bit(s) for s in states[:92]))


def b_sequence_from_run(key: Key, mask: FaultMask) -> BSequence:
    states = state_trajectory(key, Iv.zero(), mask, 175)
    return BSequence.from_window([_b_bit(s) for s in states[98:176]])


# Case 1

CASE1_VARIABLES = tuple(f"s27_{p}" for p in range(25, 94))

# Column of s(27, p) -> (key index, complement)
_U_KEY_MAP: Dict[int, Tuple[int, int]] = {
    0: (67, 1),
    1: (68, 1),
    2: (69, 0),
    **{p - 25: (p - 27, 0) for p in range(28, 94)},
}


def _u_col(position: int) -> int:
    return position - 25


def _register1_taps(t: int) -> Tuple[int, int]:
    """Columns of s(t,66) and s(t,93) for t >= 27."""
    shift = t - 27
    return (
        _u_col(_rep(66 - shift, 25, CASE1_PERIOD)),
        _u_col(_rep(93 - shift, 25, CASE1_PERIOD)),
    )


def build_case1_system(ks: Keystream) -> Gf2System:
    """z_m = s(1152+m, 66) + s(1152+m, 93) over the window s(27,25..93)."""
    _require_bits(ks, CASE1_PERIOD, "Case 1")
    masks = []
    for m in range(CASE1_PERIOD):
        c66, c93 = _register1_taps(INIT_ROUNDS + m)
        masks.append(_unit(c66) ^ _unit(c93))
    rows = rows_from_masks(masks, len(CASE1_VARIABLES))
    return Gf2System(CASE1_VARIABLES, rows, np.array(ks[:CASE1_PERIOD], dtype=np.uint8))


def _knowledge_from_relations(
    sols: AffineSolutionSet, key_map: Dict[int, Tuple[int, int]], note: str
) -> KeyKnowledge:
    knowledge = KeyKnowledge()
    for coeffs, value in sols.relations():
        columns = [int(c) for c in np.flatnonzero(coeffs)]
        if not columns or any(c not in key_map for c in columns):
            continue
        indices = [key_map[c][0] for c in columns]
        for c in columns:
            value ^= key_map[c][1]
        if len(indices) == 1:
            knowledge.learn(indices[0], value, note)
        else:
            knowledge.relate(KeyRelation.linear(indices, value))
    return knowledge


def attack_case1(ks: Keystream) -> KeyKnowledge:
    """
    Recover k1..k69 up to the parities the keystream cannot see.

    Each z_m adds two window bits 27 positions apart, so the 69 equations
    have rank 66 and the window is known up to one parity per residue class
    mod 3. The result certifies every bit the equations fix and one XOR
    relation per pair of key bits in the same class.

    Raises:
        InvalidInputError: Fewer than 69 bits.
        WrongCaseError: Keystream not 69-periodic (checked from 138 bits).
    """
    _require_bits(ks, CASE1_PERIOD, "Case 1")
    _check_period(ks, CASE1_PERIOD, "Case 1")
    sols = _eliminate(build_case1_system(ks), "Case 1")
    knowledge = _knowledge_from_relations(sols, _U_KEY_MAP, "register-1 window")
    knowledge.diagnostics.update(
        {
            "rank_observed": sols.rank,
            "candidates_before_filter": sols.size,
            "information_bits": sols.rank,
        }
    )
    logger.info(
        f"Case 1: rank {sols.rank}, {knowledge.bits_known} bits, "
        f"{len(knowledge.relations)} relations"
    )
    return knowledge


# Case 2

_R0, _A0, _P0 = 69, 147, 216

CASE2_VARIABLES = (
    CASE1_VARIABLES
    + tuple(f"s27_{p}" for p in range(100, 178))
    + tuple(f"a{i}" for i in range(28, 97))
)
CASE2_PRODUCT_VARIABLES = tuple(
    f"s27_{p}*s27_{_rep(p + 1, 25, CASE1_PERIOD)}" for p in range(25, 94)
)


def _r_col(position: int) -> int:
    return _R0 + position - 100


def _a_col(index: int) -> int:
    return _A0 + (index - 28) % CASE1_PERIOD


def _p_col(position: int) -> int:
    return _P0 + position - 25


@lru_cache(maxsize=1)
def _case2_rows() -> np.ndarray:
    # Register 2 at time 27; s(27,94+d) = r(172+d) + a(96-d) under the changed state
    reg2 = [_unit(_r_col(172 + d)) ^ _unit(_a_col(96 - d)) for d in range(6)]
    reg2 += [_unit(_r_col(p)) for p in range(100, 178)]
    masks: List[int] = []
    t = 27
    while len(masks) < CASE2_PERIOD:
        if t >= INIT_ROUNDS:
            c66, c93 = _register1_taps(t)
            masks.append(_unit(c66) ^ _unit(c93) ^ reg2[162 - 94] ^ reg2[177 - 94])
        reg2 = [reg2[171 - 94] ^ _unit(_a_col(t + 1))] + reg2[:-1]
        t += 1
    rows = rows_from_masks(masks, len(CASE2_VARIABLES))
    rows.setflags(write=False)
    return rows


def build_case2_system(ks: Keystream) -> Gf2System:
    """
    Linear model of z0..z3587 for P_L in 178..243.

    Variables are s(27,25..93), s(27,100..177) and a28..a96 (216 columns).
    Register 1 rotates with period 69 from time 27 and register 2 is fed by
    s(t+1,94) = s(t,171) + a_{t+1}; the coefficient matrix is the same for
    every key and is built once.
    """
    _require_bits(ks, CASE2_PERIOD, "Case 2")
    return Gf2System(
        CASE2_VARIABLES,
        _case2_rows().copy(),
        np.array(ks[:CASE2_PERIOD], dtype=np.uint8),
    )


@lru_cache(maxsize=1)
def _case2_side_constraints() -> _SideConstraints:
    width = len(CASE2_VARIABLES) + len(CASE2_PRODUCT_VARIABLES)
    masks: List[int] = []
    consts: List[int] = []

    def row(columns: Sequence[int], value: int) -> None:
        mask = 0
        for c in columns:
            mask ^= _unit(c)
        masks.append(mask)
        consts.append(value)

    def u(p: int) -> int:
        return _u_col(_rep(p, 25, CASE1_PERIOD))

    def prod(p: int) -> int:
        return _p_col(_rep(p, 25, CASE1_PERIOD))

    # s(27,109..120) = s(27,82..93) and s(27,121..171) = 0
    for i in range(12):
        row([_r_col(109 + i), u(82 + i)], 0)
    for p in range(121, 172):
        row([_r_col(p)], 0)
    # a_{28+i} from the register-1 rotation
    for i in range(CASE1_PERIOD):
        row([_a_col(28 + i), u(66 - i), prod(91 - i), u(93 - i)], 0)
    # s(27,94..96) in terms of k40..k42 and the complemented k67..k69
    row([_r_col(172), _a_col(96), u(67), prod(92), u(25)], 1)
    row([_r_col(173), _a_col(95), u(68), prod(93), u(93), u(26)], 1)
    row([_r_col(174), _a_col(94), u(69), prod(25), u(25), u(26), u(27)], 1)
    products = tuple(
        ProductConstraint(_u_col(p), u(p + 1), _p_col(p)) for p in range(25, 94)
    )
    rows = rows_from_masks(masks, width)
    rows.setflags(write=False)
    return rows, np.array(consts, dtype=np.uint8), products


def case2_ground_truth(key: Key, mask: FaultMask) -> np.ndarray:
    """The 216-vector the Case 2 system must accept, read from the IV = 0 run."""
    states = state_trajectory(key, Iv.zero(), mask, 95)
    a = {t + 1: _a_bit(states[t]) for t in range(27, 96)}
    s27 = states[27]
    vector = np.zeros(len(CASE2_VARIABLES), dtype=np.uint8)
    for p in range(25, 94):
        vector[_u_col(p)] = s27.bit(p)
    for p in range(100, 172):
        vector[_r_col(p)] = s27.bit(p)
    for d in range(6):
        vector[_r_col(172 + d)] = s27.bit(94 + d) ^ a[96 - d]
    for i in range(28, 97):
        vector[_a_col(i)] = a[i]
    return vector


def _case2_key(vector: np.ndarray) -> KeyKnowledge:
    def u(p: int) -> int:
        return int(vector[_u_col(p)])

    def r(p: int) -> int:
        return int(vector[_r_col(p)])

    def a(i: int) -> int:
        return int(vector[_a_col(i)])

    k = [0] * (KEY_SIZE + 2)
    for j in range(1, 67):
        k[j] = u(27 + j)
    k[67], k[68], k[69] = u(25) ^ 1, u(26) ^ 1, u(27)
    real94 = [r(172 + d) ^ a(96 - d) for d in range(6)]
    for d in range(3, 6):
        k[67 + d] = real94[d] ^ k[40 + d] ^ (k[65 + d] & k[66 + d])
    # s(27,100+i) = k_{46+i} + k_{71+i}*k_{72+i} + k_{73+i}
    for i in range(8):
        k[73 + i] = r(100 + i) ^ k[46 + i] ^ (k[71 + i] & k[72 + i])
    checks = [
        real94[d] == k[40 + d] ^ (k[65 + d] & k[66 + d]) ^ k[67 + d] for d in range(3)
    ]
    checks.append(r(108) == k[54] ^ (k[79] & k[80]))
    if not all(checks):
        logger.error("Case 2 key chain does not close")
        raise AttackFailureError(
            "Recovered state does not close the k70..k80 chain",
            stage="key-chain",
            survivors=[vector],
        )
    knowledge = KeyKnowledge()
    for j in range(1, 70):
        knowledge.learn(j, k[j], "register-1 window at time 27")
    for j in range(70, KEY_SIZE + 1):
        knowledge.learn(j, k[j], "register-2 chain at time 27")
    return knowledge


def solve_case2(ks: Keystream) -> KeyKnowledge:
    """
    Recover the full key from a Case 2 keystream.

    Stages: eliminate the keystream system; add the fixed windows of the
    time-27 state, the a-relations with linearized products and the three
    s(27,94..96) relations; run the product-constrained search, which must
    leave one assignment; unroll k70..k80; regenerate the keystream as a
    final check.

    Raises:
        WrongCaseError: Keystream inconsistent with the Case 2 model.
        AttackFailureError: A stage leaves zero or several assignments.
    """
    _require_bits(ks, CASE2_PERIOD, "Case 2")
    _check_period(ks, CASE2_PERIOD, "Case 2")
    system = build_case2_system(ks)
    base = _eliminate(system, "Case 2")
    _check_rank("case2", base.rank)
    side_rows, side_consts, products = _case2_side_constraints()
    extended = system.widen(CASE2_PRODUCT_VARIABLES).extend(side_rows, side_consts)
    try:
        sols = gaussian_eliminate(extended)
    except InconsistentSystemError as exc:
        logger.error("Case 2 side constraints contradict the keystream")
        raise AttackFailureError(
            "Side constraints contradict the keystream", stage="side-constraints"
        ) from exc
    logger.debug(f"Case 2 extended system: rank {sols.rank}, nullity {sols.dimension}")
    survivors = _product_search(sols, products, "case2")
    if len(survivors) != 1:
        logger.error(f"Case 2 product search left {len(survivors)} assignments")
        raise AttackFailureError(
            "Product search did not leave a unique assignment",
            stage="nonlinear-filter",
            survivors=survivors,
        )
    knowledge = _case2_key(survivors[0])
    key = knowledge.full_key()
    assert key is not None
    regenerated = keystream(
        initialize(key, Iv.zero(), CASE2_REFERENCE_MASK), CASE2_REFERENCE_MASK, len(ks)
    )
    if regenerated.bits != ks.bits:
        logger.error("Case 2 recovered key does not regenerate the keystream")
        raise AttackFailureError(
            "Recovered key does not reproduce the keystream", stage="verification"
        )
    knowledge.diagnostics.update(
        {
            "rank_observed": base.rank,
            "candidates_before_filter": base.size,
            "extended_rank": sols.rank,
            "extended_nullity": sols.dimension,
        }
    )
    logger.info(f"Case 2: full key recovered (rank {base.rank})")
    return knowledge


def _product_search(
    sols: AffineSolutionSet,
    products: Sequence[ProductConstraint],
    label: str,
    max_survivors: int = 64,
) -> List[np.ndarray]:
    try:
        return refine_with_products(
            sols, products, max_nodes=ENUMERATION_CAP, max_survivors=max_survivors
        )
    except SolutionOverflowError as exc:
        logger.error(f"{label}: product search overflow: {exc}")
        raise AttackFailureError(
            "Product search exceeded its budget",
            stage="nonlinear-filter",
            details=exc.details,
        ) from exc


# Case 3

_X0, _B0, _Q0 = 78, 165, 243

CASE3_VARIABLES = (
    tuple(f"s98_{p}" for p in range(100, 178))
    + tuple(f"s98_{p}" for p in range(202, 289))
    + tuple(f"b{i}" for i in range(99, 177))
)
CASE3_PRODUCT_VARIABLES = tuple(
    f"s98_{p}*s98_{_rep(p + 1, 100, 78)}" for p in range(100, 178)
)
CASE3_ZERO_BLOCK = tuple(range(207, 265))


def _v_col(position: int) -> int:
    return _rep(position, 100, 78) - 100


def _x_col(position: int) -> int:
    return _X0 + position - 202


def _b_col(index: int) -> int:
    return _B0 + (index - 99) % 78


def _q_col(position: int) -> int:
    return _Q0 + _rep(position, 100, 78) - 100


@lru_cache(maxsize=1)
def _case3_rows() -> np.ndarray:
    # Register 3 at time 98; s(98,178+d) = x(265+d) + b(176-d) under the changed state
    reg3 = [_unit(_x_col(265 + d)) ^ _unit(_b_col(176 - d)) for d in range(24)]
    reg3 += [_unit(_x_col(p)) for p in range(202, 289)]
    masks: List[int] = []
    t = 98
    while len(masks) < CASE3_PERIOD:
        if t >= INIT_ROUNDS:
            shift = t - 98
            masks.append(
                _unit(_v_col(162 - shift))
                ^ _unit(_v_col(177 - shift))
                ^ reg3[243 - 178]
                ^ reg3[288 - 178]
            )
        reg3 = [reg3[264 - 178] ^ _unit(_b_col(t + 1))] + reg3[:-1]
        t += 1
    rows = rows_from_masks(masks, len(CASE3_VARIABLES))
    rows.setflags(write=False)
    return rows


def build_case3_system(ks: Keystream) -> Gf2System:
    """
    Linear model of z0..z4523 for P_L in 1..66.

    Variables are s(98,100..177), s(98,202..288) and b99..b176 (243 columns).
    Register 2 is a pure 78-bit rotation from time 98 and register 3 is fed by
    s(t+1,178) = s(t,264) + b_{t+1}.
    """
    _require_bits(ks, CASE3_PERIOD, "Case 3")
    return Gf2System(
        CASE3_VARIABLES,
        _case3_rows().copy(),
        np.array(ks[:CASE3_PERIOD], dtype=np.uint8),
    )


@lru_cache(maxsize=1)
def _case3_side_constraints() -> _SideConstraints:
    width = len(CASE3_VARIABLES) + len(CASE3_PRODUCT_VARIABLES)
    masks: List[int] = []
    consts: List[int] = []
    for i in range(78):
        masks.append(
            _unit(_b_col(99 + i))
            ^ _unit(_v_col(162 - i))
            ^ _unit(_q_col(175 - i))
            ^ _unit(_v_col(177 - i))
        )
        consts.append(0)
    for p in CASE3_ZERO_BLOCK:
        masks.append(_unit(_x_col(p)))
        consts.append(0)
    products = tuple(
        ProductConstraint(_v_col(p), _v_col(p + 1), _q_col(p)) for p in range(100, 178)
    )
    rows = rows_from_masks(masks, width)
    rows.setflags(write=False)
    return rows, np.array(consts, dtype=np.uint8), products


def case3_ground_truth(key: Key, mask: FaultMask) -> np.ndarray:
    """The 243-vector the Case 3 system must accept, read from the IV = 0 run."""
    states = state_trajectory(key, Iv.zero(), mask, 175)
    b = {t + 1: _b_bit(states[t]) for t in range(98, 176)}
    s98 = states[98]
    vector = np.zeros(len(CASE3_VARIABLES), dtype=np.uint8)
    for p in range(100, 178):
        vector[_v_col(p)] = s98.bit(p)
    for p in range(202, 265):
        vector[_x_col(p)] = s98.bit(p)
    for d in range(24):
        vector[_x_col(265 + d)] = s98.bit(178 + d) ^ b[176 - d]
    for i in range(99, 177):
        vector[_b_col(i)] = b[i]
    return vector


def _case3_reduced_system(system: Gf2System, core: np.ndarray) -> Gf2System:
    """Substitute known (v, b) and keep the 87 register-3 columns."""
    x_cols = np.arange(_X0, _B0)
    known_cols = np.r_[0:_X0, _B0 : len(CASE3_VARIABLES)]
    known = system.rows[:, known_cols] & core[known_cols]
    contribution = np.count_nonzero(known, axis=1)
    constants = system.constants ^ (contribution & 1).astype(np.uint8)
    names = tuple(system.names[c] for c in x_cols)
    return Gf2System(names, system.rows[:, x_cols], constants)


def _a_from_time98(vector: np.ndarray) -> ASequence:
    def v(p: int) -> int:
        return int(vector[_v_col(p)])

    def x(p: int) -> int:
        return int(vector[_x_col(p)])

    def reg3(p: int) -> int:
        if p < 202:
            d = p - 178
            return x(265 + d) ^ int(vector[_b_col(176 - d)])
        return x(p)

    a = [0] * 93
    for j in range(15, 29):
        a[29 - j] = reg3(178 + j)
    for i in range(64):
        a[78 - i] = v(114 + i)
    for i in range(14):
        a[92 - i] = v(100 + i) ^ a[14 - i]
    for j in range(15):
        expected = a[29 - j] ^ (a[16 - j] & a[15 - j]) ^ a[14 - j]
        if reg3(178 + j) != expected:
            logger.error(f"Case 3 time-98 window fails at s(98,{178 + j})")
            raise AttackFailureError(
                "Time-98 register-3 window is inconsistent with the a-sequence",
                stage="a-readout",
                details={"position": 178 + j},
            )
    return ASequence(SequenceContext.CASE3, tuple(a[1:]))


def solve_case3(ks: Keystream) -> Tuple[ASequence, KeyKnowledge]:
    """
    Recover the a-sequence, then partial key knowledge, from a Case 3 keystream.

    Stages: eliminate; add the b-relations with linearized products and the
    zero block s(98,207..264) = 0, then search the products; substitute the
    surviving (s(98,100..177), b) into the 87-column register-3 system; fix
    the remainder with the zero block; read a1..a92 from the time-98 state.

    Raises:
        WrongCaseError: Keystream inconsistent with the Case 3 model.
        AttackFailureError: A stage leaves zero or several assignments.
    """
    _require_bits(ks, CASE3_PERIOD, "Case 3")
    _check_period(ks, CASE3_PERIOD, "Case 3")
    system = build_case3_system(ks)
    base = _eliminate(system, "Case 3")
    _check_rank("case3", base.rank)
    side_rows, side_consts, products = _case3_side_constraints()
    extended = system.widen(CASE3_PRODUCT_VARIABLES).extend(side_rows, side_consts)
    try:
        sols = gaussian_eliminate(extended)
    except InconsistentSystemError as exc:
        logger.error("Case 3 side constraints contradict the keystream")
        raise AttackFailureError(
            "Side constraints contradict the keystream", stage="side-constraints"
        ) from exc
    survivors = _product_search(sols, products, "case3", max_survivors=256)
    cores = {
        (tuple(vec[:_X0]), tuple(vec[_B0 : len(CASE3_VARIABLES)])) for vec in survivors
    }
    if len(cores) != 1:
        logger.error(f"Case 3 product search left {len(cores)} (v, b) assignments")
        raise AttackFailureError(
            "Product search did not fix register 2 and the b-sequence",
            stage="nonlinear-filter",
            survivors=survivors,
        )
    core = survivors[0][: len(CASE3_VARIABLES)].copy()
    try:
        reduced = gaussian_eliminate(_case3_reduced_system(system, core))
    except InconsistentSystemError as exc:
        raise AttackFailureError(
            "Register-3 system is inconsistent", stage="reduced-system"
        ) from exc
    _check_rank("case3-reduced", reduced.rank)
    final = reduced
    try:
        for p in CASE3_ZERO_BLOCK:
            final = final.with_assignment(p - 202, 0)
    except InconsistentSystemError as exc:
        raise AttackFailureError(
            "Zero block contradicts the register-3 system", stage="zero-block"
        ) from exc
    if final.dimension:
        raise AttackFailureError(
            "Zero block leaves register 3 undetermined",
            stage="zero-block",
            details={"dimension": final.dimension},
        )
    core[_X0:_B0] = final.particular
    a = _a_from_time98(core)
    knowledge = case3_partial_key(a)
    knowledge.diagnostics.update(
        {
            "rank_observed": base.rank,
            "candidates_before_filter": base.size,
            "reduced_rank": reduced.rank,
            "reduced_candidates": reduced.size,
        }
    )
    logger.info(
        f"Case 3: a-sequence recovered, {knowledge.bits_known} key bits certified"
    )
    return a, knowledge


def case3_partial_key(a: ASequence) -> KeyKnowledge:
    """
    Key bits and relations implied by a Case 3 a-sequence.

    A one at a_{t+1} with t <= 11 certifies k66..k_{66-t} = a1..a_{t+1}
    (largest such t). A one at a_{t+1} with 67 <= t <= 91 certifies
    k66..k55 = a1..a12, gives a13 = k54 + k79*k80 and two alternative systems
    for a14.., one per answer to "is position 93 faulted".
    """
    if a.context is not SequenceContext.CASE3:
        raise InvalidInputError("case3_partial_key needs a Case 3 a-sequence")
    knowledge = KeyKnowledge()
    early = [t for t in range(12) if a.value(t + 1)]
    late = [t for t in range(67, 92) if a.value(t + 1)]
    if early:
        t = max(early)
        for i in range(t + 1):
            knowledge.learn(66 - i, a.value(i + 1), f"a{i + 1} (prefix trigger t={t})")
        knowledge.diagnostics["prefix_trigger"] = t
    if late:
        t = max(late)
        for i in range(12):
            knowledge.learn(66 - i, a.value(i + 1), f"a{i + 1} (tail trigger t={t})")
        knowledge.relate(KeyRelation.of([(54,), (79, 80)], a.value(13)))
        live: List[KeyRelation] = []
        faulted: List[KeyRelation] = []
        for u in range(13, t - 26):
            pair = (91 - u, 92 - u)
            live.append(KeyRelation.of([(66 - u,), pair, (93 - u,)], a.value(u + 1)))
            faulted.append(KeyRelation.of([(66 - u,), pair], a.value(u + 1)))
        for v in range(65, t - 1):
            pair = (91 - v, 92 - v)
            live.append(KeyRelation.of([pair, (93 - v,)], a.value(v + 1)))
            faulted.append(KeyRelation.of([pair], a.value(v + 1)))
        knowledge.alternatives.append(("position 93 live", live))
        knowledge.alternatives.append(("position 93 faulted", faulted))
        knowledge.diagnostics["tail_trigger"] = t
    if not (early or late):
        knowledge.diagnostics["trigger"] = "none"
    return knowledge


# Cases 4..6

# Index ranges of keystream bits by exact degree in key and IV variables
DEGREE_PROFILES: Dict[MachineVariant, Dict[int, Tuple[int, int]]] = {
    MachineVariant.CLEAN: {1: (0, 65), 2: (66, 147), 3: (148, 213)},
    MachineVariant.CASE4: {1: (0, 65), 2: (66, 159), 3: (160, 228)},
    MachineVariant.CASE5: {1: (0, 65), 2: (66, 159), 3: (160, 228)},
}

_STRUCTURAL = {
    CaseLabel.CASE4: (MachineVariant.CASE4, ((70,),)),
    CaseLabel.CASE5: (MachineVariant.CASE5, ((79,),)),
    CaseLabel.CASE6: (MachineVariant.CASE6, ((79,), (80,))),
}


@dataclass(frozen=True)
class StructureReport:
    """
    What a Case 4..6 fault reduces the cipher to.

    Attributes:
        case: Structural case.
        variant: Degraded machine.
        width: Bits of state that still matter.
        reversible: Whether the degraded renewal can be run backwards.
        omitted: Positions dropped from the state.
        iv_witness: IV flips that leave the keystream unchanged.
        degree_profile: Degree -> (first, last) keystream index, when known.
        notes: Further facts.
    """

    case: CaseLabel
    variant: MachineVariant
    width: int
    reversible: bool
    omitted: Tuple[int, ...]
    iv_witness: Tuple[Tuple[int, ...], ...]
    degree_profile: Optional[Dict[int, Tuple[int, int]]]
    notes: Tuple[str, ...] = ()


def structural_report(case: CaseLabel) -> StructureReport:
    """
    Degraded-machine description for Case 4, Case 5 or Case 6.

    Case5or6 is reported as Case 5, the resolution the detector uses.

    Raises:
        DomainError: For any other case.
    """
    if case is CaseLabel.CASE5_OR_6:
        case = CaseLabel.CASE5
    if case not in _STRUCTURAL:
        raise DomainError(f"No structural report for {case.value}")
    variant, witness = _STRUCTURAL[case]
    notes: Tuple[str, ...] = ()
    if case is CaseLabel.CASE5:
        notes = (
            "k1..k79 read from the degraded state at time 14",
            "k80 determined only when the settle time m is below 5",
        )
    elif case is CaseLabel.CASE6:
        notes = ("renewal is irreversible",)
    return StructureReport(
        case=case,
        variant=variant,
        width=variant.width,
        reversible=variant.reversible,
        omitted=tuple(sorted(variant.omitted)),
        iv_witness=witness,
        degree_profile=DEGREE_PROFILES.get(variant),
        notes=notes,
    )


# Dispatch


@dataclass
class AttackOutcome:
    """
    Result of the attack matching a detected case.

    ``failure`` holds the error of a failed attack; Case 7 has no attack and
    leaves every field empty.
    """

    case: CaseLabel
    knowledge: Optional[KeyKnowledge] = None
    a_sequence: Optional[ASequence] = None
    structure: Optional[StructureReport] = None
    failure: Optional[TriviumHardFaultError] = None
    keystream_bits: int = 0
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @property
    def attempted(self) -> bool:
        return self.case is not CaseLabel.CASE7

    def succeeded(self, key: Key) -> Optional[bool]:
        """
        Score against the true key; None when no attack applies.

        Case 2 must return the exact key, Cases 1 and 3 must be sound and
        non-empty, structural cases always succeed.
        """
        if not self.attempted:
            return None
        if self.failure is not None:
            return False
        if self.structure is not None:
            return True
        if self.knowledge is None or not self.knowledge.is_consistent_with(key):
            return False
        if self.case is CaseLabel.CASE2:
            return self.knowledge.full_key() == key
        return not self.knowledge.is_empty


def run_attack(machine: FaultedMachine, case: CaseLabel) -> AttackOutcome:
    """
    Run the attack for ``case`` against ``machine`` at IV = 0.

    Attack errors are captured in the outcome; invalid input still raises.
    """
    outcome = AttackOutcome(case)
    if case in _STRUCTURAL or case is CaseLabel.CASE5_OR_6:
        outcome.structure = structural_report(case)
        return outcome
    if case not in ATTACK_KEYSTREAM_BITS:
        return outcome
    ks = machine.observe(Iv.zero(), ATTACK_KEYSTREAM_BITS[case])
    outcome.keystream_bits = len(ks)
    try:
        if case is CaseLabel.CASE1:
            outcome.knowledge = attack_case1(ks)
        elif case is CaseLabel.CASE2:
            outcome.knowledge = solve_case2(ks)
        else:
            outcome.a_sequence, outcome.knowledge = solve_case3(ks)
    except (WrongCaseError, AttackFailureError) as exc:
        logger.error(f"{case.value} attack failed: {exc}")
        outcome.failure = exc
    return outcome
