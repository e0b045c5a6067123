"""
Linear algebra over GF(2) and algebraic normal form arithmetic.

Key Features:
    - Gf2System: dense system with named columns, residual checks and a plain
      text dump format for regression files
    - gaussian_eliminate: word-packed elimination (64 columns per uint64)
      returning an AffineSolutionSet (particular solution + nullspace basis)
    - AffineSolutionSet: incremental equations, fixed-coordinate detection,
      implied linear relations and bounded enumeration
    - refine_with_products: guess-and-determine over an affine set subject to
      product constraints x_p = x_l * x_r, the step that turns a linearized
      system with product columns back into its genuine solutions
    - AnfPoly: XOR-of-monomials polynomials with a monomial cap, and symbolic
      keystream degree profiles of the clean and degraded machines
    - cube_sum: subcube XOR used to certify "degree at least d" claims

Usage:
    system = Gf2System(names, rows, constants)
    solutions = gaussian_eliminate(system)
    vectors = enumerate_solutions(solutions, cap=64)
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import ENUMERATION_CAP, MONOMIAL_CAP
from .exceptions import (
    InconsistentSystemError,
    InvalidInputError,
    ResourceCapError,
    SolutionOverflowError,
)
from .trivium_core import STATE_SIZE, MachineVariant, output_bit, variant_renewal

logger = logging.getLogger(__name__)

SYMBOLIC_STEP_LIMIT = 240


def to_gf2(matrix: Iterable) -> np.ndarray:  # type: ignore[type-arg]
    return np.array(matrix, dtype=np.uint8) & 1


def rows_from_masks(masks: Sequence[int], width: int) -> np.ndarray:
    """
    Expand integer bitmasks (bit c = column c) into a ``len(masks) x width``
    uint8 matrix.
    """
    if not masks:
        return np.zeros((0, width), dtype=np.uint8)
    nbytes = (width + 7) // 8
    raw = b"".join(m.to_bytes(nbytes, "little") for m in masks)
    packed = np.frombuffer(raw, dtype=np.uint8).reshape(len(masks), nbytes)
    return np.unpackbits(packed, axis=1, bitorder="little")[:, :width].copy()


def _pack(rows: np.ndarray) -> np.ndarray:
    m, n = rows.shape
    words = max(1, (n + 63) // 64)
    padded = np.zeros((m, words * 64), dtype=np.uint8)
    padded[:, :n] = rows
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.dtype("<u8")).copy()


def _unpack(packed: np.ndarray, n: int) -> np.ndarray:
    as_bytes = np.ascontiguousarray(packed.astype(np.dtype("<u8"))).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :n].copy()


@dataclass(frozen=True)
class Gf2System:
    """
    Dense linear system over GF(2).

    Attributes:
        names: Variable name per column; unique.
        rows: ``m x n`` uint8 coefficient matrix.
        constants: Right-hand side, one bit per row.
    """

    names: Tuple[str, ...]
    rows: np.ndarray
    constants: np.ndarray

    def __post_init__(self) -> None:
        names = tuple(self.names)
        if not names:
            raise InvalidInputError("A system needs at least one variable")
        if len(set(names)) != len(names):
            raise InvalidInputError("Variable names must be unique")
        rows = to_gf2(self.rows).reshape(-1, len(names))
        constants = to_gf2(self.constants).reshape(-1)
        if rows.shape[0] != constants.shape[0]:
            raise InvalidInputError(
                "One constant per row is required",
                {"rows": rows.shape[0], "constants": constants.shape[0]},
            )
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "constants", constants)

    @property
    def n_variables(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])

    def widen(self, extra_names: Sequence[str]) -> "Gf2System":
        """Append zero columns for new variables."""
        padding = np.zeros((self.n_rows, len(extra_names)), dtype=np.uint8)
        return Gf2System(
            self.names + tuple(extra_names),
            np.hstack([self.rows, padding]),
            self.constants,
        )

    def extend(self, rows: np.ndarray, constants: Sequence[int]) -> "Gf2System":
        """Append rows over the same variables."""
        extra = to_gf2(rows).reshape(-1, self.n_variables)
        return Gf2System(
            self.names,
            np.vstack([self.rows, extra]),
            np.concatenate([self.constants, to_gf2(constants).reshape(-1)]),
        )

    def residuals(self, vector: np.ndarray) -> np.ndarray:
        vec = to_gf2(vector)
        lhs = np.count_nonzero(self.rows & vec, axis=1) & 1
        return (lhs.astype(np.uint8) ^ self.constants).astype(np.uint8)

    def satisfied_by(self, vector: np.ndarray) -> bool:
        return not self.residuals(vector).any()

    def dump(self) -> str:
        """Header of variable names, then one ``bits|constant`` line per row."""
        lines = [" ".join(self.names)]
        for row, const in zip(self.rows, self.constants):
            lines.append("".join("1" if b else "0" for b in row) + f"|{int(const)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dump(cls, text: str) -> "Gf2System":
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise InvalidInputError("Empty system dump")
        names = tuple(lines[0].split())
        rows, constants = [], []
        for line in lines[1:]:
            bits, _, const = line.partition("|")
            if len(bits) != len(names) or const not in ("0", "1"):
                raise InvalidInputError(f"Malformed system row {line!r}")
            rows.append([int(c) for c in bits])
            constants.append(int(const))
        matrix = np.array(rows, dtype=np.uint8).reshape(-1, len(names))
        return cls(names, matrix, np.array(constants, dtype=np.uint8))


@dataclass(frozen=True)
class AffineSolutionSet:
    """
    ``{particular + span(basis)}`` over named variables.

    Attributes:
        names: Variable names, one per coordinate.
        particular: One solution.
        basis: ``d x n`` nullspace basis (d = n - rank).
        rank: Rank of the constraints that produced the set.
    """

    names: Tuple[str, ...]
    particular: np.ndarray
    basis: np.ndarray
    rank: int

    @property
    def n_variables(self) -> int:
        return len(self.names)

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])

    @property
    def size(self) -> int:
        return 1 << self.dimension

    def fixed_mask(self) -> np.ndarray:
        """Boolean array: coordinate takes the same value on every solution."""
        if self.dimension == 0:
            return np.ones(self.n_variables, dtype=bool)
        return ~self.basis.any(axis=0)

    def contains(self, vector: np.ndarray) -> bool:
        delta = to_gf2(vector) ^ self.particular
        if self.dimension == 0:
            return not delta.any()
        span = Gf2System(
            tuple(f"c{i}" for i in range(self.dimension)), self.basis.T, delta
        )
        try:
            gaussian_eliminate(span)
        except InconsistentSystemError:
            return False
        return True

    def with_equation(self, coeffs: np.ndarray, value: int) -> "AffineSolutionSet":
        """
        Intersect with ``coeffs . x = value``.

        Raises:
            InconsistentSystemError: If no member satisfies the equation.
        """
        coeffs = to_gf2(coeffs)
        lhs = int(np.count_nonzero(coeffs & self.particular)) & 1
        if self.dimension == 0:
            if lhs != (value & 1):
                raise InconsistentSystemError("Equation contradicts the solution")
            return self
        dots = (np.count_nonzero(self.basis & coeffs, axis=1) & 1).astype(bool)
        if not dots.any():
            if lhs != (value & 1):
                raise InconsistentSystemError("Equation contradicts the solution set")
            return self
        hits = np.flatnonzero(dots)
        pivot = int(hits[0])
        pivot_row = self.basis[pivot]
        particular = self.particular
        if lhs != (value & 1):
            particular = particular ^ pivot_row
        basis = self.basis.copy()
        if hits.size > 1:
            basis[hits[1:]] ^= pivot_row
        basis = np.delete(basis, pivot, axis=0)
        return AffineSolutionSet(self.names, particular, basis, self.rank + 1)

    def with_assignment(self, column: int, value: int) -> "AffineSolutionSet":
        unit = np.zeros(self.n_variables, dtype=np.uint8)
        unit[column] = 1
        return self.with_equation(unit, value)

    def relations(self) -> List[Tuple[np.ndarray, int]]:
        """
        Linear relations ``e . x = c`` satisfied by every member.

        They span the annihilator of the basis; with dimension 0 they are the
        unit vectors, i.e. every coordinate is known.
        """
        n = self.n_variables
        if self.dimension == 0:
            identity = np.eye(n, dtype=np.uint8)
            return [(row, int(self.particular[i])) for i, row in enumerate(identity)]
        annihilator = gaussian_eliminate(
            Gf2System(self.names, self.basis, np.zeros(self.dimension, dtype=np.uint8))
        ).basis
        return [
            (row, int(np.count_nonzero(row & self.particular)) & 1)
            for row in annihilator
        ]

    def enumerate(self, cap: int = ENUMERATION_CAP) -> np.ndarray:
        """
        Every member as a ``2^d x n`` uint8 array.

        Raises:
            SolutionOverflowError: If ``2^d`` exceeds ``cap``.
        """
        if self.size > cap:
            raise SolutionOverflowError(
                f"Solution space of 2^{self.dimension} exceeds cap {cap}",
                {"dimension": self.dimension},
            )
        if self.dimension == 0:
            return self.particular[None, :].copy()
        index = np.arange(self.size, dtype=np.int64)
        selectors = ((index[:, None] >> np.arange(self.dimension)) & 1).astype(np.uint8)
        # Sums stay below 256 because the dimension is bounded by the cap
        combos = (selectors @ self.basis) & 1
        return (combos ^ self.particular).astype(np.uint8)


def gaussian_eliminate(system: Gf2System) -> AffineSolutionSet:
    """
    Row-reduce ``system`` and describe its solution set.

    Rows are packed 64 columns per machine word and every pivot clears its
    column in all other rows, leaving a reduced row echelon form.

    Raises:
        InconsistentSystemError: If the system has no solution.
    """
    n = system.n_variables
    m = system.n_rows
    packed = _pack(system.rows)
    constants = system.constants.copy()
    pivots: List[int] = []
    row = 0
    for col in range(n):
        if row == m:
            break
        word, bit = divmod(col, 64)
        flag = np.uint64(1 << bit)
        below = np.flatnonzero(packed[row:, word] & flag)
        if below.size == 0:
            continue
        pivot = row + int(below[0])
        if pivot != row:
            packed[[row, pivot]] = packed[[pivot, row]]
            constants[[row, pivot]] = constants[[pivot, row]]
        others = np.flatnonzero(packed[:, word] & flag)
        others = others[others != row]
        if others.size:
            packed[others] ^= packed[row]
            constants[others] ^= constants[row]
        pivots.append(col)
        row += 1
    rank = len(pivots)
    if constants[rank:].any():
        raise InconsistentSystemError(
            "System has no solution", {"rank": rank, "rows": m, "variables": n}
        )
    reduced = _unpack(packed[:rank], n) if rank else np.zeros((0, n), dtype=np.uint8)
    particular = np.zeros(n, dtype=np.uint8)
    particular[pivots] = constants[:rank]
    pivot_set = set(pivots)
    free = [c for c in range(n) if c not in pivot_set]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    if free:
        basis[np.arange(len(free)), free] = 1
        if rank:
            basis[:, pivots] = reduced[:, free].T
    logger.debug(f"Eliminated {m}x{n} system: rank {rank}, nullity {len(free)}")
    return AffineSolutionSet(system.names, particular, basis, rank)


def enumerate_solutions(
    sols: AffineSolutionSet, cap: int = ENUMERATION_CAP
) -> List[np.ndarray]:
    """All members of ``sols``; raises SolutionOverflowError above ``cap``."""
    return list(sols.enumerate(cap))


@dataclass(frozen=True)
class ProductConstraint:
    """Column ``product`` must equal column ``left`` times column ``right``."""

    left: int
    right: int
    product: int


def _products_hold(
    candidates: np.ndarray, constraints: Sequence[ProductConstraint]
) -> np.ndarray:
    ok = np.ones(candidates.shape[0], dtype=bool)
    for c in constraints:
        expected = candidates[:, c.left] & candidates[:, c.right]
        ok &= candidates[:, c.product] == expected
    return ok


def propagate_products(
    sols: AffineSolutionSet, constraints: Sequence[ProductConstraint]
) -> AffineSolutionSet:
    """
    Apply every product rule that a fixed coordinate makes linear.

    Rules: both factors fixed fixes the product; a factor fixed to 0 fixes the
    product to 0; a factor fixed to 1 equates product and other factor; a
    product fixed to 1 fixes both factors to 1.

    Raises:
        InconsistentSystemError: If a fully fixed triple violates its product.
    """
    n = sols.n_variables
    changed = True
    while changed:
        changed = False
        for c in constraints:
            fixed = sols.fixed_mask()
            values = sols.particular
            fl, fr = bool(fixed[c.left]), bool(fixed[c.right])
            fp = bool(fixed[c.product])
            equations: List[Tuple[Tuple[int, ...], int]] = []
            if fl and fr:
                expected = int(values[c.left] & values[c.right])
                if fp and int(values[c.product]) != expected:
                    raise InconsistentSystemError("Product constraint violated")
                if not fp:
                    equations.append(((c.product,), expected))
            elif fl or fr:
                known, other = (c.left, c.right) if fl else (c.right, c.left)
                if values[known] == 0:
                    if not fp:
                        equations.append(((c.product,), 0))
                else:
                    equations.append(((c.product, other), 0))
            elif fp and values[c.product] == 1:
                equations.extend([((c.left,), 1), ((c.right,), 1)])
            for columns, value in equations:
                coeffs = np.zeros(n, dtype=np.uint8)
                coeffs[list(columns)] = 1
                before = sols.dimension
                sols = sols.with_equation(coeffs, value)
                changed = changed or sols.dimension != before
    return sols


def _branch_column(
    sols: AffineSolutionSet, constraints: Sequence[ProductConstraint]
) -> Optional[int]:
    fixed = sols.fixed_mask()
    counts: dict = {}
    for c in constraints:
        if fixed[c.left] and fixed[c.right] and fixed[c.product]:
            continue
        for col in (c.left, c.right):
            if not fixed[col]:
                counts[col] = counts.get(col, 0) + 1
    if not counts:
        return None
    return max(sorted(counts), key=lambda col: counts[col])


def refine_with_products(
    sols: AffineSolutionSet,
    constraints: Sequence[ProductConstraint],
    max_nodes: int = ENUMERATION_CAP,
    leaf_size: int = 1 << 10,
    max_survivors: int = 64,
) -> List[np.ndarray]:
    """
    Members of ``sols`` that satisfy every product constraint.

    Depth-first guess-and-determine: propagate, then either enumerate a small
    node or branch on the factor column shared by most open constraints.

    Raises:
        SolutionOverflowError: When more than ``max_survivors`` members survive
                               or the search visits more than ``max_nodes``.
    """
    survivors: List[np.ndarray] = []
    stack = [sols]
    nodes = 0
    while stack:
        node = stack.pop()
        nodes += 1
        if nodes > max_nodes:
            raise SolutionOverflowError(
                "Product search budget exhausted", {"nodes": nodes}
            )
        try:
            node = propagate_products(node, constraints)
        except InconsistentSystemError:
            continue
        column = _branch_column(node, constraints)
        if node.size <= leaf_size or column is None:
            if node.size > max(leaf_size, max_survivors):
                raise SolutionOverflowError(
                    "Product constraints leave a large free space",
                    {"dimension": node.dimension},
                )
            candidates = node.enumerate(cap=max(leaf_size, max_survivors))
            kept = candidates[_products_hold(candidates, constraints)]
            survivors.extend(kept)
            if len(survivors) > max_survivors:
                raise SolutionOverflowError(
                    "Too many assignments satisfy the product constraints",
                    {"survivors": len(survivors)},
                )
            continue
        for value in (1, 0):
            try:
                stack.append(node.with_assignment(column, value))
            except InconsistentSystemError:
                pass
    logger.debug(f"Product search visited {nodes} nodes, {len(survivors)} survivors")
    return survivors


class AnfPoly:
    """
    Boolean polynomial in algebraic normal form.

    Monomials are integer bitmasks (bit i = variable x_i; 0 = constant 1), so
    addition is set symmetric difference and multiplication ORs monomials with
    XOR cancellation. ``^``/``+`` add and ``&``/``*`` multiply, which lets the
    cipher renewal functions run on polynomials unchanged.
    """

    __slots__ = ("monomials", "cap")

    def __init__(self, monomials: Iterable[int] = (), cap: int = MONOMIAL_CAP):
        self.monomials = frozenset(monomials)
        self.cap = cap

    @classmethod
    def variable(cls, index: int, cap: int = MONOMIAL_CAP) -> "AnfPoly":
        return cls((1 << index,), cap)

    @classmethod
    def constant(cls, bit: int, cap: int = MONOMIAL_CAP) -> "AnfPoly":
        return cls((0,) if bit & 1 else (), cap)

    @property
    def degree(self) -> int:
        return anf_degree(self)

    def evaluate(self, assignment: int) -> int:
        """Value at the point whose variable i is bit i of ``assignment``."""
        value = 0
        for mono in self.monomials:
            if mono & assignment == mono:
                value ^= 1
        return value

    def variables(self) -> List[int]:
        combined = 0
        for mono in self.monomials:
            combined |= mono
        return [i for i in range(combined.bit_length()) if combined >> i & 1]

    def __xor__(self, other: "AnfPoly") -> "AnfPoly":
        return anf_add(self, other)

    __add__ = __xor__

    def __and__(self, other: "AnfPoly") -> "AnfPoly":
        return anf_mul(self, other)

    __mul__ = __and__

    def __eq__(self, other: object) -> bool:
        return isinstance(other, AnfPoly) and self.monomials == other.monomials

    def __hash__(self) -> int:
        return hash(self.monomials)

    def __len__(self) -> int:
        return len(self.monomials)

    def __bool__(self) -> bool:
        return bool(self.monomials)

    def __repr__(self) -> str:
        if not self.monomials:
            return "AnfPoly(0)"
        terms = []
        for mono in sorted(self.monomials):
            bits = [f"x{i}" for i in range(mono.bit_length()) if mono >> i & 1]
            terms.append("*".join(bits) or "1")
        return f"AnfPoly({' + '.join(terms)})"


def anf_add(a: AnfPoly, b: AnfPoly) -> AnfPoly:
    """Sum over GF(2): monomials present in exactly one operand."""
    return AnfPoly(a.monomials ^ b.monomials, min(a.cap, b.cap))


def anf_mul(a: AnfPoly, b: AnfPoly) -> AnfPoly:
    """
    Product with XOR cancellation.

    Raises:
        ResourceCapError: If the result would hold more monomials than the cap.
    """
    cap = min(a.cap, b.cap)
    if not a.monomials or not b.monomials:
        return AnfPoly((), cap)
    if a.monomials == {0}:
        return AnfPoly(b.monomials, cap)
    if b.monomials == {0}:
        return AnfPoly(a.monomials, cap)
    small, large = sorted((a.monomials, b.monomials), key=len)
    result: set = set()
    for m1 in small:
        for m2 in large:
            m = m1 | m2
            if m in result:
                result.remove(m)
            else:
                result.add(m)
        if len(result) > cap:
            raise ResourceCapError(
                f"Product exceeds the monomial cap of {cap}",
                details={"partial": len(result)},
            )
    return AnfPoly(result, cap)


def anf_degree(a: AnfPoly) -> int:
    """Largest monomial size; -1 for the zero polynomial."""
    if not a.monomials:
        return -1
    return max(bin(m).count("1") for m in a.monomials)


def symbolic_keystream_degrees(
    variant: MachineVariant, count: int, cap: int = MONOMIAL_CAP
) -> List[int]:
    """
    Degrees of z0..z_{count-1} as functions of the state at time 1152.

    Every live position p of ``variant`` becomes variable x_{p-1}; omitted
    positions are the zero polynomial.

    Raises:
        InvalidInputError: If ``count`` exceeds the symbolic step limit.
        ResourceCapError: If a polynomial outgrows ``cap``; ``step`` names the
                          keystream index being prepared.
    """
    if not 0 <= count <= SYMBOLIC_STEP_LIMIT:
        raise InvalidInputError(
            f"Symbolic runs are limited to {SYMBOLIC_STEP_LIMIT} steps",
            {"requested": count},
        )
    zero = AnfPoly((), cap)
    state = [
        zero if p in variant.omitted else AnfPoly.variable(p - 1, cap)
        for p in range(1, STATE_SIZE + 1)
    ]
    degrees: List[int] = []
    for step in range(count):
        degrees.append(output_bit(state).degree)
        if step + 1 == count:
            break
        try:
            state = variant_renewal(variant, state, zero)
        except ResourceCapError as exc:
            raise ResourceCapError(
                f"Monomial cap exceeded while renewing for z{step + 1}",
                step=step + 1,
                details={"variant": variant.value},
            ) from exc
        if step % 20 == 0:
            size = max(len(poly) for poly in state)
            logger.debug(f"{variant.value} step {step}: largest ANF has {size} terms")
    return degrees


def cube_sum(
    evaluate: Callable[[Sequence[int]], int],
    base: Sequence[int],
    directions: Sequence[int],
) -> int:
    """
    XOR of ``evaluate`` over the subcube spanned by ``directions`` at ``base``.

    A result of 1 is a nonzero derivative of order ``len(directions)``, which
    certifies algebraic degree at least ``len(directions)``.
    """
    total = 0
    point = list(base)
    for flips in itertools.product((0, 1), repeat=len(directions)):
        for index, flip in zip(directions, flips):
            point[index] = base[index] ^ flip
        total ^= evaluate(point) & 1
    return total


def certify_degree_at_least(
    evaluate: Callable[[Sequence[int]], int],
    variables: Sequence[int],
    width: int,
    degree: int,
    rng: np.random.Generator,
    attempts: int = 64,
) -> bool:
    """
    Search random subcubes for a witness that the function has degree ≥ d.

    Returns False when no witness is found, which proves nothing.
    """
    for _ in range(attempts):
        base = [int(b) for b in rng.integers(0, 2, size=width)]
        picked = rng.choice(np.array(variables), size=degree, replace=False)
        directions = [int(v) for v in picked]
        if cube_sum(evaluate, base, directions):
            return True
    return False
