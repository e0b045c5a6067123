"""
Partial key knowledge produced by the per-case attacks.

A KeyKnowledge value collects the key bits an attack can certify, the Boolean
relations it can only state between key bits, and (for the Case 3 partial
recovery) groups of alternative relations of which exactly one is expected to
hold. Everything is checkable against a full ground-truth key, which is how
campaigns and tests score attacks.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from .exceptions import DomainError
from .trivium_core import KEY_SIZE, Key, bits_to_hex

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KeyRelation:
    """
    Boolean equation over key bits: XOR of monomials equals ``value``.

    Each monomial is a sorted tuple of 1-based key indices; the empty tuple is
    the constant 1 term.
    """

    monomials: Tuple[Tuple[int, ...], ...]
    value: int

    @classmethod
    def linear(cls, indices: Iterable[int], value: int) -> "KeyRelation":
        return cls(tuple((i,) for i in sorted(indices)), value & 1)

    @classmethod
    def of(cls, terms: Sequence[Sequence[int]], value: int) -> "KeyRelation":
        """Build a relation, cancelling repeated monomials."""
        kept: Dict[Tuple[int, ...], int] = {}
        for term in terms:
            mono = tuple(sorted(set(term)))
            kept[mono] = kept.get(mono, 0) ^ 1
        monomials = tuple(sorted(m for m, c in kept.items() if c))
        return cls(monomials, value & 1)

    def evaluate(self, key: Key) -> int:
        total = 0
        for mono in self.monomials:
            term = 1
            for index in mono:
                term &= key.bit(index)
            total ^= term
        return total

    def holds(self, key: Key) -> bool:
        return self.evaluate(key) == self.value

    def __str__(self) -> str:
        if not self.monomials:
            return f"0 = {self.value}"
        parts = [
            "1" if not mono else "*".join(f"k{i}" for i in mono)
            for mono in self.monomials
        ]
        return f"{' + '.join(parts)} = {self.value}"


@dataclass
class KeyKnowledge:
    """
    Key bits and relations certified by one attack.

    Attributes:
        known: Map from key index (1..80) to its recovered value.
        relations: Residual equations that must all hold.
        alternatives: Named groups of equations; at least one group holds.
        provenance: Short note per known bit naming the fact that fixed it.
        diagnostics: Free-form counters reported alongside the knowledge.
    """

    known: Dict[int, int] = field(default_factory=dict)
    relations: List[KeyRelation] = field(default_factory=list)
    alternatives: List[Tuple[str, List[KeyRelation]]] = field(default_factory=list)
    provenance: Dict[int, str] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def learn(self, index: int, value: int, note: str) -> None:
        """
        Record a certified key bit.

        Raises:
            DomainError: If the index is outside 1..80 or contradicts an
                         earlier certified value.
        """
        if not 1 <= index <= KEY_SIZE:
            raise DomainError(f"Key index {index} outside 1..{KEY_SIZE}")
        value &= 1
        previous = self.known.get(index)
        if previous is not None and previous != value:
            raise DomainError(
                f"Conflicting values for k{index}",
                {"previous": previous, "new": value, "note": note},
            )
        self.known[index] = value
        self.provenance.setdefault(index, note)

    def relate(self, relation: KeyRelation) -> None:
        if relation.monomials:
            self.relations.append(relation)

    def merge(self, other: "KeyKnowledge") -> "KeyKnowledge":
        for index, value in sorted(other.known.items()):
            self.learn(index, value, other.provenance.get(index, "merged"))
        self.relations.extend(other.relations)
        self.alternatives.extend(other.alternatives)
        self.diagnostics.update(other.diagnostics)
        return self

    @property
    def bits_known(self) -> int:
        return len(self.known)

    @property
    def is_empty(self) -> bool:
        return not (self.known or self.relations or self.alternatives)

    def full_key(self) -> Optional[Key]:
        """Return the key when all 80 bits are known, else None."""
        if len(self.known) != KEY_SIZE:
            return None
        return Key(tuple(self.known[i] for i in range(1, KEY_SIZE + 1)))

    def value_hex(self) -> str:
        """Hex of the known bits, unknown bits written as 0."""
        return bits_to_hex([self.known.get(i, 0) for i in range(1, KEY_SIZE + 1)])

    def known_mask_hex(self) -> str:
        """Hex mask with a 1 for every known key bit."""
        return bits_to_hex([int(i in self.known) for i in range(1, KEY_SIZE + 1)])

    def contradictions(self, key: Key) -> List[str]:
        """
        List every statement in this knowledge that the given key violates.

        Args:
            key: Ground-truth key.

        Returns:
            Human readable descriptions; empty when the knowledge is sound.
        """
        problems: List[str] = []
        for index, value in sorted(self.known.items()):
            if key.bit(index) != value:
                problems.append(f"k{index} claimed {value}, true {key.bit(index)}")
        for relation in self.relations:
            if not relation.holds(key):
                problems.append(f"relation violated: {relation}")
        if self.alternatives and not any(
            all(r.holds(key) for r in group) for _, group in self.alternatives
        ):
            names = ", ".join(name for name, _ in self.alternatives)
            problems.append(f"no alternative holds ({names})")
        return problems

    def is_consistent_with(self, key: Key) -> bool:
        return not self.contradictions(key)

    def residual_relations(self) -> List[str]:
        lines = [str(r) for r in self.relations]
        for name, group in self.alternatives:
            lines.extend(f"[{name}] {r}" for r in group)
        return lines
