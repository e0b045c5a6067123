"""
Tests for GF(2) elimination, product-constrained search and ANF arithmetic.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trivium_hard_fault.exceptions import (
    InconsistentSystemError,
    InvalidInputError,
    ResourceCapError,
    SolutionOverflowError,
)
from trivium_hard_fault.gf2_algebra import (
    AffineSolutionSet,
    AnfPoly,
    Gf2System,
    ProductConstraint,
    certify_degree_at_least,
    cube_sum,
    enumerate_solutions,
    gaussian_eliminate,
    propagate_products,
    refine_with_products,
    rows_from_masks,
    symbolic_keystream_degrees,
)
from trivium_hard_fault.trivium_core import MachineVariant


def _names(n):
    return tuple(f"x{i}" for i in range(n))


def _brute_force(rows, constants, n):
    solutions = set()
    for point in itertools.product((0, 1), repeat=n):
        vec = np.array(point, dtype=np.uint8)
        parities = [int(np.count_nonzero(r & vec)) % 2 for r in rows]
        if parities == list(constants):
            solutions.add(point)
    return solutions


@st.composite
def small_systems(draw):
    n = draw(st.integers(1, 7))
    m = draw(st.integers(0, 9))
    rows = draw(
        st.lists(
            st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=m, max_size=m
        )
    )
    constants = draw(st.lists(st.integers(0, 1), min_size=m, max_size=m))
    return n, np.array(rows, dtype=np.uint8).reshape(m, n), constants


@pytest.mark.unit
class TestGaussianElimination:
    """Elimination against brute force on small systems."""

    @given(small_systems())
    @settings(max_examples=150, deadline=None)
    def test_matches_brute_force(self, case):
        """Consistency, solution count and members agree with exhaustive search."""
        n, rows, constants = case
        expected = _brute_force(rows, constants, n)
        system = Gf2System(_names(n), rows, np.array(constants, dtype=np.uint8))
        if not expected:
            with pytest.raises(InconsistentSystemError):
                gaussian_eliminate(system)
            return
        sols = gaussian_eliminate(system)
        found = {tuple(int(b) for b in v) for v in enumerate_solutions(sols)}
        assert found == expected
        assert sols.rank + sols.dimension == n
        assert all(sols.contains(np.array(p, dtype=np.uint8)) for p in expected)

    @given(small_systems())
    @settings(max_examples=75, deadline=None)
    def test_relations_hold_on_every_member(self, case):
        """Implied relations are satisfied by all solutions."""
        n, rows, constants = case
        system = Gf2System(_names(n), rows, np.array(constants, dtype=np.uint8))
        try:
            sols = gaussian_eliminate(system)
        except InconsistentSystemError:
            return
        for coeffs, value in sols.relations():
            for member in sols.enumerate():
                assert int(np.count_nonzero(coeffs & member)) % 2 == value

    def test_fixed_coordinates(self):
        """x0 = 1 and x1 + x2 = 0 fix only x0."""
        rows = np.array([[1, 0, 0], [0, 1, 1]], dtype=np.uint8)
        sols = gaussian_eliminate(Gf2System(_names(3), rows, np.array([1, 0])))
        assert list(sols.fixed_mask()) == [True, False, False]
        assert sols.size == 2

    def test_with_equation_contradiction(self):
        """Adding x0 = 0 to x0 = 1 raises."""
        rows = np.array([[1, 0]], dtype=np.uint8)
        sols = gaussian_eliminate(Gf2System(_names(2), rows, np.array([1])))
        with pytest.raises(InconsistentSystemError):
            sols.with_assignment(0, 0)
        assert sols.with_assignment(1, 1).dimension == 0

    def test_enumeration_cap(self):
        """Spaces above the cap are refused."""
        system = Gf2System(_names(12), np.zeros((0, 12)), np.zeros(0))
        with pytest.raises(SolutionOverflowError):
            gaussian_eliminate(system).enumerate(cap=1024)

    def test_wide_system_crosses_word_boundary(self):
        """Columns beyond 64 eliminate correctly."""
        n = 130
        masks = [(1 << i) | (1 << (i + 1)) for i in range(n - 1)]
        system = Gf2System(
            _names(n), rows_from_masks(masks, n), np.ones(n - 1, dtype=np.uint8)
        )
        sols = gaussian_eliminate(system)
        assert sols.rank == n - 1
        assert system.satisfied_by(sols.particular)


@pytest.mark.unit
class TestGf2System:
    """System container behaviour."""

    def test_dump_round_trip(self):
        """A dumped system parses back unchanged."""
        rows = np.array([[1, 0, 1], [0, 1, 1]], dtype=np.uint8)
        system = Gf2System(("a", "b", "c"), rows, np.array([1, 0]))
        again = Gf2System.from_dump(system.dump())
        assert again.names == system.names
        assert (again.rows == system.rows).all()
        assert (again.constants == system.constants).all()

    def test_duplicate_names(self):
        """Column names must be unique."""
        with pytest.raises(InvalidInputError):
            Gf2System(("a", "a"), np.zeros((1, 2)), np.zeros(1))

    def test_widen_and_extend(self):
        """New columns start at zero; new rows append."""
        system = Gf2System(("a",), np.array([[1]]), np.array([1]))
        wider = system.widen(["b"]).extend(np.array([[1, 1]]), [0])
        assert wider.names == ("a", "b")
        assert wider.n_rows == 2
        assert wider.column("b") == 1
        assert wider.satisfied_by(np.array([1, 1]))

    def test_unknown_column(self):
        """Unknown names raise InvalidInputError."""
        system = Gf2System(("a",), np.array([[1]]), np.array([1]))
        with pytest.raises(InvalidInputError):
            system.column("z")

    def test_rows_from_masks(self):
        """Bit c of each mask is column c."""
        rows = rows_from_masks([0b101, 0b010], 3)
        assert rows.tolist() == [[1, 0, 1], [0, 1, 0]]


@pytest.mark.unit
class TestProductSearch:
    """Guess-and-determine with product constraints."""

    def _free(self, n):
        return gaussian_eliminate(Gf2System(_names(n), np.zeros((0, n)), np.zeros(0)))

    def test_all_truth_table_rows_survive(self):
        """p = x0*x1 over a free space leaves the four AND rows."""
        survivors = refine_with_products(self._free(3), [ProductConstraint(0, 1, 2)])
        found = sorted(tuple(int(b) for b in v) for v in survivors)
        assert found == [(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 1)]

    def test_product_one_forces_factors(self):
        """Fixing the product to 1 propagates to both factors."""
        sols = propagate_products(
            self._free(3).with_assignment(2, 1), [ProductConstraint(0, 1, 2)]
        )
        assert sols.dimension == 0
        assert sols.particular.tolist() == [1, 1, 1]

    def test_contradiction_is_pruned(self):
        """x0 = x1 = 1 with p = 0 has no survivors."""
        sols = self._free(3).with_assignment(0, 1).with_assignment(1, 1)
        sols = sols.with_assignment(2, 0)
        assert refine_with_products(sols, [ProductConstraint(0, 1, 2)]) == []

    def test_survivor_cap(self):
        """Too many survivors raise SolutionOverflowError."""
        constraints = [ProductConstraint(0, 1, 2)]
        with pytest.raises(SolutionOverflowError):
            refine_with_products(
                self._free(8), constraints, leaf_size=4, max_survivors=4
            )

    def test_linearized_chain(self):
        """A chain of products pinned by linear equations has one survivor."""
        # x3 = x0*x1, x4 = x1*x2, x3 = 1, x4 = 0
        rows = np.array([[0, 0, 0, 1, 0], [0, 0, 0, 0, 1]], dtype=np.uint8)
        sols = gaussian_eliminate(Gf2System(_names(5), rows, np.array([1, 0])))
        survivors = refine_with_products(
            sols, [ProductConstraint(0, 1, 3), ProductConstraint(1, 2, 4)]
        )
        assert [v.tolist() for v in survivors] == [[1, 1, 0, 1, 0]]


anf_polys = st.frozensets(st.integers(0, 15), max_size=10).map(AnfPoly)


@pytest.mark.unit
class TestAnf:
    """ANF arithmetic checked against truth tables."""

    @given(anf_polys, anf_polys)
    @settings(max_examples=100, deadline=None)
    def test_add_and_mul_truth_tables(self, a, b):
        """Evaluation is a ring homomorphism at every point of 4 variables."""
        for x in range(16):
            assert (a ^ b).evaluate(x) == a.evaluate(x) ^ b.evaluate(x)
            assert (a & b).evaluate(x) == a.evaluate(x) & b.evaluate(x)

    @given(anf_polys)
    @settings(max_examples=50, deadline=None)
    def test_idempotent_square(self, a):
        """Boolean polynomials satisfy a*a = a."""
        assert a & a == a

    def test_degree(self):
        """Degree is the largest monomial; zero has degree -1."""
        x0, x1, x2 = (AnfPoly.variable(i) for i in range(3))
        assert ((x0 & x1) ^ x2).degree == 2
        assert AnfPoly().degree == -1
        assert AnfPoly.constant(1).degree == 0

    def test_cap(self):
        """Products beyond the cap raise ResourceCapError."""
        a = AnfPoly([1, 2, 4], cap=4)
        b = AnfPoly([8, 16, 32], cap=4)
        with pytest.raises(ResourceCapError):
            a & b

    def test_cube_sum_and_certificate(self, rng):
        """A cubic monomial has a nonzero third derivative everywhere."""

        def cubic(point):
            return point[0] & point[1] & point[2]

        assert cube_sum(cubic, [0] * 5, [0, 1, 2]) == 1
        assert cube_sum(cubic, [0] * 5, [0, 1, 3]) == 0
        assert certify_degree_at_least(cubic, [0, 1, 2], 5, 3, rng)


@pytest.mark.unit
@pytest.mark.symbolic
class TestSymbolicDegrees:
    """Symbolic keystream degrees in the state variables at time 1152."""

    def test_linear_prefix(self):
        """z0..z65 are linear and z66 is the first quadratic bit."""
        degrees = symbolic_keystream_degrees(MachineVariant.CLEAN, 70)
        assert degrees[:66] == [1] * 66
        assert degrees[66:70] == [2] * 4

    def test_step_limit(self):
        """Runs above the step limit are refused."""
        with pytest.raises(InvalidInputError):
            symbolic_keystream_degrees(MachineVariant.CLEAN, 10_000)

    def test_monomial_cap_reports_step(self):
        """A tiny cap fails with the keystream index being prepared."""
        with pytest.raises(ResourceCapError) as info:
            symbolic_keystream_degrees(MachineVariant.CLEAN, 150, cap=2)
        assert info.value.step is not None
        assert 0 < info.value.step < 150

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "variant", [MachineVariant.CLEAN, MachineVariant.CASE4, MachineVariant.CASE5]
    )
    def test_full_profile(self, variant):
        """Degree profile through z229 matches the published ranges."""
        from trivium_hard_fault.attack_engine import DEGREE_PROFILES

        degrees = symbolic_keystream_degrees(variant, 230)
        for degree, (low, high) in DEGREE_PROFILES[variant].items():
            assert degrees[low : high + 1] == [degree] * (high - low + 1)
        last = max(high for _, high in DEGREE_PROFILES[variant].values())
        assert all(d >= 4 for d in degrees[last + 1 :])


@pytest.mark.unit
def test_solution_set_is_frozen():
    """AffineSolutionSet is an immutable value."""
    sols = AffineSolutionSet(
        ("a",), np.zeros(1, dtype=np.uint8), np.zeros((0, 1), dtype=np.uint8), 1
    )
    with pytest.raises(Exception):
        sols.rank = 2  # type: ignore[misc]
