"""
Pytest configuration file.
"""

import gzip
from pathlib import Path
from typing import Callable, Iterable, List, Sequence

import numpy as np
import pytest
from dotenv import load_dotenv

from trivium_hard_fault.case_detector import FaultedMachine
from trivium_hard_fault.fault_model import CaseLabel, FaultMask, sample_case_mask
from trivium_hard_fault.trivium_core import Iv, Key

# Load environment variables from .env file
load_dotenv()

DATA_DIR = Path(__file__).parent / "data"


def _reference_keystream(
    key: Sequence[int],
    iv: Sequence[int],
    n: int,
    faults: Iterable[int] = (),
) -> List[int]:
    """
    Independent Trivium written straight from the register tables.

    Uses a 1-indexed list and three explicit register slices; stuck-at-0
    positions are cleared at load and after every clock.
    """
    faulted = sorted(faults)
    s = [0] * 289
    for i in range(80):
        s[i + 1] = key[i]
        s[i + 94] = iv[i]
    s[286] = s[287] = s[288] = 1
    for p in faulted:
        s[p] = 0
    out: List[int] = []
    for step in range(4 * 288 + n):
        t1 = s[66] ^ s[93]
        t2 = s[162] ^ s[177]
        t3 = s[243] ^ s[288]
        if step >= 4 * 288:
            out.append(t1 ^ t2 ^ t3)
        t1 ^= (s[91] & s[92]) ^ s[171]
        t2 ^= (s[175] & s[176]) ^ s[264]
        t3 ^= (s[286] & s[287]) ^ s[69]
        s[1:94] = [t3] + s[1:93]
        s[94:178] = [t1] + s[94:177]
        s[178:289] = [t2] + s[178:288]
        for p in faulted:
            s[p] = 0
    return out


@pytest.fixture
def reference_keystream() -> Callable[..., List[int]]:
    """The table-driven reference Trivium."""
    return _reference_keystream


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so every test run sees the same keys and masks."""
    return np.random.default_rng(20240611)


@pytest.fixture
def random_key(rng: np.random.Generator) -> Key:
    """A random 80-bit key."""
    return Key.random(rng)


@pytest.fixture
def zero_iv() -> Iv:
    return Iv.zero()


@pytest.fixture
def case_mask(rng: np.random.Generator) -> Callable[[CaseLabel], FaultMask]:
    """Factory drawing a single-position mask of the requested case."""

    def _draw(case: CaseLabel) -> FaultMask:
        return sample_case_mask(case, rng)

    return _draw


@pytest.fixture
def machine_for() -> Callable[[Key, str], FaultedMachine]:
    """Factory building a FaultedMachine from a key and a mask spec."""

    def _build(key: Key, mask: str) -> FaultedMachine:
        return FaultedMachine(key, FaultMask.parse(mask))

    return _build


@pytest.fixture
def golden_text() -> Callable[[str], str]:
    """Reader for the committed golden files under tests/data."""

    def _read(name: str) -> str:
        path = DATA_DIR / name
        if path.suffix == ".gz":
            with gzip.open(path, "rt", encoding="ascii", newline="") as handle:
                return handle.read()
        return path.read_text(encoding="ascii")

    return _read
