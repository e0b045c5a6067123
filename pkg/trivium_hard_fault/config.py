"""
Runtime configuration loaded from the environment (and an optional .env file).
"""

import os
from typing import Optional

from dotenv import load_dotenv

from .exceptions import InvalidInputError

load_dotenv()


def _int_env(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw.strip(), 0)
    except ValueError as exc:
        raise InvalidInputError(
            f"Environment variable {name} must be an integer", {"value": raw}
        ) from exc


def _require_int(name: str, default: int) -> int:
    value = _int_env(name, default)
    assert value is not None
    return value


# Default configuration values loaded from environment variables
DEFAULT_SEED = _int_env("TRIVIUM_HF_SEED", None)  # Master seed when --seed is absent
KEYSTREAM_CAP = _require_int("TRIVIUM_HF_KEYSTREAM_CAP", 2**24)  # Bits per call
MONOMIAL_CAP = _require_int("TRIVIUM_HF_MONOMIAL_CAP", 2**22)  # Monomials per ANF
ENUMERATION_CAP = _require_int("TRIVIUM_HF_ENUMERATION_CAP", 2**16)  # Candidates
CASE5_LOOKAHEAD = _require_int("TRIVIUM_HF_CASE5_LOOKAHEAD", 100)  # Steps to settle m
LOG_LEVEL = os.getenv("TRIVIUM_HF_LOG_LEVEL", "WARNING")  # CLI logging level
