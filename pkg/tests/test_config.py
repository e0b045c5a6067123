"""
Tests for environment-driven configuration.
"""

import pytest

from trivium_hard_fault import config
from trivium_hard_fault.exceptions import InvalidInputError


@pytest.mark.unit
class TestIntegerSettings:
    """Parsing integer environment variables."""

    def test_unset_uses_default(self, monkeypatch):
        """A missing variable falls back to the default."""
        monkeypatch.delenv("TRIVIUM_HF_TEST_VALUE", raising=False)
        assert config._int_env("TRIVIUM_HF_TEST_VALUE", 7) == 7

    def test_blank_uses_default(self, monkeypatch):
        """Whitespace counts as unset."""
        monkeypatch.setenv("TRIVIUM_HF_TEST_VALUE", "  ")
        assert config._int_env("TRIVIUM_HF_TEST_VALUE", None) is None

    @pytest.mark.parametrize("raw,value", [("42", 42), (" 0x10 ", 16), ("0b101", 5)])
    def test_integer_literals(self, monkeypatch, raw, value):
        """Decimal, hex and binary literals are accepted."""
        monkeypatch.setenv("TRIVIUM_HF_TEST_VALUE", raw)
        assert config._int_env("TRIVIUM_HF_TEST_VALUE", None) == value

    def test_garbage_raises(self, monkeypatch):
        """Non-integers raise InvalidInputError naming the variable."""
        monkeypatch.setenv("TRIVIUM_HF_TEST_VALUE", "many")
        with pytest.raises(InvalidInputError) as info:
            config._int_env("TRIVIUM_HF_TEST_VALUE", 1)
        assert "TRIVIUM_HF_TEST_VALUE" in info.value.message


@pytest.mark.unit
def test_caps_are_positive():
    """Resource caps default to usable values."""
    assert config.KEYSTREAM_CAP >= 2 * 4524
    assert config.MONOMIAL_CAP > 0
    assert config.ENUMERATION_CAP >= 1024
    assert config.CASE5_LOOKAHEAD >= 14
    assert config.LOG_LEVEL
