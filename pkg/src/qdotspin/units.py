"""Parsing of unit-suffixed quantity strings such as ``"5T"`` or ``"0.01 mT"``.

Grammar::

    quantity := number [whitespace] [prefix] unit
    number   := any float literal accepted by ``float()``
    prefix   := f | p | n | u | µ | μ | m | k | M | G | T
    unit     := T | s | Hz | eV | K | A | m | V | W | Ohm | ohm | Ω

The longest unit suffix wins, so ``"mm"`` is millimetre and ``"mT"`` is
millitesla.  A bare number (or a plain int/float) is taken as already being
in SI base units.  Values come back as floats in the package's unit system
(eV for energies, everything else SI).
"""
from __future__ import annotations

import re

__all__ = ["parse_quantity", "parse_with_dimension", "UnitError", "UNITS", "PREFIXES"]

PREFIXES = {
    "f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6, "μ": 1e-6,
    "m": 1e-3, "k": 1e3, "M": 1e6, "G": 1e9, "T": 1e12,
}

# unit symbol -> dimension name
UNITS = {
    "T": "field", "s": "time", "Hz": "frequency", "eV": "energy", "K": "temperature",
    "A": "current", "m": "length", "V": "voltage", "W": "power",
    "Ohm": "resistance", "ohm": "resistance", "Ω": "resistance",
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


class UnitError(ValueError):
    pass


def _split_unit(suffix):
    for unit in sorted(UNITS, key=len, reverse=True):
        if suffix.endswith(unit):
            prefix = suffix[: -len(unit)]
            if prefix == "":
                return 1.0, unit
            if prefix in PREFIXES:
                return PREFIXES[prefix], unit
    raise UnitError(f"unrecognised unit {suffix!r}")


def parse_with_dimension(value) -> tuple[float, str | None]:
    """Like `parse_quantity` but also report the dimension (None if unitless)."""
    if isinstance(value, str):
        match = _NUMBER.match(value)
        if match and match.group(2):
            scale, unit = _split_unit(match.group(2))
            return float(match.group(1)) * scale, UNITS[unit]
    return parse_quantity(value), None


def parse_quantity(value, expect: str | None = None) -> float:
    """Convert ``value`` to a float in package units.

    ``expect`` names the required dimension (``"time"``, ``"field"``...).
    Unitless input is accepted for any dimension.
    """
    if isinstance(value, bool):
        raise UnitError(f"boolean is not a quantity: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise UnitError(f"cannot parse quantity from {type(value).__name__}")
    match = _NUMBER.match(value)
    if not match:
        raise UnitError(f"malformed quantity {value!r}")
    number, suffix = match.groups()
    if not suffix:
        return float(number)
    scale, unit = _split_unit(suffix)
    dim = UNITS[unit]
    if expect is not None and dim != expect:
        raise UnitError(f"{value!r} is a {dim}, expected a {expect}")
    return float(number) * scale
