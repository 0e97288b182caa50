"""Parsing and printing of exact rationals in "p/q" form."""

from __future__ import annotations

from fractions import Fraction
from typing import Union

RationalLike = Union[int, str, Fraction]


def as_fraction(value: RationalLike) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"`` or ``"p"``; floats are rejected on purpose."""
    s = text.strip()
    if not s:
        raise ValueError("empty rational")
    if "/" in s:
        p, q = s.split("/", 1)
        num, den = int(p), int(q)
        if den <= 0:
            raise ValueError(f"denominator must be positive in {text!r}")
        return Fraction(num, den)
    if any(c in s for c in ".eE"):
        raise ValueError(f"decimal notation not accepted: {text!r}")
    return Fraction(int(s))


def fmt(x: RationalLike) -> str:
    """Canonical text form, always with an explicit denominator."""
    f = as_fraction(x)
    return f"{f.numerator}/{f.denominator}"
