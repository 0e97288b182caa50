"""Ordinals below epsilon_0 in Cantor normal form.

Only what the constructions need: addition, comparison, omega powers,
the "replace omega by b" truncation and canonical limit schedules.
Text syntax: ``w^2*3+w+5``; exponents may be parenthesised ordinals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering

from .errors import LipfreeError


class TooLarge(LipfreeError):
    pass


class NotALimit(LipfreeError):
    pass


class OrdinalSyntaxError(LipfreeError, ValueError):
    pass


@total_ordering
@dataclass(frozen=True)
class Ordinal:
    """``terms`` is a strictly descending tuple of ``(exponent, coefficient)``."""

    terms: tuple = ()

    def __post_init__(self) -> None:
        prev = None
        for e, c in self.terms:
            if not isinstance(e, Ordinal) or not isinstance(c, int) or c < 1:
                raise ValueError(f"bad CNF term {(e, c)!r}")
            if prev is not None and not e < prev:
                raise ValueError("exponents must be strictly descending")
            prev = e

    @classmethod
    def of(cls, n: int) -> "Ordinal":
        if n < 0:
            raise ValueError("ordinals are non-negative")
        return cls(((ZERO, n),)) if n else ZERO

    # ordering ---------------------------------------------------------
    def _cmp(self, other: "Ordinal") -> int:
        for (e1, c1), (e2, c2) in zip(self.terms, other.terms):
            ce = e1._cmp(e2)
            if ce:
                return ce
            if c1 != c2:
                return -1 if c1 < c2 else 1
        return (len(self.terms) > len(other.terms)) - (len(self.terms) < len(other.terms))

    def __lt__(self, other: object) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) < 0

    def __eq__(self, other: object) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(self.terms)

    # arithmetic -------------------------------------------------------
    def __add__(self, other: object) -> "Ordinal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.terms:
            return self
        lead_e, lead_c = other.terms[0]
        kept = []
        for e, c in self.terms:
            if lead_e < e:
                kept.append((e, c))
            elif e == lead_e:
                kept.append((e, c + lead_c))
                return Ordinal(tuple(kept) + other.terms[1:])
            else:
                break
        return Ordinal(tuple(kept) + other.terms)

    def __radd__(self, other: object) -> "Ordinal":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + self

    def times(self, n: int) -> "Ordinal":
        """Right multiplication by a natural number."""
        if n < 0:
            raise ValueError("negative multiplier")
        if n == 0 or not self.terms:
            return ZERO
        (e, c), rest = self.terms[0], self.terms[1:]
        return Ordinal(((e, c * n),) + rest)

    # classification ---------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_finite(self) -> bool:
        return all(e.is_zero for e, _ in self.terms)

    @property
    def is_successor(self) -> bool:
        return bool(self.terms) and self.terms[-1][0].is_zero

    @property
    def is_limit(self) -> bool:
        return bool(self.terms) and not self.terms[-1][0].is_zero

    def predecessor(self) -> "Ordinal":
        if not self.is_successor:
            raise NotALimit(f"{self} has no predecessor")
        e, c = self.terms[-1]
        return Ordinal(self.terms[:-1] + (((e, c - 1),) if c > 1 else ()))

    def __int__(self) -> int:
        if not self.is_finite:
            raise TooLarge(f"{self} is infinite")
        return self.terms[0][1] if self.terms else 0

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            if e.is_zero:
                parts.append(str(c))
                continue
            if e == ONE:
                base = "w"
            elif e.is_finite:
                base = f"w^{int(e)}"
            else:
                base = f"w^({e})"
            parts.append(base if c == 1 else f"{base}*{c}")
        return "+".join(parts)

    def __repr__(self) -> str:
        return f"Ordinal({str(self)!r})"


def _coerce(x: object):
    if isinstance(x, Ordinal):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Ordinal.of(x)
    return NotImplemented


ZERO = Ordinal(())
ONE = Ordinal(((ZERO, 1),))
OMEGA = Ordinal(((ONE, 1),))


def omega_power(a: Ordinal | int) -> Ordinal:
    a = _coerce(a)
    return Ordinal(((a, 1),))


def add(a, b) -> Ordinal:
    return _coerce(a) + _coerce(b)


def compare(a, b) -> int:
    """-1, 0 or 1."""
    return _coerce(a)._cmp(_coerce(b))


def truncate(a: Ordinal | int, budget: int) -> int:
    """Evaluate the normal form as a polynomial in ``budget`` (omega -> budget)."""
    a = _coerce(a)
    if budget < 1:
        raise ValueError("budget must be positive")
    total = 0
    for e, c in a.terms:
        if not e.is_finite:
            raise TooLarge(f"exponent {e} is not finite")
        total += c * budget ** int(e)
    return total


def limit_schedule(alpha: Ordinal, eps_k: int, count: int) -> list[tuple[Ordinal, int]]:
    """Canonical ``(gamma_n, k_n)``, n = 1..count, with ``gamma_n + k_n -> alpha``.

    ``k_n = 2*eps_k + n``.  Writing ``alpha = delta + w^e``: for e = 1 every
    gamma_n is ``delta``; for finite e >= 2, ``gamma_n = delta + w^(e-1)*n``.
    """
    if not alpha.is_limit:
        raise NotALimit(f"{alpha} is not a limit ordinal")
    e, c = alpha.terms[-1]
    delta = Ordinal(alpha.terms[:-1] + (((e, c - 1),) if c > 1 else ()))
    out = []
    for n in range(1, count + 1):
        if e == ONE:
            gamma = delta
        elif e.is_finite:
            gamma = delta + omega_power(Ordinal.of(int(e) - 1)).times(n)
        else:
            raise TooLarge(f"limit schedule for exponent {e} not supported")
        out.append((gamma, 2 * eps_k + n))
    return out


_TOKEN = re.compile(r"\s*(?:(\d+)|(w)|(\^)|(\*)|(\+)|(\()|(\)))")


def parse(text: str) -> Ordinal:
    """Parse the ``w^2*3+w*1+5`` grammar (terms are summed as ordinals)."""
    tokens = []
    pos = 0
    s = text.strip()
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m or m.end() == pos:
            raise OrdinalSyntaxError(f"unexpected input at {pos} in {text!r}")
        kinds = ["num", "w", "^", "*", "+", "(", ")"]
        for kind, val in zip(kinds, m.groups()):
            if val is not None:
                tokens.append((kind, val))
        pos = m.end()
    if not tokens:
        raise OrdinalSyntaxError("empty ordinal")
    result, i = _parse_sum(tokens, 0)
    if i != len(tokens):
        raise OrdinalSyntaxError(f"trailing input in {text!r}")
    return result


def _parse_sum(tokens, i):
    total, i = _parse_term(tokens, i)
    while i < len(tokens) and tokens[i][0] == "+":
        t, i = _parse_term(tokens, i + 1)
        total = total + t
    return total, i


def _parse_term(tokens, i):
    if i >= len(tokens):
        raise OrdinalSyntaxError("expected a term")
    kind, val = tokens[i]
    if kind == "num":
        return Ordinal.of(int(val)), i + 1
    if kind != "w":
        raise OrdinalSyntaxError(f"unexpected {val!r}")
    i += 1
    exp = ONE
    if i < len(tokens) and tokens[i][0] == "^":
        i += 1
        if i < len(tokens) and tokens[i][0] == "num":
            exp = Ordinal.of(int(tokens[i][1]))
            i += 1
        elif i < len(tokens) and tokens[i][0] == "(":
            exp, i = _parse_sum(tokens, i + 1)
            if i >= len(tokens) or tokens[i][0] != ")":
                raise OrdinalSyntaxError("missing ')'")
            i += 1
        else:
            raise OrdinalSyntaxError("bad exponent")
    coeff = 1
    if i < len(tokens) and tokens[i][0] == "*":
        if i + 1 >= len(tokens) or tokens[i + 1][0] != "num":
            raise OrdinalSyntaxError("coefficient must be a natural number")
        coeff = int(tokens[i + 1][1])
        i += 2
    return omega_power(exp).times(coeff), i
