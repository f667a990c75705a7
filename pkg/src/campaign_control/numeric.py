"""Exact rational helpers.

All opinion values are :class:`fractions.Fraction` instances.  Fractions are
reduced on construction and after every arithmetic operation, which is the
canonical form the rest of the package relies on.
"""

from __future__ import annotations

import re
from fractions import Fraction

Rational = Fraction

_DECIMAL = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)")


class ParseError(ValueError):
    """Raised for malformed decimal or rational literals."""

    def __init__(self, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"malformed number {text!r}: unexpected character at position {position}")


def _first_bad_position(text: str) -> int:
    pos = 0
    if pos < len(text) and text[pos] in "+-":
        pos += 1
    seen_digit = seen_dot = False
    while pos < len(text):
        ch = text[pos]
        if ch.isdigit() and ch.isascii():
            seen_digit = True
        elif ch == "." and not seen_dot:
            seen_dot = True
        else:
            return pos
        pos += 1
    # ran off the end without a digit ("", "+", ".")
    return pos if not seen_digit else len(text)


def parse_decimal(text: str) -> Fraction:
    """Parse a plain decimal literal such as ``"-0.125"`` exactly.

    Exponents, underscores and whitespace are rejected.
    """
    if not _DECIMAL.fullmatch(text):
        raise ParseError(text, _first_bad_position(text))
    sign = -1 if text.startswith("-") else 1
    body = text.lstrip("+-")
    whole, _, frac = body.partition(".")
    numerator = int(whole or "0") * 10 ** len(frac) + int(frac or "0")
    return Fraction(sign * numerator, 10 ** len(frac))


def to_decimal(value: Fraction, digits: int) -> str:
    """Truncated decimal expansion of ``value`` with exactly ``digits`` fractional digits."""
    if digits < 1:
        raise ValueError("digits must be >= 1")
    value = Fraction(value)
    sign = "-" if value < 0 else ""
    num, den = abs(value.numerator), value.denominator
    scaled = num * 10**digits // den
    whole, frac = divmod(scaled, 10**digits)
    if sign and scaled == 0:
        sign = ""
    return f"{sign}{whole}.{frac:0{digits}d}"


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"``, an integer, or a decimal literal."""
    text = text.strip()
    if "/" in text:
        p, _, q = text.partition("/")
        if not re.fullmatch(r"[+-]?\d+", p.strip()) or not re.fullmatch(r"\d+", q.strip()):
            raise ParseError(text, text.index("/"))
        den = int(q)
        if den == 0:
            raise ZeroDivisionError(f"zero denominator in {text!r}")
        return Fraction(int(p), den)
    return parse_decimal(text)


def format_rational(value: Fraction) -> str:
    """Serialize as ``"p/q"`` (``"p"`` for integers)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def round_significant(value: Fraction, digits: int) -> Fraction:
    """Round to ``digits`` significant decimal digits, half away from zero, exactly."""
    value = Fraction(value)
    if value == 0:
        return value
    sign = -1 if value < 0 else 1
    a = abs(value)
    # exponent e with 10**e <= a < 10**(e+1)
    e = len(str(a.numerator // a.denominator)) - 1 if a >= 1 else 0
    if a < 1:
        e = -1
        while a * 10 ** (-e) < 1:
            e -= 1
    scale = Fraction(10) ** (digits - 1 - e)
    q, rem = divmod(a * scale, 1)
    if rem >= Fraction(1, 2):
        q += 1
    return sign * Fraction(q) / scale


def _terminating_digits(den: int) -> int | None:
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    return max(twos, fives) if den == 1 else None


def format_decimal(value: Fraction, significant: int = 17) -> str:
    """Decimal text for ``value``: exact when it terminates within ``significant`` digits, else rounded."""
    value = Fraction(value)
    digits = _terminating_digits(value.denominator)
    if digits is None or len(str(abs(value.numerator))) > significant:
        value = round_significant(value, significant)
        digits = _terminating_digits(value.denominator)
    if digits == 0:
        return str(value.numerator)
    sign = "-" if value < 0 else ""
    return sign + to_decimal(abs(value), digits)
