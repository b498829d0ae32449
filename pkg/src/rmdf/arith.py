"""Exact rational helpers.

``Rational`` is :class:`fractions.Fraction`: arbitrary-precision, always
normalized, sign carried by the numerator.
"""

from fractions import Fraction
from functools import reduce
from math import floor, gcd, lcm

Rational = Fraction


def rat(num, den=1):
    """Build a normalized rational; ``den`` must be nonzero."""
    if den == 0:
        raise ZeroDivisionError("rational with zero denominator")
    return Fraction(num, den)


def parse_rational(text):
    """Parse ``p``, ``p/q`` or a decimal literal such as ``0.12``."""
    text = text.strip()
    if not text or any(c.isspace() for c in text):
        raise ValueError(f"malformed rational literal {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"malformed rational literal {text!r}") from None


def _positive(values):
    values = [Fraction(v) for v in values]
    if not values:
        raise ValueError("empty set of rationals")
    if any(v <= 0 for v in values):
        raise ValueError("rational gcd/lcm needs strictly positive values")
    return values


def rat_gcd_set(values):
    """Largest g such that every value is an integer multiple of g."""
    values = _positive(values)
    return Fraction(reduce(gcd, (v.numerator for v in values)),
                    reduce(lcm, (v.denominator for v in values)))


def rat_lcm_set(values):
    """Smallest L such that L / v is a positive integer for every value."""
    values = _positive(values)
    return Fraction(reduce(lcm, (v.numerator for v in values)),
                    reduce(gcd, (v.denominator for v in values)))


def ceil_rat(x):
    return -floor(-x)


def decimal_str(x, places=2):
    """Round-half-up (away from zero on ties) decimal rendering, display only."""
    if x is None:
        return ""
    x = Fraction(x)
    scale = 10 ** places
    mag = floor(abs(x) * scale + Fraction(1, 2))
    sign = "-" if x < 0 and mag else ""
    whole, frac = divmod(mag, scale)
    if places == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{places}d}"


def rat_str(x):
    """Canonical text form: ``p`` or ``p/q``."""
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def rat_json(x):
    if x is None:
        return None
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator, "decimal": decimal_str(x)}
