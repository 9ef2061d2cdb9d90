"""Small exact-arithmetic toolkit shared by the measure families.

Values are either :class:`fractions.Fraction` (exact mode) or ``float``.
Any arithmetic mixing the two degrades to ``float``, which is what we want:
exactness is kept only when every input is exact.
"""

from __future__ import annotations

import math
import numbers
from fractions import Fraction
from typing import Sequence, Union

Num = Union[Fraction, float]


class NumberParseError(ValueError):
    pass


def parse_number(value, where: str = "value") -> Num:
    """Rational strings (``"1/3"``, ``"2"``) parse exactly; bare numbers as floats."""
    if isinstance(value, bool):
        raise NumberParseError(f"{where}: booleans are not numbers")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise NumberParseError(f"{where}: cannot parse {value!r} as a rational 'n/d'") from None
    if isinstance(value, numbers.Real):
        x = float(value)
        if not math.isfinite(x):
            raise NumberParseError(f"{where}: non-finite number {value!r}")
        return x
    raise NumberParseError(f"{where}: expected a number or 'n/d' string, got {type(value).__name__}")


def as_exact_or_float(value) -> Num:
    """Keep ints/Fractions exact, everything else becomes a float."""
    if isinstance(value, (Fraction, int)) and not isinstance(value, bool):
        return Fraction(value)
    return float(value)


def is_exact(values) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def encode_number(x) -> Union[str, float, int]:
    """JSON form: Fractions as ``"n/d"`` strings, floats unchanged."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return x
    return float(x)


def decode_number(x) -> Num:
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int) and not isinstance(x, bool):
        return x
    return float(x)


def fmt_number(x) -> str:
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x} (~{float(x):.10g})"
    return f"{float(x):.10g}"


def matmul(a: Sequence[Sequence[Num]], b: Sequence[Sequence[Num]]) -> list[list[Num]]:
    n, m = len(a), len(b[0])
    inner = len(b)
    return [[sum((a[i][t] * b[t][j] for t in range(inner)), start=0 * a[i][0]) for j in range(m)] for i in range(n)]


def solve(a: Sequence[Sequence[Num]], b: Sequence[Num]) -> list[Num]:
    """Gaussian elimination with pivoting on the first nonzero entry (exact for Fractions)."""
    n = len(a)
    m = [list(row) + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        if not isinstance(m[piv][col], Fraction):
            piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / p
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def det(a: Sequence[Sequence[Num]]) -> Num:
    """Determinant by fraction-preserving elimination."""
    n = len(a)
    if n == 0:
        return Fraction(1)
    m = [list(row) for row in a]
    sign = 1
    result = None
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return 0 * m[0][0]
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            sign = -sign
        p = m[col][col]
        result = p if result is None else result * p
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] / p
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return sign * result


def rank(a: Sequence[Sequence[Fraction]]) -> int:
    """Exact rank of a rational matrix."""
    m = [list(row) for row in a]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    r = 0
    for col in range(cols):
        piv = next((i for i in range(r, rows) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(r + 1, rows):
            if m[i][col] != 0:
                f = m[i][col] / m[r][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        r += 1
        if r == rows:
            break
    return r
