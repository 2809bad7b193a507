"""Exact rational scalars: parsing, canonical text form, compact binary packing.

Scalars are Python ints or ``fractions.Fraction`` values.  Integral values are
stored as plain ints: the numeric tower keeps equality and hashing consistent
between ``int`` and ``Fraction``, and int arithmetic is much cheaper inside
the enumeration loops.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

Scalar = Union[int, Fraction]


def to_fraction(value) -> Fraction:
    """Parse an exact rational from an int, Fraction, or 'p' / 'p/q' string."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rational scalars")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    raise TypeError(f"not an exact rational: {value!r}")


def rational_str(value: Scalar) -> str:
    """Canonical 'p/q' form, q >= 1 and lowest terms; pinned for JSON and hashing."""
    f = Fraction(value)
    return f"{f.numerator}/{f.denominator}"


def compact(value: Scalar) -> Scalar:
    """Collapse an integral Fraction to int; exact value is unchanged."""
    if isinstance(value, Fraction) and value.denominator == 1:
        return value.numerator
    return value


def _uvarint(out: bytearray, u: int) -> None:
    while True:
        b = u & 0x7F
        u >>= 7
        if u:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def _read_uvarint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise ValueError("truncated varint")
        b = buf[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            return result, pos
        shift += 7


def write_scalar(out: bytearray, value: Scalar) -> None:
    """Append one scalar as zigzag-varint numerator + varint denominator."""
    if isinstance(value, int):
        num, den = value, 1
    else:
        num, den = value.numerator, value.denominator
    zz = (num << 1) if num >= 0 else ((-num) << 1) - 1
    _uvarint(out, zz)
    _uvarint(out, den)


def read_scalar(buf: bytes, pos: int) -> tuple[Scalar, int]:
    zz, pos = _read_uvarint(buf, pos)
    den, pos = _read_uvarint(buf, pos)
    num = (zz >> 1) if not zz & 1 else -((zz + 1) >> 1)
    if den == 1:
        return num, pos
    return compact(Fraction(num, den)), pos


# Per-scalar encodings repeat heavily inside tensor sweeps; memoize them.
_FRAGMENTS: dict[Scalar, bytes] = {}
_FRAGMENT_CAP = 1 << 16


def scalar_fragment(value: Scalar) -> bytes:
    frag = _FRAGMENTS.get(value)
    if frag is None:
        out = bytearray()
        write_scalar(out, value)
        frag = bytes(out)
        if len(_FRAGMENTS) < _FRAGMENT_CAP:
            _FRAGMENTS[value] = frag
    return frag


def pack_scalars(values: Iterable[Scalar]) -> bytes:
    """Injective byte encoding of a scalar sequence (self-delimiting varints)."""
    return b"".join(map(scalar_fragment, values))


def unpack_scalars(buf: bytes, count: int, pos: int = 0) -> tuple[list[Scalar], int]:
    out = []
    for _ in range(count):
        v, pos = read_scalar(buf, pos)
        out.append(v)
    return out, pos
