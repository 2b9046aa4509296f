"""
Exact rational scalars and the two sequence representations used
throughout topolab.

- FinSeq: finitely supported rational sequences, stored as a sorted
  tuple of (index, nonzero value) pairs.
- TailSeq: eventually constant rational sequences, stored as a prefix
  of explicit coordinates and the constant value of every later
  coordinate.

Both are immutable and kept in canonical form, so equality is
structural.
"""

import re
import sys
from dataclasses import dataclass
from fractions import Fraction

from topolab.errors import PreconditionError, RepresentationError, SchemaError

if hasattr(sys, "set_int_max_str_digits"):
    # subsum indices outgrow the default limit on int <-> str conversion
    sys.set_int_max_str_digits(0)

ZERO = Fraction(0)

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def parse_rational(text):
    """
    Parse rational syntax "p/q" or "p" into a Fraction.

    Decimal and exponent notation are rejected so that no float ever
    enters a computation.

    Examples:
    - "5/3" -> Fraction(5, 3)
    - "-2" -> Fraction(-2, 1)
    - "0.5" -> PreconditionError
    """
    if not isinstance(text, str):
        raise PreconditionError(f"Expected rational string, got {type(text).__name__}")
    match = _RATIONAL.match(text)
    if not match:
        raise PreconditionError(f"Not a rational number: '{text}' (use p/q)")
    numerator = int(match.group(1))
    denominator = int(match.group(2)) if match.group(2) is not None else 1
    if denominator == 0:
        raise PreconditionError(f"Zero denominator in '{text}'")
    return Fraction(numerator, denominator)


def format_rational(value):
    """Render a rational as "p/q"; the denominator is always printed."""
    value = as_rational(value)
    return f"{value.numerator}/{value.denominator}"


def as_rational(value):
    """Coerce an int, Fraction or rational string to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise PreconditionError("Booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise PreconditionError(f"Cannot use {type(value).__name__} as an exact rational")


@dataclass(frozen=True)
class FinSeq:
    """A finitely supported rational sequence."""

    entries: tuple = ()

    def __post_init__(self):
        support = {}
        for index, value in self.entries:
            if not isinstance(index, int) or isinstance(index, bool) or index < 0:
                raise PreconditionError(f"Sequence index must be a natural number, got {index!r}")
            if index in support:
                raise PreconditionError(f"Duplicate sequence index {index}")
            support[index] = as_rational(value)
        canonical = tuple(sorted((n, v) for n, v in support.items() if v != 0))
        object.__setattr__(self, "entries", canonical)

    @classmethod
    def from_mapping(cls, mapping):
        return cls(tuple(mapping.items()))

    @classmethod
    def zero(cls):
        return cls()

    def __getitem__(self, index):
        for n, value in self.entries:
            if n == index:
                return value
            if n > index:
                break
        return ZERO

    @property
    def support(self):
        return tuple(n for n, _ in self.entries)

    def as_dict(self):
        return dict(self.entries)

    def is_zero(self):
        return not self.entries

    def values(self):
        return [value for _, value in self.entries]

    def __add__(self, other):
        if not isinstance(other, FinSeq):
            return NotImplemented
        total = dict(self.entries)
        for n, value in other.entries:
            total[n] = total.get(n, ZERO) + value
        return FinSeq(tuple(total.items()))

    def __neg__(self):
        return FinSeq(tuple((n, -value) for n, value in self.entries))

    def __sub__(self, other):
        if not isinstance(other, FinSeq):
            return NotImplemented
        return self + (-other)

    def scale(self, factor):
        factor = as_rational(factor)
        return FinSeq(tuple((n, value * factor) for n, value in self.entries))


@dataclass(frozen=True)
class TailSeq:
    """An eventually constant rational sequence: prefix, then tail forever."""

    prefix: tuple = ()
    tail: Fraction = ZERO

    def __post_init__(self):
        prefix = [as_rational(value) for value in self.prefix]
        tail = as_rational(self.tail)
        # Minimal prefix: fold trailing entries equal to the tail into it
        while prefix and prefix[-1] == tail:
            prefix.pop()
        object.__setattr__(self, "prefix", tuple(prefix))
        object.__setattr__(self, "tail", tail)

    def __getitem__(self, index):
        if index < len(self.prefix):
            return self.prefix[index]
        return self.tail

    @property
    def length(self):
        """Number of explicit coordinates (the L of the canonical form)."""
        return len(self.prefix)

    def is_zero(self):
        return not self.prefix and self.tail == 0

    def values(self):
        return list(self.prefix) + [self.tail]

    def __add__(self, other):
        if not isinstance(other, TailSeq):
            return NotImplemented
        width = max(self.length, other.length)
        prefix = tuple(self[n] + other[n] for n in range(width))
        return TailSeq(prefix, self.tail + other.tail)

    def __neg__(self):
        return TailSeq(tuple(-value for value in self.prefix), -self.tail)

    def __sub__(self, other):
        if not isinstance(other, TailSeq):
            return NotImplemented
        return self + (-other)

    def scale(self, factor):
        factor = as_rational(factor)
        return TailSeq(tuple(value * factor for value in self.prefix), self.tail * factor)


def unit(index, factor=1):
    """The unit vector e_index scaled by factor, as a FinSeq."""
    return FinSeq(((index, as_rational(factor)),))


def _same_kind(a, b):
    if type(a) is not type(b) or not isinstance(a, (FinSeq, TailSeq)):
        raise RepresentationError(
            f"Cannot combine {type(a).__name__} with {type(b).__name__}")


def seq_add(a, b):
    """Coordinatewise exact sum of two sequences of the same representation."""
    _same_kind(a, b)
    return a + b


def seq_sub(a, b):
    _same_kind(a, b)
    return a - b


def sup_norm(a):
    """max |a(n)| over all coordinates (for a TailSeq the tail counts once)."""
    if isinstance(a, FinSeq):
        return max((abs(value) for value in a.values()), default=ZERO)
    if isinstance(a, TailSeq):
        return max(abs(value) for value in a.values())
    raise RepresentationError(f"Not a sequence: {type(a).__name__}")


def l1_norm(a):
    """Sum of |a(n)|; a TailSeq only qualifies when its tail is zero."""
    if isinstance(a, TailSeq):
        if a.tail != 0:
            raise RepresentationError("l1 norm of a sequence with nonzero tail is infinite")
        return sum((abs(value) for value in a.prefix), ZERO)
    if isinstance(a, FinSeq):
        return sum((abs(value) for value in a.values()), ZERO)
    raise RepresentationError(f"Not a sequence: {type(a).__name__}")


def seq_to_json(a):
    if isinstance(a, FinSeq):
        return {"support": {str(n): format_rational(v) for n, v in a.entries}}
    if isinstance(a, TailSeq):
        return {"prefix": [format_rational(v) for v in a.prefix],
                "tail": format_rational(a.tail)}
    raise RepresentationError(f"Not a sequence: {type(a).__name__}")


def seq_from_json(data):
    """
    Rebuild a sequence from its JSON form.

    Examples:
    - {"support": {"1": "1/2"}} -> FinSeq with a(1) = 1/2
    - {"prefix": ["0"], "tail": "1/2"} -> TailSeq (0, 1/2, 1/2, ...)
    """
    if not isinstance(data, dict):
        raise SchemaError(f"Sequence must be a JSON object, got {type(data).__name__}")
    if set(data) == {"support"} and isinstance(data["support"], dict):
        entries = []
        for key, value in data["support"].items():
            try:
                index = int(key)
            except (TypeError, ValueError):
                raise SchemaError(f"Sequence index must be an integer, got '{key}'") from None
            entries.append((index, parse_rational(str(value))))
        return FinSeq(tuple(entries))
    if set(data) == {"prefix", "tail"} and isinstance(data["prefix"], list):
        return TailSeq(tuple(parse_rational(str(v)) for v in data["prefix"]),
                       parse_rational(str(data["tail"])))
    raise SchemaError(f"Unrecognized sequence object with keys {sorted(data)}")
