"""Input validation helpers shared by the library, the CLI and the estimator."""

from __future__ import annotations

import numbers
from decimal import Decimal
from fractions import Fraction


def to_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, Decimal or decimal string.

    Binary floats are read through their shortest repr, so ``0.1`` becomes
    1/10 rather than the nearest double.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, (Decimal, str)):
        try:
            return Fraction(str(x).strip())
        except ValueError as exc:
            raise ValueError(f"cannot parse {x!r} as an exact decimal") from exc
    if isinstance(x, numbers.Real):
        return Fraction(repr(float(x)))
    raise TypeError(f"cannot interpret {type(x).__name__} as a rational")


def check_mesh_values(values) -> tuple[Fraction, ...]:
    """Positive, strictly increasing exact rationals."""
    xs = tuple(to_fraction(v) for v in values)
    if not xs:
        raise ValueError("mesh sequence is empty")
    if xs[0] <= 0:
        raise ValueError(f"mesh values must be positive, got X_1 = {xs[0]}")
    for i, (a, b) in enumerate(zip(xs, xs[1:]), start=1):
        if b <= a:
            raise ValueError(f"mesh must be strictly increasing: X_{i + 1} = {b} <= X_{i} = {a}")
    return xs


def check_dimension(n) -> int:
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise TypeError("dimension must be an integer")
    n = int(n)
    if n < 2:
        raise ValueError("dimension must be at least 2")
    return n


def check_int_vectors(vs, n=None, count=None) -> list[tuple[int, ...]]:
    """List of equal-length integer tuples, optionally of a given dimension and count."""
    from .exact_linalg import as_int_vector

    out = [as_int_vector(v) for v in vs]
    if count is not None and len(out) != count:
        raise ValueError(f"expected {count} vectors, got {len(out)}")
    dims = {len(v) for v in out}
    if len(dims) > 1:
        raise ValueError("vectors have different dimensions")
    if n is not None and dims and dims != {n}:
        raise ValueError(f"expected vectors of dimension {n}")
    return out


def check_precision(bits, cap: int) -> int:
    if isinstance(bits, bool) or not isinstance(bits, numbers.Integral) or bits < 16:
        raise ValueError("precision must be an integer number of bits >= 16")
    if bits > cap:
        raise ValueError(f"precision {bits} exceeds the cap {cap}")
    return int(bits)
