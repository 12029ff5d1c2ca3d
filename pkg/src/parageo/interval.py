"""Outward-rounded interval arithmetic at an explicit binary precision.

Every endpoint is a raw mpmath float; every operation rounds the lower end
toward -inf and the upper end toward +inf, so the true value of an
expression is always enclosed.  The kernels come from ``mpmath.libmp.libmpi``
and take the precision as an argument, so no global context is touched.
"""

from __future__ import annotations

import numbers
import os
from decimal import Decimal
from fractions import Fraction
from typing import Optional, Union

import mpmath
from mpmath.libmp import (
    fzero,
    from_int,
    from_rational,
    mpf_ge,
    mpf_gt,
    mpf_le,
    mpf_lt,
    mpf_sub,
    round_ceiling,
    to_rational,
)
from mpmath.libmp import libmpi

DEFAULT_PRECISION = 128
MAX_PRECISION = 4096

Real = Union[int, Fraction, "HPInterval"]


class Indeterminate(ArithmeticError):
    """A certified comparison could not be decided at the working precision."""


def max_precision() -> int:
    """Precision cap; ``PARAGEO_MAX_PRECISION`` overrides the default."""
    env = os.environ.get("PARAGEO_MAX_PRECISION")
    if env:
        return int(env)
    return MAX_PRECISION


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, (Decimal, str)):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def _raw_pair(x, prec: int):
    if isinstance(x, HPInterval):
        return x._v
    if isinstance(x, numbers.Integral):
        x = int(x)
        return (from_int(x, prec, "f"), from_int(x, prec, "c"))
    q = _to_fraction(x)
    p, d = q.numerator, q.denominator
    return (from_rational(p, d, prec, "f"), from_rational(p, d, prec, "c"))


def _prec_of(*xs) -> int:
    return max((x.prec for x in xs if isinstance(x, HPInterval)), default=DEFAULT_PRECISION)


class HPInterval:
    """Closed interval ``[lower, upper]`` carried at ``prec`` mantissa bits."""

    __slots__ = ("_v", "prec")

    def __init__(self, lower, upper=None, prec: int = DEFAULT_PRECISION):
        if upper is None:
            upper = lower
        lo = _raw_pair(lower, prec)[0]
        hi = _raw_pair(upper, prec)[1]
        if mpf_gt(lo, hi):
            raise ValueError("lower endpoint exceeds upper endpoint")
        self._v = (lo, hi)
        self.prec = prec

    @classmethod
    def _wrap(cls, v, prec: int) -> "HPInterval":
        out = cls.__new__(cls)
        out._v = v
        out.prec = prec
        return out

    @classmethod
    def exact(cls, x, prec: int = DEFAULT_PRECISION) -> "HPInterval":
        return cls(x, x, prec)

    # endpoints ---------------------------------------------------------

    @property
    def lower(self) -> mpmath.mpf:
        return mpmath.mpf(self._v[0])

    @property
    def upper(self) -> mpmath.mpf:
        return mpmath.mpf(self._v[1])

    def lower_fraction(self) -> Fraction:
        p, q = to_rational(self._v[0])
        return Fraction(int(p), int(q))

    def upper_fraction(self) -> Fraction:
        p, q = to_rational(self._v[1])
        return Fraction(int(p), int(q))

    @property
    def width(self) -> mpmath.mpf:
        return mpmath.mpf(mpf_sub(self._v[1], self._v[0], self.prec, round_ceiling))

    @property
    def mid(self) -> mpmath.mpf:
        return mpmath.mpf(libmpi.mpi_mid(self._v, self.prec))

    def rel_width(self) -> mpmath.mpf:
        """Width divided by the smallest magnitude in the interval (inf if it touches 0)."""
        if self.contains(0):
            return mpmath.inf
        m = min(abs(self.lower), abs(self.upper))
        return self.width / m

    def is_exact(self) -> bool:
        return self._v[0] == self._v[1]

    def with_prec(self, prec: int) -> "HPInterval":
        return HPInterval._wrap(self._v, prec)

    def __float__(self) -> float:
        return float(self.mid)

    def __repr__(self) -> str:
        return f"HPInterval([{mpmath.nstr(self.lower, 12)}, {mpmath.nstr(self.upper, 12)}], prec={self.prec})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, HPInterval):
            return NotImplemented
        return self._v == other._v

    def __hash__(self) -> int:
        return hash(self._v)

    # arithmetic --------------------------------------------------------

    def _binary(self, other, fn, swap=False):
        prec = _prec_of(self, other)
        a, b = self._v, _raw_pair(other, prec)
        if swap:
            a, b = b, a
        return HPInterval._wrap(fn(a, b, prec), prec)

    def __add__(self, other):
        return self._binary(other, libmpi.mpi_add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, libmpi.mpi_sub)

    def __rsub__(self, other):
        return self._binary(other, libmpi.mpi_sub, swap=True)

    def __mul__(self, other):
        return self._binary(other, libmpi.mpi_mul)

    __rmul__ = __mul__

    def __truediv__(self, other):
        prec = _prec_of(self, other)
        d = _raw_pair(other, prec)
        if mpf_le(d[0], fzero) and mpf_ge(d[1], fzero):
            raise ZeroDivisionError("divisor interval contains zero")
        return HPInterval._wrap(libmpi.mpi_div(self._v, d, prec), prec)

    def __rtruediv__(self, other):
        return HPInterval(other, prec=self.prec) / self

    def __neg__(self):
        return HPInterval._wrap(libmpi.mpi_neg(self._v, self.prec), self.prec)

    def __abs__(self):
        return HPInterval._wrap(libmpi.mpi_abs(self._v, self.prec), self.prec)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        return HPInterval._wrap(libmpi.mpi_pow_int(self._v, k, self.prec), self.prec)

    def sqrt(self) -> "HPInterval":
        if mpf_lt(self._v[0], fzero):
            raise ValueError("sqrt of an interval with negative part")
        return HPInterval._wrap(libmpi.mpi_sqrt(self._v, self.prec), self.prec)

    def log(self) -> "HPInterval":
        if mpf_le(self._v[0], fzero):
            raise ValueError("log of an interval that is not strictly positive")
        return HPInterval._wrap(libmpi.mpi_log(self._v, self.prec), self.prec)

    def exp(self) -> "HPInterval":
        return HPInterval._wrap(libmpi.mpi_exp(self._v, self.prec), self.prec)

    # set operations ------------------------------------------------------

    def contains(self, x) -> bool:
        if not isinstance(x, HPInterval):
            q = _to_fraction(x)
            return self.lower_fraction() <= q <= self.upper_fraction()
        a, b = x._v
        return mpf_le(self._v[0], a) and mpf_ge(self._v[1], b)

    def overlaps(self, other) -> bool:
        a, b = _raw_pair(other, self.prec)
        return mpf_le(self._v[0], b) and mpf_ge(self._v[1], a)

    def hull(self, other) -> "HPInterval":
        prec = _prec_of(self, other)
        a, b = _raw_pair(other, prec)
        lo = self._v[0] if mpf_le(self._v[0], a) else a
        hi = self._v[1] if mpf_ge(self._v[1], b) else b
        return HPInterval._wrap((lo, hi), prec)

    def max(self, other) -> "HPInterval":
        prec = _prec_of(self, other)
        a, b = _raw_pair(other, prec)
        lo = self._v[0] if mpf_ge(self._v[0], a) else a
        hi = self._v[1] if mpf_ge(self._v[1], b) else b
        return HPInterval._wrap((lo, hi), prec)

    def min(self, other) -> "HPInterval":
        prec = _prec_of(self, other)
        a, b = _raw_pair(other, prec)
        lo = self._v[0] if mpf_le(self._v[0], a) else a
        hi = self._v[1] if mpf_le(self._v[1], b) else b
        return HPInterval._wrap((lo, hi), prec)

    # three-valued comparisons: True / False when certain, None otherwise --

    def lt(self, other) -> Optional[bool]:
        a, b = _raw_pair(other, self.prec)
        if mpf_lt(self._v[1], a):
            return True
        if mpf_ge(self._v[0], b):
            return False
        return None

    def le(self, other) -> Optional[bool]:
        a, b = _raw_pair(other, self.prec)
        if mpf_le(self._v[1], a):
            return True
        if mpf_gt(self._v[0], b):
            return False
        return None

    def gt(self, other) -> Optional[bool]:
        a, b = _raw_pair(other, self.prec)
        if mpf_gt(self._v[0], b):
            return True
        if mpf_le(self._v[1], a):
            return False
        return None

    def ge(self, other) -> Optional[bool]:
        a, b = _raw_pair(other, self.prec)
        if mpf_ge(self._v[0], b):
            return True
        if mpf_lt(self._v[1], a):
            return False
        return None


def decided(flag: Optional[bool], what: str = "comparison") -> bool:
    """Unwrap a three-valued comparison, raising ``Indeterminate`` on ``None``."""
    if flag is None:
        raise Indeterminate(f"{what} is undecided at the current precision")
    return flag


def pi(prec: int = DEFAULT_PRECISION) -> HPInterval:
    return HPInterval._wrap(libmpi.mpi_pi(prec), prec)


def log2(prec: int = DEFAULT_PRECISION) -> HPInterval:
    return HPInterval(2, prec=prec).log()


def log4(prec: int = DEFAULT_PRECISION) -> HPInterval:
    return HPInterval(4, prec=prec).log()


def asin(x: HPInterval) -> HPInterval:
    """Arcsine on ``[0, 1]`` via ``atan2(x, sqrt(1 - x^2))``."""
    if x.lt(0) is not False or x.gt(1) is not False:
        raise ValueError("asin is only provided on [0, 1]")
    c = (1 - x * x).max(0).sqrt()
    return HPInterval._wrap(libmpi.mpi_atan2(x._v, c._v, x.prec), x.prec)


def sqrt_rational(q, prec: int = DEFAULT_PRECISION) -> HPInterval:
    """Enclosure of the square root of a nonnegative int or Fraction."""
    q = _to_fraction(q)
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return HPInterval(0, prec=prec)
    return HPInterval(q, prec=prec).sqrt()


def log_rational(q, prec: int = DEFAULT_PRECISION) -> HPInterval:
    q = _to_fraction(q)
    if q <= 0:
        raise ValueError("log of a nonpositive rational")
    return HPInterval(q, prec=prec).log()


def as_interval(x: Real, prec: int = DEFAULT_PRECISION) -> HPInterval:
    if isinstance(x, HPInterval):
        return x
    return HPInterval(x, prec=prec)


def interval_max(xs) -> HPInterval:
    xs = list(xs)
    out = xs[0] if isinstance(xs[0], HPInterval) else as_interval(xs[0], _prec_of(*xs))
    for x in xs[1:]:
        out = out.max(x)
    return out


def sort_intervals(xs) -> list[HPInterval]:
    """Enclose the order statistics of a list of intervals.

    The k-th smallest of any choice of points lies between the k-th smallest
    lower end and the k-th smallest upper end.
    """
    xs = list(xs)
    prec = _prec_of(*xs)
    los = sorted((x._v[0] for x in xs), key=lambda r: mpmath.mpf(r))
    his = sorted((x._v[1] for x in xs), key=lambda r: mpmath.mpf(r))
    return [HPInterval._wrap((a, b), prec) for a, b in zip(los, his)]
