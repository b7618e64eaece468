"""Complex values carried with a separated decimal exponent.

Kernel entries scale like exp of a large action difference, so raw doubles
over- or underflow long before the quantities of interest (products, sums)
do. A ScaledComplex stores value = mantissa * 10**exp10 with the mantissa
magnitude normalized into [1, 10).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_LN10 = math.log(10.0)


@dataclass(frozen=True)
class ScaledComplex:
    mantissa: complex
    exp10: int = 0

    @staticmethod
    def zero():
        return ScaledComplex(0j, 0)

    @classmethod
    def from_complex(cls, value):
        value = complex(value)
        if value == 0:
            return cls.zero()
        return cls(value, 0).normalized()

    @classmethod
    def from_ln_scale(cls, mantissa, ln_scale):
        """Value mantissa * exp(ln_scale) with a real natural-log scale."""
        mantissa = complex(mantissa)
        if mantissa == 0:
            return cls.zero()
        d = ln_scale / _LN10
        e = math.floor(d)
        return cls(mantissa * 10.0 ** (d - e), int(e)).normalized()

    def normalized(self):
        m = self.mantissa
        if m == 0:
            return ScaledComplex.zero()
        shift = math.floor(math.log10(abs(m)))
        if shift == 0:
            return self
        return ScaledComplex(m * 10.0 ** (-shift), self.exp10 + shift)

    def to_complex(self):
        """Plain complex value; may overflow to inf for extreme exponents."""
        return self.mantissa * 10.0 ** self.exp10

    def log10_abs(self):
        if self.mantissa == 0:
            return -math.inf
        return math.log10(abs(self.mantissa)) + self.exp10

    def __mul__(self, other):
        other = _coerce(other)
        return ScaledComplex(self.mantissa * other.mantissa,
                             self.exp10 + other.exp10).normalized()

    __rmul__ = __mul__

    def __add__(self, other):
        other = _coerce(other)
        if self.mantissa == 0:
            return other
        if other.mantissa == 0:
            return self
        hi, lo = (self, other) if self.exp10 >= other.exp10 else (other, self)
        shift = lo.exp10 - hi.exp10
        if shift < -400:
            return hi
        return ScaledComplex(hi.mantissa + lo.mantissa * 10.0 ** shift,
                             hi.exp10).normalized()

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return self + ScaledComplex(-other.mantissa, other.exp10)

    def __abs__(self):
        return abs(self.mantissa) * 10.0 ** self.exp10

    def rel_diff(self, other):
        """|self - other| / max(|self|, |other|) with exponent alignment."""
        other = _coerce(other)
        diff = self - other
        big = max(self.log10_abs(), other.log10_abs())
        if big == -math.inf:
            return 0.0
        d = diff.log10_abs()
        return 10.0 ** (d - big) if d > -math.inf else 0.0


def _coerce(value):
    if isinstance(value, ScaledComplex):
        return value
    return ScaledComplex.from_complex(value)
