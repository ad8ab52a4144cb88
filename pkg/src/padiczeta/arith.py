"""Exact scalar arithmetic: p-adic valuations, additive characters as exact
roots of unity, cyclotomic sums with decidable equality, and symbolic
monomials in the Mellin variable s.

The additive character psi of Q_p is the standard unramified one: trivial on
Z_p, and on p^{-k} Z_p it takes the value exp(2*pi*i*frac_part(x)), where
frac_part(x) is the p-adic fractional part (a rational in [0,1) with p-power
denominator).  All character values therefore live in cyclotomic rings of
p-power order; we nevertheless allow arbitrary orders, because extending a
congruence character from a principal congruence quotient to its normalizer
can require roots of unity of order prime to p (the centralizer of a cyclic
matrix over F_p can have order p^N - 1).

Equality of cyclotomic values is decided by reduction modulo the cyclotomic
polynomial Phi_n, so `cyc_eq` is exact -- never a numeric comparison.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Rat = Union[int, Fraction]


# ---------------------------------------------------------------------------
# valuations and fractional parts
# ---------------------------------------------------------------------------

def valuation(x: Rat, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ZeroDivisionError("valuation of zero")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def norm(x: Rat, p: int) -> Fraction:
    """p-adic absolute value |x| = p^(-v_p(x)); |0| = 0."""
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    return Fraction(p) ** (-valuation(x, p))


def frac_part(x: Rat, p: int) -> Fraction:
    """p-adic fractional part: the unique r in [0,1) with p-power denominator
    such that x - r is p-integral."""
    x = Fraction(x)
    den = x.denominator
    k = 0
    while den % p == 0:
        den //= p
        k += 1
    if k == 0:
        return Fraction(0)
    pk = p ** k
    # x = num / (den * p^k) with den prime to p; invert den mod p^k.
    r = (x.numerator * pow(den, -1, pk)) % pk
    return Fraction(r, pk)


@dataclass(frozen=True)
class DepthContext:
    """The prime p and depth m, with the derived ideal q = (p^m) and the
    fixed translation parameter Ttilde = p^(-2m).

    T = p^(2m) is the cardinality of o/q^2; psi_T(x) := psi(Ttilde * x) has
    conductor exactly q^2.  Ttilde is pinned to the pure power p^(-2m) (no
    unit factor) so that every character value in the library is determined
    by (p, m) alone.
    """

    p: int
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("depth m must be >= 1")
        if self.p < 2 or any(self.p % d == 0 for d in range(2, int(self.p ** 0.5) + 1)):
            raise ValueError(f"p = {self.p} is not prime")

    @property
    def q(self) -> int:
        return self.p ** self.m

    @property
    def T(self) -> int:
        return self.p ** (2 * self.m)

    @property
    def Ttilde(self) -> Fraction:
        return Fraction(1, self.T)

    @property
    def sqrtT(self) -> int:
        """T^(1/2) = p^m, an integer; the natural unit for Mellin exponents."""
        return self.q


# ---------------------------------------------------------------------------
# cyclotomic values
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Coefficients (low to high) of the n-th cyclotomic polynomial, computed
    by dividing x^n - 1 by the product of Phi_d over proper divisors d."""
    if n == 1:
        return (-1, 1)
    poly = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for d in range(1, n):
        if n % d == 0:
            poly = _poly_exact_div(poly, list(cyclotomic_poly(d)))
    return tuple(poly)


def _poly_exact_div(num: list[int], den: list[int]) -> list[int]:
    """Exact division of integer polynomials (coefficients low to high)."""
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    for i in range(len(out) - 1, -1, -1):
        c, r = divmod(num[i + len(den) - 1], den[-1])
        if r:
            raise ArithmeticError("inexact polynomial division")
        out[i] = c
        for j, dj in enumerate(den):
            num[i + j] -= c * dj
    if any(num):
        raise ArithmeticError("inexact polynomial division")
    return out


class CycValue:
    """An exact element of Q(zeta_n): a rational linear combination of powers
    of a primitive n-th root of unity.

    Coefficients are stored on exponents 0..n-1 and reduced modulo the
    cyclotomic polynomial Phi_n only when equality/zero/rationality is
    queried, keeping addition-heavy workloads cheap.  Values of different
    orders promote to the lcm.
    """

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int = 1, coeffs: dict | None = None):
        if order < 1:
            raise ValueError("order must be positive")
        self.order = order
        cleaned: dict[int, Fraction] = {}
        if coeffs:
            for e, c in coeffs.items():
                c = Fraction(c)
                if c != 0:
                    e %= order
                    cleaned[e] = cleaned.get(e, Fraction(0)) + c
        self.coeffs = {e: c for e, c in cleaned.items() if c != 0}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def rational(c: Rat) -> "CycValue":
        return CycValue(1, {0: Fraction(c)})

    @staticmethod
    def root_of_unity(order: int, exponent: int) -> "CycValue":
        g = math.gcd(exponent % order, order) if order > 1 else 1
        # keep the smallest faithful order so unrelated levels do not bloat
        return CycValue(order // g if order > 1 else 1,
                        {(exponent % order) // g if order > 1 else 0: Fraction(1)})

    one = None  # set below
    zero = None

    # -- ring structure ----------------------------------------------------

    def _promote(self, order: int) -> "CycValue":
        if order == self.order:
            return self
        assert order % self.order == 0
        k = order // self.order
        return CycValue(order, {e * k: c for e, c in self.coeffs.items()})

    def __add__(self, other) -> "CycValue":
        other = _as_cyc(other)
        n = _lcm(self.order, other.order)
        a, b = self._promote(n), other._promote(n)
        out = dict(a.coeffs)
        for e, c in b.coeffs.items():
            out[e] = out.get(e, Fraction(0)) + c
        return CycValue(n, out)

    __radd__ = __add__

    def __neg__(self) -> "CycValue":
        return CycValue(self.order, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other) -> "CycValue":
        return self + (-_as_cyc(other))

    def __rsub__(self, other) -> "CycValue":
        return _as_cyc(other) + (-self)

    def __mul__(self, other) -> "CycValue":
        if isinstance(other, (int, Fraction)):
            return CycValue(self.order,
                            {e: c * other for e, c in self.coeffs.items()})
        other = _as_cyc(other)
        n = _lcm(self.order, other.order)
        a, b = self._promote(n), other._promote(n)
        out: dict[int, Fraction] = {}
        for e1, c1 in a.coeffs.items():
            for e2, c2 in b.coeffs.items():
                e = (e1 + e2) % n
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return CycValue(n, out)

    __rmul__ = __mul__

    def conj(self) -> "CycValue":
        """Complex conjugation: zeta -> zeta^(-1)."""
        return CycValue(self.order, {-e: c for e, c in self.coeffs.items()})

    def abs_sq(self) -> "CycValue":
        return self * self.conj()

    # -- decidable equality ------------------------------------------------

    def reduced(self) -> tuple[Fraction, ...]:
        """Canonical form: remainder modulo Phi_order, degree < phi(order)."""
        phi = cyclotomic_poly(self.order)
        deg = len(phi) - 1
        poly = [Fraction(0)] * self.order
        for e, c in self.coeffs.items():
            poly[e] += c
        # long division by the monic Phi_order
        for i in range(len(poly) - 1, deg - 1, -1):
            c = poly[i]
            if c:
                for j, pj in enumerate(phi):
                    poly[i - deg + j] -= c * pj
        return tuple(poly[:deg])

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.reduced())

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, CycValue)):
            return (self - other).is_zero()
        return NotImplemented

    def __hash__(self):
        # equal values can be stored at different orders with different
        # reduced forms, so only value-invariant data may enter the hash
        r = self.as_rational()
        return hash(r) if r is not None else hash("cyc-irrational")

    def as_rational(self) -> Fraction | None:
        """The value as an exact rational, or None if irrational."""
        red = self.reduced()
        if any(c != 0 for c in red[1:]):
            return None
        return red[0] if red else Fraction(0)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        red = self.reduced()
        return {
            "order": self.order,
            "coeffs": {str(e): f"{c.numerator}/{c.denominator}"
                       for e, c in enumerate(red) if c != 0},
        }

    def __repr__(self):
        if not self.coeffs:
            return "CycValue(0)"
        terms = " + ".join(f"{c}*z{self.order}^{e}"
                           for e, c in sorted(self.coeffs.items()))
        return f"CycValue({terms})"


CycValue.one = CycValue(1, {0: Fraction(1)})
CycValue.zero = CycValue(1, {})


def _as_cyc(x) -> CycValue:
    if isinstance(x, CycValue):
        return x
    if isinstance(x, (int, Fraction)):
        return CycValue.rational(x)
    raise TypeError(f"cannot coerce {type(x)} to CycValue")


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def cyc_add(a: CycValue, b: CycValue) -> CycValue:
    return a + b


def cyc_mul(a: CycValue, b: CycValue) -> CycValue:
    return a * b


def cyc_eq(a: CycValue, b: CycValue) -> bool:
    return a == b


def cyc_is_zero(a: CycValue) -> bool:
    return a.is_zero()


# ---------------------------------------------------------------------------
# additive characters
# ---------------------------------------------------------------------------

def psi(x: Rat, p: int) -> CycValue:
    """The standard unramified additive character of Q_p: psi(x) is the root
    of unity e(frac_part(x)); trivial exactly on Z_p."""
    r = frac_part(x, p)
    if r == 0:
        return CycValue.one
    return CycValue.root_of_unity(r.denominator, r.numerator)


def psi_T(x: Rat, ctx: DepthContext) -> CycValue:
    """psi_T(x) = psi(Ttilde * x); conductor exactly q^2 = p^(2m)."""
    return psi(Fraction(x) * ctx.Ttilde, ctx.p)


# ---------------------------------------------------------------------------
# square roots of rationals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SqrtRational:
    """sign * sqrt(radicand) for an exact positive rational radicand.

    Only multiplication and positivity are supported -- the zeta pipeline
    never needs to add square roots.  Rational c embeds as sign(c)*sqrt(c^2).
    """

    sign: int
    radicand: Fraction

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if self.sign == 0 and self.radicand != 0:
            raise ValueError("zero must have zero radicand")
        if self.radicand < 0:
            raise ValueError("radicand must be nonnegative")

    @staticmethod
    def of_rational(c: Rat) -> "SqrtRational":
        c = Fraction(c)
        s = (c > 0) - (c < 0)
        return SqrtRational(s, c * c)

    @staticmethod
    def sqrt(r: Rat) -> "SqrtRational":
        r = Fraction(r)
        if r < 0:
            raise ValueError("negative radicand")
        return SqrtRational(1 if r > 0 else 0, r)

    def __mul__(self, other) -> "SqrtRational":
        if isinstance(other, (int, Fraction)):
            other = SqrtRational.of_rational(other)
        return SqrtRational(self.sign * other.sign,
                            self.radicand * other.radicand
                            if self.sign * other.sign else Fraction(0))

    __rmul__ = __mul__

    def inverse(self) -> "SqrtRational":
        if self.sign == 0:
            raise ZeroDivisionError
        return SqrtRational(self.sign, 1 / self.radicand)

    def is_positive(self) -> bool:
        return self.sign > 0

    def squared(self) -> Fraction:
        return self.radicand if self.sign else Fraction(0)

    def as_rational(self) -> Fraction | None:
        """Exact rational value if the radicand is a perfect square."""
        num, den = self.radicand.numerator, self.radicand.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            return Fraction(self.sign) * Fraction(rn, rd)
        return None

    def __repr__(self):
        s = {1: "", -1: "-", 0: "0*"}[self.sign]
        return f"{s}sqrt({self.radicand})"


# ---------------------------------------------------------------------------
# Mellin monomials
# ---------------------------------------------------------------------------

class MellinMonomial:
    """scalar * T^(sum_i exponents[i]*s_i / 2) * T^(offset/2).

    Exponents are integers in units of T^(1/2) per coordinate of the Mellin
    variable s = (s_1, ..., s_r); `offset` is the constant half-integer
    T-power, also in T^(1/2) units.  The scalar may be a Fraction, a CycValue
    or a SqrtRational; multiplication requires compatible scalar types.
    """

    __slots__ = ("scalar", "exponents", "offset")

    def __init__(self, scalar, exponents: tuple[int, ...] = (), offset: int = 0):
        if isinstance(scalar, int):
            scalar = Fraction(scalar)
        self.scalar = scalar
        self.exponents = tuple(int(e) for e in exponents)
        self.offset = int(offset)

    @staticmethod
    def one(r: int = 0) -> "MellinMonomial":
        return MellinMonomial(Fraction(1), (0,) * r, 0)

    def is_zero(self) -> bool:
        s = self.scalar
        if isinstance(s, CycValue):
            return s.is_zero()
        if isinstance(s, SqrtRational):
            return s.sign == 0
        return s == 0

    def __mul__(self, other) -> "MellinMonomial":
        if isinstance(other, (int, Fraction, CycValue, SqrtRational)):
            other = MellinMonomial(other, (0,) * len(self.exponents), 0)
        ea, eb = self.exponents, other.exponents
        if len(ea) != len(eb):
            # pad the shorter exponent vector (scalar monomials)
            r = max(len(ea), len(eb))
            ea += (0,) * (r - len(ea))
            eb += (0,) * (r - len(eb))
        return MellinMonomial(_scalar_mul(self.scalar, other.scalar),
                              tuple(x + y for x, y in zip(ea, eb)),
                              self.offset + other.offset)

    __rmul__ = __mul__

    def extract_T_exponent(self) -> tuple[tuple[int, ...], int]:
        """(exponent vector in T^(1/2)-units per s_i, constant offset)."""
        return self.exponents, self.offset

    def same_monomial(self, other: "MellinMonomial") -> bool:
        return self.exponents == other.exponents and self.offset == other.offset

    def __repr__(self):
        return (f"MellinMonomial({self.scalar!r}, "
                f"exps={self.exponents}, offset={self.offset})")


def _scalar_mul(a, b):
    if isinstance(a, SqrtRational) or isinstance(b, SqrtRational):
        if isinstance(a, (int, Fraction)):
            a = SqrtRational.of_rational(a)
        if isinstance(b, (int, Fraction)):
            b = SqrtRational.of_rational(b)
        if isinstance(a, SqrtRational) and isinstance(b, SqrtRational):
            return a * b
        raise TypeError("cannot mix SqrtRational and CycValue scalars")
    return a * b


class MellinPoly:
    """A finite sum of Mellin monomials with CycValue coefficients, keyed by
    (exponent vector, offset).  This is the value type of symbolic-in-s
    character sums: zero means zero for every specialization of s."""

    __slots__ = ("terms",)

    def __init__(self):
        self.terms: dict[tuple[tuple[int, ...], int], CycValue] = {}

    def add_monomial(self, mono: MellinMonomial, coeff=1) -> None:
        scalar = mono.scalar
        if isinstance(scalar, SqrtRational):
            raise TypeError("MellinPoly sums CycValue-scaled monomials only")
        total = _as_cyc(scalar) * coeff
        key = (mono.exponents, mono.offset)
        cur = self.terms.get(key)
        self.terms[key] = total if cur is None else cur + total

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.terms.values())

    def nonzero_terms(self) -> dict:
        return {k: c for k, c in self.terms.items() if not c.is_zero()}

    def __eq__(self, other):
        if not isinstance(other, MellinPoly):
            return NotImplemented
        keys = set(self.terms) | set(other.terms)
        z = CycValue.zero
        return all((self.terms.get(k, z) - other.terms.get(k, z)).is_zero()
                   for k in keys)

    def __hash__(self):
        raise TypeError("unhashable")


# ---------------------------------------------------------------------------
# serialization helpers (shared text formats)
# ---------------------------------------------------------------------------

def rat_to_text(x: Rat) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def rat_from_text(s: str) -> Fraction:
    s = s.strip()
    if "/" in s:
        num, den = s.split("/")
        return Fraction(int(num), int(den))
    return Fraction(int(s))
