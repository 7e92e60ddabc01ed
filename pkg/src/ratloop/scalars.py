"""Exact scalars: Gaussian rationals with adjoined real quadratic square roots.

A :class:`TowerScalar` is a finite sum ``sum_d (re_d + i*im_d) * sqrt(d)``
over distinct squarefree positive integers ``d`` with rational ``re_d``,
``im_d``.  The square roots of distinct squarefree integers are linearly
independent over Q(i), so the term dictionary is a canonical form and
equality is plain dictionary equality.

The *tower* of an element is the sorted tuple of primes dividing some
``d`` in its support; the element lives in Q(i)(sqrt(p) for p in tower).
Merging towers is set union, and adjoining sqrt(r) for a positive rational
``r`` only ever adds primes, so radicals are always ordered by magnitude.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cmp_to_key, lru_cache
from math import gcd, isqrt, sqrt

import gmpy2
from gmpy2 import mpq

from .errors import DivisionByZero, NotPositiveReal, ParseError, TowerObstruction

_ZERO = mpq(0)
_ONE = mpq(1)


def to_mpq(x) -> mpq:
    if isinstance(x, str):
        try:
            return mpq(x.strip())
        except ValueError as exc:
            raise ParseError(f"not a rational: {x!r}") from exc
    if isinstance(x, float):
        raise TypeError("floats are not exact scalars")
    return mpq(x)


@lru_cache(maxsize=4096)
def _primes(d: int) -> tuple:
    out = []
    p = 2
    while p * p <= d:
        if d % p == 0:
            out.append(p)
            while d % p == 0:
                d //= p
        p += 1
    if d > 1:
        out.append(d)
    return tuple(out)


@lru_cache(maxsize=4096)
def squarefree_split(n: int) -> tuple:
    """Return ``(s, d)`` with ``n == s*s*d`` and ``d`` squarefree."""
    if n <= 0:
        raise ValueError("positive integer required")
    s, d = 1, 1
    m = n
    p = 2
    while p * p <= m:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        s *= p ** (e // 2)
        if e % 2:
            d *= p
        p += 1
    return s, d * m


def _mul_terms(a: dict, b: dict) -> dict:
    out: dict = {}
    for d1, (r1, i1) in a.items():
        for d2, (r2, i2) in b.items():
            if d1 == 1:
                d, f = d2, 1
            elif d2 == 1:
                d, f = d1, 1
            elif d1 == d2:
                d, f = 1, d1
            else:
                g = gcd(d1, d2)
                d, f = (d1 // g) * (d2 // g), g
            re = r1 * r2 - i1 * i2
            im = r1 * i2 + i1 * r2
            if f != 1:
                re *= f
                im *= f
            acc = out.get(d)
            if acc is not None:
                re += acc[0]
                im += acc[1]
            out[d] = (re, im)
    return {d: c for d, c in out.items() if c[0] or c[1]}


class TowerScalar:
    """Immutable exact element of Q(i)(sqrt(r_1), ..., sqrt(r_m))."""

    __slots__ = ("_t", "_hash")

    def __init__(self, re=0, im=0):
        re, im = to_mpq(re), to_mpq(im)
        self._t = {1: (re, im)} if (re or im) else {}
        self._hash = None

    @classmethod
    def _make(cls, terms: dict) -> "TowerScalar":
        obj = object.__new__(cls)
        obj._t = terms
        obj._hash = None
        return obj

    @classmethod
    def radical(cls, d: int, coeff=1) -> "TowerScalar":
        """``coeff * sqrt(d)`` for a positive integer ``d``."""
        s, sf = squarefree_split(int(d))
        c = to_mpq(coeff) * s
        return cls._make({sf: (c, _ZERO)} if c else {})

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._t)

    @property
    def tower(self) -> tuple:
        ps = set()
        for d in self._t:
            ps.update(_primes(d))
        return tuple(sorted(ps))

    def is_zero(self) -> bool:
        return not self._t

    def is_real(self) -> bool:
        return all(not c[1] for c in self._t.values())

    def is_imaginary(self) -> bool:
        return all(not c[0] for c in self._t.values())

    def is_gaussian(self) -> bool:
        return not self._t or (len(self._t) == 1 and 1 in self._t)

    def is_rational(self) -> bool:
        return self.is_gaussian() and self.is_real()

    def gaussian_parts(self) -> tuple:
        if not self.is_gaussian():
            raise ValueError(f"{self} has radicals")
        return self._t.get(1, (_ZERO, _ZERO))

    @property
    def real(self) -> "TowerScalar":
        return TowerScalar._make({d: (c[0], _ZERO) for d, c in self._t.items() if c[0]})

    @property
    def imag(self) -> "TowerScalar":
        return TowerScalar._make({d: (c[1], _ZERO) for d, c in self._t.items() if c[1]})

    def coords(self, tower=None) -> list:
        """Real coordinates followed by imaginary ones over the tower's monomials.

        Monomial ``m`` (a bitmask over the sorted tower primes) is
        ``sqrt(prod of selected primes)``.
        """
        tower = tuple(sorted(tower)) if tower is not None else self.tower
        if not set(self.tower) <= set(tower):
            raise ValueError("element does not live in the requested tower")
        mons = _monomials(tower)
        re = [self._t.get(d, (_ZERO, _ZERO))[0] for d in mons]
        im = [self._t.get(d, (_ZERO, _ZERO))[1] for d in mons]
        return re + im

    @classmethod
    def from_coords(cls, tower, coords) -> "TowerScalar":
        tower = tuple(sorted(int(p) for p in tower))
        for p in tower:
            if _primes(p) != (p,):
                raise ParseError(f"radicand {p} is not prime")
        mons = _monomials(tower)
        if len(coords) != 2 * len(mons):
            raise ParseError(f"expected {2 * len(mons)} coordinates, got {len(coords)}")
        m = len(mons)
        terms = {}
        for j, d in enumerate(mons):
            re, im = to_mpq(coords[j]), to_mpq(coords[m + j])
            if re or im:
                terms[d] = (re, im)
        return cls._make(terms)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if other.__class__ is not TowerScalar:
            other = _coerce(other)
            if other is NotImplemented:
                return other
        a, b = self._t, other._t
        if not b:
            return self
        if not a:
            return other
        if len(a) == 1 and len(b) == 1 and 1 in a and 1 in b:
            r1, i1 = a[1]
            r2, i2 = b[1]
            re, im = r1 + r2, i1 + i2
            return TowerScalar._make({1: (re, im)} if (re or im) else {})
        out = dict(a)
        for d, (r, i) in b.items():
            c = out.get(d)
            if c is None:
                out[d] = (r, i)
            else:
                nr, ni = c[0] + r, c[1] + i
                if nr or ni:
                    out[d] = (nr, ni)
                else:
                    del out[d]
        return TowerScalar._make(out)

    __radd__ = __add__

    def __neg__(self):
        return TowerScalar._make({d: (-r, -i) for d, (r, i) in self._t.items()})

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if other.__class__ is not TowerScalar:
            other = _coerce(other)
            if other is NotImplemented:
                return other
        a, b = self._t, other._t
        if not a or not b:
            return ZERO
        if len(a) == 1 and len(b) == 1 and 1 in a and 1 in b:
            r1, i1 = a[1]
            r2, i2 = b[1]
            re = r1 * r2 - i1 * i2
            im = r1 * i2 + i1 * r2
            return TowerScalar._make({1: (re, im)} if (re or im) else {})
        return TowerScalar._make(_mul_terms(a, b))

    __rmul__ = __mul__

    def conj(self) -> "TowerScalar":
        if self.is_real():
            return self
        return TowerScalar._make({d: (r, -i) for d, (r, i) in self._t.items()})

    def _flip(self, p: int) -> "TowerScalar":
        return TowerScalar._make(
            {d: ((-r, -i) if d % p == 0 else (r, i)) for d, (r, i) in self._t.items()}
        )

    def inv(self) -> "TowerScalar":
        if not self._t:
            raise DivisionByZero("division by zero scalar")
        num = ONE
        y = self
        for p in self.tower:
            c = y._flip(p)
            num = num * c
            y = y * c
        re, im = y._t[1]
        n = re * re + im * im
        return num * TowerScalar._make({1: (re / n, -im / n)})

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inv()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inv()

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        out, base = ONE, self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return False
        return self._t == other._t

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._t.items())) if not self.is_gaussian() else hash(
                self._t.get(1, (_ZERO, _ZERO))
            )
        return self._hash

    def __bool__(self):
        return bool(self._t)

    def sign(self) -> int:
        """Sign of a real element, decided by exact interval refinement."""
        if not self.is_real():
            raise ValueError(f"{self} is not real")
        if not self._t:
            return 0
        if self.is_gaussian():
            return 1 if self._t[1][0] > 0 else -1
        k = 24
        while True:
            lo = hi = _ZERO
            scale = mpq(1, 1 << k)
            for d, (r, _) in self._t.items():
                if d == 1:
                    lo += r
                    hi += r
                    continue
                s = isqrt(d << (2 * k))
                a, b = r * s * scale, r * (s + 1) * scale
                lo += min(a, b)
                hi += max(a, b)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            k *= 2

    def is_positive(self) -> bool:
        return self.is_real() and self.sign() > 0

    def __complex__(self):
        z = 0j
        for d, (r, i) in self._t.items():
            z += complex(float(r), float(i)) * sqrt(d)
        return z

    def __float__(self):
        if not self.is_real():
            raise TypeError("complex tower element")
        return complex(self).real

    # -- display ----------------------------------------------------------
    def __repr__(self):
        return f"TowerScalar({self})"

    def __str__(self):
        if not self._t:
            return "0"
        parts = []
        for d in sorted(self._t):
            r, i = self._t[d]
            if r and i:
                c = f"({_fmt(r)}{'+' if i > 0 else '-'}{_fmt(abs(i))}i)"
            elif r:
                c = _fmt(r)
            else:
                c = f"{_fmt(i)}i"
            parts.append(c if d == 1 else f"{c}*sqrt({d})")
        return " + ".join(parts)


def _fmt(q) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@lru_cache(maxsize=256)
def _monomials(tower: tuple) -> tuple:
    mons = []
    for mask in range(1 << len(tower)):
        d = 1
        for j, p in enumerate(tower):
            if mask >> j & 1:
                d *= p
        mons.append(d)
    return tuple(mons)


def _coerce(x):
    if isinstance(x, TowerScalar):
        return x
    if isinstance(x, (int, Fraction)) or type(x).__name__ == "mpq":
        return TowerScalar(x)
    return NotImplemented


def S(x, im=0) -> TowerScalar:
    """Coerce ints, rationals, ``"p/q"`` strings or ``(re, im)`` pairs."""
    if isinstance(x, TowerScalar):
        return x if not im else x + TowerScalar(0, im)
    if isinstance(x, tuple):
        return TowerScalar(*x)
    return TowerScalar(x, im)


ZERO = TowerScalar()
ONE = TowerScalar(1)
I = TowerScalar(0, 1)


def merge_towers(*towers) -> tuple:
    out = set()
    for t in towers:
        out.update(t)
    return tuple(sorted(out))


def compare(a: TowerScalar, b: TowerScalar) -> int:
    """Order by real part, then imaginary part (exact)."""
    d = a - b
    s = d.real.sign()
    if s:
        return s
    return (TowerScalar._make({k: (c[1], _ZERO) for k, c in d._t.items() if c[1]})).sign()


sort_key = cmp_to_key(compare)


def _rational_sqrt(q: mpq):
    if q < 0:
        return None
    n, d = int(q.numerator), int(q.denominator)
    if gmpy2.is_square(n) and gmpy2.is_square(d):
        return mpq(isqrt(n), isqrt(d))
    return None


def _sqrt_in_field(x: TowerScalar):
    """Square root of a real element inside its own tower, or ``None``."""
    if x.is_zero():
        return ZERO
    if x.sign() < 0:
        return None
    tower = x.tower
    if not tower:
        r = _rational_sqrt(x._t[1][0])
        return None if r is None else TowerScalar(r)
    p = tower[-1]
    a = TowerScalar._make({d: c for d, c in x._t.items() if d % p})
    b = TowerScalar._make({d // p: c for d, c in x._t.items() if d % p == 0})
    if b.is_zero():
        c = _sqrt_in_field(a)
        if c is not None:
            return c
        c = _sqrt_in_field(a / p)
        return None if c is None else c * TowerScalar.radical(p)
    delta = _sqrt_in_field(a * a - b * b * p)
    if delta is None:
        return None
    for cand in ((a + delta) / 2, (a - delta) / 2):
        c = _sqrt_in_field(cand)
        if c is None or c.is_zero():
            continue
        root = c + (b / (c * 2)) * TowerScalar.radical(p)
        if root * root == x:
            return root if root.sign() > 0 else -root
    return None


def sqrt_positive_real(r) -> TowerScalar:
    """Positive square root of a positive real element.

    Rational radicands always succeed, extending the tower when needed.
    For irrational radicands the root must already exist in the tower;
    otherwise :class:`TowerObstruction` is raised.
    """
    r = S(r)
    if not r.is_real() or r.sign() <= 0:
        raise NotPositiveReal(f"{r} is not a positive real")
    if r.is_gaussian():
        q = r._t[1][0]
        n = int(q.numerator) * int(q.denominator)
        s, d = squarefree_split(n)
        return TowerScalar.radical(d, mpq(s, int(q.denominator)))
    root = _sqrt_in_field(r)
    if root is None:
        raise TowerObstruction(f"sqrt({r}) needs a non-rational radicand")
    return root
