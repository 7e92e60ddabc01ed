"""Univariate polynomials and rational functions over :class:`TowerScalar`."""

from __future__ import annotations

from .errors import DivisionByZero, IrreducibleDenominator, ZeroDenominator
from .scalars import ONE, ZERO, S, TowerScalar, sort_key, sqrt_positive_real, to_mpq

POLE = "pole"  # marker returned by RatFunc.eval at poles
INF = "inf"  # the point at infinity of CP^1
_Q0 = to_mpq(0)


class Poly:
    """Polynomial with ascending coefficients, trailing zeros stripped."""

    __slots__ = ("c", "_g")

    def __init__(self, coeffs=()):
        c = [S(x) for x in coeffs]
        while c and c[-1].is_zero():
            c.pop()
        self.c = tuple(c)
        self._g = None

    @classmethod
    def _raw(cls, coeffs) -> "Poly":
        c = list(coeffs)
        while c and c[-1].is_zero():
            c.pop()
        obj = object.__new__(cls)
        obj.c = tuple(c)
        obj._g = None
        return obj

    def gpairs(self):
        """Coefficients as ``(re, im)`` pairs (``None`` for zero), or ``False`` off Q(i)."""
        if self._g is None:
            self._g = _gaussian_pairs(self.c)
            if self._g is None:
                self._g = False
        return self._g

    @classmethod
    def const(cls, a) -> "Poly":
        return cls._raw([S(a)])

    @classmethod
    def linear(cls, root) -> "Poly":
        """The monic polynomial ``lambda - root``."""
        return cls._raw([-S(root), ONE])

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def lead(self) -> TowerScalar:
        return self.c[-1] if self.c else ZERO

    def __eq__(self, other):
        return isinstance(other, Poly) and self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def __add__(self, other):
        ga, gb = self.gpairs(), other.gpairs()
        if ga is not False and gb is not False:
            return _add_gaussian(ga, gb)
        a, b = self.c, other.c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for j, x in enumerate(b):
            out[j] = out[j] + x
        return Poly._raw(out)

    def __neg__(self):
        return Poly._raw([-x for x in self.c])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Poly):
            s = S(other)
            if s.is_zero():
                return Poly._raw(())
            return Poly._raw([x * s for x in self.c])
        a, b = self.c, other.c
        if not a or not b:
            return Poly._raw(())
        ga, gb = self.gpairs(), other.gpairs()
        if ga is not False and gb is not False:
            return _mul_gaussian(ga, gb)
        out = [ZERO] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x.is_zero():
                continue
            for j, y in enumerate(b):
                out[i + j] = out[i + j] + x * y
        return Poly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = Poly.const(1)
        for _ in range(e):
            out = out * self
        return out

    def divmod(self, other: "Poly"):
        if other.is_zero():
            raise DivisionByZero("polynomial division by zero")
        r = list(self.c)
        dq = len(r) - len(other.c)
        if dq < 0:
            return Poly._raw(()), self
        inv_lead = other.lead().inv()
        q = [ZERO] * (dq + 1)
        for k in range(dq, -1, -1):
            coef = r[k + len(other.c) - 1] * inv_lead
            q[k] = coef
            if coef.is_zero():
                continue
            for j, y in enumerate(other.c):
                r[k + j] = r[k + j] - coef * y
        return Poly._raw(q), Poly._raw(r[: len(other.c) - 1])

    def __call__(self, x) -> TowerScalar:
        g = self.gpairs()
        xt = x._t if isinstance(x, TowerScalar) else None
        if g is not False and xt is not None and (not xt or (len(xt) == 1 and 1 in xt)):
            xr, xi = xt[1] if xt else (_Q0, _Q0)
            ar = ai = _Q0
            for c in reversed(g):
                ar, ai = ar * xr - ai * xi, ar * xi + ai * xr
                if c is not None:
                    ar += c[0]
                    ai += c[1]
            return _from_pair(ar, ai)
        acc = ZERO
        for a in reversed(self.c):
            acc = acc * x + a
        return acc

    def div_linear(self, root) -> "Poly":
        """Exact quotient by ``lambda - root`` (synthetic division; remainder dropped)."""
        n = len(self.c)
        if n <= 1:
            return Poly._raw(())
        g = self.gpairs()
        root = S(root)
        rt = root._t
        if g is not False and (not rt or (len(rt) == 1 and 1 in rt)):
            xr, xi = rt[1] if rt else (_Q0, _Q0)
            out = [None] * (n - 1)
            ar = ai = _Q0
            for k in range(n - 1, 0, -1):
                ar, ai = ar * xr - ai * xi, ar * xi + ai * xr
                c = g[k]
                if c is not None:
                    ar += c[0]
                    ai += c[1]
                out[k - 1] = _from_pair(ar, ai)
            return Poly._raw(out)
        q = [ZERO] * (n - 1)
        acc = ZERO
        for k in range(n - 1, 0, -1):
            acc = acc * root + self.c[k]
            q[k - 1] = acc
        return Poly._raw(q)

    def derivative(self) -> "Poly":
        return Poly._raw([x * k for k, x in enumerate(self.c) if k])

    def taylor(self, alpha) -> list:
        """Coefficients ``b_k`` with ``p(lambda) = sum b_k (lambda - alpha)^k``."""
        alpha = S(alpha)
        c = list(self.c)
        n = len(c)
        for i in range(n):
            for k in range(n - 2, i - 1, -1):
                c[k] = c[k] + alpha * c[k + 1]
        return c

    def conj(self) -> "Poly":
        return Poly._raw([x.conj() for x in self.c])

    def reflect(self) -> "Poly":
        """``p(-lambda)``."""
        return Poly._raw([x if k % 2 == 0 else -x for k, x in enumerate(self.c)])

    def monic(self) -> "Poly":
        if not self.c:
            return self
        inv = self.lead().inv()
        return Poly._raw([x * inv for x in self.c])

    def __repr__(self):
        return f"Poly([{', '.join(str(x) for x in self.c)}])"


def _gaussian_pairs(coeffs):
    """``[(re, im), ...]`` when every coefficient is Gaussian, else ``None``."""
    out = []
    for x in coeffs:
        t = x._t
        if not t:
            out.append(None)
        elif len(t) == 1 and 1 in t:
            out.append(t[1])
        else:
            return None
    return out


def _from_pair(r, i) -> TowerScalar:
    return TowerScalar._make({1: (r, i)} if (r or i) else {})


def _add_gaussian(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = []
    for j, x in enumerate(a):
        y = b[j] if j < len(b) else None
        if y is None:
            out.append(_from_pair(*x) if x is not None else ZERO)
        elif x is None:
            out.append(_from_pair(*y))
        else:
            out.append(_from_pair(x[0] + y[0], x[1] + y[1]))
    return Poly._raw(out)


def gaussian_dot(pairs_a, pairs_b):
    """``sum_k a_k * b_k`` for lists of Gaussian polynomials given as pair lists."""
    m = max((len(a) + len(b) - 1 for a, b in zip(pairs_a, pairs_b) if a and b), default=0)
    re = [_Q0] * m
    im = [_Q0] * m
    for a, b in zip(pairs_a, pairs_b):
        if not a or not b:
            continue
        for i, x in enumerate(a):
            if x is None:
                continue
            xr, xi = x
            for j, y in enumerate(b):
                if y is None:
                    continue
                yr, yi = y
                re[i + j] += xr * yr - xi * yi
                im[i + j] += xr * yi + xi * yr
    return Poly._raw([_from_pair(r, i) for r, i in zip(re, im)])


def _mul_gaussian(a, b):
    m = len(a) + len(b) - 1
    re = [_Q0] * m
    im = [_Q0] * m
    for i, x in enumerate(a):
        if x is None:
            continue
        xr, xi = x
        for j, y in enumerate(b):
            if y is None:
                continue
            yr, yi = y
            re[i + j] += xr * yr - xi * yi
            im[i + j] += xr * yi + xi * yr
    return Poly._raw([_from_pair(r, i) for r, i in zip(re, im)])


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd by the Euclidean algorithm."""
    if a.is_zero() and b.is_zero():
        raise ValueError("gcd(0, 0) is undefined")
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
    return a.monic()


class RatFunc:
    """Reduced quotient ``num/den`` with ``den`` monic and coprime to ``num``."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None, _reduced=False):
        den = Poly.const(1) if den is None else den
        if den.is_zero():
            raise ZeroDenominator("zero denominator")
        if not _reduced:
            if num.is_zero():
                num, den = num, Poly.const(1)
            else:
                g = poly_gcd(num, den)
                if g.degree > 0:
                    num = num.divmod(g)[0]
                    den = den.divmod(g)[0]
                lead = den.lead()
                if lead != ONE:
                    inv = lead.inv()
                    num, den = num * inv, den * inv
        self.num, self.den = num, den

    def __eq__(self, other):
        return isinstance(other, RatFunc) and self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __add__(self, other):
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other):
        return RatFunc(self.num * other.den - other.num * self.den, self.den * other.den)

    def __mul__(self, other):
        return RatFunc(self.num * other.num, self.den * other.den)

    def __truediv__(self, other):
        if other.num.is_zero():
            raise DivisionByZero("rational function division by zero")
        return RatFunc(self.num * other.den, self.den * other.num)

    def is_zero(self):
        return self.num.is_zero()

    def eval(self, x):
        """Value at a scalar or at :data:`INF`; :data:`POLE` at poles."""
        if x == INF:
            dn, dd = self.num.degree, self.den.degree
            if self.num.is_zero() or dn < dd:
                return ZERO
            if dn == dd:
                return self.num.lead() / self.den.lead()
            return POLE
        x = S(x)
        d = self.den(x)
        if d.is_zero():
            return POLE
        return self.num(x) / d

    def __repr__(self):
        return f"RatFunc({self.num!r} / {self.den!r})"


def ratfunc_normalize(num: Poly, den: Poly) -> RatFunc:
    return RatFunc(num, den)


# -- root finding -----------------------------------------------------------

def _to_sympy_gaussian(p: Poly):
    import sympy

    lam = sympy.Symbol("lam")
    coeffs = []
    for a in reversed(p.c):
        re, im = a.gaussian_parts()
        coeffs.append(sympy.Rational(int(re.numerator), int(re.denominator))
                      + sympy.I * sympy.Rational(int(im.numerator), int(im.denominator)))
    return sympy.Poly(coeffs, lam, domain="QQ_I"), lam


def _from_sympy_number(z) -> TowerScalar:
    import sympy

    re, im = sympy.re(z), sympy.im(z)
    return TowerScalar(f"{re.p}/{re.q}", f"{im.p}/{im.q}")


def _norm_poly(p: Poly) -> Poly:
    """Product of all sign-conjugates of ``p``; has Gaussian coefficients."""
    tower = set()
    for a in p.c:
        tower.update(a.tower)
    out = p
    for prime in sorted(tower):
        out = out * Poly._raw([a._flip(prime) for a in out.c])
    return out


def _gaussian_roots(p: Poly) -> list:
    """Roots of a Gaussian-rational polynomial lying in some quadratic tower."""
    sp, _ = _to_sympy_gaussian(p)
    roots = []
    for fac, _mult in sp.factor_list()[1]:
        c = [_from_sympy_number(x) for x in fac.all_coeffs()]  # descending
        if fac.degree() == 1:
            roots.append(-c[1] / c[0])
        elif fac.degree() == 2:
            a, b, cc = c
            disc = b * b - a * cc * 4
            if not disc.is_real() or disc.sign() <= 0:
                raise IrreducibleDenominator(f"quadratic factor {fac.as_expr()} is not splittable")
            r = sqrt_positive_real(disc)
            roots.extend([(-b + r) / (a * 2), (-b - r) / (a * 2)])
        else:
            raise IrreducibleDenominator(f"irreducible factor of degree {fac.degree()}: {fac.as_expr()}")
    return roots


def _numeric_candidates(p: Poly, max_den=10**4) -> list:
    """Gaussian-rational guesses for the roots of ``p``, to be checked exactly."""
    import numpy as np
    from fractions import Fraction

    sq = p.divmod(poly_gcd(p, p.derivative()))[0] if p.degree > 1 else p
    coeffs = [complex(*(float(x) for x in a.gaussian_parts())) for a in reversed(sq.c)]
    out = []
    for z in np.roots(coeffs):
        re = Fraction(float(z.real)).limit_denominator(max_den)
        im = Fraction(float(z.imag)).limit_denominator(max_den)
        out.append(TowerScalar(re, im))
    return out


def poly_roots(p: Poly, hints=()) -> list:
    """Distinct roots of ``p``, sorted by (real part, imaginary part).

    ``hints`` are candidate roots that are divided out before any
    factorization is attempted.
    """
    if p.is_zero():
        raise ValueError("zero polynomial has every point as a root")
    found = []
    rest = p
    for h in hints:
        h = S(h)
        if rest.degree >= 1 and rest(h).is_zero():
            found.append(h)
            while rest.degree >= 1 and rest(h).is_zero():
                rest = rest.div_linear(h)
    if rest.degree >= 1 and all(a.is_gaussian() for a in rest.c):
        for r in _numeric_candidates(rest):
            if rest(r).is_zero():
                found.append(r)
                while rest.degree >= 1 and rest(r).is_zero():
                    rest = rest.div_linear(r)
    if rest.degree >= 1:
        if all(a.is_gaussian() for a in rest.c):
            cands = _gaussian_roots(rest)
        else:
            cands = _gaussian_roots(_norm_poly(rest))
        for r in cands:
            if rest(r).is_zero() and r not in found:
                found.append(r)
        q = rest
        for r in found:
            while q.degree >= 1 and q(r).is_zero():
                q = q.div_linear(r)
        if q.degree >= 1:
            raise IrreducibleDenominator(f"polynomial {q} has roots outside the tower")
    return sorted(set(found), key=sort_key)


def root_multiplicity(p: Poly, root) -> int:
    m = 0
    while p.degree >= 1 and p(root).is_zero():
        p = p.div_linear(root)
        m += 1
    return m
