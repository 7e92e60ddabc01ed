"""Rational loops in GL(n, C).

A loop is stored in factored form ``g = P(lambda) / D(lambda)`` with ``P`` a
matrix of polynomials and ``D = prod (lambda - gamma)^m`` a monic
denominator whose roots are known exactly.  After reduction no root of
``D`` is a common root of all entries of ``P``, so the representation is
canonical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import total_ordering

from .errors import BadWindow, EvalAtPole, IdenticallySingular, ValidationError
from .linalg import eye, inverse, is_zero_matrix, mat_add, mat_mul, rank, zeros
from .poly import INF, POLE, Poly, RatFunc, gaussian_dot, poly_roots, root_multiplicity
from .scalars import ONE, ZERO, S, TowerScalar, sort_key


def _series_inv(c, order):
    """First ``order`` coefficients of ``1 / sum c_k t^k`` (``c[0] != 0``)."""
    inv0 = c[0].inv()
    out = [ZERO] * order
    for j in range(order):
        acc = ONE if j == 0 else ZERO
        for k in range(1, min(j, len(c) - 1) + 1):
            if not c[k].is_zero() and not out[j - k].is_zero():
                acc = acc - c[k] * out[j - k]
        out[j] = acc * inv0
    return out


def _series_mul(a, b, order):
    out = [ZERO] * order
    for i, x in enumerate(a[:order]):
        if x.is_zero():
            continue
        for j, y in enumerate(b[: order - i]):
            if not y.is_zero():
                out[i + j] = out[i + j] + x * y
    return out


def _pad(c, order):
    c = list(c[:order])
    return c + [ZERO] * (order - len(c))


@total_ordering
@dataclass(frozen=True)
class PoleData:
    """``(k, rank)``: pole order and rank of the leading coefficient."""

    k: int
    rank: int

    def __lt__(self, other):
        return (self.k, self.rank) < (other.k, other.rank)


@dataclass(frozen=True)
class SingularityReport:
    location: TowerScalar
    kind: str  # "pole" or "zero"
    pole: PoleData | None = None
    order: int = 0

    def __repr__(self):
        if self.kind == "pole":
            return f"{self.location}: pole(k={self.pole.k}, rank={self.pole.rank})"
        return f"{self.location}: zero({self.order})"


@dataclass
class ConditionReport:
    ok: bool
    witness: tuple | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


class RationalLoop:
    """An invertible ``n x n`` matrix of rational functions of ``lambda``."""

    __slots__ = ("n", "P", "poles", "_det", "_dp", "_entries")

    def __init__(self, n: int, P, poles=None, reduce=True, det_poly=None):
        self.n = n
        self.P = [list(row) for row in P]
        self.poles = {S(g): m for g, m in (poles or {}).items() if m > 0}
        self._det = None
        self._dp = det_poly  # determinant of the unreduced P, kept in sync by _reduce
        self._entries = None
        if reduce:
            self._reduce()

    # -- construction ----------------------------------------------------
    @classmethod
    def identity(cls, n):
        return cls.constant(eye(n))

    @classmethod
    def constant(cls, A):
        A = [[S(x) for x in row] for row in A]
        return cls(len(A), [[Poly._raw([x]) for x in row] for row in A], {}, reduce=False)

    @classmethod
    def from_entries(cls, entries):
        """Build from an ``n x n`` array of :class:`RatFunc`."""
        n = len(entries)
        if any(len(row) != n for row in entries):
            raise ValidationError("loop entries must form a square matrix")
        poles = {}
        for row in entries:
            for f in row:
                if f.den.degree == 0:
                    continue
                for r in poly_roots(f.den, hints=list(poles)):
                    poles[r] = max(poles.get(r, 0), root_multiplicity(f.den, r))
        D = cls._den_poly(poles)
        P = []
        for row in entries:
            prow = []
            for f in row:
                q, rem = (f.num * D).divmod(f.den)
                assert rem.is_zero()
                prow.append(q)
            P.append(prow)
        g = cls(n, P, poles)
        if g.det().is_zero():
            raise IdenticallySingular("determinant vanishes identically")
        return g

    @classmethod
    def from_parts(cls, n, terms, poles):
        """``sum_i c_i(lambda) A_i / D`` with ``terms = [(Poly, matrix), ...]``."""
        P = [[Poly._raw(()) for _ in range(n)] for _ in range(n)]
        for c, A in terms:
            for i in range(n):
                for j in range(n):
                    if not A[i][j].is_zero():
                        P[i][j] = P[i][j] + c * A[i][j]
        return cls(n, P, poles)

    @staticmethod
    def _den_poly(poles):
        D = Poly.const(1)
        for g, m in poles.items():
            D = D * Poly.linear(g) ** m
        return D

    def _reduce(self):
        for g in list(self.poles):
            m = self.poles[g]
            while m > 0 and all(p(g).is_zero() for row in self.P for p in row):
                self.P = [[p.div_linear(g) for p in row] for row in self.P]
                if self._dp is not None:
                    for _ in range(self.n):
                        self._dp = self._dp.div_linear(g)
                m -= 1
            if m:
                self.poles[g] = m
            else:
                del self.poles[g]

    # -- basic queries ---------------------------------------------------
    def den(self) -> Poly:
        return self._den_poly(self.poles)

    @property
    def entries(self):
        if self._entries is None:
            D = self.den()
            self._entries = [[RatFunc(p, D) for p in row] for row in self.P]
        return self._entries

    def __eq__(self, other):
        if not isinstance(other, RationalLoop) or self.n != other.n:
            return False
        return self.poles == other.poles and self.P == other.P

    def __hash__(self):
        return hash((self.n, tuple(tuple(r) for r in self.P)))

    def __repr__(self):
        rows = ["[" + ", ".join(f"({f.num})/({f.den})" for f in row) + "]" for row in self.entries]
        return "RationalLoop(" + ", ".join(rows) + ")"

    def is_identity(self) -> bool:
        return not self.poles and self.P == RationalLoop.identity(self.n).P

    def max_degree(self) -> int:
        return max((p.degree for row in self.P for p in row), default=-1)

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        if x == INF:
            dD = sum(self.poles.values())
            if self.max_degree() > dD:
                raise EvalAtPole("loop has a pole at infinity")
            return [[p.c[dD] if p.degree == dD else ZERO for p in row] for row in self.P]
        x = S(x)
        if x in self.poles:
            raise EvalAtPole(f"loop has a pole at {x}")
        d = self.den()(x).inv()
        return [[p(x) * d for p in row] for row in self.P]

    def is_negative(self) -> bool:
        try:
            return self.eval(INF) == eye(self.n)
        except EvalAtPole:
            return False

    # -- algebra ---------------------------------------------------------
    def __mul__(self, other: "RationalLoop") -> "RationalLoop":
        n = self.n
        ga = [[p.gpairs() for p in row] for row in self.P]
        gb = [[p.gpairs() for p in row] for row in other.P]
        if all(x is not False for row in ga + gb for x in row):
            P = [[gaussian_dot(ga[i], [gb[k][j] for k in range(n)]) for j in range(n)]
                 for i in range(n)]
            return self._product(other, P)
        P = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = Poly._raw(())
                for k in range(n):
                    a, b = self.P[i][k], other.P[k][j]
                    if a.c and b.c:
                        acc = acc + a * b
                row.append(acc)
            P.append(row)
        return self._product(other, P)

    def _product(self, other, P):
        poles = dict(self.poles)
        for g, m in other.poles.items():
            poles[g] = poles.get(g, 0) + m
        return RationalLoop(self.n, P, poles, det_poly=self.det_poly() * other.det_poly())

    def det_poly(self) -> Poly:
        """Determinant of the polynomial matrix ``P`` (fraction-free expansion)."""
        if self._dp is None:
            self._dp = _poly_det(self.P)
        return self._dp

    def det(self) -> RatFunc:
        if self._det is None:
            self._det = RatFunc(self.det_poly(), self.den() ** self.n)
        return self._det

    def inverse(self, hints=()) -> "RationalLoop":
        dp = self.det_poly()
        if dp.is_zero():
            raise IdenticallySingular("determinant vanishes identically")
        roots = poly_roots(dp, hints=list(hints) + list(self.poles)) if dp.degree > 0 else []
        rest = dp
        zeros_ = {}
        for r in roots:
            m = root_multiplicity(rest, r)
            for _ in range(m):
                rest = rest.div_linear(r)
            zeros_[r] = m
        c_inv = rest.lead().inv()
        D = self.den()
        adj = _poly_adjugate(self.P)
        P = [[(p * D) * c_inv for p in row] for row in adj]
        return RationalLoop(self.n, P, zeros_)

    def conj(self) -> "RationalLoop":
        """The loop ``conj(g(conj(lambda)))`` (coefficientwise conjugation)."""
        return RationalLoop(self.n, [[p.conj() for p in row] for row in self.P],
                            {g.conj(): m for g, m in self.poles.items()}, reduce=False)

    def transpose(self) -> "RationalLoop":
        return RationalLoop(self.n, [list(r) for r in zip(*self.P)], self.poles, reduce=False)

    def reflect(self) -> "RationalLoop":
        """The loop ``g(-lambda)``."""
        sign = -1 if sum(self.poles.values()) % 2 else 1
        P = [[p.reflect() * sign for p in row] for row in self.P]
        return RationalLoop(self.n, P, {-g: m for g, m in self.poles.items()}, reduce=False)

    def scale_constant(self, A, left=True) -> "RationalLoop":
        C = RationalLoop.constant(A)
        return C * self if left else self * C

    # -- singularities -----------------------------------------------------
    def pole_order(self, alpha) -> int:
        return self.poles.get(S(alpha), 0)

    def pole_data(self, alpha) -> PoleData | None:
        alpha = S(alpha)
        k = self.poles.get(alpha, 0)
        if not k:
            return None
        return PoleData(k, rank(self.laurent(alpha, -k, -k)[-k]))

    def zero_candidates(self, hints=()):
        dp = self.det_poly()
        if dp.degree <= 0:
            return []
        return [r for r in poly_roots(dp, hints=list(hints) + list(self.poles)) if r not in self.poles]

    def singularities(self, hints=()):
        """Poles (with pole data) and zeros of ``det g``, sorted by location."""
        out = []
        for a in self.poles:
            out.append(SingularityReport(a, "pole", pole=self.pole_data(a)))
        dp = self.det_poly()
        for z in self.zero_candidates(hints):
            out.append(SingularityReport(z, "zero", order=root_multiplicity(dp, z)))
        out.sort(key=lambda r: sort_key(r.location))
        return out

    def is_singular_at(self, alpha) -> bool:
        alpha = S(alpha)
        if alpha in self.poles:
            return True
        return self.det_poly()(alpha).is_zero()

    # -- expansions --------------------------------------------------------
    def laurent(self, alpha, lo, hi):
        """Coefficients of the expansion in ``(lambda - alpha)``, indices ``lo..hi``."""
        if lo > hi:
            raise BadWindow("lo > hi")
        alpha = S(alpha)
        k = self.poles.get(alpha, 0)
        order = hi + k + 1
        out = {j: zeros(self.n) for j in range(lo, hi + 1)}
        if order <= 0:
            return out
        R = Poly.const(1)
        for g, m in self.poles.items():
            if g != alpha:
                R = R * Poly.linear(g) ** m
        rinv = _series_inv(_pad(R.taylor(alpha), order), order)
        for i in range(self.n):
            for j in range(self.n):
                p = self.P[i][j]
                if p.is_zero():
                    continue
                ser = _series_mul(_pad(p.taylor(alpha), order), rinv, order)
                for e, c in enumerate(ser):
                    idx = e - k
                    if lo <= idx <= hi:
                        out[idx][i][j] = c
        return out

    def principal_part(self, alpha):
        """``{k: A_k}`` with ``g = sum_k (lambda - alpha)^-k A_k + holomorphic``; zero terms dropped."""
        alpha = S(alpha)
        k = self.poles.get(alpha, 0)
        if not k:
            return {}
        lau = self.laurent(alpha, -k, -1)
        return {-j: A for j, A in lau.items() if not is_zero_matrix(A)}

    def derivative_at(self, alpha, order=1):
        """``d^order g / d lambda^order`` at a regular point, divided by ``order!``."""
        return self.laurent(alpha, order, order)[order]

    def moebius_laurent(self, alpha, beta, lo, hi):
        """Coefficients ``g_j`` with ``g = sum t^j g_j``, ``t = (lambda-alpha)/(lambda-beta)``."""
        if lo > hi:
            raise BadWindow("lo > hi")
        alpha, beta = S(alpha), S(beta)
        if alpha == beta:
            raise ValidationError("alpha and beta must differ")
        k = self.poles.get(alpha, 0)
        order = hi + k + 1
        out = {j: zeros(self.n) for j in range(lo, hi + 1)}
        if order <= 0:
            return out
        dP = max(self.max_degree(), 0)
        dD = sum(self.poles.values())
        one_minus_t = Poly._raw([ONE, -ONE])
        num_lin = Poly._raw([alpha, -beta])  # alpha - beta t
        # denominator in t: prod ((alpha-g) - (beta-g) t)^m, with t^k stripped
        den = Poly.const(1)
        for g, m in self.poles.items():
            if g == alpha:
                # lambda - alpha = (alpha - beta) t / (1 - t); the t^k is stripped
                den = den * Poly.const(alpha - beta) ** m
            else:
                den = den * Poly._raw([alpha - g, g - beta]) ** m
        den = den * one_minus_t ** dP
        dinv = _series_inv(_pad(den.c, order), order)
        lin_pows = [Poly.const(1)]
        omt_pows = [Poly.const(1)]
        for _ in range(dP):
            lin_pows.append(lin_pows[-1] * num_lin)
            omt_pows.append(omt_pows[-1] * one_minus_t)
        extra = one_minus_t ** dD
        for i in range(self.n):
            for j in range(self.n):
                p = self.P[i][j]
                if p.is_zero():
                    continue
                q = Poly._raw(())
                for e, c in enumerate(p.c):
                    if not c.is_zero():
                        q = q + lin_pows[e] * omt_pows[dP - e] * c
                q = q * extra
                ser = _series_mul(_pad(q.c, order), dinv, order)
                for e, c in enumerate(ser):
                    idx = e - k
                    if lo <= idx <= hi:
                        out[idx][i][j] = c
        return out


def _poly_det(P):
    n = len(P)
    if n == 1:
        return P[0][0]
    if n == 2:
        return P[0][0] * P[1][1] - P[0][1] * P[1][0]
    acc = Poly._raw(())
    for j in range(n):
        if P[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in P[1:]]
        term = P[0][j] * _poly_det(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def _poly_adjugate(P):
    n = len(P)
    if n == 1:
        return [[Poly.const(1)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(P) if k != i]
            d = _poly_det(minor)
            adj[j][i] = d if (i + j) % 2 == 0 else -d
    return adj


# -- operations on loops -----------------------------------------------------

def loop_arith(a: RationalLoop, b=None, op="mul", at=None):
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inverse()
    if op == "det":
        return a.det()
    if op == "eval":
        return a.eval(at)
    raise ValidationError(f"unknown operation {op!r}")


def singularities(g: RationalLoop, hints=()):
    return g.singularities(hints)


def moebius_laurent(g: RationalLoop, alpha, beta, lo, hi):
    return g.moebius_laurent(alpha, beta, lo, hi)


def principal_part(g: RationalLoop, alpha):
    return g.principal_part(alpha)


def _first_mismatch(g: RationalLoop, h: RationalLoop):
    ge, he = g.entries, h.entries
    for i in range(g.n):
        for j in range(g.n):
            if ge[i][j] != he[i][j]:
                return (i, j)
    return None


def check_glnr(g: RationalLoop) -> ConditionReport:
    h = g.conj()
    if h == g:
        return ConditionReport(True)
    return ConditionReport(False, _first_mismatch(g, h))


def check_upq(g: RationalLoop, p: int, q: int) -> ConditionReport:
    n = g.n
    s = [[(-ONE if i < p else ONE) if i == j else ZERO for j in range(n)] for i in range(n)]
    Sl = RationalLoop.constant(s)
    h = Sl * g.conj().transpose() * Sl * g
    ident = RationalLoop.identity(n)
    if h == ident:
        return ConditionReport(True)
    return ConditionReport(False, _first_mismatch(h, ident))


def check_twisted(g: RationalLoop) -> ConditionReport:
    h = g.reflect().transpose() * g
    ident = RationalLoop.identity(g.n)
    if h == ident:
        return ConditionReport(True)
    return ConditionReport(False, _first_mismatch(h, ident))


def check_conditions(g: RationalLoop, reality="none", twisted=False, signature=None) -> dict:
    """Exact reality/twisting checks; values are :class:`ConditionReport`."""
    out = {}
    if reality == "glnr":
        out["glnr"] = check_glnr(g)
    elif reality == "upq":
        if signature is None:
            raise ValidationError("upq check needs a signature (p, q)")
        out["upq"] = check_upq(g, *signature)
    elif reality != "none":
        raise ValidationError(f"unknown reality condition {reality!r}")
    if twisted:
        out["twisted"] = check_twisted(g)
    return out
