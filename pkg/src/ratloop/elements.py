"""Simple elements: the building blocks every negative loop factors into.

Each element is validated on construction and knows its loop and its
inverse.  Kinds:

``P``       ((l-a)/(l-b)) pi_V + pi_W
``P_herm``  P(a, conj(a), V, V^perp) for a signature-(p, q) form
``Q_glnr``  ((l-a)(l-conj a))/((l-b)(l-conj b)) pi_V + pi_W
``R_glnr``  ((l-a)/(l-b)) pi_V + pi_W + ((l-conj a)/(l-conj b)) pi_conj(V)
``Q_upq``   ((l-a)/(l-b)) pi_V + pi_D + ((l-conj b)/(l-conj a)) pi_sV, D = (V + sV)^perp
``M``       Id + (l-a)^-k N with N^2 = 0
``N_upq``   Id + t^-k N + t^-2k N^2 / 2 with N = M - M*
``S``       m_{-a,1,N'} m_{a,1,N}, the twisted pair
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import (
    AlphaZero,
    InvalidDecomposition,
    NotNilpotent,
    NotRealMatrix,
    NotSkew,
    NotWellDefined,
    PreconditionViolated,
)
from .linalg import (
    HermForm,
    Subspace,
    eye,
    from_columns,
    inverse,
    is_isotropic,
    is_zero_vec,
    is_zero_matrix,
    mat_add,
    mat_conj,
    mat_eq,
    mat_mul,
    mat_scale,
    mat_sub,
    mat_vec,
    orth_complement,
    transpose,
)
from .loops import RationalLoop
from .poly import Poly
from .scalars import S

KINDS = ("P", "P_herm", "Q_glnr", "R_glnr", "Q_upq", "M", "N_upq", "S")


def _freeze(A):
    return None if A is None else tuple(tuple(S(x) for x in row) for row in A)


def _thaw(A):
    return [list(row) for row in A]


def projections(parts, n):
    """Projection matrices for a direct sum decomposition ``parts`` of C^n."""
    cols = []
    for V in parts:
        cols.extend(V.basis)
    if len(cols) != n:
        raise InvalidDecomposition("subspace dimensions do not add up to n")
    B = from_columns(cols, n)
    try:
        Binv = inverse(B)
    except NotWellDefined:
        raise InvalidDecomposition("subspaces are not in direct sum") from None
    out = []
    start = 0
    for V in parts:
        rows = [Binv[i] for i in range(start, start + V.dim)]
        Vm = [[r[j] for j in range(start, start + V.dim)] for r in B] if V.dim else None
        out.append(mat_mul(Vm, rows) if V.dim else [[S(0)] * n for _ in range(n)])
        start += V.dim
    return out


def _lin(a):
    return Poly.linear(a)


def _poles(*pairs):
    out = {}
    for a, m in pairs:
        a = S(a)
        out[a] = out.get(a, 0) + m
    return out


def s_vec_space(V: Subspace, form: HermForm) -> Subspace:
    return Subspace(V.n, [form.s_vec(b) for b in V.basis])


def twist_partner(alpha, N):
    """``N' = (Id - N/2a)(Id + N^t N / 4a^2)^-1 N^t (Id + N/2a)``."""
    alpha = S(alpha)
    if alpha.is_zero():
        raise AlphaZero("alpha must be nonzero")
    n = len(N)
    Nt = transpose(N)
    h = (alpha * 2).inv()
    left = mat_sub(eye(n), mat_scale(N, h))
    right = mat_add(eye(n), mat_scale(N, h))
    mid = mat_add(eye(n), mat_scale(mat_mul(Nt, N), h * h))
    return mat_mul(mat_mul(mat_mul(left, inverse(mid)), Nt), right)


@dataclass(frozen=True, eq=False)
class SimpleElement:
    kind: str
    alpha: object
    beta: object = None
    k: int | None = None
    V: Subspace | None = None
    W: Subspace | None = None
    N: tuple | None = None
    N_prime: tuple | None = None
    M: tuple | None = None
    signature: tuple | None = None
    reality: str | None = None  # None, "glnr" or "upq"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionViolated(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "alpha", S(self.alpha))
        if self.beta is not None:
            object.__setattr__(self, "beta", S(self.beta))
        for name in ("N", "N_prime", "M"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        getattr(self, "_validate_" + self.kind)()

    # -- equality --------------------------------------------------------
    def _key(self):
        return (self.kind, self.alpha, self.beta, self.k, self.V, self.W, self.N,
                self.N_prime, self.M, self.signature, self.reality)

    def __eq__(self, other):
        return isinstance(other, SimpleElement) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        parts = [f"alpha={self.alpha}"]
        if self.beta is not None:
            parts.append(f"beta={self.beta}")
        if self.k is not None:
            parts.append(f"k={self.k}")
        return f"{self.kind}({', '.join(parts)})"

    @property
    def n(self) -> int:
        if self.V is not None:
            return self.V.n
        return len(self.N if self.N is not None else self.M)

    @property
    def form(self) -> HermForm | None:
        return HermForm(*self.signature) if self.signature else None

    # -- validators --------------------------------------------------------
    def validate(self):
        """Re-run the defining conditions of this kind; raises on failure."""
        getattr(self, "_validate_" + self.kind)()
        return self

    def _need(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise PreconditionViolated(f"{self.kind} needs {name}")

    def _validate_P(self):
        self._need("beta", "V", "W")
        if self.alpha == self.beta:
            raise InvalidDecomposition("alpha and beta must differ")
        object.__setattr__(self, "_proj", projections([self.V, self.W], self.V.n))
        if self.reality == "glnr":
            if not (self.alpha.is_real() and self.beta.is_real()):
                raise InvalidDecomposition("real p-element needs real alpha and beta")
            if self.V.conj() != self.V or self.W.conj() != self.W:
                raise InvalidDecomposition("V and W must be conjugation invariant")

    def _validate_P_herm(self):
        self._need("V", "signature")
        if self.alpha.is_real():
            raise InvalidDecomposition("alpha must be nonreal")
        form = self.form
        Vp = orth_complement(self.V, form)
        if self.V.intersect(Vp).dim:
            raise InvalidDecomposition("V meets its orthogonal complement")
        object.__setattr__(self, "_proj", projections([self.V, Vp], self.V.n))

    def _validate_Q_glnr(self):
        self._need("beta", "V", "W")
        if self.alpha.is_real() and self.beta.is_real():
            raise InvalidDecomposition("alpha or beta must be nonreal")
        if self.alpha in (self.beta, self.beta.conj()):
            raise InvalidDecomposition("alpha must differ from beta and its conjugate")
        if self.V.conj() != self.V or self.W.conj() != self.W:
            raise InvalidDecomposition("V and W must be conjugation invariant")
        object.__setattr__(self, "_proj", projections([self.V, self.W], self.V.n))

    def _validate_R_glnr(self):
        self._need("beta", "V", "W")
        if self.alpha == self.beta:
            raise InvalidDecomposition("alpha and beta must differ")
        Vb = self.V.conj()
        if self.V.intersect(Vb).dim:
            raise InvalidDecomposition("V meets its conjugate")
        if self.W.conj() != self.W:
            raise InvalidDecomposition("W must be conjugation invariant")
        object.__setattr__(self, "_proj", projections([self.V, self.W, Vb], self.V.n))

    def _validate_Q_upq(self):
        self._need("beta", "V", "signature")
        if self.alpha == self.beta:
            raise InvalidDecomposition("alpha and beta must differ")
        form = self.form
        if self.V.dim == 0 or not is_isotropic(self.V, form):
            raise InvalidDecomposition("V must be a nonzero isotropic subspace")
        sV = s_vec_space(self.V, form)
        D = orth_complement(self.V + sV, form)
        object.__setattr__(self, "_proj", projections([self.V, D, sV], self.V.n))

    def _validate_M(self):
        self._need("N")
        if self.k is None or self.k < 1:
            raise PreconditionViolated("k must be a positive integer")
        N = _thaw(self.N)
        if not is_zero_matrix(mat_mul(N, N)):
            raise NotNilpotent("N^2 != 0")
        if self.reality == "glnr":
            if not self.alpha.is_real():
                raise PreconditionViolated("alpha must be real")
            if not mat_eq(mat_conj(N), N):
                raise NotRealMatrix("N must be real")
        elif self.reality == "upq":
            self._need("signature")
            if not self.alpha.is_real():
                raise PreconditionViolated("alpha must be real")
            if not mat_eq(self.form.adjoint(N), mat_scale(N, -1)):
                raise NotSkew("N must be skew for the form")

    def _validate_N_upq(self):
        self._need("M", "V", "signature")
        if self.k is None or self.k < 1:
            raise PreconditionViolated("k must be a positive integer")
        if not self.alpha.is_real():
            raise PreconditionViolated("alpha must be real")
        form = self.form
        if not is_isotropic(self.V, form) or self.V.dim != min(form.p, form.q):
            raise PreconditionViolated("V must be maximal isotropic")
        M = _thaw(self.M)
        sV = s_vec_space(self.V, form)
        if any(not self.V.contains(tuple(col)) for col in zip(*M)):
            raise PreconditionViolated("M must map into V")
        if any(not is_zero_vec(mat_vec(M, b)) for b in (self.V + sV).basis):
            raise PreconditionViolated("M must vanish on V + sV")
        N = mat_sub(M, form.adjoint(M))
        if self.N is not None and not mat_eq(_thaw(self.N), N):
            raise PreconditionViolated("N != M - M*")
        object.__setattr__(self, "N", _freeze(N))
        if not is_zero_matrix(mat_mul(mat_mul(N, N), N)):
            raise NotNilpotent("N^3 != 0")

    def _validate_S(self):
        self._need("N")
        if self.alpha.is_zero():
            raise AlphaZero("alpha must be nonzero")
        N = _thaw(self.N)
        if not is_zero_matrix(mat_mul(N, N)):
            raise NotNilpotent("N^2 != 0")
        Np = twist_partner(self.alpha, N)
        if self.N_prime is not None and not mat_eq(_thaw(self.N_prime), Np):
            raise PreconditionViolated("stored N' does not match the twisting formula")
        object.__setattr__(self, "N_prime", _freeze(Np))
        if not is_zero_matrix(mat_mul(Np, Np)):
            raise NotNilpotent("N'^2 != 0")

    # -- loops -------------------------------------------------------------
    @cached_property
    def loop(self) -> RationalLoop:
        return getattr(self, "_loop_" + self.kind)()

    def _loop_P(self):
        a, b = self.alpha, self.beta
        pV, pW = self._proj
        return RationalLoop.from_parts(self.n, [(_lin(a), pV), (_lin(b), pW)], _poles((b, 1)))

    def _loop_P_herm(self):
        a, b = self.alpha, self.alpha.conj()
        pV, pW = self._proj
        return RationalLoop.from_parts(self.n, [(_lin(a), pV), (_lin(b), pW)], _poles((b, 1)))

    def _loop_Q_glnr(self):
        a, b = self.alpha, self.beta
        ac, bc = a.conj(), b.conj()
        pV, pW = self._proj
        den = _lin(b) * _lin(bc)
        return RationalLoop.from_parts(
            self.n, [(_lin(a) * _lin(ac), pV), (den, pW)], _poles((b, 1), (bc, 1)))

    def _loop_R_glnr(self):
        a, b = self.alpha, self.beta
        ac, bc = a.conj(), b.conj()
        pV, pW, pVb = self._proj
        terms = [(_lin(a) * _lin(bc), pV), (_lin(b) * _lin(bc), pW), (_lin(ac) * _lin(b), pVb)]
        return RationalLoop.from_parts(self.n, terms, _poles((b, 1), (bc, 1)))

    def _loop_Q_upq(self):
        a, b = self.alpha, self.beta
        ac, bc = a.conj(), b.conj()
        pV, pD, psV = self._proj
        terms = [(_lin(a) * _lin(ac), pV), (_lin(b) * _lin(ac), pD), (_lin(bc) * _lin(b), psV)]
        return RationalLoop.from_parts(self.n, terms, _poles((b, 1), (ac, 1)))

    def _loop_M(self):
        t = _lin(self.alpha) ** self.k
        return RationalLoop.from_parts(
            self.n, [(t, eye(self.n)), (Poly.const(1), _thaw(self.N))], _poles((self.alpha, self.k)))

    def _loop_N_upq(self):
        t = _lin(self.alpha) ** self.k
        N = _thaw(self.N)
        N2 = mat_scale(mat_mul(N, N), S("1/2"))
        return RationalLoop.from_parts(
            self.n, [(t * t, eye(self.n)), (t, N), (Poly.const(1), N2)],
            _poles((self.alpha, 2 * self.k)))

    def _loop_S(self):
        m1 = SimpleElement("M", self.alpha, k=1, N=self.N).loop
        m2 = SimpleElement("M", -self.alpha, k=1, N=self.N_prime).loop
        return m2 * m1

    # -- factor products (for cross-checks) ----------------------------------
    def as_p_product(self):
        """The two GL(n, C) p-elements whose product is this Q/R element."""
        a, b = self.alpha, self.beta
        if self.kind == "Q_glnr":
            return [make_p(a, b, self.V, self.W), make_p(a.conj(), b.conj(), self.V, self.W)]
        if self.kind == "R_glnr":
            Vb = self.V.conj()
            return [make_p(a, b, self.V, self.W + Vb), make_p(a.conj(), b.conj(), Vb, self.V + self.W)]
        if self.kind == "Q_upq":
            form = self.form
            sV = s_vec_space(self.V, form)
            return [make_p(a, b, self.V, orth_complement(sV, form)),
                    make_p(b.conj(), a.conj(), sV, orth_complement(self.V, form))]
        raise PreconditionViolated(f"{self.kind} is not a product of p-elements")

    # -- inverse -------------------------------------------------------------
    def inverse(self) -> "SimpleElement":
        kw = dict(signature=self.signature, reality=self.reality)
        if self.kind in ("P", "Q_glnr", "R_glnr"):
            return SimpleElement(self.kind, self.beta, self.alpha, V=self.V, W=self.W, **kw)
        if self.kind == "P_herm":
            return SimpleElement("P_herm", self.alpha.conj(), V=self.V, **kw)
        if self.kind == "Q_upq":
            return SimpleElement("Q_upq", self.beta, self.alpha, V=self.V, **kw)
        if self.kind == "M":
            return SimpleElement("M", self.alpha, k=self.k, N=mat_scale(_thaw(self.N), -1), **kw)
        if self.kind == "N_upq":
            return SimpleElement("N_upq", self.alpha, k=self.k, V=self.V,
                                 M=mat_scale(_thaw(self.M), -1), **kw)
        # s^-1(l) = s(-l)^t, again a twisted pair
        Np = _thaw(self.N_prime)
        return SimpleElement("S", self.alpha, N=mat_scale(transpose(Np), -1),
                             N_prime=mat_scale(transpose(_thaw(self.N)), -1))

    def singular_points(self):
        if self.kind in ("M", "N_upq"):
            return [self.alpha]
        if self.kind == "S":
            return [self.alpha, -self.alpha]
        pts = [self.alpha, self.alpha.conj()]
        if self.beta is not None:
            pts += [self.beta, self.beta.conj()]
        out = []
        for p in pts:
            if p not in out:
                out.append(p)
        return out


# -- constructors ----------------------------------------------------------------

def make_p(alpha, beta, V, W, reality=None):
    return SimpleElement("P", alpha, beta, V=V, W=W, reality=reality)


def make_p_herm(alpha, V, signature):
    return SimpleElement("P_herm", alpha, V=V, signature=tuple(signature), reality="upq")


def make_q_glnr(alpha, beta, V, W):
    return SimpleElement("Q_glnr", alpha, beta, V=V, W=W, reality="glnr")


def make_r_glnr(alpha, beta, V, W):
    return SimpleElement("R_glnr", alpha, beta, V=V, W=W, reality="glnr")


def make_q_upq(alpha, beta, V, signature):
    return SimpleElement("Q_upq", alpha, beta, V=V, signature=tuple(signature), reality="upq")


def make_m(alpha, k, N, reality=None, signature=None):
    return SimpleElement("M", alpha, k=k, N=N, reality=reality,
                         signature=tuple(signature) if signature else None)


def make_n_upq(alpha, k, M, V, signature):
    return SimpleElement("N_upq", alpha, k=k, M=M, V=V, signature=tuple(signature), reality="upq")


def make_twisted_pair(alpha, N):
    el = SimpleElement("S", alpha, N=N)
    return el, el.loop


def _family(el):
    return el, el.loop, el.inverse()


def make_p_family(kind, **params):
    if kind == "P":
        return _family(make_p(**params))
    if kind == "P_herm":
        return _family(make_p_herm(**params))
    raise PreconditionViolated(f"not a p-family kind: {kind}")


def make_qr_family(kind, **params):
    ctor = {"Q_glnr": make_q_glnr, "R_glnr": make_r_glnr, "Q_upq": make_q_upq}.get(kind)
    if ctor is None:
        raise PreconditionViolated(f"not a q/r-family kind: {kind}")
    el = ctor(**params)
    prod = el.as_p_product()
    if prod[0].loop * prod[1].loop != el.loop:
        raise InvalidDecomposition("table formula and p-product disagree")
    return _family(el)


def make_nilpotent_family(kind, **params):
    if kind == "M":
        return _family(make_m(**params))
    if kind == "N_upq":
        return _family(make_n_upq(**params))
    raise PreconditionViolated(f"not a nilpotent-family kind: {kind}")


def product_loop(elements, n):
    """Left-to-right product of the elements' loops."""
    g = RationalLoop.identity(n)
    for el in elements:
        g = g * el.loop
    return g
