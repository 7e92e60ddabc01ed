"""Exact linear algebra over :class:`TowerScalar`.

Matrices are lists of rows, vectors are tuples.  Subspaces are kept in a
canonical echelon form so equality is structural.
"""

from __future__ import annotations

from .errors import NotWellDefined, PreconditionViolated
from .scalars import ONE, ZERO, S, TowerScalar, sqrt_positive_real


# -- basic matrix helpers ----------------------------------------------------

def zeros(n, m=None):
    m = n if m is None else m
    return [[ZERO] * m for _ in range(n)]


def eye(n):
    out = zeros(n)
    for i in range(n):
        out[i][i] = ONE
    return out


def as_matrix(rows):
    return [[S(x) for x in row] for row in rows]


def mat_mul(A, B):
    if not A:
        return []
    m = len(B[0]) if B else 0
    out = []
    for row in A:
        acc = [ZERO] * m
        for k, a in enumerate(row):
            if a.is_zero():
                continue
            for j, b in enumerate(B[k]):
                if not b.is_zero():
                    acc[j] = acc[j] + a * b
        out.append(acc)
    return out


def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(A, c):
    c = S(c)
    return [[a * c for a in row] for row in A]


def transpose(A):
    return [list(col) for col in zip(*A)] if A else []


def mat_conj(A):
    return [[a.conj() for a in row] for row in A]


def conj_transpose(A):
    return transpose(mat_conj(A))


def is_zero_matrix(A):
    return all(a.is_zero() for row in A for a in row)


def mat_eq(A, B):
    return len(A) == len(B) and all(list(ra) == list(rb) for ra, rb in zip(A, B))


def mat_vec(A, v):
    out = []
    for row in A:
        acc = ZERO
        for a, x in zip(row, v):
            if not a.is_zero() and not x.is_zero():
                acc = acc + a * x
        out.append(acc)
    return tuple(out)


def outer(a, b):
    """The matrix ``a b^T`` (no conjugation)."""
    return [[x * y for y in b] for x in a]


def vec_add(v, w):
    return tuple(a + b for a, b in zip(v, w))


def vec_sub(v, w):
    return tuple(a - b for a, b in zip(v, w))


def vec_scale(v, c):
    c = S(c)
    return tuple(a * c for a in v)


def vec_conj(v):
    return tuple(a.conj() for a in v)


def is_zero_vec(v):
    return all(a.is_zero() for a in v)


def unit(n, i):
    return tuple(ONE if j == i else ZERO for j in range(n))


def columns(A):
    return [tuple(col) for col in zip(*A)] if A else []


def from_columns(cols, n):
    if not cols:
        return [[] for _ in range(n)]
    return [list(r) for r in zip(*cols)]


# -- elimination --------------------------------------------------------------

def rref(A):
    """Reduced row echelon form; returns ``(R, pivot_columns)``."""
    R = [list(row) for row in A]
    if not R:
        return R, []
    nrows, ncols = len(R), len(R[0])
    pivots = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if not R[i][c].is_zero()), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        inv = R[r][c].inv()
        R[r] = [x * inv for x in R[r]]
        for i in range(nrows):
            if i != r and not R[i][c].is_zero():
                f = R[i][c]
                R[i] = [x - f * y for x, y in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
    return R[:r], pivots


def rank(A) -> int:
    return len(rref(A)[1])


def _kernel_vectors(A, ncols):
    R, pivots = rref(A)
    free = [c for c in range(ncols) if c not in pivots]
    out = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for row, pc in zip(R, pivots):
            v[pc] = -row[f]
        out.append(tuple(v))
    return out


def inverse(A, stage=None):
    n = len(A)
    aug = [list(row) + list(e) for row, e in zip(A, eye(n))]
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(R) < n:
        raise NotWellDefined("matrix is singular", stage)
    return [row[n:] for row in R]


def det(A):
    M = [list(row) for row in A]
    n = len(M)
    d = ONE
    for c in range(n):
        p = next((i for i in range(c, n) if not M[i][c].is_zero()), None)
        if p is None:
            return ZERO
        if p != c:
            M[c], M[p] = M[p], M[c]
            d = -d
        d = d * M[c][c]
        inv = M[c][c].inv()
        for i in range(c + 1, n):
            if not M[i][c].is_zero():
                f = M[i][c] * inv
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return d


def solve(A, b):
    """One solution of ``A x = b`` or ``None`` if inconsistent."""
    ncols = len(A[0])
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    R, pivots = rref(aug)
    if pivots and pivots[-1] == ncols:
        return None
    x = [ZERO] * ncols
    for row, pc in zip(R, pivots):
        x[pc] = row[ncols]
    return tuple(x)


def solve_many(aug, ncols):
    """Solutions of ``A x = b_j`` for an augmented matrix ``[A | b_1 ... b_m]``.

    Returns one solution per right-hand side, or ``None`` if any is inconsistent.
    """
    R, pivots = rref([list(r) for r in aug])
    if any(p >= ncols for p in pivots):
        return None
    m = len(aug[0]) - ncols
    out = []
    for j in range(m):
        x = [ZERO] * ncols
        for row, pc in zip(R, pivots):
            x[pc] = row[ncols + j]
        out.append(tuple(x))
    return out


# -- subspaces ----------------------------------------------------------------

class Subspace:
    """A subspace of an ambient space, stored by a canonical echelon basis."""

    __slots__ = ("n", "basis", "pivots")

    def __init__(self, n: int, vectors=()):
        self.n = n
        rows = [list(S(x) for x in v) for v in vectors]
        R, piv = rref(rows) if rows else ([], [])
        self.basis = tuple(tuple(r) for r in R)
        self.pivots = tuple(piv)

    @classmethod
    def zero(cls, n):
        return cls(n)

    @classmethod
    def full(cls, n):
        return cls(n, [unit(n, i) for i in range(n)])

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __eq__(self, other):
        return isinstance(other, Subspace) and self.n == other.n and self.basis == other.basis

    def __hash__(self):
        return hash((self.n, self.basis))

    def __repr__(self):
        vecs = ", ".join("(" + ", ".join(str(x) for x in v) + ")" for v in self.basis)
        return f"Subspace(n={self.n}, [{vecs}])"

    def contains(self, v) -> bool:
        # reduce v against the echelon basis
        r = list(v)
        for b, pc in zip(self.basis, self.pivots):
            c = r[pc]
            if not c.is_zero():
                r = [x - c * y for x, y in zip(r, b)]
        return all(x.is_zero() for x in r)

    def contains_space(self, other: "Subspace") -> bool:
        return all(self.contains(v) for v in other.basis)

    def coordinates(self, v):
        """Coefficients of ``v`` in the echelon basis (``v`` must lie in the span)."""
        return tuple(v[pc] for pc in self.pivots)

    def __add__(self, other: "Subspace") -> "Subspace":
        return Subspace(self.n, list(self.basis) + list(other.basis))

    def intersect(self, other: "Subspace") -> "Subspace":
        ann = annihilator(self).basis + annihilator(other).basis
        if not ann:
            return Subspace.full(self.n)
        return Subspace(self.n, _kernel_vectors([list(a) for a in ann], self.n))

    def conj(self) -> "Subspace":
        return Subspace(self.n, [vec_conj(v) for v in self.basis])

    def image_under(self, A) -> "Subspace":
        return Subspace(self.n, [mat_vec(A, v) for v in self.basis])

    def matrix(self):
        """The ``n x dim`` matrix whose columns are the basis vectors."""
        return from_columns(list(self.basis), self.n)


def annihilator(V: Subspace) -> Subspace:
    """Row vectors ``phi`` with ``phi . v = 0`` on ``V`` (bilinear, no conjugation)."""
    if V.dim == 0:
        return Subspace.full(V.n)
    return Subspace(V.n, _kernel_vectors([list(b) for b in V.basis], V.n))


def span(n, vectors):
    return Subspace(n, vectors)


def rref_kernel_image(A):
    """``(kernel, image, rank)`` of a matrix given as a list of rows."""
    nrows = len(A)
    ncols = len(A[0]) if A else 0
    ker = Subspace(ncols, _kernel_vectors(A, ncols))
    img = Subspace(nrows, columns(A))
    return ker, img, img.dim


def kernel(A) -> Subspace:
    return rref_kernel_image(A)[0]


def image(A) -> Subspace:
    return Subspace(len(A), columns(A))


def complement(V: Subspace, inside: Subspace | None = None) -> Subspace:
    """Deterministic complement: standard vectors at the non-pivot positions.

    With ``inside`` given, returns a complement of ``V`` within ``inside``
    (``V`` must be contained in it), chosen greedily from ``inside``'s basis.
    """
    if inside is None:
        return Subspace(V.n, [unit(V.n, i) for i in range(V.n) if i not in V.pivots])
    acc = V
    picked = []
    for b in inside.basis:
        if not acc.contains(b):
            picked.append(b)
            acc = acc + Subspace(V.n, [b])
    return Subspace(V.n, picked)


def project_along(v, target: Subspace, along: Subspace):
    """Component of ``v`` in ``target`` for the splitting ``target + along``."""
    basis = list(target.basis) + list(along.basis)
    A = from_columns(basis, target.n)
    x = solve(A, v)
    if x is None:
        raise PreconditionViolated("subspaces do not span the vector")
    out = (ZERO,) * target.n
    for c, b in zip(x[: target.dim], target.basis):
        out = vec_add(out, vec_scale(b, c))
    return out


def conj_split(V: Subspace):
    """``(inv_part, real_basis, W1)``: ``V ∩ conj(V)``, a real basis of it, and a complement in ``V``."""
    inv = V.intersect(V.conj())
    real_basis = []
    acc = Subspace.zero(V.n)
    for b in inv.basis:
        for cand in (vec_add(b, vec_conj(b)), vec_scale(vec_sub(b, vec_conj(b)), S(0, 1))):
            if not is_zero_vec(cand) and not acc.contains(cand):
                lead = next(x for x in cand if not x.is_zero())
                cand = vec_scale(cand, lead.inv())
                real_basis.append(cand)
                acc = acc + Subspace(V.n, [cand])
    w1 = complement(inv, V)
    return inv, real_basis, w1


def real_complement(V: Subspace) -> Subspace:
    """A conjugation-invariant complement (standard vectors) of ``V + conj(V)``."""
    return complement(V + V.conj())


# -- Hermitian form of signature (p, q) ----------------------------------------

class HermForm:
    """``<v, w> = -sum_{i<p} conj(v_i) w_i + sum_{i>=p} conj(v_i) w_i``."""

    def __init__(self, p: int, q: int):
        if p < 0 or q < 0:
            raise ValueError("signature must be nonnegative")
        self.p, self.q = p, q
        self.n = p + q
        self.sdiag = tuple(-ONE if i < p else ONE for i in range(self.n))

    def __eq__(self, other):
        return isinstance(other, HermForm) and (self.p, self.q) == (other.p, other.q)

    def __hash__(self):
        return hash((self.p, self.q))

    def __repr__(self):
        return f"HermForm({self.p}, {self.q})"

    def s_matrix(self):
        out = zeros(self.n)
        for i, d in enumerate(self.sdiag):
            out[i][i] = d
        return out

    def s_vec(self, v):
        return tuple(x if d == ONE else -x for x, d in zip(v, self.sdiag))

    def inner(self, v, w) -> TowerScalar:
        acc = ZERO
        for i, (a, b) in enumerate(zip(v, w)):
            if a.is_zero() or b.is_zero():
                continue
            t = a.conj() * b
            acc = acc - t if i < self.p else acc + t
        return acc

    def bra(self, v):
        """Row vector of the functional ``<v, .>``."""
        return [(a.conj() if i >= self.p else -a.conj()) for i, a in enumerate(v)]

    def ketbra(self, a, b):
        """Matrix of ``y -> a <b, y>``."""
        return outer(a, self.bra(b))

    def adjoint(self, A):
        """``s A^H s``, the adjoint with respect to the form."""
        n = self.n
        AH = conj_transpose(A)
        return [[AH[i][j] if (i < self.p) == (j < self.p) else -AH[i][j] for j in range(n)]
                for i in range(n)]

    def gram(self, vectors):
        return [[self.inner(a, b) for b in vectors] for a in vectors]


def orth_complement(V: Subspace, form: HermForm) -> Subspace:
    if V.dim == 0:
        return Subspace.full(V.n)
    return Subspace(V.n, _kernel_vectors([form.bra(b) for b in V.basis], V.n))


def radical(V: Subspace, form: HermForm) -> Subspace:
    return V.intersect(orth_complement(V, form))


def is_isotropic(V: Subspace, form: HermForm) -> bool:
    return all(form.inner(a, b).is_zero() for a in V.basis for b in V.basis)


def isotropic_vector_in(V: Subspace, form: HermForm):
    """A nonzero isotropic vector of ``V`` or ``None`` if the form is definite on ``V``.

    May adjoin a square root to the tower when a positive and a negative
    direction must be balanced.
    """
    if V.dim == 0:
        raise PreconditionViolated("subspace must be nonzero")
    rad = radical(V, form)
    if rad.dim:
        return rad.basis[0]
    vecs = list(V.basis)
    diag = []
    while vecs:
        x = vecs.pop(0)
        d = form.inner(x, x)
        if d.is_zero():
            return x
        inv = d.inv()
        vecs = [vec_sub(y, vec_scale(x, form.inner(x, y) * inv)) for y in vecs]
        diag.append((x, d))
    neg = next(((x, d) for x, d in diag if d.sign() < 0), None)
    pos = next(((x, d) for x, d in diag if d.sign() > 0), None)
    if neg is None or pos is None:
        return None
    c = sqrt_positive_real(-neg[1] / pos[1])
    return vec_add(neg[0], vec_scale(pos[0], c))


# -- nilpotent constructors ------------------------------------------------------

def build_skew_nilpotent(V: Subspace, v, w, form: HermForm):
    """Skew ``N`` with ``N^2 = 0``, ``N(V^perp) = 0``, ``im N`` in ``V`` and ``N(w) = v``."""
    n = form.n
    v, w = tuple(S(x) for x in v), tuple(S(x) for x in w)
    if not is_isotropic(V, form):
        raise PreconditionViolated("V is not isotropic")
    if not V.contains(v):
        raise PreconditionViolated("v is not in V")
    if all(form.inner(b, w).is_zero() for b in V.basis):
        raise PreconditionViolated("w lies in the orthogonal complement of V")
    z = form.inner(v, w)
    if not z.is_imaginary():
        raise PreconditionViolated("<v, w> is not purely imaginary")
    if is_zero_vec(v):
        return zeros(n)
    if not z.is_zero():
        N = mat_scale(form.ketbra(v, v), z.inv())
    else:
        u = next(b for b in V.basis if not form.inner(b, w).is_zero())
        a = form.inner(u, w).inv()
        N = mat_sub(mat_scale(form.ketbra(v, u), a), mat_scale(form.ketbra(u, v), a.conj()))
    assert is_zero_matrix(mat_mul(N, N))
    assert mat_eq(form.adjoint(N), mat_scale(N, -1))
    assert mat_vec(N, w) == v
    return N


def build_three_step(V: Subspace, u, v, w, form: HermForm):
    """``(M, N)`` with ``N = M - M*``, ``N^3 = 0`` and ``N^2 u / 2 + N v + w = 0``."""
    u, v, w = (tuple(S(x) for x in t) for t in (u, v, w))
    if form.p == form.q:
        raise PreconditionViolated("requires p != q")
    if not is_isotropic(V, form) or V.dim != min(form.p, form.q):
        raise PreconditionViolated("V is not maximal isotropic")
    Vp = orth_complement(V, form)
    if not V.contains(w):
        raise PreconditionViolated("w is not in V")
    if not Vp.contains(v) or V.contains(v):
        raise PreconditionViolated("v must lie in V^perp but not in V")
    if Vp.contains(u):
        raise PreconditionViolated("u lies in V^perp")
    uw = form.inner(u, w)
    if not uw.is_real():
        raise PreconditionViolated("<u, w> is not real")
    vv = form.inner(v, v)
    if not (uw * 2 + vv).is_zero():
        raise PreconditionViolated("2<u, w> + <v, v> != 0")
    sV = Subspace(form.n, [form.s_vec(b) for b in V.basis])
    VsV = V + sV
    D = orth_complement(VsV, form)
    vD = project_along(v, D, VsV)
    M = mat_scale(form.ketbra(w, vD), S(-2) / vv)
    N = mat_sub(M, form.adjoint(M))
    N2 = mat_mul(N, N)
    assert is_zero_matrix(mat_mul(N2, N))
    lhs = vec_add(vec_add(vec_scale(mat_vec(N2, u), S("1/2")), mat_vec(N, v)), w)
    assert is_zero_vec(lhs)
    return M, N


def isotropic_vector_avoiding(V: Subspace, form: HermForm, w):
    """Isotropic ``u`` in ``V`` with ``<u, w> != 0``, or ``None`` if there is none.

    Radical vectors are tried first.  Otherwise a seed isotropic vector of a
    nondegenerate part is bent towards ``w`` without further square roots.
    """
    if V.dim == 0:
        return None
    phi = lambda u: form.inner(u, w)  # noqa: E731
    rad = radical(V, form)
    for r in rad.basis:
        if not phi(r).is_zero():
            return r
    # phi vanishes on the radical, so work in a nondegenerate complement
    Vp = complement(rad, V)
    basis = list(Vp.basis)
    if not basis or all(phi(b).is_zero() for b in basis):
        return None
    seed = None
    vecs = list(basis)
    diag = []
    while vecs:
        x = vecs.pop(0)
        d = form.inner(x, x)
        if d.is_zero():
            seed = x
            break
        inv = d.inv()
        vecs = [vec_sub(y, vec_scale(x, form.inner(x, y) * inv)) for y in vecs]
        diag.append((x, d))
    if seed is None:
        neg = [(x, d) for x, d in diag if d.sign() < 0]
        pos = [(x, d) for x, d in diag if d.sign() > 0]
        if not neg or not pos:
            return None
        # prefer a pair where phi is nonzero somewhere so the seed itself may work
        for (xa, da) in neg:
            for (xb, db) in pos:
                c = sqrt_positive_real(-da / db)
                for sgn in (1, -1):
                    u = vec_add(xa, vec_scale(xb, c * sgn))
                    if not phi(u).is_zero():
                        return u
                if seed is None:
                    seed = vec_add(xa, vec_scale(xb, c))
    if not phi(seed).is_zero():
        return seed
    # u = y + c*seed with c chosen to make u isotropic; phi(u) = phi(y)
    y1 = [b for b in basis if not phi(b).is_zero()]
    y2 = [b for b in basis if not form.inner(b, seed).is_zero()]
    both = [b for b in y1 if b in y2]
    y = both[0] if both else vec_add(y1[0], y2[0])
    ys = form.inner(y, seed)
    c = -form.inner(y, y) / (ys * 2)
    u = vec_add(y, vec_scale(seed, c))
    assert form.inner(u, u).is_zero() and not phi(u).is_zero()
    return u
