"""Random simple elements and loops with small Gaussian-rational data."""

from __future__ import annotations

import random

from .elements import (
    make_m,
    make_n_upq,
    make_p,
    make_p_herm,
    make_q_glnr,
    make_q_upq,
    make_r_glnr,
    product_loop,
    s_vec_space,
)
from .errors import RatLoopError
from .linalg import (
    HermForm,
    Subspace,
    complement,
    is_zero_matrix,
    mat_mul,
    mat_scale,
    orth_complement,
    outer,
    radical,
)
from .scalars import S

REAL_POINTS = [S(x) for x in (-2, -1, 0, 1, 2, 3, "1/2", "-1/2")]
NONREAL_POINTS = [S(a, b) for a, b in ((0, 1), (1, 1), (-1, 2), (2, -1), (0, -2), (1, "1/2"))]


def _gauss(rng: random.Random, real=False, lo=-2, hi=2):
    re = rng.randint(lo, hi)
    return S(re) if real else S(re, rng.randint(-1, 1))


def _nonzero(rng, real=False):
    x = _gauss(rng, real)
    return S(1) if x.is_zero() else x


def random_vector(rng, n, real=False):
    while True:
        v = tuple(_gauss(rng, real) for _ in range(n))
        if any(not x.is_zero() for x in v):
            return v


def random_subspace(rng, n, dim, real=False):
    while True:
        V = Subspace(n, [random_vector(rng, n, real) for _ in range(dim)])
        if V.dim == dim:
            return V


def random_complement(rng, V: Subspace, real=False):
    """A random complement of ``V`` (not just the coordinate one)."""
    n = V.n
    for _ in range(20):
        W = random_subspace(rng, n, n - V.dim, real)
        if (V + W).dim == n:
            return W
    return complement(V)


def random_point(rng, real=None):
    if real is None:
        real = rng.random() < 0.5
    return rng.choice(REAL_POINTS if real else NONREAL_POINTS)


_UNIT = [S(1), S(-1), S(0, 1), S(0, -1), S("3/5", "4/5"), S("4/5", "-3/5")]
_PAIRS = [(S("3/5"), S("4/5")), (S("4/5"), S(0, "3/5")), (S("1/2", "1/2"), S("1/2", "-1/2"))]


def _unit_rational(rng, m):
    """A Gaussian-rational vector of length ``m`` (1 or 2) with ``sum |x|^2 = 1``."""
    z = rng.choice(_UNIT)
    if m == 1:
        return (z,)
    if m != 2:
        raise ValueError("only lengths 1 and 2 are supported")
    r = rng.random()
    if r < 0.4:
        return (z, S(0)) if r < 0.2 else (S(0), z)
    a, b = rng.choice(_PAIRS)
    return (a * z, b * rng.choice(_UNIT))


def random_isotropic_vector(rng, form: HermForm):
    a = _unit_rational(rng, form.p)
    b = _unit_rational(rng, form.q)
    c = _nonzero(rng)
    return tuple(x * c for x in a + b)


def random_nilpotent(rng, n, real=False, rank=None):
    """Random ``N`` with ``N^2 = 0``: a sum of ``x_i phi_i`` with ``phi_j(x_i) = 0``."""
    rank = rank or rng.randint(1, max(1, n // 2))
    while True:
        X = random_subspace(rng, n, rank, real)
        # functionals vanishing on X
        ann = orth_complement(X, HermForm(n, 0))
        if ann.dim < rank:
            continue
        N = [[S(0)] * n for _ in range(n)]
        for i in range(rank):
            phi = tuple(x.conj() for x in ann.basis[i])
            coef = _nonzero(rng, real)
            term = mat_scale(outer(X.basis[i], phi), coef)
            N = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(N, term)]
        if not is_zero_matrix(N) and is_zero_matrix(mat_mul(N, N)):
            return N


def _distinct_points(rng, real_a=None, real_b=None):
    a = random_point(rng, real_a)
    while True:
        b = random_point(rng, real_b)
        if b != a:
            return a, b


def random_element(rng, mode, n, signature=None):
    """One valid simple element for ``mode`` in ``{'glnc', 'glnr', 'upq'}``."""
    for _ in range(100):
        try:
            return _random_element(rng, mode, n, signature)
        except RatLoopError:
            continue
    raise RuntimeError("could not draw a valid element")


def _random_element(rng, mode, n, signature):
    k = rng.randint(1, 2)
    if mode == "glnc":
        if rng.random() < 0.6:
            a, b = _distinct_points(rng)
            V = random_subspace(rng, n, rng.randint(1, n - 1))
            return make_p(a, b, V, random_complement(rng, V))
        return make_m(random_point(rng), k, random_nilpotent(rng, n))
    if mode == "glnr":
        r = rng.random()
        if r < 0.2:
            a, b = _distinct_points(rng, True, True)
            V = random_subspace(rng, n, rng.randint(1, n - 1), real=True)
            return make_p(a, b, V, random_complement(rng, V, real=True), reality="glnr")
        if r < 0.5:
            a = random_point(rng, False)
            b = random_point(rng)
            if b in (a, a.conj()):
                b = S(0)
            V = random_subspace(rng, n, rng.randint(1, n - 1), real=True)
            return make_q_glnr(a, b, V, random_complement(rng, V, real=True))
        if r < 0.75:
            a, b = _distinct_points(rng)
            d = rng.randint(1, n // 2)
            V = random_subspace(rng, n, d)
            W = random_subspace(rng, n, n - 2 * d, real=True) if n > 2 * d else Subspace(n)
            return make_r_glnr(a, b, V, W)
        return make_m(random_point(rng, True), k, random_nilpotent(rng, n, real=True), reality="glnr")
    if mode == "upq":
        form = HermForm(*signature)
        r = rng.random()
        if r < 0.25:
            V = random_subspace(rng, n, rng.randint(1, n - 1))
            if radical(V, form).dim:
                raise RatLoopError("degenerate subspace")
            return make_p_herm(random_point(rng, False), V, signature)
        if r < 0.55:
            a, b = _distinct_points(rng)
            V = Subspace(n, [random_isotropic_vector(rng, form)])
            return make_q_upq(a, b, V, signature)
        v = random_isotropic_vector(rng, form)
        alpha = random_point(rng, True)
        if form.p != form.q and r < 0.8:
            V = Subspace(n, [v])
            D = orth_complement(V + s_vec_space(V, form), form)
            d = random_vector(rng, D.dim)
            dvec = tuple(sum((c * b[j] for c, b in zip(d, D.basis)), S(0)) for j in range(n))
            M = mat_scale(form.ketbra(v, dvec), _nonzero(rng))
            if is_zero_matrix(M):
                raise RatLoopError("zero M")
            return make_n_upq(alpha, k, M, V, signature)
        c = S(0, rng.choice([-2, -1, 1, 2]))
        return make_m(alpha, k, mat_scale(form.ketbra(v, v), c), reality="upq", signature=signature)
    raise ValueError(f"unknown mode {mode!r}")


def random_loop(rng, mode, n, count=None, signature=None):
    """A product of at most six random simple elements; returns ``(elements, loop)``."""
    count = count if count is not None else rng.randint(1, 6)
    els = [random_element(rng, mode, n, signature) for _ in range(count)]
    return els, product_loop(els, n)


# -- inputs for the skew and three-step constructors ---------------------------------

def random_isotropic_subspace(rng, form: HermForm, dim):
    """Span of ``e_i + z_i e_j`` over ``dim`` disjoint (negative, positive) index pairs."""
    if not 1 <= dim <= min(form.p, form.q):
        raise ValueError("dim must be between 1 and min(p, q)")
    neg = rng.sample(range(form.p), dim)
    pos = rng.sample(range(form.p, form.n), dim)
    basis = []
    for i, j in zip(neg, pos):
        b = [S(0)] * form.n
        b[i], b[j] = S(1), rng.choice(_UNIT)
        basis.append(tuple(b))
    # mix the basis so the vectors are not coordinate-aligned
    V = Subspace(form.n, [_combo(rng, Subspace(form.n, basis)) for _ in range(dim)])
    return V if V.dim == dim else Subspace(form.n, basis)


def _combo(rng, V: Subspace, real=False):
    coeffs = [_gauss(rng, real) for _ in V.basis]
    return tuple(sum((c * b[k] for c, b in zip(coeffs, V.basis)), S(0)) for k in range(V.n))


def random_skew_input(rng, form: HermForm):
    """``(V, v, w)`` valid for the skew nilpotent constructor."""
    while True:
        V = random_isotropic_subspace(rng, form, rng.randint(1, min(form.p, form.q)))
        v = _combo(rng, V)
        w = random_vector(rng, form.n)
        z = form.inner(v, w)
        sv = form.s_vec(v)
        vv = form.inner(v, sv)
        if not vv.is_zero():
            # subtract the real part of <v, w> along s(v), for which <v, s(v)> = |v|^2
            w = tuple(a - b * (S(z.real) / vv) for a, b in zip(w, sv))
        if any(not form.inner(b, w).is_zero() for b in V.basis):
            return V, v, w


def random_three_step_input(rng, form: HermForm):
    """``(V, u, v, w)`` valid for the three-step constructor (needs ``p != q``)."""
    if form.p == form.q:
        raise ValueError("requires p != q")
    m = min(form.p, form.q)
    while True:
        V = random_isotropic_subspace(rng, form, m)
        Vp = orth_complement(V, form)
        D = orth_complement(V + s_vec_space(V, form), form)
        d = _combo(rng, D)
        if all(x.is_zero() for x in d):
            continue
        v = tuple(a + b for a, b in zip(_combo(rng, V), d))
        u = random_vector(rng, form.n)
        if Vp.contains(u):
            continue
        w0 = _combo(rng, V)
        uw0 = form.inner(u, w0)
        if uw0.is_zero():
            continue
        c = (form.inner(v, v) * S("-1/2")) / uw0
        return V, u, v, tuple(c * x for x in w0)
