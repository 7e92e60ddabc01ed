"""Factorization of negative rational loops into simple elements.

Three entry points, one per reality condition: :func:`factor_glnc`,
:func:`factor_glnr` and :func:`factor_upq`.  Each returns a list of
:class:`SimpleElement` whose loops multiply, left to right, back to the
input.

The algorithm first removes singularities pairwise by left-multiplying
p/q/r-type reducers until at most one (real) singularity is left, then
peels off nilpotent factors while the filtration tuple ``eps`` strictly
decreases.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass

from .elements import (
    SimpleElement,
    make_m,
    make_n_upq,
    make_p,
    make_p_herm,
    make_q_glnr,
    make_q_upq,
    make_r_glnr,
    s_vec_space,
)
from .errors import (
    AlreadyIdentity,
    NotNegative,
    PreconditionViolated,
    RatLoopError,
    RealityViolated,
    SZeroImpossible,
)
from .linalg import (
    HermForm,
    Subspace,
    build_skew_nilpotent,
    build_three_step,
    complement,
    eye,
    from_columns,
    image,
    inverse,
    is_isotropic,
    isotropic_vector_avoiding,
    kernel,
    mat_vec,
    orth_complement,
    radical,
    solve_many,
    outer,
    vec_scale,
    zeros,
)
from .loops import RationalLoop, check_glnr, check_upq
from .poly import Poly
from .scalars import ONE, S, sort_key

log = logging.getLogger(__name__)


class FactorizationError(RatLoopError):
    """An internal progress guarantee failed (should never happen)."""


# -- singularity bookkeeping ---------------------------------------------------

def _singular_points(g: RationalLoop, cands):
    dp = g.det_poly()
    return [c for c in cands if c in g.poles or dp(c).is_zero()]


def _schedule(points):
    """Nonreal points first (one per conjugate pair, Im > 0), then real ascending."""
    nonreal = sorted({p if p.imag.sign() > 0 else p.conj() for p in points if not p.is_real()},
                     key=sort_key)
    real = sorted((p for p in points if p.is_real()), key=sort_key)
    return nonreal, real


def _fallback_beta(points):
    j = 0
    while S(j) in points:
        j += 1
    return S(j)


@dataclass(frozen=True)
class ProgressStep:
    """One monotone-progress check: ``measure`` went from ``before`` to ``after``."""

    measure: str  # "pole_data", "det_zero_order" or "eps"
    point: object
    before: object
    after: object
    ok: bool


_progress_logs = []


@contextmanager
def progress_log():
    """Collect every :class:`ProgressStep` checked while the context is active."""
    log = []
    _progress_logs.append(log)
    try:
        yield log
    finally:
        _progress_logs.remove(log)


def _progress(measure, point, before, after, ok):
    for log in _progress_logs:
        log.append(ProgressStep(measure, point, before, after, ok))
    if not ok:
        raise FactorizationError(f"{measure} did not decrease at {point}")


class _Run:
    """Working state: ``g_input = product(out) * g``."""

    def __init__(self, g: RationalLoop, hints=(), check=None, cands=None):
        self.g = g
        self.out = []
        self.cands = set(cands) if cands is not None else set(g.poles) | set(g.zero_candidates(hints))
        self.check = check  # optional callable asserting reality after each step

    def apply(self, reducer: SimpleElement):
        self.g = reducer.loop * self.g
        self.out.append(reducer.inverse())
        self.cands.update(reducer.singular_points())
        if self.check is not None and not self.check(self.g):
            raise FactorizationError("reality lost after multiplication")

    def points(self):
        pts = _singular_points(self.g, self.cands)
        self.cands = set(pts)
        return pts


def _leading_moebius(g, alpha, beta):
    """Leading coefficient in ``t = (l - alpha)/(l - beta)``: ``(alpha - beta)^-k A_k``."""
    k = g.pole_order(alpha)
    top = g.laurent(alpha, -k, -k)[-k]
    c = ((alpha - beta) ** k).inv() if k else ONE
    return k, [[x * c for x in row] for row in top]


def _det_zero_order(g, alpha):
    from .poly import root_multiplicity
    return root_multiplicity(g.det_poly(), alpha)


def _remove_pair(run: _Run, alpha, beta, pole_step, zero_step, early=None):
    """Left-multiply reducers until ``alpha`` is no longer singular.

    ``early`` is tried after each pole step; returning True means it removed
    the rest of the singularity at ``alpha`` itself.
    """
    guard = 0
    while alpha in run.g.poles:
        before = run.g.pole_data(alpha)
        k, gk = _leading_moebius(run.g, alpha, beta)
        run.apply(pole_step(gk))
        after = run.g.pole_data(alpha)
        _progress("pole_data", alpha, before, after, after is None or after < before)
        guard += 1
        if after is not None and early is not None and early():
            return
    while run.g.det_poly()(alpha).is_zero():
        before = _det_zero_order(run.g, alpha)
        g0 = run.g.eval(alpha)
        run.apply(zero_step(g0))
        after = _det_zero_order(run.g, alpha)
        _progress("det_zero_order", alpha, before, after,
                  alpha not in run.g.poles and after < before)


# -- filtration and eps ----------------------------------------------------------

@dataclass
class Filtration:
    A: list  # A[0] = Id, ..., A[r]
    K: list  # K[0] .. K[r+1]
    V: list  # V[0] .. V[r+1]

    @property
    def r(self):
        return len(self.A) - 1

    @property
    def eps(self):
        return tuple(self.K[i + 1].dim - self.K[i].dim for i in range(self.r + 1))


def filtration(g: RationalLoop, alpha) -> Filtration:
    n = g.n
    pp = g.principal_part(alpha)
    r = max(pp, default=0)
    A = [eye(n)] + [pp.get(i, [[S(0)] * n for _ in range(n)]) for i in range(1, r + 1)]
    K = [None] * (r + 2)
    K[r + 1] = Subspace.full(n)
    for i in range(r, -1, -1):
        K[i] = K[i + 1].intersect(kernel(A[i]))
    V = [None] * (r + 2)
    V[r + 1] = Subspace.zero(n)
    for i in range(r, -1, -1):
        V[i] = V[i + 1] + K[i + 1].image_under(A[i])
    return Filtration(A, K, V)


def eps_less(a, b) -> bool:
    """Reverse-lexicographic comparison from the top index."""
    m = max(len(a), len(b))
    a = tuple(a) + (0,) * (m - len(a))
    b = tuple(b) + (0,) * (m - len(b))
    return a[::-1] < b[::-1]


def _image_in(A, V: Subspace, K: Subspace | None = None) -> bool:
    vecs = K.basis if K is not None else [tuple(ONE if j == i else S(0) for j in range(V.n))
                                          for i in range(V.n)]
    return all(V.contains(mat_vec(A, b)) for b in vecs)


def _s_and_l(F: Filtration):
    """The indices of the basic induction step and the witness vector."""
    r = F.r
    s = r
    while s >= 1 and _image_in(F.A[s - 1], F.V[s - 1]):
        s -= 1
    if s == 0:
        raise SZeroImpossible("all images lie in the filtration; loop cannot be nonconstant")
    Vs1 = F.V[s - 1]
    for l in range(s + 1, r + 2):
        bad = [b for b in F.K[l].basis if not Vs1.contains(mat_vec(F.A[s - 1], b))]
        if bad:
            return s, l, bad[0]
    raise FactorizationError("no index l found")


def _rank_one_nilpotent(Vs1: Subspace, w, x):
    """``N = x phi`` with ``phi(Vs1) = 0`` and ``phi(w) = 1``."""
    n = Vs1.n
    cols = list(Vs1.basis) + [w]
    acc = Subspace(n, cols)
    for i in range(n):
        e = tuple(ONE if j == i else S(0) for j in range(n))
        if not acc.contains(e):
            cols.append(e)
            acc = acc + Subspace(n, [e])
    Binv = inverse(from_columns(cols, n))
    phi = Binv[Vs1.dim]
    return outer(x, phi)


def single_singularity_reduce(g: RationalLoop, alpha=None, reality="none", F=None):
    """One induction step for a single-pole loop: ``(factor, g', filtration of g')``.

    ``reality`` is ``"none"`` or ``"glnr"``; the returned factor is an
    m-element and ``eps(g') < eps(g)``.
    """
    if g.is_identity():
        raise AlreadyIdentity("loop is already the identity")
    if alpha is None:
        if len(g.poles) != 1:
            raise PreconditionViolated("loop must have exactly one pole")
        alpha = next(iter(g.poles))
    alpha = S(alpha)
    F = F if F is not None else filtration(g, alpha)
    s, l, v = _s_and_l(F)
    w = mat_vec(F.A[s - 1], v)
    x = vec_scale(mat_vec(F.A[l - 1], v), -1)
    N = _rank_one_nilpotent(F.V[s - 1], w, x)
    factor = make_m(alpha, l - s, N, reality="glnr" if reality == "glnr" else None)
    g2 = factor.loop * g
    F2 = None
    if not g2.is_identity():
        F2 = filtration(g2, alpha)
        _progress("eps", alpha, F.eps, F2.eps, eps_less(F2.eps, F.eps))
    return factor, g2, F2


def _eps_bound(F: Filtration) -> int:
    return 2 * sum(i * a for i, a in enumerate(F.eps)) + 2


def _single_phase(run: _Run, reality):
    if run.g.is_identity():
        return
    if len(run.g.poles) != 1 or run.points() != list(run.g.poles):
        raise FactorizationError("expected exactly one singularity")
    alpha = next(iter(run.g.poles))
    if run.g.det() != _one_ratfunc():
        raise FactorizationError("determinant of a single-singularity loop must be 1")
    F = filtration(run.g, alpha)
    bound = _eps_bound(F)
    steps = 0
    while not run.g.is_identity():
        factor, g2, F = single_singularity_reduce(run.g, alpha, reality, F)
        run.g = g2
        run.out.append(factor.inverse())
        steps += 1
        if steps > bound:
            raise FactorizationError("step ceiling exceeded")


def _one_ratfunc():
    from .poly import Poly, RatFunc
    return RatFunc(Poly.const(1))


def _check_negative(g: RationalLoop):
    if not g.is_negative():
        raise NotNegative("loop must equal Id at infinity")


# -- GL(n, C) -------------------------------------------------------------------

def _glnc_pole_step(alpha, beta):
    def step(gk):
        V = image(gk)
        return make_p(alpha, beta, V, complement(V))
    return step


def _glnc_zero_step(alpha, beta):
    def step(g0):
        W = image(g0)
        return make_p(beta, alpha, complement(W), W)
    return step


def _real_pair_phase_glnc(run: _Run, real_p=False):
    reality = "glnr" if real_p else None
    while True:
        pts = run.points()
        if len(pts) < 2:
            return
        order = sorted((p for p in pts if not p.is_real()), key=sort_key) + sorted(
            (p for p in pts if p.is_real()), key=sort_key)
        poles = [p for p in order if p in run.g.poles]
        if not poles:
            raise FactorizationError("several singularities but no pole")
        local = [p for p in poles if real_p is False or p.is_real()]
        if any(_strip_local(run, a, lambda r: _single_phase(r, reality or "none")) for a in local):
            continue
        alpha = next((p for p in poles if _det_order(run.g, p)), poles[0])
        beta = _opposite_partner(run.g, alpha, [p for p in order if p != alpha])

        def pole_step(gk, a=alpha, b=beta):
            V = image(gk)
            return make_p(a, b, V, complement(V), reality=reality)

        def zero_step(g0, a=alpha, b=beta):
            W = image(g0)
            return make_p(b, a, complement(W), W, reality=reality)

        _remove_pair(run, alpha, beta, pole_step, zero_step,
                     lambda a=alpha: a in local and _strip_local(
                         run, a, lambda r: _single_phase(r, reality or "none")))


def factor_glnc(g: RationalLoop, hints=()):
    """Factor a negative loop into p- and m-elements."""
    _check_negative(g)
    run = _Run(g, hints)
    _real_pair_phase_glnc(run)
    _single_phase(run, "none")
    return run.out


# -- GL(n, R) reality ----------------------------------------------------------------

def _det_order(g: RationalLoop, p) -> int:
    """Order of ``det g`` at ``p`` (negative at an excess of poles)."""
    return _det_zero_order(g, p) - g.n * g.pole_order(p)


def _opposite_partner(g, alpha, cands):
    d0 = _det_order(g, alpha)
    opp = [p for p in cands if d0 * _det_order(g, p) < 0]
    return max(opp, key=lambda p: abs(_det_order(g, p))) if opp else cands[0]


def _pick_beta(pts, alpha, g=None):
    """A partner for ``alpha``: real points first and, given ``g``, one whose
    determinant order has the opposite sign so that transfers cancel."""
    nonreal, real = _schedule(pts)
    cands = [p for p in real + nonreal if p != alpha and p != alpha.conj() and p.conj() != alpha]
    if not cands:
        return _fallback_beta(set(pts) | {alpha, alpha.conj()})
    return _opposite_partner(g, alpha, cands) if g is not None else cands[0]


def _glnr_pole_step(alpha, beta):
    def step(gk):
        V = image(gk)
        V0 = V.intersect(V.conj())
        if V0.dim:
            return make_q_glnr(alpha, beta, V0, complement(V0))
        return make_r_glnr(alpha, beta, V, complement(V + V.conj()))
    return step


def _glnr_zero_step(alpha, beta):
    def step(g0):
        U = image(g0)
        W0 = U.intersect(U.conj())
        W1 = complement(W0, U)
        if W1.dim:
            W2 = complement(U + U.conj())
            return make_r_glnr(beta, alpha, W1.conj(), W0 + W2)
        return make_q_glnr(beta, alpha, complement(U), U)
    return step


def factor_glnr(g: RationalLoop, hints=(), check_steps=False):
    """Factor a negative loop with ``conj(g(conj l)) = g(l)`` into real simple elements."""
    _check_negative(g)
    rep = check_glnr(g)
    if not rep.ok:
        raise RealityViolated(f"loop is not real; first mismatch at entry {rep.witness}")
    run = _Run(g, hints, check=(lambda h: check_glnr(h).ok) if check_steps else None)
    while True:
        pts = run.points()
        nonreal, _ = _schedule(pts)
        if not nonreal:
            break
        alpha = nonreal[0]
        beta = _pick_beta(pts, alpha, run.g)
        _remove_pair(run, alpha, beta, _glnr_pole_step(alpha, beta), _glnr_zero_step(alpha, beta))
        if run.g.is_singular_at(alpha.conj()):
            raise FactorizationError("conjugate singularity survived")
    _real_pair_phase_glnc(run, real_p=True)
    _single_phase(run, "glnr")
    return run.out


# -- U(p, q) reality --------------------------------------------------------------------

def _upq_pole_step(alpha, beta, form):
    sig = (form.p, form.q)

    def step(gk):
        V = image(gk)
        R = radical(V, form)
        if R.dim:
            return make_q_upq(alpha, beta, R, sig)
        return make_p_herm(alpha, V, sig)
    return step


def _upq_zero_step(alpha, beta, form):
    sig = (form.p, form.q)

    def step(g0):
        U = image(g0)
        R = radical(U, form)
        if R.dim == 0:
            return make_p_herm(alpha.conj(), orth_complement(U, form), sig)
        return make_q_upq(beta, alpha, s_vec_space(R, form), sig)
    return step


def local_negative_part(g: RationalLoop, alpha):
    """The loop ``H`` singular only at ``alpha`` with ``H(inf) = Id`` and
    ``H^-1 g`` holomorphic and invertible at ``alpha``; ``None`` if none exists.

    ``H^-1`` is a polynomial in ``1/(lambda - alpha)`` of degree at most the
    pole order ``k``, so its coefficients solve a linear system built from
    the Laurent coefficients of ``g``.
    """
    alpha = S(alpha)
    k = g.pole_order(alpha)
    n = g.n
    if k == 0:
        return RationalLoop.identity(n)
    if _det_zero_order(g, alpha) != n * k:
        return None  # the determinant must be a unit at alpha
    G = g.laurent(alpha, 1 - 2 * k, k - 1)

    def coef(j):
        return G[j] if j >= -k else zeros(n)

    # rows of X = H^-1: sum_i X_i G_{i-m} = -G_{-m} for m = 1..2k, all rows at once
    A = []
    for m in range(1, 2 * k + 1):
        for c in range(n):
            A.append([coef(i - m)[a][c] for i in range(1, k + 1) for a in range(n)]
                     + [-coef(-m)[r][c] for r in range(n)])
    sols = solve_many(A, k * n)
    if sols is None:
        return None
    X = [zeros(n) for _ in range(k + 1)]
    for r, sol in enumerate(sols):
        for i in range(1, k + 1):
            for a in range(n):
                X[i][r][a] = sol[(i - 1) * n + a]
    X[0] = eye(n)
    lin = Poly.linear(alpha)
    terms = [(lin ** (k - i), X[i]) for i in range(k + 1)]
    Xloop = RationalLoop.from_parts(n, terms, {alpha: k})
    if Xloop.det() != _one_ratfunc():
        raise FactorizationError("local negative part is not unimodular")
    return Xloop.inverse()


def _strip_local(run: _Run, alpha, single_phase):
    """Remove the whole singularity at ``alpha`` when ``g`` splits there."""
    if alpha not in run.g.poles:
        return False
    H = local_negative_part(run.g, alpha)
    if H is None or H.is_identity():
        return False
    sub = _Run(H, cands=[alpha])
    single_phase(sub)
    run.g = H.inverse() * run.g
    run.out.extend(sub.out)
    if run.check is not None and not run.check(run.g):
        raise FactorizationError("reality lost after local split")
    if run.g.is_singular_at(alpha):
        raise FactorizationError("local split left a singularity")
    return True


def _upq_real_pair_phase(run: _Run, form):
    sig = (form.p, form.q)
    while True:
        pts = run.points()
        if len(pts) < 2:
            return
        _, real = _schedule(pts)
        poles = [p for p in real if p in run.g.poles]
        if not poles:
            raise FactorizationError("several singularities but no pole")
        if any(_strip_local(run, a, lambda r: _upq_single_phase(r, form)) for a in poles):
            continue
        alpha = poles[0]
        beta = next(p for p in real if p != alpha)
        before = run.g.pole_data(alpha)
        _, gk = _leading_moebius(run.g, alpha, beta)
        V = image(gk)
        if not is_isotropic(V, form):
            raise FactorizationError("leading coefficient image is not isotropic")
        run.apply(make_q_upq(beta, alpha, s_vec_space(V, form), sig))
        after = run.g.pole_data(alpha)
        _progress("pole_data", alpha, before, after, after is None or after < before)


def _upq_mstep(F: Filtration, alpha, form):
    """Generalized m-step; ``None`` if no suitable isotropic subspace exists."""
    s, l, v = _s_and_l(F)
    w = mat_vec(F.A[s - 1], v)
    x = vec_scale(mat_vec(F.A[l - 1], v), -1)
    n = form.n
    if not form.inner(x, w).is_zero():
        U = Subspace(n, [x])
    else:
        Z = F.V[s] + F.K[l - 1].image_under(F.A[s - 1])
        S_ = orth_complement(Z, form).intersect(orth_complement(Subspace(n, [x]), form))
        u = isotropic_vector_avoiding(S_, form, w)
        if u is None:
            return None
        U = Subspace(n, [x, u])
    N = build_skew_nilpotent(U, x, w, form)
    return [make_m(alpha, l - s, N, reality="upq", signature=(form.p, form.q))]


def _perp_contains(V: Subspace, form, y) -> bool:
    return all(form.inner(b, y).is_zero() for b in V.basis)


def _upq_three_step_data(F: Filtration, form):
    """Indices ``(k, s, l)`` and the witness ``v`` of the unequal-signature step."""
    s_idx, _, _ = _s_and_l(F)
    k = s_idx - 1
    V = F.V[k]
    if k < 1 or not is_isotropic(V, form) or V.dim != min(form.p, form.q):
        raise FactorizationError("no maximal isotropic filtration space available")
    n = form.n
    basis = [tuple(ONE if j == i else S(0) for j in range(n)) for i in range(n)]

    def img_perp(A, vecs):
        return all(_perp_contains(V, form, mat_vec(A, b)) for b in vecs)

    if not img_perp(F.A[k], basis):
        raise FactorizationError("im A_k is not perpendicular to V")
    s = 1
    while img_perp(F.A[k - s], basis):
        s += 1
    for l in range(-s + 1, F.r - k + 1):
        bad = [b for b in F.K[k + l + 1].basis
               if not _perp_contains(V, form, mat_vec(F.A[k - s], b))]
        if bad:
            return k, s, l, bad[0], V
    raise FactorizationError("no index l found")


def _upq_nstep(g: RationalLoop, F: Filtration, alpha, form):
    sig = (form.p, form.q)
    k, s, l, v, V = _upq_three_step_data(F, form)
    u = mat_vec(F.A[k - s], v)
    y = mat_vec(F.A[k + l], v)
    z = form.inner(u, y)
    d = l - s
    if d % 2 or d > 0 or z.is_imaginary():
        N = build_skew_nilpotent(V, vec_scale(y, -1), u, form)
        return [make_m(alpha, s + l, N, reality="upq", signature=sig)]
    h = k + d // 2
    out = []
    if not z.is_real():
        c = S(0, -1) * z.imag / z
        N1 = build_skew_nilpotent(V, vec_scale(y, c), u, form)
        m1 = make_m(alpha, s + l, N1, reality="upq", signature=sig)
        out.append(m1)
        g = m1.loop * g
        F = filtration(g, alpha)
        u = mat_vec(F.A[k - s], v)
        y = mat_vec(F.A[k + l], v)
    M, _ = build_three_step(V, u, mat_vec(F.A[h], v), y, form)
    out.append(make_n_upq(alpha, (s + l) // 2, M, V, sig))
    return out


def _upq_single_phase(run: _Run, form):
    if run.g.is_identity():
        return
    pts = run.points()
    if len(pts) != 1 or pts[0] not in run.g.poles:
        raise FactorizationError("expected exactly one singularity")
    alpha = pts[0]
    F = filtration(run.g, alpha)
    bound = _eps_bound(F)
    steps = 0
    while not run.g.is_identity():
        factors = _upq_mstep(F, alpha, form)
        if factors is None:
            factors = _upq_nstep(run.g, F, alpha, form)
        g2 = run.g
        for f in factors:
            g2 = f.loop * g2
        if not g2.is_identity():
            F2 = filtration(g2, alpha)
            _progress("eps", alpha, F.eps, F2.eps, eps_less(F2.eps, F.eps))
            F = F2
        run.g = g2
        for f in factors:
            run.out.append(f.inverse())
        steps += 1
        if steps > bound:
            raise FactorizationError("step ceiling exceeded")


def factor_upq(g: RationalLoop, p: int, q: int, hints=(), check_steps=False):
    """Factor a negative loop satisfying the U(p, q) reality condition."""
    if p + q != g.n:
        raise PreconditionViolated("signature does not match the dimension")
    _check_negative(g)
    rep = check_upq(g, p, q)
    if not rep.ok:
        raise RealityViolated(f"loop violates the U({p},{q}) condition at entry {rep.witness}")
    form = HermForm(p, q)
    run = _Run(g, hints, check=(lambda h: check_upq(h, p, q).ok) if check_steps else None)
    while True:
        pts = run.points()
        nonreal, _ = _schedule(pts)
        if not nonreal:
            break
        alpha = nonreal[0]
        beta = _pick_beta(pts, alpha)
        _remove_pair(run, alpha, beta, _upq_pole_step(alpha, beta, form),
                     _upq_zero_step(alpha, beta, form))
        if run.g.is_singular_at(alpha.conj()):
            # the conjugate point is cleared by reality; handle it explicitly otherwise
            a2 = alpha.conj()
            _remove_pair(run, a2, beta, _upq_pole_step(a2, beta, form), _upq_zero_step(a2, beta, form))
    _upq_real_pair_phase(run, form)
    _upq_single_phase(run, form)
    return run.out


def factor(g: RationalLoop, mode="glnc", signature=None, hints=()):
    if mode == "glnc":
        return factor_glnc(g, hints)
    if mode == "glnr":
        return factor_glnr(g, hints)
    if mode == "upq":
        if signature is None:
            raise PreconditionViolated("upq mode needs a signature")
        return factor_upq(g, *signature, hints=hints)
    raise PreconditionViolated(f"unknown mode {mode!r}")
