"""Closed-form dressing of positive loops by nilpotent simple elements.

Exact functions take a polynomial :class:`RationalLoop` ``f`` and return the
dressed loop, asserting that its principal part vanishes.  The ``*_jets``
functions take numpy jets of ``f`` at the dressing point instead.
"""

from __future__ import annotations

import numpy as np

from .elements import SimpleElement, make_m
from .errors import NotNilpotent, NotWellDefined, PreconditionViolated, RatLoopError
from .linalg import (
    eye,
    inverse,
    is_zero_matrix,
    mat_add,
    mat_mul,
    mat_scale,
    mat_sub,
)
from .loops import RationalLoop
from .poly import Poly
from .scalars import S


class DressingError(RatLoopError):
    """A dressed loop kept a pole (an internal guarantee failed)."""


def _check_n(N):
    if not is_zero_matrix(mat_mul(N, N)):
        raise NotNilpotent("N^2 != 0")


def _check_positive(f: RationalLoop):
    if f.poles:
        raise PreconditionViolated("positive loop must be polynomial")


def _jets(f: RationalLoop, alpha, upto):
    J = f.laurent(alpha, 0, upto)
    return [J[i] for i in range(upto + 1)]


def _assert_holomorphic(g: RationalLoop, alpha, what):
    if g.pole_order(alpha):
        raise DressingError(f"{what}: principal part at {alpha} does not vanish")


# -- simple pole ------------------------------------------------------------------

def tilde_n(N, f0, f1, stage=None):
    """``f0^-1 (Id + N f1)^-1 N f0`` with ``f1 = f'(alpha) f(alpha)^-1``."""
    n = len(N)
    A = inverse(mat_add(eye(n), mat_mul(N, f1)), stage)
    return mat_mul(mat_mul(inverse(f0, stage), A), mat_mul(N, f0))


def dress_simple_pole(alpha, N, f: RationalLoop, stage=None):
    """``(N~, m_{alpha,1,N} f m_{alpha,1,N~}^-1)``; the dressed loop is polynomial."""
    alpha = S(alpha)
    _check_n(N)
    _check_positive(f)
    f0, fd = _jets(f, alpha, 1)
    f1 = mat_mul(fd, inverse(f0, stage))
    Nt = tilde_n(N, f0, f1, stage)
    if not is_zero_matrix(mat_mul(Nt, Nt)):
        raise DressingError("N~ is not two-step nilpotent")
    m = make_m(alpha, 1, N).loop
    mt_inv = make_m(alpha, 1, mat_scale(Nt, -1)).loop
    dressed = m * f * mt_inv
    _assert_holomorphic(dressed, alpha, "simple-pole dressing")
    return Nt, dressed


# -- pole of order two ----------------------------------------------------------------

def order2_coefficients(N, f0, f1, f2, f3):
    """``(M1, M2)`` from the Taylor coefficients ``f0..f3`` at the pole."""
    Nf = [mat_mul(N, fi) for fi in (f0, f1, f2, f3)]
    A = mat_add(Nf[2], f0)
    Ainv = inverse(A)
    X = mat_mul(mat_add(Nf[3], f1), Ainv)
    B = mat_sub(A, mat_mul(X, Nf[1]))
    M1 = mat_mul(inverse(B), mat_sub(mat_mul(X, Nf[0]), Nf[1]))
    M2 = mat_scale(mat_mul(Ainv, mat_add(mat_mul(Nf[1], M1), Nf[0])), -1)
    return M1, M2


def order2_principal_part(N, jets, M1, M2):
    """The four principal-part coefficients, highest order first."""
    f0, f1, f2, f3 = jets
    Nf = [mat_mul(N, fi) for fi in (f0, f1, f2, f3)]
    t4 = mat_mul(Nf[0], M2)
    t3 = mat_add(mat_mul(Nf[1], M2), mat_mul(Nf[0], M1))
    t2 = mat_add(mat_add(mat_mul(mat_add(Nf[2], f0), M2), mat_mul(Nf[1], M1)), Nf[0])
    t1 = mat_add(mat_add(mat_mul(mat_add(Nf[3], f1), M2), mat_mul(mat_add(Nf[2], f0), M1)), Nf[1])
    return [t4, t3, t2, t1]


def dress_order2(alpha, N, f: RationalLoop):
    """``(M1, M2, m_{alpha,2,N} f (Id + M1/(l-alpha) + M2/(l-alpha)^2))``."""
    alpha = S(alpha)
    _check_n(N)
    _check_positive(f)
    n = f.n
    jets = _jets(f, alpha, 3)
    M1, M2 = order2_coefficients(N, *jets)
    if not all(is_zero_matrix(T) for T in order2_principal_part(N, jets, M1, M2)):
        raise DressingError("order-two coefficient equations do not vanish")
    lin = Poly.linear(alpha)
    h = RationalLoop.from_parts(n, [(lin ** 2, eye(n)), (lin, M1), (Poly.const(1), M2)], {alpha: 2})
    dressed = make_m(alpha, 2, N).loop * f * h
    _assert_holomorphic(dressed, alpha, "order-two dressing")
    return M1, M2, dressed


# -- permutability ----------------------------------------------------------------

def _hat(c, A, B, stage):
    """``(Id + cB)(Id + c^2 A B)^-1 A (Id - cB)``."""
    n = len(A)
    I = eye(n)
    mid = inverse(mat_add(I, mat_scale(mat_mul(A, B), c * c)), stage)
    left = mat_add(I, mat_scale(B, c))
    right = mat_sub(I, mat_scale(B, c))
    return mat_mul(mat_mul(left, mid), mat_mul(A, right))


def permute(alpha, N, beta, M):
    """``(N^, M^)`` with ``m_{beta,1,M^} m_{alpha,1,N} = m_{alpha,1,N^} m_{beta,1,M}``."""
    alpha, beta = S(alpha), S(beta)
    if alpha == beta:
        raise PreconditionViolated("alpha and beta must differ")
    _check_n(N)
    _check_n(M)
    Nh = _hat((alpha - beta).inv(), N, M, 1)
    Mh = _hat((beta - alpha).inv(), M, N, 2)
    return Nh, Mh


def permutability_holds(alpha, N, beta, M, Nh, Mh) -> bool:
    lhs = make_m(beta, 1, Mh).loop * make_m(alpha, 1, N).loop
    rhs = make_m(alpha, 1, Nh).loop * make_m(beta, 1, M).loop
    return lhs == rhs


# -- twisted pair ----------------------------------------------------------------

def dress_twisted_pair(s: SimpleElement, f: RationalLoop):
    """Dress at ``alpha`` with ``N``, then at ``-alpha`` with ``N'``: ``(N~, N~', dressed)``."""
    if s.kind != "S":
        raise PreconditionViolated("expected an s-element")
    N = [list(r) for r in s.N]
    Np = [list(r) for r in s.N_prime]
    Nt, f1 = dress_simple_pole(s.alpha, N, f, stage=1)
    Ntp, dressed = dress_simple_pole(-s.alpha, Np, f1, stage=2)
    _assert_holomorphic(dressed, s.alpha, "twisted dressing")
    return Nt, Ntp, dressed


# -- numeric jets ----------------------------------------------------------------

def _ninv(A, stage=None, cond_max=1e12):
    if not np.all(np.isfinite(A)) or np.linalg.cond(A) > cond_max:
        raise NotWellDefined("matrix is numerically singular", stage)
    return np.linalg.inv(A)


def tilde_n_jets(N, f0, f1, stage=None):
    """Numeric ``N~`` from ``f0 = f(alpha)`` and ``f1 = f'(alpha) f(alpha)^-1``."""
    n = N.shape[0]
    return _ninv(f0, stage) @ _ninv(np.eye(n) + N @ f1, stage) @ N @ f0


def order2_coefficients_jets(N, f0, f1, f2, f3):
    A = N @ f2 + f0
    Ainv = _ninv(A)
    X = (N @ f3 + f1) @ Ainv
    M1 = _ninv(A - X @ N @ f1) @ (X @ N @ f0 - N @ f1)
    M2 = -Ainv @ (N @ f1 @ M1 + N @ f0)
    return M1, M2


__all__ = [
    "DressingError",
    "dress_order2",
    "dress_simple_pole",
    "dress_twisted_pair",
    "order2_coefficients",
    "order2_coefficients_jets",
    "order2_principal_part",
    "permutability_holds",
    "permute",
    "tilde_n",
    "tilde_n_jets",
]
