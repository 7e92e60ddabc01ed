import random

import pytest

from ratloop.errors import PreconditionViolated
from ratloop.linalg import (
    HermForm,
    Subspace,
    build_skew_nilpotent,
    build_three_step,
    complement,
    conj_split,
    is_isotropic,
    is_zero_matrix,
    isotropic_vector_in,
    mat_eq,
    mat_mul,
    mat_scale,
    mat_vec,
    orth_complement,
    rank,
    rref_kernel_image,
)
from ratloop.sampling import random_subspace, random_vector
from ratloop.scalars import I, S

e1, e2, e3 = (S(1), S(0), S(0)), (S(0), S(1), S(0)), (S(0), S(0), S(1))


def sp(n, *vs):
    return Subspace(n, [tuple(S(x) if not hasattr(x, "conj") else x for x in v) for v in vs])


def M(rows):
    return [[S(x) if not hasattr(x, "conj") else x for x in r] for r in rows]


def test_kernel_image():
    ker, im, r = rref_kernel_image(M([[1, 0], [0, 1]]))
    assert (ker.dim, im, r) == (0, Subspace.full(2), 2)
    ker, im, r = rref_kernel_image(M([[1, 1], [1, 1]]))
    assert ker == sp(2, (1, -1)) and im == sp(2, (1, 1)) and r == 1
    ker, im, r = rref_kernel_image(M([[0, 1], [0, 0]]))
    assert ker == sp(2, (1, 0)) and im == sp(2, (1, 0)) and r == 1


def test_complement():
    assert complement(sp(2, (1, 0))) == sp(2, (0, 1))
    W = complement(sp(2, (1, 1)))
    assert W == sp(2, (0, 1)) and (sp(2, (1, 1)) + W).dim == 2
    assert complement(Subspace(2)) == Subspace.full(2)


def test_complement_is_direct_on_random_subspaces(rng):
    for _ in range(200):
        n = rng.randint(1, 5)
        V = random_subspace(rng, n, rng.randint(0, n))
        W = complement(V)
        assert V.dim + W.dim == n
        assert rank([list(b) for b in V.basis + W.basis]) == n if n else True


def test_conj_split():
    inv, real, W1 = conj_split(sp(2, (I, 0)))
    assert inv == sp(2, (I, 0)) and [tuple(v) for v in real] == [(S(1), S(0))]
    inv, _, W1 = conj_split(sp(2, (1, I)))
    assert inv.dim == 0 and W1 == sp(2, (1, I))
    inv, _, _ = conj_split(Subspace.full(2))
    assert inv == Subspace.full(2)


def test_conj_split_properties(rng):
    for _ in range(50):
        n = rng.randint(2, 4)
        V = random_subspace(rng, n, rng.randint(1, n))
        inv, real, W1 = conj_split(V)
        assert inv.conj() == inv
        assert all(tuple(x.conj() for x in v) == tuple(v) for v in real)
        assert (inv + W1) == V and inv.dim + W1.dim == V.dim
        assert W1.intersect(W1.conj()).dim == 0


def test_orth_complement():
    f = HermForm(1, 1)
    assert orth_complement(sp(2, (1, 0)), f) == sp(2, (0, 1))
    assert orth_complement(sp(2, (1, 1)), f) == sp(2, (1, 1))
    assert orth_complement(Subspace.full(2), f).dim == 0


def test_orth_complement_involution(rng):
    for _ in range(50):
        p, q = rng.randint(0, 2), rng.randint(1, 2)
        f = HermForm(p, q)
        V = random_subspace(rng, f.n, rng.randint(1, f.n))
        Vp = orth_complement(V, f)
        assert V.dim + Vp.dim == f.n
        assert orth_complement(Vp, f) == V


def test_adjoint_identity(rng):
    f = HermForm(1, 2)
    for _ in range(20):
        A = [list(random_vector(rng, 3)) for _ in range(3)]
        v, w = random_vector(rng, 3), random_vector(rng, 3)
        assert f.inner(mat_vec(A, v), w) == f.inner(v, mat_vec(f.adjoint(A), w))


def test_isotropic_vector_in():
    f = HermForm(1, 1)
    v = isotropic_vector_in(Subspace.full(2), f)
    assert v is not None and f.inner(v, v).is_zero()
    assert isotropic_vector_in(sp(2, (0, 1)), f) is None
    # restricted Gram diag(-1, 3) forces a square root of 3
    f = HermForm(1, 2)
    V = sp(3, (1, 0, 0), (0, 1, 1))
    v = isotropic_vector_in(V, f)
    assert v is not None and V.contains(v) and f.inner(v, v).is_zero()
    assert any(x.tower for x in v)


def test_skew_nilpotent_worked_instance():
    f = HermForm(1, 1)
    V = sp(2, (1, 1))
    N = build_skew_nilpotent(V, (S(1), S(1)), (I, -I), f)
    half = S(0, "1/2")
    assert mat_eq(N, [[-half, half], [-half, half]])
    assert is_zero_matrix(mat_mul(N, N))
    assert mat_eq(f.adjoint(N), mat_scale(N, -1))
    assert mat_vec(N, (I, -I)) == (S(1), S(1))


def test_skew_nilpotent_edge_cases():
    f = HermForm(1, 1)
    V = sp(2, (1, 1))
    assert is_zero_matrix(build_skew_nilpotent(V, (S(0), S(0)), (S(1), S(0)), f))
    with pytest.raises(PreconditionViolated):
        build_skew_nilpotent(V, (S(1), S(1)), (S(1), S(1)), f)


def test_three_step_worked_instance():
    f = HermForm(1, 2)
    V = sp(3, (1, 0, 1))
    u, v = e3, e2
    w = (S("-1/2"), S(0), S("-1/2"))
    Mm, N = build_three_step(V, u, v, w, f)
    assert mat_vec(Mm, e2) == (S(1), S(0), S(1))
    assert is_zero_matrix(mat_mul(N, mat_mul(N, N)))
    lhs = [a * S("1/2") + b + c for a, b, c in zip(mat_vec(mat_mul(N, N), u), mat_vec(N, v), w)]
    assert all(x.is_zero() for x in lhs)


def test_three_step_rejects_bad_inputs():
    f = HermForm(1, 2)
    V = sp(3, (1, 0, 1))
    with pytest.raises(PreconditionViolated):
        build_three_step(V, e3, e2, (S(0), S(0), S(0)), f)  # 2<u, w> + <v, v> != 0
    with pytest.raises(PreconditionViolated):
        build_three_step(V, e3, e2, e1, f)  # w not in V
    with pytest.raises(PreconditionViolated):
        build_three_step(sp(2, (1, 1)), (S(0), S(1)), (S(1), S(1)), (S(1), S(1)), HermForm(1, 1))  # p == q


def test_three_step_rescaled_instance():
    # scaling u by 2 and w by 1/2 keeps 2<u, w> + <v, v> = 0
    f = HermForm(1, 2)
    V = sp(3, (1, 0, 1))
    u = (S(0), S(0), S(2))
    w = (S("-1/4"), S(0), S("-1/4"))
    _, N = build_three_step(V, u, e2, w, f)
    N2 = mat_mul(N, N)
    lhs = [a * S("1/2") + b + c for a, b, c in zip(mat_vec(N2, u), mat_vec(N, e2), w)]
    assert all(x.is_zero() for x in lhs)
