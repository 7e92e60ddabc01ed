import pytest

from ratloop.elements import make_m, make_n_upq, make_p, make_p_herm, make_q_glnr, make_r_glnr, product_loop
from ratloop.errors import AlreadyIdentity, NotNegative, RealityViolated
from ratloop.factorize import (
    eps_less,
    factor,
    factor_glnr,
    factor_upq,
    filtration,
    progress_log,
    single_singularity_reduce,
)
from ratloop.linalg import HermForm, Subspace, build_three_step, zeros
from ratloop.loops import RationalLoop, check_glnr, check_upq
from ratloop.sampling import random_loop, random_nilpotent
from ratloop.scalars import I, ONE, S


def E(i, j, n=2):
    A = zeros(n)
    A[i][j] = ONE
    return A


def sp(n, *vs):
    return Subspace(n, [tuple(S(x) if not hasattr(x, "conj") else x for x in v) for v in vs])


def roundtrip(g, mode="glnc", sig=None):
    out = factor(g, mode, sig)
    assert product_loop(out, g.n) == g
    return out


def test_identity_has_empty_factorization():
    for mode, sig in (("glnc", None), ("glnr", None), ("upq", (1, 1))):
        assert factor(RationalLoop.identity(2), mode, sig) == []


def test_glnc_worked_product():
    g = make_m(0, 1, E(0, 1)).loop * make_p(0, 1, sp(2, (1, 0)), sp(2, (0, 1))).loop
    roundtrip(g)


def test_glnc_random_four_factor_products(rng):
    for _ in range(10):
        _, g = random_loop(rng, "glnc", 3, count=4)
        roundtrip(g)


def test_single_singularity_reduce_iterates_to_identity(rng):
    N0 = random_nilpotent(rng, 3)
    g = make_m(S(2), 2, N0).loop
    steps = []
    while not g.is_identity():
        F = filtration(g, S(2))
        factor_el, g2, _ = single_singularity_reduce(g, S(2))
        if not g2.is_identity():
            assert eps_less(filtration(g2, S(2)).eps, F.eps)
        steps.append(factor_el.inverse())
        g = g2
    assert product_loop(steps, 3) == make_m(S(2), 2, N0).loop
    with pytest.raises(AlreadyIdentity):
        single_singularity_reduce(RationalLoop.identity(2), S(0))


def test_single_singularity_two_nilpotents():
    N, M = E(0, 1, 3), E(1, 2, 3)
    g = make_m(1, 1, N).loop * make_m(1, 2, M).loop
    out = roundtrip(g)
    assert 1 <= len(out) <= 4


def test_glnr_examples():
    q = make_q_glnr(I, S(0, 2), sp(2, (1, 0)), sp(2, (0, 1))).loop
    g = q * make_m(0, 1, [[ONE, -ONE], [ONE, -ONE]], reality="glnr").loop
    for el in roundtrip(g, "glnr"):
        assert check_glnr(el.loop).ok
    r = make_r_glnr(S(1, 1), S(2), Subspace(2, [(ONE, -I)]), Subspace(2)).loop
    roundtrip(r, "glnr")


def test_upq_examples():
    f = HermForm(1, 1)
    N = f.ketbra((ONE, ONE), (ONE, ONE))
    N = [[x * S(0, 1) for x in row] for row in N]  # i|v><v| is skew
    g = make_p_herm(I, sp(2, (1, 0)), (1, 1)).loop * make_m(0, 1, N, reality="upq", signature=(1, 1)).loop
    for el in roundtrip(g, "upq", (1, 1)):
        assert check_upq(el.loop, 1, 1).ok
    f = HermForm(1, 2)
    V = sp(3, (1, 0, 1))
    M, _ = build_three_step(V, (S(0), S(0), ONE), (S(0), ONE, S(0)), (S("-1/2"), S(0), S("-1/2")), f)
    g = make_n_upq(S(0), 1, M, V, (1, 2)).loop * make_p_herm(S(1, 1), sp(3, (0, 1, 0)), (1, 2)).loop
    roundtrip(g, "upq", (1, 2))


def test_rejects_bad_inputs():
    g = RationalLoop.constant([[S(2), S(0)], [S(0), ONE]])
    with pytest.raises(NotNegative):
        factor(g)
    nonreal = make_m(I, 1, E(0, 1)).loop
    with pytest.raises(RealityViolated):
        factor_glnr(nonreal)
    with pytest.raises(RealityViolated):
        factor_upq(make_m(0, 1, E(0, 1)).loop, 1, 1)


def test_reality_preserved_after_every_step(rng):
    for _ in range(5):
        _, g = random_loop(rng, "glnr", 3, count=3)
        out = factor_glnr(g, check_steps=True)
        assert product_loop(out, 3) == g
        _, g = random_loop(rng, "upq", 3, count=3, signature=(1, 2))
        out = factor_upq(g, 1, 2, check_steps=True)
        assert product_loop(out, 3) == g


def test_progress_log_records_steps(rng):
    _, g = random_loop(rng, "glnc", 3, count=4)
    with progress_log() as log:
        factor(g)
    assert log and all(step.ok for step in log)
    assert {s.measure for s in log} <= {"pole_data", "det_zero_order", "eps"}


def test_factorization_is_deterministic(rng):
    _, g = random_loop(rng, "glnr", 3, count=4)
    assert factor(g, "glnr") == factor(g, "glnr")
