"""Acceptance suite: one test per criterion, each printed as a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""

import random
import sys
import time

import numpy as np
import pytest

from ratloop import flows
from ratloop.dressing import dress_order2, dress_simple_pole, permutability_holds, permute
from ratloop.elements import make_twisted_pair, product_loop
from ratloop.errors import NotWellDefined
from ratloop.factorize import factor, progress_log
from ratloop.flows import FlowSpec, Grid
from ratloop.linalg import (
    HermForm,
    Subspace,
    build_skew_nilpotent,
    build_three_step,
    is_zero_matrix,
    is_zero_vec,
    mat_eq,
    mat_mul,
    mat_scale,
    mat_vec,
    vec_add,
    vec_scale,
)
from ratloop.loops import RationalLoop, check_conditions, check_glnr, check_upq
from ratloop.poly import Poly, RatFunc
from ratloop.sampling import (
    random_loop,
    random_nilpotent,
    random_point,
    random_skew_input,
    random_three_step_input,
)
from ratloop.scalars import I, ONE, S

MODES = [("glnc", None), ("glnr", None), ("upq", (1, 1)), ("upq", (1, 2))]
LOOPS_PER_MODE = 200


def E(i, j, n=2):
    A = [[S(0)] * n for _ in range(n)]
    A[i][j] = ONE
    return A


# -- factorization: criteria 1-3 -----------------------------------------------------

@pytest.fixture(scope="session")
def factor_runs():
    """Factor 200 random products per mode, recording every progress step."""
    runs = []
    t0 = time.perf_counter()
    with progress_log() as steps:
        for mode, sig in MODES:
            for seed in range(LOOPS_PER_MODE):
                rng = random.Random(seed)
                n = sum(sig) if sig else rng.choice([2, 3, 4])
                _, g = random_loop(rng, mode, n, signature=sig)
                try:
                    out, err = factor(g, mode, sig), None
                except Exception as exc:  # recorded, reported by the criteria
                    out, err = None, exc
                runs.append((mode, sig, seed, g, out, err))
    return runs, steps, time.perf_counter() - t0


@pytest.mark.slow
@pytest.mark.criterion(1, "factorization round-trip")
def test_criterion_1_roundtrip(factor_runs, record_property):
    runs, _, elapsed = factor_runs
    bad = [(m, s, seed) for m, s, seed, g, out, err in runs
           if err is not None or product_loop(out, g.n) != g]
    record_property("detail", f"{len(runs)} loops, {len(bad)} failures, {elapsed:.1f} s")
    assert not bad, bad[:5]
    assert elapsed < 120


@pytest.mark.slow
@pytest.mark.criterion(2, "factor validity and reality")
def test_criterion_2_validity(factor_runs, record_property):
    runs, _, _ = factor_runs
    count, bad = 0, []
    for mode, sig, seed, g, out, err in runs:
        if err is not None:
            bad.append((mode, seed, repr(err)))
            continue
        for el in out:
            count += 1
            try:
                el.validate()
            except Exception as exc:
                bad.append((mode, seed, repr(exc)))
                continue
            if mode == "glnr" and not check_glnr(el.loop).ok:
                bad.append((mode, seed, "reality"))
            if mode == "upq" and not check_upq(el.loop, *sig).ok:
                bad.append((mode, seed, "reality"))
    record_property("detail", f"{count} factors, {len(bad)} failures")
    assert not bad, bad[:5]


@pytest.mark.slow
@pytest.mark.criterion(3, "monotone progress")
def test_criterion_3_progress(factor_runs, record_property):
    runs, steps, _ = factor_runs
    measures = sorted({s.measure for s in steps})
    failed = [s for s in steps if not s.ok]
    record_property("detail", f"{len(steps)} steps ({', '.join(measures)}), {len(failed)} failures")
    assert steps and not failed
    assert all(err is None for *_, err in runs)


# -- dressing: criteria 4-6 ----------------------------------------------------------

def random_poly_loop(rng, n):
    deg = rng.randint(1, 3)
    parts = [(Poly.const(1), [[S(int(i == j)) for j in range(n)] for i in range(n)])]
    lam = Poly.linear(S(0))
    for k in range(1, deg + 1):
        C = [[S(rng.randint(-2, 2), rng.randint(-1, 1)) for _ in range(n)] for _ in range(n)]
        parts.append((lam ** k, C))
    return RationalLoop.from_parts(n, parts, {})


@pytest.mark.criterion(4, "dressing holomorphy")
def test_criterion_4_dressing(record_property):
    rng = random.Random(4)
    done = {"simple": 0, "order2": 0}
    skipped = 0
    while min(done.values()) < 100:
        n = rng.choice([2, 3])
        alpha, N, f = random_point(rng), random_nilpotent(rng, n), random_poly_loop(rng, n)
        try:
            if done["simple"] < 100:
                Nt, dressed = dress_simple_pole(alpha, N, f)
                assert is_zero_matrix(mat_mul(Nt, Nt))
                assert dressed.principal_part(alpha) == {}
                done["simple"] += 1
            if done["order2"] < 100:
                _, _, dressed = dress_order2(alpha, N, f)
                assert dressed.principal_part(alpha) == {}
                done["order2"] += 1
        except NotWellDefined:
            skipped += 1
    record_property("detail", f"100 simple-pole + 100 order-2 instances, {skipped} ill-defined draws skipped")


@pytest.mark.criterion(5, "permutability")
def test_criterion_5_permutability(record_property):
    Nh, Mh = permute(S(0), E(0, 1), S(1), E(1, 0))
    h = S("1/2")
    assert mat_eq(Nh, [[h, h], [-h, -h]]) and mat_eq(Mh, [[h, -h], [h, -h]])
    assert permutability_holds(S(0), E(0, 1), S(1), E(1, 0), Nh, Mh)
    rng = random.Random(5)
    done = skipped = 0
    while done < 100:
        n = rng.choice([2, 3])
        alpha, beta = random_point(rng), random_point(rng)
        if alpha == beta:
            continue
        N, M = random_nilpotent(rng, n), random_nilpotent(rng, n)
        try:
            Nh, Mh = permute(alpha, N, beta, M)
        except NotWellDefined:
            skipped += 1
            continue
        assert permutability_holds(alpha, N, beta, M, Nh, Mh)
        done += 1
    record_property("detail", f"worked instance + 100 random, {skipped} ill-defined draws skipped")


@pytest.mark.criterion(6, "twisted pair")
def test_criterion_6_twisted_pair(record_property):
    rng = random.Random(6)
    done = skipped = 0
    one = RatFunc(Poly.const(1))
    while done < 100:
        n = rng.choice([2, 3])
        alpha = S(rng.choice([-2, -1, 1, 2, 3])) / rng.choice([1, 2, 3])
        N = random_nilpotent(rng, n, real=True)
        try:
            _, g = make_twisted_pair(alpha, N)
        except NotWellDefined:
            skipped += 1
            continue
        rep = check_conditions(g, "glnr", twisted=True)
        assert rep["glnr"].ok and rep["twisted"].ok
        assert g.det() == one
        done += 1
    record_property("detail", f"100 random real N, {skipped} without a partner skipped")


# -- flows: criteria 7-10 ------------------------------------------------------------

def random_sl2_nilpotent(rng):
    """Real trace-free ``[[n1, n2], [n3, -n1]]`` with ``n1^2 + n2 n3 = 0``."""
    while True:
        a, b = rng.choice([-2, -1, 1, 2]), rng.choice([-2, -1, 0, 1, 2])
        s = rng.choice([-1, 1]) * rng.choice([0.5, 1.0, 1.5])
        # (a, b) (b, -a)^T has zero trace and determinant
        N = s * np.outer([a, b], [b, -a]) / max(abs(a), abs(b))
        if np.abs(N).max() > 0:
            return N


@pytest.mark.criterion(7, "vacuum dressing cross-validation")
def test_criterion_7_vacuum(record_property):
    rng = random.Random(7)
    grid = Grid.square(-2, 2, 101)
    worst = 0.0
    lines = 0
    for _ in range(20):
        alpha = rng.choice([-1.0, -0.5, 0.5, 1.0])
        j = rng.randint(1, 4)
        N = random_sl2_nilpotent(rng)
        numeric = flows.dress_chain_numeric([(alpha, N)], FlowSpec.sl2(j), grid)
        closed = flows.dress_vacuum_closed_form(alpha, j, N, grid)
        worst = max(worst, flows.max_difference(numeric, closed))
        line = flows.singular_line(alpha, j, N)
        if line is None:
            assert not closed.singular_mask.any()
            continue
        c, r = line
        pts = grid.points()[closed.singular_mask.ravel()]
        assert np.all(np.abs(pts[:, 0] + c * pts[:, 1] - r) <= grid.spacing * (1 + abs(c)))
        # points placed exactly on the predicted line are singular for the stagewise dressing too
        t = np.linspace(-2, 2, 41)
        on_line = np.column_stack([r - c * t, t])
        on_line = on_line[np.abs(on_line[:, 0]) <= 2]
        if len(on_line):
            _, masked = flows.dress_chain_evaluator([(alpha, N)], FlowSpec.sl2(j))(on_line)
            assert masked.all()
            off = on_line + [[grid.spacing, 0.0]]
            _, masked = flows.dress_chain_evaluator([(alpha, N)], FlowSpec.sl2(j))(off)
            assert not masked.any()
            lines += 1
    record_property("detail", f"max relative difference {worst:.2e}, {lines} singular lines located")
    assert worst <= 1e-10


@pytest.mark.criterion(8, "mKdV soliton")
def test_criterion_8_mkdv(record_property):
    t0 = time.perf_counter()
    grid = Grid.square(-2, 2, 101)
    closed = flows.mkdv_closed_form(1.0, 0, 2, 0, grid)
    pipe = flows.mkdv_pipeline(1.0, np.array([[0.0, 2.0], [0.0, 0.0]]), grid)
    diff = flows.max_difference(pipe, closed)
    resid = flows.pde_residual(closed, "mkdv", 1e-3)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"difference {diff:.2e}, residual {resid:.2e}, {elapsed:.1f} s")
    assert diff <= 1e-10 and resid <= 1e-5 and elapsed < 30


@pytest.mark.criterion(9, "order-2 third-flow example")
def test_criterion_9_third_flow(record_property):
    import sympy as sp
    u, (x, _) = flows.third_flow_order2_symbolic(0, 1, 0)
    assert sp.simplify(u[0, 1] - 4 * x) == 0
    rng = random.Random(9)
    grid = Grid.square(-2, 2, 101)
    worst = 0.0
    for _ in range(3):
        n1 = rng.choice([-0.3, -0.2, -0.1, 0.1, 0.2, 0.3])
        n2 = rng.choice([-2.0, -1.0, 1.0, 2.0])
        N = np.array([[n1, n2], [-n1 * n1 / n2, -n1]])
        surf = flows.third_flow_order2(N, grid)
        worst = max(worst, flows.pde_residual(surf, "third_coupled", 5e-3, order=6))
    record_property("detail", f"symbolic entry 4x, max residual {worst:.2e}")
    assert worst <= 1e-6


def random_rank_one(rng, n):
    while True:
        u = rng.integers(-2, 3, n).astype(float)
        v = rng.integers(-2, 3, n).astype(float)
        if u @ u:
            v = v - (v @ u) / (u @ u) * u
        N = np.outer(u, v)
        if np.abs(N).max() > 1e-9:
            return N


def spectral_samples(rng, alpha, gap=0.25):
    """Two real and two complex values of ``lam`` at least ``gap`` from the poles ``+-alpha``.

    Near a pole the frame is a sum of large terms that cancel, which costs
    digits in double precision although the identities are exact.
    """
    out = []
    while len(out) < 4:
        lam = rng.uniform(-2, 2) + (1j * rng.uniform(-2, 2) if len(out) >= 2 else 0)
        if min(abs(lam - alpha), abs(lam + alpha)) >= gap:
            out.append(lam)
    return out


@pytest.mark.slow
@pytest.mark.criterion(10, "GL(n)/O(n) and Egoroff metrics")
def test_criterion_10_gln_egoroff(record_property):
    rng = np.random.default_rng(10)
    worst = dict.fromkeys(["system", "d_invariance", "rotation", "frame", "unitary"], 0.0)
    for n, num in ((2, 41), (3, 15)):
        grid = Grid.square(-1, 1, num, n)
        for _ in range(10):
            N = random_rank_one(rng, n)
            alpha = float(rng.choice([-1.5, -1.0, -0.5, 0.5, 1.0, 1.5]))
            beta, d = flows.gln_on_dress(alpha, N, grid)
            guard = flows.guard_band(beta.evaluator.denominator, grid, 1e-2)
            resid = flows.pde_residual(beta, "glnon_system", 1e-2, order=6, exclude=guard)
            pts = rng.uniform(-1, 1, (50, n))
            lams = spectral_samples(rng, alpha)
            checks = flows.egoroff_checks(d, rng.uniform(0.5, 2, n), grid)
            vals = {"system": resid, "d_invariance": checks["d_invariance"], "rotation": checks["rotation"],
                    "frame": flows.frame_identities(d, pts, lams),
                    "unitary": flows.unitary_frame_check(d, pts, lams)["reality"]}
            for k, v in vals.items():
                worst[k] = max(worst[k], v)
    record_property("detail", ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert worst["system"] <= 1e-6 and worst["d_invariance"] <= 1e-6 and worst["rotation"] <= 1e-6
    assert worst["frame"] <= 1e-10 and worst["unitary"] <= 1e-10


# -- nilpotent constructors: criterion 11 ------------------------------------------------

def skew_ok(N, v, w, form):
    return (mat_eq(form.adjoint(N), mat_scale(N, -1)) and is_zero_matrix(mat_mul(N, N))
            and mat_vec(N, w) == tuple(v))


def three_step_ok(N, u, v, w):
    N2 = mat_mul(N, N)
    lhs = vec_add(vec_add(vec_scale(mat_vec(N2, u), S("1/2")), mat_vec(N, v)), w)
    return is_zero_matrix(mat_mul(N2, N)) and is_zero_vec(lhs)


@pytest.mark.criterion(11, "nilpotent constructors")
def test_criterion_11_constructors(record_property):
    f11 = HermForm(1, 1)
    V, v, w = Subspace(2, [(ONE, ONE)]), (ONE, ONE), (I, -I)
    N = build_skew_nilpotent(V, v, w, f11)
    half = S(0, "1/2")
    assert mat_eq(N, [[-half, half], [-half, half]]) and skew_ok(N, v, w, f11)
    f12 = HermForm(1, 2)
    e2, e3 = (S(0), ONE, S(0)), (S(0), S(0), ONE)
    w = (S("-1/2"), S(0), S("-1/2"))
    M, N = build_three_step(Subspace(3, [(ONE, S(0), ONE)]), e3, e2, w, f12)
    assert mat_vec(M, e2) == (ONE, S(0), ONE) and three_step_ok(N, e3, e2, w)

    rng = random.Random(11)
    skew_forms = [HermForm(1, 1), HermForm(1, 2), HermForm(2, 1), HermForm(2, 2)]
    for _ in range(100):
        form = rng.choice(skew_forms)
        V, v, w = random_skew_input(rng, form)
        assert skew_ok(build_skew_nilpotent(V, v, w, form), v, w, form)
    three_forms = [HermForm(1, 2), HermForm(2, 1), HermForm(1, 3), HermForm(2, 3)]
    for _ in range(100):
        form = rng.choice(three_forms)
        V, u, v, w = random_three_step_input(rng, form)
        _, N = build_three_step(V, u, v, w, form)
        assert three_step_ok(N, u, v, w)
    record_property("detail", "worked (1,1) and (1,2) instances + 100 random inputs each")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
