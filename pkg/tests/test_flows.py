import csv
import json

import numpy as np
import pytest

from ratloop import flows
from ratloop.errors import GridTooCoarse
from ratloop.flows import FlowSpec, Grid


def test_vacuum_frame():
    spec = FlowSpec.sl2(1)
    E = flows.vacuum_frame(spec, 1.0, 0.0, 2.0)
    assert np.allclose(E, np.diag([np.e ** 2, np.e ** -2]))
    assert np.allclose(flows.vacuum_frame(spec, 0.0, 0.0, 1.7 + 0.3j), np.eye(2))
    d = flows.DiagonalVacuum(3)
    pts = np.array([[0.3, -0.2, 0.5]])
    assert np.allclose(np.exp(d.exponent(pts, 0.0)), 1.0)


def test_vacuum_frame_x_derivative():
    spec = FlowSpec.sl2(1)
    lam, x, h = 0.7, 0.4, 1e-6
    dE = (flows.vacuum_frame(spec, x + h, 0.0, lam) - flows.vacuum_frame(spec, x - h, 0.0, lam)) / (2 * h)
    assert np.allclose(dE @ np.linalg.inv(flows.vacuum_frame(spec, x, 0.0, lam)), spec.a_matrix * lam, atol=1e-6)


def test_vacuum_closed_form_examples():
    g = Grid.square(-2, 2, 21)
    s = flows.dress_vacuum_closed_form(1.0, 3, np.array([[0, 1], [0, 0]]), g)
    x, t = np.meshgrid(*g.axes, indexing="ij")
    assert np.allclose(s.values[..., 0, 1], -2 * np.exp(-2 * x - 2 * t))
    assert np.allclose(s.values[..., 1, 0], 0) and s.masked_fraction == 0
    s = flows.dress_vacuum_closed_form(1.0, 1, np.array([[0.5, 1], [-0.25, -0.5]]), Grid.square(-2, 2, 41))
    pts = s.grid.points()[s.singular_mask.ravel()]
    assert len(pts) and np.allclose(pts.sum(axis=1), -1)
    assert flows.singular_line(1.0, 1, np.array([[0.5, 1], [-0.25, -0.5]])) == (1.0, -1.0)


def test_chain_with_zero_nilpotent_is_vacuum():
    s = flows.dress_chain_numeric([(1.0, np.zeros((2, 2)))], FlowSpec.sl2(1), Grid.square(-1, 1, 5))
    assert np.allclose(s.values, 0)


def test_mkdv_examples():
    g = Grid.square(-1, 1, 11)
    s = flows.mkdv_closed_form(1.0, 0, 2, 0, g)
    x, t = np.meshgrid(*g.axes, indexing="ij")
    q = -16 * np.exp(2 * x + 2 * t) / (4 * np.exp(4 * x + 4 * t) + 4)
    assert np.allclose(s.values[..., 0, 1], q)
    assert np.allclose(s.values[..., 1, 0], -q)
    pipe = flows.mkdv_pipeline(1.0, np.array([[0, 2], [0, 0]]), Grid([np.array([0.0]), np.array([0.0])]))
    assert abs(pipe.values[0, 0, 0, 1] + 2) < 1e-12
    assert np.allclose(flows.mkdv_closed_form(1.0, 0, 0, 0, g).values, 0)


def test_third_flow_examples():
    u, (x, t) = flows.third_flow_order2_symbolic(0, 1, 0)
    assert u[0, 1] == 4 * x and u[1, 0] == 0
    g = Grid.square(-1, 1, 9)
    assert np.allclose(flows.third_flow_order2(np.zeros((2, 2)), g).values, 0)
    N = np.array([[0.2, 1.0], [-0.04, -0.2]])
    a = flows.third_flow_order2(N, g)
    b = flows.surface_from_evaluator(flows.third_flow_order2_pipeline_evaluator(N), g)
    assert flows.max_difference(b, a) < 1e-10


def test_residual_detects_non_solutions():
    g = Grid.square(-1, 1, 201)
    zero = flows.surface_from_function(lambda x, t: np.zeros((len(x), 2, 2)), g)
    assert flows.pde_residual(zero, "mkdv") == 0

    def q_is_x(x, t):
        u = np.zeros((len(x), 2, 2))
        u[:, 0, 1], u[:, 1, 0] = x, -x
        return u

    s = flows.surface_from_function(q_is_x, g)
    r = flows.pde_residual(s, "mkdv", 1e-3)
    assert abs(r - 1.5) < 1e-6  # max |3/2 x^2| on [-1, 1]
    lattice = flows.SolutionSurface(g, s.values, s.singular_mask)
    interior = g.axes[0][3:-3]
    assert abs(flows.pde_residual(lattice, "mkdv") - 1.5 * interior.max() ** 2) < 1e-6


def test_residual_rejects_coarse_steps():
    s = flows.mkdv_closed_form(1.0, 0, 2, 0, Grid.square(-1, 1, 11))
    with pytest.raises(GridTooCoarse):
        flows.pde_residual(s, "mkdv", 0.1)
    with pytest.raises(GridTooCoarse):
        flows.pde_residual(flows.SolutionSurface(s.grid, s.values, s.singular_mask), "mkdv")


def test_gln_stage_one_tilde():
    d = flows.GLnOnDressing(1.0, np.array([[0.0, 1.0], [0.0, 0.0]]))
    pts = np.array([[0.3, -0.4], [1.0, 0.5]])
    tildes, _, bad = d.frame.tildes(pts)
    expect = np.exp(pts[:, 1] - pts[:, 0])
    assert not bad.any()
    assert np.allclose(tildes[0][:, 0, 1], expect) and np.allclose(tildes[0][:, 1, 0], 0)
    beta, _ = d.beta(pts)
    assert np.allclose(flows.GLnOnDressing(1.0, np.zeros((2, 2))).beta(pts)[0], 0)
    assert np.allclose(beta, np.swapaxes(beta, 1, 2))


def test_egoroff_vacuum_immersion_vanishes_at_origin():
    d = flows.GLnOnDressing(1.0, np.zeros((3, 3)))
    c = np.array([1.0, 2.0, 0.5])
    origin = np.zeros((1, 3))
    assert np.allclose(d.immersion(origin, 0.7, c), 0)
    x = np.array([[0.2, -0.1, 0.3]])
    expect = -1j / 0.7 * (np.exp(1j * 0.7 * x[0]) * c - c)
    assert np.allclose(d.immersion(x, 0.7, c)[0], expect)
    assert np.allclose(d.h(x, c)[0], c)


def test_dualize():
    g = Grid.square(-1, 1, 5)
    s = flows.mkdv_closed_form(1.0, 0, 2, 0, g)
    twice = flows.dualize_solution(flows.dualize_solution(s))
    assert np.allclose(twice.values, -s.values)
    zero = flows.surface_from_function(lambda x, t: np.zeros((len(x), 2, 2)), g)
    assert np.allclose(flows.dualize_solution(zero).values, 0)


def test_csv_and_report(tmp_path):
    s = flows.dress_vacuum_closed_form(1.0, 1, np.array([[0.5, 1], [-0.25, -0.5]]), Grid.square(-2, 2, 5))
    path = tmp_path / "s.csv"
    s.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x", "t", "u_00", "u_01", "u_10", "u_11", "masked"]
    assert len(rows) == 26
    rep = flows.residual_report("translation_j1", 1e-3, 0.5, s)
    flows.write_report(tmp_path / "r.json", rep)
    assert set(json.load(open(tmp_path / "r.json"))) == {"flow", "h", "max_residual", "masked_fraction"}
