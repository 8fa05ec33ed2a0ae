import math
from fractions import Fraction

import numpy as np
import pytest

from liebox.approxexp import CommutatorFrame
from liebox.ballbox import (
    HormanderError,
    ad_coefficient_bound,
    doubling_ratio,
    express_in_frame,
    inclusion_check,
    lambda_I,
    lambda_vector,
    maximality_stability,
    newton_invert,
    nu,
    poincare_check,
    select_maximal,
)
from liebox.poly import Poly, PolyMap
from liebox.vfield import VectorFieldSystem, load_model

HEIS = load_model("heisenberg")
GRUSHIN = load_model("grushin")
FLAT3 = load_model("flat3")
HEIS_FRAME = CommutatorFrame(HEIS)
GRUSHIN_FRAME = CommutatorFrame(GRUSHIN)
FLAT3_FRAME = CommutatorFrame(FLAT3)
ORIGIN3 = (0.0, 0.0, 0.0)


def test_lambda_known_values():
    assert lambda_I(HEIS_FRAME, (1, 2, 4), ORIGIN3) == 1
    assert lambda_I(HEIS_FRAME, (1, 1, 4), ORIGIN3) == 0  # repeated column
    for a in (Fraction(1, 2), 2, Fraction(-3, 4)):
        assert lambda_I(GRUSHIN_FRAME, (1, 2), (a, 0)) == a


def test_lambda_vector_scaling_exact():
    rows1 = lambda_vector(HEIS_FRAME, ORIGIN3, 1.0)
    top = max(rows1, key=lambda t: t[2])
    assert top[2] == 1.0
    # entries scale exactly as r^ell(I)
    r = 0.3
    rows_r = {I: s for I, _, s in lambda_vector(HEIS_FRAME, ORIGIN3, r)}
    for I, lam, s1 in rows1:
        assert rows_r[I] == pytest.approx(s1 * r ** HEIS_FRAME.ell(I), rel=1e-12)


def test_nu_positive_on_grushin_grid():
    grid = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)]
    assert nu(GRUSHIN_FRAME, grid) > 0


def test_select_maximal_heisenberg():
    for x, r in ((ORIGIN3, 0.5), ((0.3, -0.2, 0.1), 0.2)):
        triple = select_maximal(HEIS_FRAME, x, r)
        assert triple.I == (1, 2, 4)
        assert triple.eta_maximal


def test_select_maximal_grushin():
    t = select_maximal(GRUSHIN_FRAME, (1.0, 0.0), 0.1)
    assert t.I == (1, 2)  # |a| r^2 beats r^3 for r << |a|
    t0 = select_maximal(GRUSHIN_FRAME, (0.0, 0.0), 0.1)
    assert t0.I == (1, 4)  # generator pair degenerates at the origin


def test_select_maximal_hormander_violation():
    one = Poly.const(2, 1)
    zero = Poly.zero(2)
    line = VectorFieldSystem([PolyMap([one, zero])], step=1, name="line")
    frame = CommutatorFrame(line)
    with pytest.raises(HormanderError):
        select_maximal(frame, (0.0, 0.0), 0.5)


def test_newton_invert_recovers_box_point():
    I = (1, 2, 4)
    r = 0.5
    h_true = (0.1, -0.05, 0.02)
    from liebox.approxexp import e_map

    y = e_map(HEIS_FRAME, I, ORIGIN3, r, h_true)
    out = newton_invert(HEIS_FRAME, I, ORIGIN3, r, y, eps=0.3)
    assert out["converged"]
    assert np.allclose(out["h"], h_true, atol=1e-7)


def test_inclusion_check_heisenberg():
    rep = inclusion_check(
        HEIS, HEIS_FRAME, (1, 2, 4), ORIGIN3, 0.5, eps=0.3, c=0.05,
        samples=50, seed=0, collision_pairs=100,
    )
    assert rep["solved_fraction"] == 1.0
    assert rep["collisions"] == 0


def test_inclusion_flat_linear_recovery():
    rep = inclusion_check(
        FLAT3, FLAT3_FRAME, (1, 2, 3), ORIGIN3, 0.5, eps=0.3, c=0.05,
        samples=30, seed=1,
    )
    assert rep["solved_fraction"] == 1.0


def test_express_in_frame_cases():
    out0 = express_in_frame(HEIS_FRAME, (0.0, 0.0, 0.0), ORIGIN3)
    assert np.allclose(out0["coefficients"], 0.0)
    # vertical vector: min-norm splits across the two dependent length-2 columns
    out = express_in_frame(HEIS_FRAME, (0.0, 0.0, 1.0), ORIGIN3)
    assert out["in_span"]
    b = out["coefficients"]
    assert abs(b[3] - 0.5) < 1e-10 and abs(b[4] + 0.5) < 1e-10
    assert np.allclose([b[0], b[1], b[2], b[5]], 0.0, atol=1e-10)
    # generator direction is independent: indicator comes back
    out1 = express_in_frame(HEIS_FRAME, HEIS_FRAME.map(1)(np.zeros(3)), ORIGIN3)
    assert abs(out1["coefficients"][0] - 1.0) < 1e-10


def test_express_residual_small_on_grids():
    rng = np.random.default_rng(2)
    for frame, n in ((HEIS_FRAME, 3), (GRUSHIN_FRAME, 2)):
        for _ in range(10):
            x = rng.uniform(-1, 1, n)
            v = rng.standard_normal(n)
            out = express_in_frame(frame, v, x)
            assert out["residual"] <= 1e-8


def test_ad_coefficient_bound():
    rep = ad_coefficient_bound(
        HEIS, HEIS_FRAME, 1, (1, 2), (0.1, 0.2, 0.0), np.linspace(-0.3, 0.3, 7)
    )
    assert rep["max_sup_norm"] < 1e-12  # step-2 nilpotent: ad vanishes
    engel = load_model("engel")
    eframe = CommutatorFrame(engel)
    rep2 = ad_coefficient_bound(
        engel, eframe, 1, (1, 2), (0.1, 0.0, 0.0, 0.0), np.linspace(-0.2, 0.2, 5)
    )
    assert rep2["max_residual"] <= 1e-8
    assert rep2["max_sup_norm"] <= 2.0


def test_doubling_ratio_flat3():
    rep = doubling_ratio(FLAT3, FLAT3_FRAME, ORIGIN3, 0.25, N=60_000, seed=3)
    assert abs(rep["ratio"] - 8.0) <= 0.12 * 8.0


def test_doubling_ratio_heisenberg():
    rep = doubling_ratio(HEIS, HEIS_FRAME, ORIGIN3, 0.25, N=150_000, seed=4)
    assert abs(rep["ratio"] - 16.0) <= 0.15 * 16.0


def test_doubling_ratio_grushin_origin():
    rep = doubling_ratio(GRUSHIN, GRUSHIN_FRAME, (0.0, 0.0), 0.25, N=100_000, seed=5)
    assert abs(rep["ratio"] - 8.0) <= 0.15 * 8.0


def test_poincare_constant_function_zero():
    f = Poly.const(3, 2)
    rep = poincare_check(HEIS, HEIS_FRAME, f, ORIGIN3, 0.25, N=40_000, seed=6)
    assert rep["lhs"] == 0.0
    assert rep["ratio"] == 0.0


def test_poincare_linear_function_stable():
    f = Poly.var(3, 0)
    r1 = poincare_check(HEIS, HEIS_FRAME, f, ORIGIN3, 0.25, N=120_000, seed=7)
    r2 = poincare_check(HEIS, HEIS_FRAME, f, ORIGIN3, 0.25, N=120_000, seed=8)
    assert r1["rhs"] > 0 and math.isfinite(r1["ratio"])
    assert abs(r1["ratio"] - r2["ratio"]) <= 0.1 * max(r1["ratio"], r2["ratio"])


def test_maximality_stability():
    rep = maximality_stability(HEIS, HEIS_FRAME, (0.2, 0.1, 0.0), 0.3, seed=9)
    assert rep["same_fraction"] == 1.0


def test_inclusion_rejects_eps_beyond_box():
    with pytest.raises(ValueError):
        inclusion_check(
            HEIS, HEIS_FRAME, (1, 2, 4), ORIGIN3, 0.5, eps=1.5, samples=5
        )
