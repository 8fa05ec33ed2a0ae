import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from liebox import flows
from liebox.poly import Poly, PolyMap
from liebox.vfield import (
    MODEL_BUILDERS,
    VectorFieldSystem,
    all_words,
    load_model,
    system_from_json,
    system_to_json,
)

HEIS = load_model("heisenberg")
GRUSHIN = load_model("grushin")
ENGEL = load_model("engel")
MARTINET = load_model("martinet")
FLAT2 = load_model("flat2")
ALL = [HEIS, GRUSHIN, ENGEL, MARTINET, FLAT2]


def poly_var(system, i):
    return Poly.var(system.n, i)


def test_horizontal_derivative_heisenberg():
    z = poly_var(HEIS, 2)
    got = HEIS.horizontal_derivative(1, z)
    assert got == Poly.var(3, 1).scale(Fraction(-1, 2))  # -y/2
    const = Poly.const(3, 5)
    assert HEIS.horizontal_derivative(2, const).is_zero()


def test_horizontal_derivative_grushin():
    y = poly_var(GRUSHIN, 1)
    assert GRUSHIN.horizontal_derivative(2, y) == Poly.var(2, 0)  # x


def test_commutator_coeffs_known_values():
    f12 = HEIS.commutator_coeffs((1, 2))
    assert f12 == PolyMap([Poly.zero(3), Poly.zero(3), Poly.const(3, 1)])
    assert HEIS.commutator_coeffs((1, 1)).is_zero()
    assert GRUSHIN.commutator_coeffs((1, 2)) == PolyMap(
        [Poly.zero(2), Poly.const(2, 1)]
    )


def test_commutator_matches_bracket_oracle_everywhere():
    for system in ALL:
        for w in all_words(system.m, system.s):
            assert system.commutator_coeffs(w) == system.nested_bracket_oracle(w), (
                system.name,
                w,
            )


def test_pair_bracket_antisymmetry():
    for system in (HEIS, ENGEL, MARTINET):
        words = all_words(system.m, system.s - 1)
        for u in words:
            for v in words:
                if len(u) + len(v) > system.s:
                    continue
                assert system.bracket_pair(u, v) == -system.bracket_pair(v, u)


def test_coefficient_level_jacobi():
    for system in (HEIS, ENGEL):
        f = system.commutator_coeffs
        from liebox.poly import lie_bracket

        for u, v, w in [((1,), (2,), (1,)), ((1,), (1,), (2,)), ((2,), (1,), (2,))]:
            cyc = (
                lie_bracket(f(u), lie_bracket(f(v), f(w)))
                + lie_bracket(f(v), lie_bracket(f(w), f(u)))
                + lie_bracket(f(w), lie_bracket(f(u), f(v)))
            )
            assert cyc.is_zero()


def test_sharp_equals_first_order_action():
    # the signed iterated-derivative form agrees with f_w . grad on smooth models
    test_psis = {
        3: [Poly.var(3, 0), Poly.var(3, 2), Poly.var(3, 0) * Poly.var(3, 1)],
        2: [Poly.var(2, 0), Poly.var(2, 1) * Poly.var(2, 1)],
        4: [Poly.var(4, 3), Poly.var(4, 2) * Poly.var(4, 0)],
    }
    for system in (HEIS, GRUSHIN, ENGEL):
        for w in all_words(system.m, system.s):
            for psi in test_psis[system.n]:
                assert system.sharp_word(w, psi) == system.word_derivative(w, psi), (
                    system.name,
                    w,
                )


def test_ad_equals_prepended_word():
    # ad along a generator matches the commutator of the extended word
    for system in (HEIS, ENGEL, MARTINET):
        for j in range(1, system.m + 1):
            for w in all_words(system.m, system.s - 1):
                assert system.ad(j, w) == system.commutator_coeffs((j,) + w), (
                    system.name,
                    j,
                    w,
                )


def test_ad_nilpotency_heisenberg():
    assert HEIS.ad(1, (1, 2)).is_zero()


def test_flow_constant_and_affine():
    assert np.allclose(FLAT2.flow(1, 0.7, (0.0, 0.0)), (0.7, 0.0))
    assert np.allclose(HEIS.flow(1, 0.5, (0.0, 0.0, 0.0)), (0.5, 0.0, 0.0))
    # linear field x d/dx: closed form e^t * x0
    lin = VectorFieldSystem(
        [PolyMap([Poly.var(1, 0)])], step=1, name="linear1d"
    )
    got = lin.flow(1, 0.8, (1.3,))
    assert abs(got[0] - 1.3 * math.exp(0.8)) < 1e-9


def test_flow_reversibility_all_models():
    for system in ALL:
        x0 = tuple(0.1 * (i + 1) for i in range(system.n))
        for j in range(1, system.m + 1):
            for t in (0.3, 1.0):
                y = system.flow(j, t, x0)
                back = system.flow(j, -t, y)
                err = max(abs(a - b) for a, b in zip(back, x0))
                assert err <= 10 * system.config.atol, (system.name, j, t, err)


def test_flow_domain_escape():
    with pytest.raises(flows.DomainEscapeError):
        HEIS.flow(1, 25.0, (0.0, 0.0, 0.0))


def test_fast_flow_matches_adaptive_on_nilpotent_models():
    for system in (HEIS, GRUSHIN, ENGEL, MARTINET):
        x0 = tuple(0.2 for _ in range(system.n))
        for j in range(1, system.m + 1):
            a = system.flow(j, 0.37, x0)
            b = system.flow(j, 0.37, x0, fast=True, steps=8)
            assert max(abs(u - v) for u, v in zip(a, b)) < 1e-12


def test_bracket_via_flows_heisenberg_exact():
    z = poly_var(HEIS, 2)
    for t in (0.1, 0.03, 0.01):
        q = HEIS.bracket_via_flows((1, 2), z, (0.0, 0.0, 0.0), t)
        assert abs(q - 1.0) < 1e-7


def test_bracket_via_flows_commuting_zero():
    psi = Poly.var(2, 0) * Poly.var(2, 1)
    for t in (0.2, 0.05):
        q = FLAT2.bracket_via_flows((1, 2), psi, (0.3, -0.2), t)
        assert abs(q) < 1e-9


def test_bracket_limit_order_engel_word3():
    # genuine first-order convergence on a word of length 3
    psi = Poly.var(4, 3) + Poly.var(4, 3) * Poly.var(4, 3)
    x = (0.05, 0.1, 0.02, 0.3)
    ts = [0.1 * (0.6**k) for k in range(6)]
    rep = ENGEL.bracket_limit_order((1, 1, 2), psi, x, ts)
    assert abs(rep["quotients"][-1] - rep["exact"]) < 0.05 * abs(rep["exact"])
    assert rep["slope"] == math.inf or rep["slope"] > 0.8


def test_conjugated_derivative_identity():
    z = poly_var(HEIS, 2)
    res = HEIS.conjugated_derivative_check(1, (2,), z, (0.1, 0.2, 0.0))
    assert res < 1e-6
    y = poly_var(GRUSHIN, 1)
    res2 = GRUSHIN.conjugated_derivative_check(2, (1,), y, (0.4, 0.1))
    assert res2 < 1e-6
    # commuting case: both sides vanish
    psi = Poly.var(2, 0)
    res3 = FLAT2.conjugated_derivative_check(1, (2,), psi, (0.0, 0.0))
    assert res3 < 1e-9


def test_taylor_constant_fields_exact_tail():
    psi = Poly.var(2, 0) * Poly.var(2, 0) * Poly.var(2, 1)
    partial, actual, rem = FLAT2.taylor_composed_flows(psi, (1,), (0.2, 0.4), 0.3, 4)
    assert rem < 1e-12  # order beyond deg psi: tail vanishes


def test_taylor_single_affine_flow_order():
    psi = Poly.var(3, 2) * Poly.var(3, 2)
    ts = [0.2 * (0.5**k) for k in range(6)]
    rems, slope = HEIS.taylor_remainder_order(psi, (2,), (0.5, 0.1, 0.3), ts, ell=2)
    assert 1.8 < slope < 2.2


def test_taylor_two_flows_order_at_least_three():
    psi = Poly.var(3, 2) * Poly.var(3, 2)
    ts = [0.2 * (0.5**k) for k in range(6)]
    rems, slope = HEIS.taylor_remainder_order(psi, (1, 2), (0.5, 0.1, 0.3), ts, ell=3)
    assert slope == math.inf or slope > 2.8


def test_model_json_round_trip():
    obj = system_to_json(HEIS)
    again = system_from_json(obj)
    assert again.n == 3 and again.m == 2 and again.s == 2
    for a, b in zip(again.fields, HEIS.fields):
        assert a == b
    for w in all_words(2, 2):
        assert again.commutator_coeffs(w) == HEIS.commutator_coeffs(w)


def test_registry_names():
    for name in ("heisenberg", "grushin", "engel", "martinet", "flat2", "flat3"):
        assert name in MODEL_BUILDERS
    with pytest.raises(FileNotFoundError):
        load_model("nosuchmodel")


def test_batch_flow_matches_scalar():
    fn = HEIS.batch_fn(1)
    X0 = np.array([[0.0, 0.0, 0.0], [0.1, 0.2, 0.3]])
    T = np.array([0.5, -0.25])
    got = flows.rk4_batch(fn, T, X0, steps=4)
    for i in range(2):
        ref = HEIS.flow(1, T[i], X0[i])
        assert np.allclose(got[i], ref, atol=1e-12)


def test_bracket_limit_order_heisenberg_generic():
    # nonlinear test function off the nilpotent-exact instance: genuine slope 1
    psi = Poly.var(3, 2) + Poly.var(3, 2) * Poly.var(3, 2)
    ts = [0.1 * (0.6**k) for k in range(6)]
    rep = HEIS.bracket_limit_order((1, 2), psi, (0.3, 0.2, 0.1), ts)
    assert abs(rep["slope"] - 1.0) < 0.2


def test_ad_evaluated_at_point():
    vec = ENGEL.ad(1, (1, 2), x=(0.5, 0.1, 0.0, 0.0))
    oracle = ENGEL.commutator_coeffs((1, 1, 2)).eval_exact(
        (Fraction(1, 2), Fraction(1, 10), 0, 0)
    )
    assert tuple(vec) == oracle


def test_load_model_from_file(tmp_path):
    import json

    obj = system_to_json(GRUSHIN)
    path = tmp_path / "model.json"
    path.write_text(json.dumps(obj))
    loaded = load_model(str(path))
    assert loaded.m == 2 and loaded.n == 2 and loaded.s == 2
    assert loaded.commutator_coeffs((1, 2)) == GRUSHIN.commutator_coeffs((1, 2))
