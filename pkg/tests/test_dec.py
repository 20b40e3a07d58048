import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from madec import constructions as C
from madec.core import Dist, hellinger_sq, mixture
from madec.dec import (
    LOWER,
    ReferenceModel,
    ScaleParams,
    constrained_dec,
    dec_tables,
    density_ratio_bound,
    fit_regularity,
    gap_bound_report,
    lower_bound_scale,
    offset_dec,
    offset_to_constrained_bound,
    solve_matrix_game,
    solve_matrix_game_mw,
    solve_matrix_games_mw,
    sup_over_references,
)
from madec.harness import brute_force_constrained, hr_grid, tiny_instances
from madec.instances import find_equilibrium

matrices = st.integers(1, 5).flatmap(lambda n: st.integers(1, 5).flatmap(
    lambda k: st.lists(st.floats(-1, 1), min_size=n * k, max_size=n * k).map(
        lambda x: np.array(x).reshape(n, k))))


class TestMatrixGame:
    def test_scalar(self):
        assert solve_matrix_game([[0.3]]).value == 0.3

    def test_matching_pennies(self):
        sol = solve_matrix_game([[1, -1], [-1, 1]])
        assert sol.value == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(sol.p, 0.5) and np.allclose(sol.q, 0.5)

    @given(matrices)
    def test_certificate(self, A):
        sol = solve_matrix_game(A)
        assert sol.gap <= 1e-8
        assert sol.p @ A @ sol.q == pytest.approx(sol.value, abs=1e-7)
        assert np.max(sol.p @ A) <= sol.value + 1e-7
        assert np.min(A @ sol.q) >= sol.value - 1e-7

    @given(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
    def test_two_rows_match_lp(self, x):
        A = np.array(x).reshape(2, 4)
        ref = solve_matrix_game(np.vstack([A, A[:1] + 5]))  # three rows take the LP path
        assert solve_matrix_game(A).value == pytest.approx(ref.value, abs=1e-9)

    def test_mw_matches_lp(self, rng):
        games = [rng.uniform(-1, 1, (6, 7)) for _ in range(5)]
        mw = solve_matrix_games_mw(games, tol=5e-5)
        for A, s in zip(games, mw):
            assert s.value == pytest.approx(solve_matrix_game(A).value, abs=1e-4)
        assert solve_matrix_game_mw(games[0]).value == pytest.approx(mw[0].value, abs=1e-4)


class TestOffset:
    def test_singleton_with_equilibrium(self, rng):
        J = C.normal_form_instance(C.random_payoff_class(rng, 1), "CCE")
        grid = J.pure_grid() + [find_equilibrium(J, 0)]
        assert offset_dec(J, 5.0, grid).value == pytest.approx(0.0, abs=1e-9)

    @given(st.integers(0, 1000), st.floats(0.1, 50), st.floats(1.01, 4))
    def test_nonincreasing_in_gamma(self, seed, g, factor):
        J = C.normal_form_instance(C.random_payoff_class(np.random.default_rng(seed), 3), "CCE")
        t = dec_tables(J, J.pure_grid(), None)
        a = offset_dec(J, g, J.pure_grid(), tables=t).value
        b = offset_dec(J, g * factor, J.pure_grid(), tables=t).value
        assert b <= a + 1e-9

    @given(st.integers(0, 1000), st.floats(0.1, 50), st.floats(0.1, 5))
    def test_rescaling(self, seed, g, c):
        """Scaling losses and gamma by c scales the value by c."""
        J = C.normal_form_instance(C.random_payoff_class(np.random.default_rng(seed), 3), "CCE")
        loss, H = dec_tables(J, J.pure_grid(), None)
        a = offset_dec(J, g, J.pure_grid(), tables=(loss, H)).value
        b = offset_dec(J, c * g, J.pure_grid(), tables=(c * loss, H)).value
        assert b == pytest.approx(c * a, abs=1e-7)

    def test_rejects_bad_gamma(self, rng):
        J = C.normal_form_instance(C.random_payoff_class(rng, 1), "CCE")
        with pytest.raises(ValueError):
            offset_dec(J, 0.0)

    def test_sup_over_references(self, rng):
        J = C.normal_form_instance(C.random_payoff_class(rng, 3), "CCE")
        refs = [ReferenceModel.of_model(J, i) for i in range(3)]
        best = sup_over_references(offset_dec, J, refs, gamma=2.0)
        assert best.value == pytest.approx(max(offset_dec(J, 2.0, reference=r).value for r in refs))
        assert best.meta["sup_certificate"] == LOWER


class TestConstrained:
    def test_all_feasible_symmetric_twin(self):
        N = 5
        inst = C.needle_instance(N, 0.05, 0.05)
        r = constrained_dec(inst, math.sqrt(2), hr_grid(inst))
        assert r.value == pytest.approx(1 / N, abs=1e-9)

    def test_empty_feasible_set(self):
        inst = C.needle_instance(4, 0.2, 0.0)
        ref = ReferenceModel.of_model(inst, 0)
        r = constrained_dec(inst, 1e-3, hr_grid(inst), ref)
        assert r.meta["n_feasible"] == 1
        far = ReferenceModel(Dist([0.5, 0.5, 0.0, 0.0]))
        r = constrained_dec(inst, 1e-6, hr_grid(inst), far)
        assert r.value == 0.0 and r.meta.get("empty")

    def test_singleton_equals_offset(self, rng):
        J = C.normal_form_instance(C.random_payoff_class(rng, 1), "CCE")
        grid = J.pure_grid()
        c = constrained_dec(J, 0.5, grid).value
        o = offset_dec(J, 1.0, grid).value
        assert c == pytest.approx(o, abs=1e-9)

    @given(st.integers(0, 1000), st.floats(0.05, 1.0), st.floats(0.0, 0.5))
    def test_nondecreasing_in_eps(self, seed, e, de):
        J = C.normal_form_instance(C.random_payoff_class(np.random.default_rng(seed), 3), "CCE")
        grid = J.pure_grid()
        t = dec_tables(J, grid, None)
        assert constrained_dec(J, e, grid, tables=t).value <= constrained_dec(J, e + de, grid, tables=t).value + 1e-9

    @given(st.integers(0, 1000), st.floats(0.05, 1.0))
    def test_below_offset_bound(self, seed, e):
        J = C.normal_form_instance(C.random_payoff_class(np.random.default_rng(seed), 3), "CCE")
        grid = J.pure_grid()
        t = dec_tables(J, grid, None)
        v = constrained_dec(J, e, grid, tables=t).value
        assert v <= offset_to_constrained_bound(J, e, np.geomspace(0.01, 1e4, 20), grid, None, t) + 1e-6

    def test_bound_singleton_zero(self, rng):
        J = C.normal_form_instance(C.random_payoff_class(rng, 1), "CCE")
        grid = J.pure_grid() + [find_equilibrium(J, 0)]
        assert offset_to_constrained_bound(J, 0.3, [1e-9], grid) == pytest.approx(0.0, abs=1e-9)

    def test_bound_huge_gamma(self, rng):
        J = C.normal_form_instance(C.random_payoff_class(rng, 3), "CCE")
        b = offset_to_constrained_bound(J, 0.3, [1e6])
        assert b >= constrained_dec(J, 0.3).value
        assert b == pytest.approx(1e6 * 0.09, rel=1e-3)

    @pytest.mark.parametrize("case", range(5))
    def test_matches_mesh_brute_force(self, case):
        name, inst, grid, ref = tiny_instances()[case]
        ref = ReferenceModel.uniform(inst) if ref is None else ReferenceModel.of_model(inst, ref)
        loss, H = dec_tables(inst, grid, ref)
        for e in (0.2, 0.45):
            v = constrained_dec(inst, e, grid, ref, tables=(loss, H)).value
            b = brute_force_constrained(loss, H, e, step=1e-2, decision_independent=inst.decision_independent)
            assert v == pytest.approx(b, abs=2e-2)


def layered_oracle(lay, eps, weights):
    """Feasible set from direct Hellinger distances, then the restricted game by multiplicative weights."""
    P = lay.model_obs_matrix()
    bar = mixture(weights, list(P))
    feas = [m for m in range(lay.n_models) if hellinger_sq(P[m], bar) <= eps**2]
    if not feas:
        return 0.0
    loss = lay.loss_table(hr_grid(lay))[feas]
    return solve_matrix_games_mw([loss.T], tol=1e-6)[0].value


class TestLayeredValues:
    lay = C.layered_needle_instance(C.LayeredParams(3))

    @pytest.mark.parametrize("ref,eps,expected", [
        ("needle", 0.25, 1 / 24),
        ("needle", 0.35, 1 / 24),
        ("needle", 0.5, 1 / 8),
        ("uniform", 0.25, 0.0),
        ("uniform", 0.35, 0.0),
        ("uniform", 0.5, 7 / 24),
    ])
    def test_frozen(self, ref, eps, expected):
        lay = self.lay
        r = ReferenceModel.of_model(lay, "1-1-1") if ref == "needle" else ReferenceModel.uniform(lay)
        v = constrained_dec(lay, eps, hr_grid(lay), r).value
        assert v == pytest.approx(expected, abs=1e-9)
        assert layered_oracle(lay, eps, r.weights.probs) == pytest.approx(expected, abs=1e-5)


class TestScales:
    def test_eps_upper(self):
        s = ScaleParams(64, 0.1, 64)
        assert s.eps_upper == pytest.approx(16 * math.sqrt(3 / 64 * math.log(640)))

    def test_C_T_infinite_ratio(self):
        inst = C.needle_instance(4, 0.2, 0.0)
        assert density_ratio_bound(inst) == math.inf
        assert ScaleParams(64, 0.1, 4, V_M=density_ratio_bound(inst)).C_T == pytest.approx(math.log(64))

    def test_zero_curve_infeasible(self):
        low = lower_bound_scale(lambda e: 0.0, 64, 1.0, math.log(64))
        assert not low.feasible and low.eps == 0.0

    def test_lower_scale_linear_curve(self):
        T, C_T = 100, 2.0
        low = lower_bound_scale(lambda e: e, T, 1.0, C_T)
        assert low.eps == pytest.approx(1 / (8 * C_T * T), rel=1e-5)

    def test_regularity_linear_curve(self):
        C_reg, c_reg = fit_regularity(lambda e: 0.3 * e, 1e-3, 1.0)
        assert C_reg == 2.0 and c_reg == pytest.approx(math.sqrt(2))

    def test_beta_floor(self):
        with pytest.raises(ValueError):
            gap_bound_report(lambda e: e, 1.0, 0.1, 2.0, 4.0, 0.5, 10, 0.1, 1.0, 100)

    def test_linear_curve_report(self):
        C_reg, c_reg = 4.0, 2.0
        rep = gap_bound_report(lambda e: e, 0.5, 0.01, c_reg, C_reg, 1.0, 10, 0.1, 1.0, 100)
        assert not rep.regularity_failures
