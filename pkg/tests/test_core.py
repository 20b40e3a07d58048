import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from madec.core import (
    CHI2,
    HELLINGER,
    KL,
    Dist,
    DivergenceUndefined,
    ShapeError,
    bernoulli,
    custom_divergence,
    f_divergence,
    hellinger_sq,
    log_ratio_bound,
    mixture,
    product_dist,
)


def simplex(n_min=2, n_max=6):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n)
        .filter(lambda x: sum(x) > 1e-3)
        .map(lambda x: Dist(np.array(x) / np.sum(x)))
    )


def simplex_pair(n_min=2, n_max=6):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.tuples(*[st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n)
                              .filter(lambda x: sum(x) > 1e-3)
                              .map(lambda x: Dist(np.array(x) / np.sum(x))) for _ in range(2)])
    )


class TestDist:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            Dist([0.5, 0.6])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Dist([1.5, -0.5])

    def test_rejects_empty(self):
        with pytest.raises(ShapeError):
            Dist([])

    def test_immutable(self):
        d = Dist([0.5, 0.5])
        with pytest.raises(AttributeError):
            d.probs = np.ones(2)
        with pytest.raises(ValueError):
            d.probs[0] = 1.0

    def test_tolerates_rounding(self):
        assert len(Dist([1 / 3, 1 / 3, 1 / 3])) == 3

    @given(simplex())
    def test_nonnegative_and_normalized(self, d):
        assert d.probs.min() >= 0
        assert abs(d.probs.sum() - 1) <= 1e-9


class TestHellinger:
    def test_identity(self):
        p = Dist([0.2, 0.3, 0.5])
        assert hellinger_sq(p, p) == 0.0

    def test_bernoulli_pair(self):
        v = hellinger_sq(bernoulli(0.0), bernoulli(1 / 100))
        assert v == pytest.approx(2 * (1 - math.sqrt(0.99)), abs=1e-15)
        assert v == pytest.approx(0.010025, abs=1e-6)
        assert v <= 2 / 100

    def test_disjoint(self):
        assert hellinger_sq([1, 0], [0, 1]) == 2.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            hellinger_sq([1, 0], [0, 0, 1])

    @given(simplex_pair())
    def test_range_and_symmetry(self, pq):
        p, q = pq
        h = hellinger_sq(p, q)
        assert -1e-15 <= h <= 2 + 1e-12
        assert h == pytest.approx(hellinger_sq(q, p), abs=1e-15)


def twin_rows(N, i, delta, beta):
    row = np.full(N + 1, delta)
    row[i] = beta
    row[N] = 1 - delta * (N - 1) - beta
    return row


class TestFDivergence:
    @pytest.mark.parametrize("kind", ["hellinger", "kl", "chi2"])
    def test_identity(self, kind):
        p = Dist([0.1, 0.2, 0.7])
        assert f_divergence(kind, p, p) == pytest.approx(0.0, abs=1e-15)

    def test_twin_hellinger_closed_form(self):
        P, Q = twin_rows(5, 0, 0.04, 0.01), twin_rows(5, 1, 0.04, 0.01)
        assert f_divergence("hellinger", P, Q) == pytest.approx(0.02, abs=1e-15)

    @pytest.mark.parametrize("kind", ["hellinger", "kl", "chi2"])
    def test_twin_pairwise_formula(self, kind):
        d, b = 0.03, 0.007
        phi = {"hellinger": HELLINGER, "kl": KL, "chi2": CHI2}[kind].phi
        closed = b * phi(np.array([d / b]))[0] + d * phi(np.array([b / d]))[0]
        P, Q = twin_rows(6, 2, d, b), twin_rows(6, 4, d, b)
        assert f_divergence(kind, P, Q) == pytest.approx(closed, rel=1e-12)

    def test_kl_undefined(self):
        with pytest.raises(DivergenceUndefined):
            f_divergence("kl", [0.5, 0.5], [1.0, 0.0])

    def test_chi2_undefined(self):
        with pytest.raises(DivergenceUndefined):
            f_divergence("chi2", [0.5, 0.5], [1.0, 0.0])

    def test_hellinger_never_errors(self):
        assert f_divergence("hellinger", [0.5, 0.5], [1.0, 0.0]) > 0

    def test_kl_matches_direct(self):
        p, q = np.array([0.2, 0.8]), np.array([0.5, 0.5])
        assert f_divergence("kl", p, q) == pytest.approx(float(np.sum(p * np.log(p / q))), rel=1e-12)

    @pytest.mark.parametrize("div", [HELLINGER, KL, CHI2])
    def test_growth_constants_hold(self, div):
        assert div.growth_violations().size == 0

    def test_custom_rejects_false_constants(self):
        with pytest.raises(ValueError):
            custom_divergence(lambda x: (np.asarray(x) - 1.0) ** 2, 0.0, 1.0)

    @given(simplex_pair())
    def test_nonnegative(self, pq):
        p, q = pq
        assert f_divergence("hellinger", p, q) >= -1e-15
        if np.all(q.probs > 1e-9):
            assert f_divergence("kl", p, q) >= -1e-12
            assert f_divergence("chi2", p, q) >= -1e-12


class TestProductMixture:
    def test_single_part(self):
        assert product_dist([Dist([0.3, 0.7])]) == Dist([0.3, 0.7])

    def test_two_fair_coins(self):
        assert np.allclose(product_dist([bernoulli(0.5), bernoulli(0.5)]).probs, 0.25)

    def test_row_major_order(self):
        assert np.allclose(product_dist([[1, 0], [0.25, 0.75]]).probs, [0.25, 0.75, 0, 0])

    def test_point_mass_mixture(self):
        ds = [Dist([0.1, 0.9]), Dist([0.6, 0.4])]
        assert mixture([0, 1], ds) == ds[1]

    def test_identical_mixture(self):
        d = Dist([0.2, 0.8])
        assert np.allclose(mixture([0.5, 0.5], [d, d]).probs, d.probs)

    def test_symmetric_mixture(self):
        assert np.allclose(mixture([0.5, 0.5], [bernoulli(0), bernoulli(1)]).probs, [0.5, 0.5])

    def test_mixture_shape_error(self):
        with pytest.raises(ShapeError):
            mixture([1.0], [bernoulli(0.5), bernoulli(0.5)])

    @given(simplex_pair(2, 4))
    def test_product_marginals(self, pq):
        p, q = pq
        joint = product_dist([p, q]).probs.reshape(len(p), len(q))
        assert np.allclose(joint.sum(axis=1), p.probs)
        assert np.allclose(joint.sum(axis=0), q.probs)

    @given(simplex_pair(2, 5))
    def test_hellinger_convex_in_mixture(self, pq):
        p, q = pq
        r = Dist(np.full(len(p), 1 / len(p)))
        m = mixture([0.5, 0.5], [p, q])
        assert hellinger_sq(m, r) <= 0.5 * hellinger_sq(p, r) + 0.5 * hellinger_sq(q, r) + 1e-12


def test_log_ratio_bound():
    assert log_ratio_bound([0.5, 0.5], [1.0, 0.0]) == math.inf
    assert log_ratio_bound([0.5, 0.5], [0.25, 0.75]) == 2.0
