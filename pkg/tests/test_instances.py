import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from madec.constructions import normal_form_instance
from madec.core import ObsSymbol
from madec.instances import (
    Decision,
    FiniteModel,
    Instance,
    InstanceFormatError,
    Kind,
    KindError,
    find_equilibrium,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
    validate_instance,
)


def pennies(kind="NE"):
    f1 = np.array([[1.0, 0.0], [0.0, 1.0]])
    return normal_form_instance(np.stack([f1, 1 - f1])[None], kind, action_labels=[["H", "T"], ["H", "T"]])


def payoffs(n_models=2, shape=(2, 2)):
    size = n_models * len(shape) * int(np.prod(shape))
    return st.lists(st.floats(0, 1), min_size=size, max_size=size).map(
        lambda x: np.array(x).reshape((n_models, len(shape)) + shape))


def brute_gains(F, pi, kind):
    """Deviation gain per player by enumeration over pure deviations or swap maps."""
    K, shape = F.shape[0], F.shape[1:]
    profiles = list(np.ndindex(*shape))
    current = [sum(pi[s] * F[k][s] for s in profiles) for k in range(K)]
    out = []
    for k in range(K):
        best = current[k]
        if kind == "CE":
            maps = itertools.product(range(shape[k]), repeat=shape[k])
        else:
            maps = ((b,) * shape[k] for b in range(shape[k]))
        for phi in maps:
            v = 0.0
            for s in profiles:
                dev = list(s)
                dev[k] = phi[s[k]]
                v += pi[s] * F[k][tuple(dev)]
            best = max(best, v)
        out.append(best - current[k])
    return out


class TestMatchingPennies:
    def test_rewards_at_pure_profile(self):
        inst = pennies()
        d = inst.pure_decision((0, 0))
        assert inst.expected_reward(0, d, 0) == 1.0
        assert inst.expected_reward(0, d, 1) == 0.0

    def test_rewards_at_uniform(self):
        inst = pennies()
        d = inst.uniform_decision()
        assert inst.expected_reward(0, d, 0) == pytest.approx(0.5)
        assert inst.expected_reward(0, d, 1) == pytest.approx(0.5)

    def test_suboptimality(self):
        inst = pennies()
        assert inst.suboptimality(0, inst.uniform_decision()) == pytest.approx(0.0, abs=1e-15)
        assert inst.suboptimality(0, inst.pure_decision((0, 0))) == pytest.approx(1.0)

    def test_equilibrium_predicate(self):
        inst = pennies()
        assert inst.is_equilibrium(0, inst.uniform_decision(), 1e-9)
        assert not inst.is_equilibrium(0, inst.pure_decision((0, 0)), 1e-9)

    def test_cce_uniform_is_equilibrium(self):
        inst = pennies("CCE")
        assert inst.is_equilibrium(0, inst.uniform_decision())
        eq = find_equilibrium(inst, 0)
        assert inst.suboptimality(0, eq) <= 1e-9

    def test_nash_found(self):
        inst = pennies()
        eq = find_equilibrium(inst, 0)
        assert np.allclose(eq.marginals[0], 0.5) and np.allclose(eq.marginals[1], 0.5)

    def test_ne_existence_verified(self):
        rep = validate_instance(pennies())
        assert rep["existence"] == {"M0": "verified"}
        assert rep["ok"]

    def test_hr_accessor_errors(self):
        with pytest.raises(KindError):
            pennies().hidden_value(0, Decision.at(0))


class TestHR:
    def setup_method(self):
        ker = np.array([[1.0, 0.0], [0.5, 0.5]])
        self.inst = Instance(1, "HR", [["a", "b"]], [ObsSymbol("x"), ObsSymbol("y")],
                             [FiniteModel("m", ker, [0.2, 0.9])])

    def test_argmax_gap_zero(self):
        assert self.inst.suboptimality(0, Decision.at(1)) == 0.0
        assert self.inst.suboptimality(0, Decision.at(0)) == pytest.approx(0.7)

    def test_equilibrium_is_argmax(self):
        assert find_equilibrium(self.inst, 0).index == 1

    def test_reward_access_errors(self):
        with pytest.raises(KindError):
            self.inst.expected_reward(0, Decision.at(0), 0)


class TestValidation:
    def test_cce_monotone(self, rng):
        inst = normal_form_instance(rng.uniform(size=(3, 2, 2, 2)), "CCE")
        rep = validate_instance(inst)
        assert rep["monotonicity"] and rep["reveal_flag"]
        assert all(v == "verified" for v in rep["existence"].values())

    def test_reveal_flag_failure(self):
        obs = [ObsSymbol("a", (0.0, 0.0), (0, 0)), ObsSymbol("b", (0.0, 0.0), (1, 1))]
        ker = np.zeros((4, 2))
        ker[:, 0] = 1.0  # every row emits a symbol tagged (0,0)
        inst = Instance(2, "CCE", [["0", "1"], ["0", "1"]], obs, [FiniteModel("m", ker)], reveals_sigma=True)
        rep = validate_instance(inst)
        assert not rep["reveal_flag"]
        assert not rep["ok"]

    def test_row_sum_checked(self):
        with pytest.raises(ValueError):
            FiniteModel("bad", np.array([[0.5, 0.4]]))


class TestFileFormat:
    def test_round_trip(self, tmp_path, rng):
        inst = normal_form_instance(rng.uniform(size=(2, 2, 2, 2)), "CE")
        path = tmp_path / "i.json"
        save_instance(inst, path)
        back = load_instance(path)
        assert np.array_equal(back.kernels, inst.kernels)
        assert back.labels == inst.labels and back.kind is Kind.CE
        assert instance_to_dict(back) == instance_to_dict(inst)

    def test_probabilities_are_strings(self, rng):
        d = instance_to_dict(pennies())
        assert isinstance(d["models"][0]["kernel"][0][0], str)

    def test_missing_field_named(self):
        d = instance_to_dict(pennies())
        del d["models"][0]["kernel"]
        with pytest.raises(InstanceFormatError, match="kernel"):
            instance_from_dict(d)

    def test_bad_kind(self):
        d = instance_to_dict(pennies())
        d["kind"] = "XX"
        with pytest.raises(InstanceFormatError, match="kind"):
            instance_from_dict(d)

    def test_bad_row_sum(self):
        d = instance_to_dict(pennies())
        d["models"][0]["kernel"][0][0] = "0.5"
        with pytest.raises(InstanceFormatError, match="models\\[0\\]"):
            instance_from_dict(d)

    def test_not_json(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text("{nope")
        with pytest.raises(InstanceFormatError):
            load_instance(p)


@pytest.mark.parametrize("kind", ["CCE", "CE"])
@given(F=payoffs(), w=st.lists(st.floats(0.01, 1), min_size=4, max_size=4))
def test_gains_match_enumeration(kind, F, w):
    inst = normal_form_instance(F, kind)
    pi = np.array(w).reshape(2, 2)
    pi /= pi.sum()
    got = inst.player_gains(Decision.joint(pi))
    for m in range(F.shape[0]):
        assert np.allclose(got[m], brute_gains(F[m], pi, kind), atol=1e-12)


@given(F=payoffs(), x=st.floats(0, 1), y=st.floats(0, 1))
def test_ne_gains_match_enumeration(F, x, y):
    inst = normal_form_instance(F, "NE")
    d = Decision.product([[x, 1 - x], [y, 1 - y]])
    pi = np.outer([x, 1 - x], [y, 1 - y])
    got = inst.player_gains(d)
    for m in range(F.shape[0]):
        assert np.allclose(got[m], brute_gains(F[m], pi, "CCE"), atol=1e-12)


@given(F=payoffs(n_models=1), w=st.lists(st.floats(0.01, 1), min_size=4, max_size=4))
def test_cce_below_ce(F, w):
    pi = np.array(w).reshape(2, 2)
    pi /= pi.sum()
    d = Decision.joint(pi)
    cce = normal_form_instance(F, "CCE").suboptimality(0, d)
    ce = normal_form_instance(F, "CE").suboptimality(0, d)
    assert cce <= ce + 1e-12


@given(F=payoffs(n_models=3))
def test_relabeling_models_permutes_losses(F):
    inst = normal_form_instance(F, "CCE")
    perm = [2, 0, 1]
    other = normal_form_instance(F[perm], "CCE")
    grid = inst.pure_grid()
    assert np.allclose(inst.loss_table(grid)[perm], other.loss_table(grid), atol=1e-15)


def test_linearity_in_decision(rng):
    inst = normal_form_instance(rng.uniform(size=(2, 2, 2, 2)), "CCE")
    a, b = inst.pure_decision((0, 1)), inst.pure_decision((1, 0))
    mix = Decision.joint(0.3 * a.probs + 0.7 * b.probs)
    assert np.allclose(inst.obs_dist(0, mix), 0.3 * inst.obs_dist(0, a) + 0.7 * inst.obs_dist(0, b))
