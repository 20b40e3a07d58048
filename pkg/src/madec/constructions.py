"""Builders for normal-form classes, the reductions between the multi-agent and
hidden-reward settings, and the lower-bound instance families."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Divergence, ObsSymbol, ShapeError, get_divergence
from .instances import Decision, FiniteModel, Instance, Kind, KindError

# caps on the layered family: dense DEC work needs |Pi| x |M| tables
LAYERED_DENSE_MAX_L = 4
LAYERED_FACTORED_MAX_L = 12
TWIN_ALPHA0_FLOOR = 1e-6


def _bits(K: int):
    return list(itertools.product((0, 1), repeat=K))


def normal_form_instance(payoffs, kind: Kind | str = "CCE", labels: Sequence[str] | None = None,
                         action_labels: Sequence[Sequence[str]] | None = None) -> Instance:
    """Bernoulli-reward game class whose observations reveal the sampled profile.

    ``payoffs`` has shape (n_models, K, A_1, ..., A_K) (a single hypothesis may
    drop the leading axis); entry [m, k, a] is player k's mean reward at profile a.
    """
    P = np.asarray(payoffs, dtype=float)
    if P.ndim < 2:
        raise ShapeError("payoffs need a player axis")
    if P.shape[1] != P.ndim - 2:
        P = P[None]
    n_models, K = P.shape[0], P.shape[1]
    shape = P.shape[2:]
    if len(shape) != K:
        raise ShapeError(f"payoff tables have {len(shape)} action axes for K={K}")
    if P.min() < 0 or P.max() > 1:
        raise ValueError("payoffs must lie in [0, 1] for Bernoulli rewards")
    if action_labels is None:
        action_labels = [[str(a) for a in range(n)] for n in shape]
    labels = list(labels) if labels is not None else [f"M{i}" for i in range(n_models)]
    bits = _bits(K)
    obs = []
    for prof in np.ndindex(*shape):
        name = ",".join(action_labels[k][a] for k, a in enumerate(prof))
        for b in bits:
            obs.append(ObsSymbol(f"({name})|{''.join(map(str, b))}", b, prof))
    n_rows = int(np.prod(shape))
    B = np.array(bits, dtype=float)
    models = []
    for m in range(n_models):
        kernel = np.zeros((n_rows, n_rows * len(bits)))
        for row, prof in enumerate(np.ndindex(*shape)):
            mu = P[(m, slice(None)) + prof]
            kernel[row, row * len(bits):(row + 1) * len(bits)] = np.prod(B * mu + (1 - B) * (1 - mu), axis=1)
        models.append(FiniteModel(labels[m], kernel))
    return Instance(K, kind, action_labels, obs, models, reveals_sigma=True)


def random_payoff_class(rng: np.random.Generator, n_models: int, shape=(2, 2)) -> np.ndarray:
    """Uniform random payoff hypotheses, shape (n_models, K, *shape)."""
    K = len(shape)
    return rng.uniform(size=(n_models, K) + tuple(shape))


def separation_instance(K: int, A: int, gap: float = 0.25) -> Instance:
    """NE class where any player choosing action 0 zeroes everyone's reward.

    Models are one per assignment of a good arm to each player (mean 1/2 + gap
    on it, 1/2 elsewhere) plus a needle-free model; the all-zero profile is an
    equilibrium of every model.
    """
    if K < 1 or A < 1:
        raise ValueError("need K >= 1 and A >= 1")
    shape = (A + 1,) * K
    assignments = list(itertools.product(range(1, A + 1), repeat=K))
    tables, labels = [], []
    for arms in assignments + [None]:
        P = np.zeros((K,) + shape)
        for prof in np.ndindex(*shape):
            if 0 in prof:
                continue
            for k in range(K):
                P[(k,) + prof] = 0.5 + (gap if arms is not None and prof[k] == arms[k] else 0.0)
        tables.append(P)
        labels.append("null" if arms is None else "arms=" + ",".join(map(str, arms)))
    return normal_form_instance(np.array(tables), "NE", labels)


def zero_profile(inst: Instance) -> Decision:
    return inst.pure_decision((0,) * inst.K)


def induced_single_agent(J: Instance, k: int, opponents: Sequence[Sequence[int]]) -> Instance:
    """Player k's view of J when the others are frozen at each listed pure profile.

    Models are labeled (M, opponents); the observation keeps the revealed
    profile and player k's reward only.
    """
    if J.kind is not Kind.NE or not J.reveals_sigma:
        raise KindError("induced classes need an NE instance that reveals the profile")
    if not 0 <= k < J.K:
        raise IndexError(f"player {k} out of range")
    symbols: dict[tuple, int] = {}
    obs = []
    column = np.empty(J.n_obs, dtype=int)
    for o, s in enumerate(J.obs):
        key = (s.pure_tag, s.rewards[k])
        if key not in symbols:
            symbols[key] = len(obs)
            prof = ",".join(J.pure_sets[j][a] for j, a in enumerate(s.pure_tag))
            obs.append(ObsSymbol(f"({prof})|r={s.rewards[k]:g}", (s.rewards[k],), (s.pure_tag[k],)))
        column[o] = symbols[key]
    n_k = J.shape[k]
    models = []
    for m, lab in enumerate(J.labels):
        for opp in opponents:
            opp = tuple(int(a) for a in opp)
            if len(opp) != J.K - 1:
                raise ShapeError("opponent profile has wrong length")
            kernel = np.zeros((n_k, len(obs)))
            for a in range(n_k):
                prof = opp[:k] + (a,) + opp[k:]
                row = int(np.ravel_multi_index(prof, J.shape))
                np.add.at(kernel[a], column, J.kernels[m, row])
            name = ",".join(J.pure_sets[j][a] for j, a in enumerate(opp[:k] + (None,) + opp[k:]) if a is not None)
            models.append(FiniteModel(f"{lab}|opp=({name})", kernel))
    lo, hi = J.reward_range
    return Instance(1, "CCE", [J.pure_sets[k]], obs, models, reveals_sigma=True, reward_range=(lo, hi),
                    meta={"induced_from_player": k})


def bandit_gap_family(L: int, A: int) -> Instance:
    """Observed-reward bandit class: Ber(1/2 + d on arm a) for d = 2^-2 .. 2^-L."""
    if L < 2 or A < 2:
        raise ValueError("need L >= 2 and A >= 2")
    obs = [ObsSymbol("0"), ObsSymbol("1")]
    models = []
    for i in range(2, L + 1):
        d = 2.0**-i
        for a in range(A):
            mean = 0.5 + d * (np.arange(A) == a)
            kernel = np.column_stack([1 - mean, mean])
            models.append(FiniteModel(f"d=2^-{i},a={a + 1}", kernel, mean))
    return Instance(1, "HR", [[str(a + 1) for a in range(A)]], obs, models,
                    meta={"family": "bandit_gap", "L": L, "A": A, "rewards_observed": True})


# layered needle family


@dataclass(frozen=True)
class LayeredParams:
    L: int
    C_prob: float = 1.0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("need L >= 1")
        if self.C_prob < 1:
            raise ValueError("need C_prob >= 1")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(2**l for l in range(1, self.L + 1))

    @property
    def deltas(self) -> np.ndarray:
        return np.array([1.0 / (self.C_prob * n) ** 2 for n in self.sizes])

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.L, 1.0 / self.L)


class LayeredInstance:
    """Hidden-reward product family with one needle per layer.

    Decisions and models are both indexed by v in prod_l [N_l]. Layer l of
    model v never emits v_l, emits each other index with probability delta_l and
    a blank symbol otherwise; observations ignore the decision. The value is
    sum_l alpha_l (1 - 1{pi_l = v_l}).
    """

    kind = Kind.HR
    K = 1
    decision_independent = True

    def __init__(self, params: LayeredParams):
        if params.L > LAYERED_FACTORED_MAX_L:
            raise ValueError(f"L={params.L} exceeds the cap {LAYERED_FACTORED_MAX_L}")
        self.params = params
        self.sizes = params.sizes
        self.deltas = params.deltas
        self.alphas = params.weights
        if np.any(self.deltas * (np.array(self.sizes) - 1) > 1):
            raise ValueError("layer probabilities exceed 1")
        self.n_models = math.prod(self.sizes)
        self.n_rows = self.n_models
        self.obs_sizes = tuple(n + 1 for n in self.sizes)
        self.n_obs = math.prod(self.obs_sizes)
        self.dense = params.L <= LAYERED_DENSE_MAX_L
        self.meta = {"family": "layered", "L": params.L, "C_prob": params.C_prob}

    def __repr__(self):
        return f"LayeredInstance(L={self.params.L}, C_prob={self.params.C_prob}, |M|={self.n_models}, |O|={self.n_obs})"

    @property
    def shape(self):
        return (self.n_rows,)

    def _need_dense(self):
        if not self.dense:
            raise ValueError(f"L={self.params.L} is simulation-only (dense cap L <= {LAYERED_DENSE_MAX_L})")

    # indexing

    def needles(self, i: int) -> tuple[int, ...]:
        out = []
        for n in reversed(self.sizes):
            i, r = divmod(i, n)
            out.append(r)
        return tuple(reversed(out))

    def index_of(self, v: Sequence[int]) -> int:
        i = 0
        for a, n in zip(v, self.sizes):
            if not 0 <= a < n:
                raise IndexError(f"layer value {a} out of range {n}")
            i = i * n + int(a)
        return i

    def label(self, i: int) -> str:
        return "-".join(str(a + 1) for a in self.needles(i))

    @property
    def labels(self) -> list[str]:
        self._need_dense()
        return [self.label(i) for i in range(self.n_models)]

    @property
    def pure_sets(self):
        return [self.labels]

    def model_index(self, m) -> int:
        if isinstance(m, (int, np.integer)):
            if not 0 <= m < self.n_models:
                raise IndexError(f"model index {m} out of range")
            return int(m)
        try:
            return self.index_of([int(a) - 1 for a in str(m).split("-")])
        except ValueError:
            raise KeyError(f"unknown model label {m!r}") from None

    def needle_table(self, idx=None) -> np.ndarray:
        idx = np.arange(self.n_models) if idx is None else np.asarray(idx)
        out = np.empty((idx.size, self.params.L), dtype=np.int64)
        rest = idx.astype(np.int64).copy()
        for l in reversed(range(self.params.L)):
            rest, out[:, l] = np.divmod(rest, self.sizes[l])
        return out

    # distributions

    def layer_dist(self, l: int, needle: int) -> np.ndarray:
        n, d = self.sizes[l], self.deltas[l]
        p = np.full(n + 1, d)
        p[needle] = 0.0
        p[n] = 1.0 - d * (n - 1)
        return p

    def model_obs(self, m) -> np.ndarray:
        v = self.needles(self.model_index(m))
        out = np.ones(1)
        for l, a in enumerate(v):
            out = np.multiply.outer(out, self.layer_dist(l, a)).ravel()
        return out

    def model_obs_matrix(self, models=None) -> np.ndarray:
        self._need_dense()
        idx = range(self.n_models) if models is None else models
        return np.array([self.model_obs(i) for i in idx])

    def obs_table(self, grid, models=None) -> np.ndarray:
        M = self.model_obs_matrix(models)
        return np.broadcast_to(M[:, None, :], (M.shape[0], len(grid), M.shape[1]))

    # values

    def _decision_needles(self, grid) -> np.ndarray:
        idx = []
        for d in grid:
            if isinstance(d, Decision):
                if d.kind != "index":
                    raise KindError("HR instances take index decisions")
                d = d.index
            idx.append(int(d))
        return self.needle_table(idx)

    def loss_table(self, grid, models=None) -> np.ndarray:
        """Gap sum_l alpha_l 1{pi_l = v_l}, shape (|models|, |grid|)."""
        V = self.needle_table(models)
        D = self._decision_needles(grid)
        return np.einsum("mjl,l->mj", (V[:, None, :] == D[None, :, :]).astype(float), self.alphas)

    @property
    def values(self) -> np.ndarray:
        self._need_dense()
        return 1.0 - self.loss_table(range(self.n_rows))

    def gap(self, m, needles_pi: Sequence[int]) -> float:
        v = self.needles(self.model_index(m))
        return float(sum(a for a, x, y in zip(self.alphas, v, needles_pi) if x == y))

    def suboptimality(self, m, d) -> float:
        i = d.index if isinstance(d, Decision) else int(d)
        return self.gap(m, self.needles(i))

    def hidden_value(self, m, d) -> float:
        return 1.0 - self.suboptimality(m, d)

    # sampling

    def sample_layers(self, m, rng: np.random.Generator, size: int) -> np.ndarray:
        """Per-layer codes of ``size`` observations, shape (size, L); code N_l means blank."""
        v = self.needles(self.model_index(m))
        out = np.empty((size, self.params.L), dtype=np.int64)
        for l, a in enumerate(v):
            out[:, l] = rng.choice(self.sizes[l] + 1, size=size, p=self.layer_dist(l, a))
        return out

    def sample_profile(self, d, rng) -> int:
        return d.index if isinstance(d, Decision) else int(d)

    def sample_obs_at(self, m, row: int, rng) -> int:
        codes = self.sample_layers(m, rng, 1)[0]
        return int(np.ravel_multi_index(tuple(codes), self.obs_sizes))

    def to_dense(self) -> Instance:
        self._need_dense()
        obs = []
        for codes in np.ndindex(*self.obs_sizes):
            name = ".".join("_" if c == n else str(c + 1) for c, n in zip(codes, self.sizes))
            obs.append(ObsSymbol(name))
        vals = self.values
        M = self.model_obs_matrix()
        models = [
            FiniteModel(self.label(i), np.broadcast_to(M[i], (self.n_rows, self.n_obs)), vals[i])
            for i in range(self.n_models)
        ]
        return Instance(1, "HR", [self.labels], obs, models, meta=dict(self.meta))


def rehydrate(inst):
    """Rebuild the structured form of a loaded instance when its metadata names a family."""
    meta = getattr(inst, "meta", {}) or {}
    if meta.get("family") == "layered":
        return layered_needle_instance(LayeredParams(int(meta["L"]), float(meta["C_prob"])))
    return inst


def layered_needle_instance(params: LayeredParams) -> LayeredInstance:
    return LayeredInstance(params)


# twin instances for the f-divergence separation


@dataclass(frozen=True)
class TwinParams:
    """Parameters of the two needle instances with matched pairwise divergences.

    Instance 1 uses (delta1, beta1) with delta1 = C0 ln T / ((N - 1) T) and
    beta1 = delta1 / N^(eps/alpha); instance 2 uses beta2 = delta2 / 2 with delta2
    chosen so both instances share the same pairwise divergence.
    """

    N: int
    T: int
    eps: float
    phi: Divergence | str = "hellinger"
    C0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phi", get_divergence(self.phi))
        if self.N < 2 or self.T < 2:
            raise ValueError("need N >= 2 and T >= 2")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")

    @classmethod
    def from_effective(cls, T: int, C_eff: float, eps: float, phi="hellinger", C0: float = 1.0) -> "TwinParams":
        return cls(max(2, math.ceil(math.sqrt(T / C_eff))), T, eps, phi, C0)

    @property
    def delta1(self) -> float:
        return self.C0 * math.log(self.T) / ((self.N - 1) * self.T)

    @property
    def beta1(self) -> float:
        if self.phi.alpha == 0:
            return self.delta1 * TWIN_ALPHA0_FLOOR
        return self.delta1 / self.N ** (self.eps / self.phi.alpha)

    @property
    def target(self) -> float:
        d, b = self.delta1, self.beta1
        phi = self.phi.phi
        return float(b * phi(np.array([d / b]))[0] + d * phi(np.array([b / d]))[0])

    @property
    def delta2(self) -> float:
        phi = self.phi.phi
        return self.target / float(phi(np.array([2.0]))[0] / 2 + phi(np.array([0.5]))[0])

    @property
    def beta2(self) -> float:
        return self.delta2 / 2

    @property
    def horizon2(self) -> int:
        """Largest horizon S with S <= 1 / delta2^(1 - eps)."""
        return math.floor(1.0 / self.delta2 ** (1 - self.eps))


def twin_model_row(N: int, i: int, delta: float, beta: float) -> np.ndarray:
    """Observation law over [N] + blank: blank w.p. 1 - delta(N-1) - beta, i w.p. beta, others delta."""
    p = np.full(N + 1, delta)
    p[i] = beta
    p[N] = 1.0 - delta * (N - 1) - beta
    return p


def _needle_instance(N: int, delta: float, beta: float, tag: str, meta: dict) -> Instance:
    if delta * (N - 1) + beta > 1 + 1e-12:
        raise ValueError(f"{tag}: probabilities exceed 1 (delta={delta:.4g}, beta={beta:.4g})")
    obs = [ObsSymbol(str(j + 1)) for j in range(N)] + [ObsSymbol("_")]
    models = []
    for i in range(N):
        values = 1.0 - (np.arange(N) == i)
        models.append(FiniteModel(str(i + 1), np.tile(twin_model_row(N, i, delta, beta), (N, 1)), values))
    return Instance(1, "HR", [[str(j + 1) for j in range(N)]], obs, models,
                    meta=dict(meta, family="twin", N=N, delta=delta, beta=beta))


def twin_instances(p: TwinParams) -> tuple[Instance, Instance, dict]:
    base = {"T": p.T, "eps": p.eps, "phi": p.phi.kind}
    one = _needle_instance(p.N, p.delta1, p.beta1, "instance 1", base)
    two = _needle_instance(p.N, p.delta2, p.beta2, "instance 2", base)
    return one, two, {lab: lab for lab in one.labels}


def needle_instance(N: int, delta: float, beta: float) -> Instance:
    return _needle_instance(N, delta, beta, "needle", {})


# reductions


def ma_to_hr(J, grid: Sequence[Decision]) -> Instance:
    """Hidden-reward instance on a decision grid with value K - h."""
    grid = list(grid)
    if not grid:
        raise ValueError("decision grid is empty")
    if J.kind is Kind.HR:
        raise KindError("input must be a multi-agent instance")
    h = J.loss_table(grid)
    P = J.obs_table(grid)
    names = [d.label or f"d{j}" for j, d in enumerate(grid)]
    models = [FiniteModel(lab, P[i], J.K - h[i]) for i, lab in enumerate(J.labels)]
    return Instance(1, "HR", [names], J.obs, models, meta={"reduced_from": J.kind.value, "K": J.K})


class EmbeddedInstance:
    """Two-player zero-sum NE instance carrying a hidden-reward instance.

    Player 1 picks a base decision, player 2 picks i in {0, ..., V}; models are
    pairs (M, v). Profile (s, 0) emits M(s) with zero rewards; (s, i) with
    i not in {0, v} emits a blank with r2 = -r1 = -1; (s, v) emits a blank with
    r2 = -r1 = g^M(s). Rewards live in [-1, 1].
    """

    kind = Kind.NE
    K = 2
    decision_independent = False
    reveals_sigma = False

    def __init__(self, base: Instance, V: int):
        if base.kind is not Kind.HR:
            raise KindError("embedding needs a hidden-reward instance")
        if V < 1:
            raise ValueError("need V >= 1")
        self.base = base
        self.V = int(V)
        self.gaps = base.values.max(axis=1, keepdims=True) - base.values
        gap_levels = np.unique(self.gaps)
        self.gap_levels = gap_levels
        r = max(1.0, float(gap_levels.max()))
        self.reward_range = (-r, r)
        self._gap_code = np.searchsorted(gap_levels, self.gaps)
        self.n_base_obs = base.n_obs
        self.obs = (
            [ObsSymbol(f"o:{s.id}", (0.0, 0.0)) for s in base.obs]
            + [ObsSymbol("blank|r1=1", (1.0, -1.0))]
            + [ObsSymbol(f"blank|g={g:.12g}", (-float(g), float(g))) for g in gap_levels]
        )
        self.n_obs = len(self.obs)
        self.n_models = base.n_models * self.V
        self.shape = (base.n_rows, self.V + 1)
        self.n_rows = self.shape[0] * self.shape[1]
        self.meta = {"embedded_from": "HR", "V": self.V}

    def __repr__(self):
        return f"EmbeddedInstance(|M|={self.n_models}, shape={self.shape}, |O|={self.n_obs})"

    @property
    def pure_sets(self):
        return [self.base.pure_sets[0], [str(i) for i in range(self.V + 1)]]

    def split(self, m: int) -> tuple[int, int]:
        """(base model index, v in 1..V) of a model index."""
        b, r = divmod(int(m), self.V)
        return b, r + 1

    def label(self, m: int) -> str:
        b, v = self.split(m)
        return f"{self.base.labels[b]}|v={v}"

    @property
    def labels(self) -> list[str]:
        return [self.label(m) for m in range(self.n_models)]

    def model_index(self, m) -> int:
        if isinstance(m, (int, np.integer)):
            if not 0 <= m < self.n_models:
                raise IndexError(f"model index {m} out of range")
            return int(m)
        base, _, v = str(m).rpartition("|v=")
        return self.base.model_index(base) * self.V + int(v) - 1

    def lift_reference(self, base_weights) -> np.ndarray:
        """Weights over (M, v) equal to base weights times uniform over v."""
        w = np.asarray(base_weights, dtype=float)
        return np.repeat(w / self.V, self.V)

    def lift_decision(self, d: Decision) -> Decision:
        """Base decision index s as the profile (s, 0)."""
        s = d.index if isinstance(d, Decision) else int(d)
        e1 = np.zeros(self.shape[0])
        e1[s] = 1.0
        e2 = np.zeros(self.V + 1)
        e2[0] = 1.0
        name = d.label if isinstance(d, Decision) and d.label else str(s)
        return Decision.product([e1, e2], label=f"({name},0)")

    def pure_decision(self, profile) -> Decision:
        s, i = (int(a) for a in profile)
        e1 = np.zeros(self.shape[0])
        e1[s] = 1.0
        e2 = np.zeros(self.V + 1)
        e2[i] = 1.0
        return Decision.product([e1, e2], label=f"({s},{i})")

    def _models(self, models):
        idx = np.arange(self.n_models) if models is None else np.asarray(models, dtype=int)
        return idx // self.V, idx % self.V + 1

    def _marginals(self, d: Decision):
        if d.kind != "product":
            raise KindError("NE instances take product decisions")
        x1, x2 = d.marginals
        if x1.size != self.shape[0] or x2.size != self.V + 1:
            raise ShapeError("decision does not match pure sets")
        return x1, x2

    def obs_table(self, grid, models=None) -> np.ndarray:
        b, v = self._models(models)
        out = np.zeros((b.size, len(grid), self.n_obs))
        nb = self.n_base_obs
        for j, d in enumerate(grid):
            x1, x2 = self._marginals(d)
            base_part = np.einsum("s,bso->bo", x1, self.base.kernels)
            out[:, j, :nb] = x2[0] * base_part[b]
            pv = x2[v]
            out[:, j, nb] = 1.0 - x2[0] - pv
            # mass of each gap level under x1, per base model
            levels = np.zeros((self.base.n_models, self.gap_levels.size))
            for bb in range(self.base.n_models):
                np.add.at(levels[bb], self._gap_code[bb], x1)
            out[:, j, nb + 1:] = pv[:, None] * levels[b]
        return out

    def player_gains(self, d: Decision, models=None) -> np.ndarray:
        b, v = self._models(models)
        x1, x2 = self._marginals(d)
        eg = self.gaps @ x1
        ming = self.gaps.min(axis=1)
        pv = x2[v]
        rest = 1.0 - x2[0] - pv
        h1 = pv * (eg[b] - ming[b])
        h2 = np.maximum(eg[b], 0.0) + rest - pv * eg[b]
        return np.column_stack([h1, h2])

    def loss_table(self, grid, models=None) -> np.ndarray:
        return np.stack([self.player_gains(d, models).sum(axis=1) for d in grid], axis=1)

    def suboptimality(self, m, d) -> float:
        return float(self.loss_table([d], [self.model_index(m)])[0, 0])

    def row_dist(self, m, s: int, i: int) -> np.ndarray:
        """Observation law of model m at pure profile (s, i), read off the reward table."""
        b, v = self.split(self.model_index(m))
        p = np.zeros(self.n_obs)
        if i == 0:
            p[: self.n_base_obs] = self.base.kernels[b, s]
        elif i != v:
            p[self.n_base_obs] = 1.0
        else:
            p[self.n_base_obs + 1 + self._gap_code[b, s]] = 1.0
        return p

    def to_dense(self) -> Instance:
        if self.n_models * self.n_rows * self.n_obs > 5e7:
            raise ValueError("embedding too large to materialize")
        models = []
        for m in range(self.n_models):
            kernel = np.array([self.row_dist(m, s, i) for s, i in np.ndindex(*self.shape)])
            models.append(FiniteModel(self.label(m), kernel))
        return Instance(2, "NE", self.pure_sets, self.obs, models, reward_range=self.reward_range, meta=dict(self.meta))


def hr_to_ma(I: Instance, V: int) -> EmbeddedInstance:
    return EmbeddedInstance(I, V)
