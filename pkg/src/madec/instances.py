"""Finite multi-agent and hidden-reward instances.

An instance bundles a model class (probability kernels from pure decisions to
reward-annotated observation symbols), a decision space and an equilibrium
structure. Everything here is exact finite arithmetic on numpy arrays; model
evaluations are vectorized over the whole class.
"""

from __future__ import annotations

import itertools
import json
import os
import tempfile
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .core import NORM_TOL, Dist, ObsSymbol, ShapeError

NEG_TOL = 1e-9


class Kind(str, Enum):
    NE = "NE"
    CCE = "CCE"
    CE = "CE"
    HR = "HR"


class KindError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Decision:
    """A decision: per-player mixtures (product), a joint mixture, or an index into a finite list."""

    kind: str
    marginals: tuple = ()
    probs: np.ndarray | None = None
    index: int | None = None
    label: str = ""

    @classmethod
    def product(cls, marginals: Sequence, label: str = "") -> "Decision":
        parts = tuple(Dist(m).probs for m in marginals)
        if not parts:
            raise ShapeError("product decision needs at least one player")
        return cls("product", marginals=parts, label=label)

    @classmethod
    def joint(cls, probs, label: str = "") -> "Decision":
        p = np.asarray(probs, dtype=float)
        Dist(p)
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        return cls("joint", probs=p, label=label)

    @classmethod
    def at(cls, index: int, label: str = "") -> "Decision":
        return cls("index", index=int(index), label=label)

    def joint_probs(self, shape: tuple[int, ...]) -> np.ndarray:
        """Joint distribution over pure profiles with the given per-player sizes."""
        if self.kind == "product":
            if tuple(m.size for m in self.marginals) != tuple(shape):
                raise ShapeError(f"marginal sizes {[m.size for m in self.marginals]} vs {shape}")
            out = self.marginals[0]
            for m in self.marginals[1:]:
                out = np.multiply.outer(out, m)
            return out
        if self.kind == "joint":
            return self.probs.reshape(shape)
        raise KindError("index decisions have no joint form")

    def __repr__(self):
        if self.label:
            return f"Decision({self.label})"
        if self.kind == "index":
            return f"Decision(#{self.index})"
        if self.kind == "product":
            return "Decision(" + " x ".join(np.array2string(m, precision=3) for m in self.marginals) + ")"
        return f"Decision(joint {np.array2string(self.probs.ravel(), precision=3)})"


@dataclass(frozen=True, eq=False)
class FiniteModel:
    """A kernel with one row per pure profile (or per decision for HR instances)."""

    label: str
    kernel: np.ndarray
    values: np.ndarray | None = None

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        if k.ndim != 2:
            raise ShapeError(f"model {self.label}: kernel must be a matrix")
        if k.min() < -NORM_TOL:
            raise ValueError(f"model {self.label}: negative probability")
        bad = np.abs(k.sum(axis=1) - 1.0) > NORM_TOL
        if bad.any():
            raise ValueError(f"model {self.label}: row {int(np.argmax(bad))} does not sum to 1")
        k = np.clip(k, 0.0, None)
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)
        if self.values is not None:
            v = np.array(self.values, dtype=float)
            if v.shape != (k.shape[0],):
                raise ShapeError(f"model {self.label}: value table length {v.shape} vs {k.shape[0]} decisions")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)


def _contract_others(table: np.ndarray, marginals: Sequence[np.ndarray], k: int) -> np.ndarray:
    """Contract axes 1..K of table (leading model axis kept) against every marginal but k's."""
    out = table
    for j in reversed(range(len(marginals))):
        if j != k:
            out = np.tensordot(out, marginals[j], axes=([1 + j], [0]))
    return out


class Instance:
    """A finite MA-DMSO (NE/CCE/CE) or HR-DMSO instance.

    For MA kinds the kernel rows are the pure profiles of ``pure_sets`` in
    row-major order. For HR the single pure set lists the decisions and each
    model carries a hidden value table.
    """

    def __init__(
        self,
        K: int,
        kind: Kind | str,
        pure_sets: Sequence[Sequence[str]],
        obs: Sequence[ObsSymbol],
        models: Sequence[FiniteModel],
        reveals_sigma: bool = False,
        reward_range: tuple[float, float] = (0.0, 1.0),
        meta: dict | None = None,
    ):
        self.K = int(K)
        self.kind = Kind(kind)
        self.pure_sets = [list(map(str, s)) for s in pure_sets]
        self.obs = list(obs)
        self.reveals_sigma = bool(reveals_sigma)
        self.reward_range = (float(reward_range[0]), float(reward_range[1]))
        self.meta = dict(meta or {})
        if not models:
            raise ValueError("model class is empty")
        self._models = list(models)
        self._labels = [m.label for m in self._models]
        if len(set(self._labels)) != len(self._labels):
            raise ValueError("duplicate model labels")
        self._index = {lab: i for i, lab in enumerate(self._labels)}
        self._check_shapes()
        self._kernels = np.stack([m.kernel for m in self._models])
        self._kernels.setflags(write=False)
        if self.kind is Kind.HR:
            if any(m.values is None for m in self._models):
                raise ValueError("HR models need value tables")
            self._values = np.stack([m.values for m in self._models])
        else:
            self._values = None
            R = self.reward_matrix
            self._f = np.einsum("mro,ok->mrk", self._kernels, R)

    # structure

    def _check_shapes(self):
        if self.kind is Kind.HR:
            if len(self.pure_sets) != 1:
                raise ShapeError("HR instances have a single decision list")
        elif len(self.pure_sets) != self.K:
            raise ShapeError(f"{len(self.pure_sets)} pure sets for K={self.K}")
        if any(len(s) == 0 for s in self.pure_sets):
            raise ShapeError("empty pure set")
        n_rows = int(np.prod(self.shape))
        n_obs = len(self.obs)
        for m in self._models:
            if m.kernel.shape != (n_rows, n_obs):
                raise ShapeError(f"model {m.label}: kernel {m.kernel.shape}, expected {(n_rows, n_obs)}")
        if self.kind is not Kind.HR:
            for s in self.obs:
                if len(s.rewards) != self.K:
                    raise ShapeError(f"symbol {s.id}: {len(s.rewards)} rewards for K={self.K}")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.pure_sets)

    @property
    def n_models(self) -> int:
        return len(self._labels)

    @property
    def n_obs(self) -> int:
        return len(self.obs)

    @property
    def n_rows(self) -> int:
        return int(np.prod(self.shape))

    @property
    def labels(self) -> list[str]:
        return list(self._labels)

    @property
    def models(self) -> list[FiniteModel]:
        return list(self._models)

    @property
    def kernels(self) -> np.ndarray:
        return self._kernels

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            raise KindError("only HR instances carry hidden value tables")
        return self._values

    @property
    def reward_matrix(self) -> np.ndarray:
        return np.array([s.rewards for s in self.obs], dtype=float).reshape(self.n_obs, self.K)

    @property
    def profile_rewards(self) -> np.ndarray:
        """Expected rewards per model, pure profile and player, shape (|M|, *shape, K)."""
        return self._f.reshape((self.n_models,) + self.shape + (self.K,))

    @property
    def is_ma(self) -> bool:
        return self.kind is not Kind.HR

    @property
    def decision_independent(self) -> bool:
        """True when every model emits the same observation law at every pure decision."""
        k = self.kernels
        return bool(np.all(np.abs(k - k[:, :1, :]) <= 1e-15))

    def model_obs_matrix(self, models: Sequence[int] | None = None) -> np.ndarray:
        """Per-model observation law, shape (|models|, |O|); needs decision-independent kernels."""
        if not self.decision_independent:
            raise KindError("observation laws depend on the decision")
        ker = self.kernels if models is None else self.kernels[np.asarray(models)]
        return ker[:, 0, :]

    def model_index(self, m) -> int:
        if isinstance(m, (int, np.integer)):
            if not 0 <= m < self.n_models:
                raise IndexError(f"model index {m} out of range")
            return int(m)
        try:
            return self._index[m]
        except KeyError:
            raise KeyError(f"unknown model label {m!r}") from None

    def model(self, m) -> FiniteModel:
        return self._models[self.model_index(m)]

    def __repr__(self):
        return f"Instance({self.kind.value}, K={self.K}, shape={self.shape}, |M|={self.n_models}, |O|={self.n_obs})"

    # decisions

    def pure_decision(self, profile) -> Decision:
        if self.kind is Kind.HR:
            (i,) = tuple(np.atleast_1d(profile))
            return Decision.at(int(i), label=self.pure_sets[0][int(i)])
        profile = tuple(int(a) for a in profile)
        label = "(" + ",".join(self.pure_sets[k][a] for k, a in enumerate(profile)) + ")"
        if self.kind is Kind.NE:
            return Decision.product([Dist.point(n, a) for n, a in zip(self.shape, profile)], label=label)
        p = np.zeros(self.shape)
        p[profile] = 1.0
        return Decision.joint(p, label=label)

    def uniform_decision(self) -> Decision:
        if self.kind is Kind.HR:
            raise KindError("HR decisions are indices; there is no uniform decision")
        if self.kind is Kind.NE:
            return Decision.product([Dist.uniform(n) for n in self.shape], label="uniform")
        return Decision.joint(np.full(self.shape, 1.0 / self.n_rows), label="uniform")

    def pure_grid(self, include_uniform: bool = True) -> list[Decision]:
        grid = [self.pure_decision(p) for p in np.ndindex(*self.shape)]
        if include_uniform and self.kind is not Kind.HR:
            grid.append(self.uniform_decision())
        return grid

    def joint_of(self, d: Decision) -> np.ndarray:
        """Flat joint distribution over pure profiles (MA) or point mass over decisions (HR)."""
        if d.kind == "index":
            if self.kind is not Kind.HR:
                raise KindError("index decisions only apply to HR instances")
            if not 0 <= d.index < self.n_rows:
                raise IndexError(f"decision {d.index} out of range")
            e = np.zeros(self.n_rows)
            e[d.index] = 1.0
            return e
        if self.kind is Kind.HR:
            raise KindError("HR instances take index decisions")
        if self.kind is Kind.NE and d.kind != "product":
            raise KindError("NE instances take product decisions")
        return d.joint_probs(self.shape).ravel()

    # evaluation

    def obs_dist(self, m, d: Decision) -> np.ndarray:
        return self.joint_of(d) @ self.kernels[self.model_index(m)]

    def obs_table(self, grid: Sequence[Decision], models: Sequence[int] | None = None) -> np.ndarray:
        """Observation laws, shape (|models|, |grid|, |O|)."""
        J = np.array([self.joint_of(d) for d in grid])
        ker = self.kernels if models is None else self.kernels[np.asarray(models)]
        return np.einsum("jr,mro->mjo", J, ker)

    def player_gains(self, d: Decision, models: Sequence[int] | None = None) -> np.ndarray:
        """Best deviation gain per model and player, shape (|models|, K)."""
        if self.kind is Kind.HR:
            raise KindError("HR instances have no players; use gap")
        F = self.profile_rewards
        if models is not None:
            F = F[np.asarray(models)]
        n = F.shape[0]
        out = np.empty((n, self.K))
        if self.kind is Kind.NE:
            if d.kind != "product":
                raise KindError("NE instances take product decisions")
            xs = d.marginals
            if tuple(x.size for x in xs) != self.shape:
                raise ShapeError("decision does not match pure sets")
            for k in range(self.K):
                dev = _contract_others(F[..., k], xs, k)
                out[:, k] = dev.max(axis=1) - dev @ xs[k]
            return out
        pi = d.joint_probs(self.shape)
        for k in range(self.K):
            Fk = np.moveaxis(F[..., k], 1 + k, 1).reshape(n, self.shape[k], -1)
            pk = np.moveaxis(pi, k, 0).reshape(self.shape[k], -1)
            current = np.einsum("mar,ar->m", Fk, pk)
            if self.kind is Kind.CCE:
                dev = Fk @ pk.sum(axis=0)
                out[:, k] = np.maximum(dev.max(axis=1) - current, 0.0)
            else:
                swap = np.einsum("mbr,ar->mab", Fk, pk)
                out[:, k] = swap.max(axis=2).sum(axis=1) - current
        return out

    def loss_table(self, grid: Sequence[Decision], models: Sequence[int] | None = None) -> np.ndarray:
        """Suboptimality h (MA) or gap g (HR), shape (|models|, |grid|)."""
        if self.kind is Kind.HR:
            vals = self.values if models is None else self.values[np.asarray(models)]
            idx = np.array([self._hr_index(d) for d in grid], dtype=int)
            return vals.max(axis=1, keepdims=True) - vals[:, idx]
        return np.stack([self.player_gains(d, models).sum(axis=1) for d in grid], axis=1)

    def _hr_index(self, d) -> int:
        if isinstance(d, Decision):
            if d.kind != "index":
                raise KindError("HR instances take index decisions")
            i = d.index
        else:
            i = int(d)
        if not 0 <= i < self.n_rows:
            raise IndexError(f"decision {i} out of range")
        return i

    def expected_reward(self, m, d: Decision, k: int) -> float:
        if self.kind is Kind.HR:
            raise KindError("rewards are hidden in HR instances; use hidden_value")
        if not 0 <= k < self.K:
            raise IndexError(f"player {k} out of range")
        return float(self.joint_of(d) @ self._f[self.model_index(m), :, k])

    def hidden_value(self, m, d) -> float:
        if self.kind is not Kind.HR:
            raise KindError("hidden values exist only for HR instances")
        return float(self.values[self.model_index(m), self._hr_index(d)])

    def suboptimality(self, m, d) -> float:
        return float(self.loss_table([d], [self.model_index(m)])[0, 0])

    def is_equilibrium(self, m, d, tol: float = 1e-9) -> bool:
        return self.suboptimality(m, d) <= tol

    # sampling

    def sample_profile(self, d: Decision, rng: np.random.Generator) -> int:
        """Flat index of a pure profile drawn from d (the decision index for HR)."""
        if d.kind == "index":
            return self._hr_index(d)
        return int(rng.choice(self.n_rows, p=self.joint_of(d)))

    def sample_obs_at(self, m, row: int, rng: np.random.Generator) -> int:
        """Observation symbol index drawn from the model at a pure profile (or HR decision)."""
        p = self.kernels[self.model_index(m), row]
        return int(rng.choice(self.n_obs, p=p))

    def profile_of(self, row: int) -> tuple[int, ...]:
        return tuple(int(a) for a in np.unravel_index(row, self.shape))


def expected_reward(inst: Instance, m, d: Decision, k: int) -> float:
    return inst.expected_reward(m, d, k)


def hidden_value(inst: Instance, m, d) -> float:
    return inst.hidden_value(m, d)


def suboptimality(inst: Instance, m, d) -> float:
    return inst.suboptimality(m, d)


def is_equilibrium(inst: Instance, m, d, tol: float = 1e-9) -> bool:
    return inst.is_equilibrium(m, d, tol)


# equilibrium search


def correlated_equilibrium(inst: Instance, m, coarse: bool | None = None) -> Decision | None:
    """A (coarse) correlated equilibrium of one model via a feasibility LP."""
    if inst.kind is Kind.HR:
        raise KindError("HR instances have no equilibria")
    if inst.kind is Kind.NE:
        raise KindError("NE decisions are products; use nash_equilibrium_2p")
    if coarse is None:
        coarse = inst.kind is not Kind.CE
    F = inst.profile_rewards[inst.model_index(m)]
    shape = inst.shape
    n = inst.n_rows
    rows = []
    for k in range(inst.K):
        Fk = np.moveaxis(F[..., k], k, 0)
        for b in range(shape[k]):
            gain = np.moveaxis(np.broadcast_to(Fk[b], Fk.shape) - Fk, 0, k)
            if coarse:
                rows.append(gain.ravel())
            else:
                for a in range(shape[k]):
                    mask = np.zeros(shape)
                    np.moveaxis(mask, k, 0)[a] = 1.0
                    rows.append((gain * mask).ravel())
    A_ub = np.array([r for r in rows if np.any(r != 0)])
    # maximize the worst slack so the point sits inside the polytope when possible
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A = np.hstack([A_ub, np.ones((A_ub.shape[0], 1))])
    res = linprog(
        c,
        A_ub=A,
        b_ub=np.zeros(A.shape[0]),
        A_eq=np.hstack([np.ones((1, n)), np.zeros((1, 1))]),
        b_eq=[1.0],
        bounds=[(0, None)] * n + [(0.0, 1.0)],
        method="highs",
    )
    if res.status != 0:
        return None
    p = np.clip(res.x[:n], 0.0, None)
    p /= p.sum()
    return Decision.joint(p.reshape(shape), label="cce" if coarse else "ce")


def nash_equilibrium_2p(inst: Instance, m, tol: float = 1e-10) -> Decision | None:
    """Support enumeration for two-player instances; returns the first equilibrium found."""
    if inst.K != 2 or inst.kind is Kind.HR:
        return None
    F = inst.profile_rewards[inst.model_index(m)]
    A, B = F[..., 0], F[..., 1]
    n1, n2 = A.shape
    for s in range(1, min(n1, n2) + 1):
        for S1 in itertools.combinations(range(n1), s):
            for S2 in itertools.combinations(range(n2), s):
                y = _indifferent(A[np.ix_(S1, S2)])
                x = _indifferent(B[np.ix_(S1, S2)].T)
                if x is None or y is None:
                    continue
                xf = np.zeros(n1)
                yf = np.zeros(n2)
                xf[list(S1)] = x
                yf[list(S2)] = y
                if (A @ yf).max() - xf @ A @ yf > tol or (xf @ B).max() - xf @ B @ yf > tol:
                    continue
                if inst.kind is Kind.NE:
                    return Decision.product([xf, yf], label="nash")
                return Decision.joint(np.outer(xf, yf), label="nash")
    return None


def _indifferent(M: np.ndarray):
    """Mixture y over columns making every row of M earn the same value."""
    s = M.shape[0]
    lhs = np.zeros((s + 1, s + 1))
    lhs[:s, :s] = M
    lhs[:s, s] = -1.0
    lhs[s, :s] = 1.0
    rhs = np.zeros(s + 1)
    rhs[s] = 1.0
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        return None
    y = sol[:s]
    if y.min() < -1e-12:
        return None
    y = np.clip(y, 0.0, None)
    return y / y.sum()


def find_equilibrium(inst: Instance, m) -> Decision | None:
    if inst.kind is Kind.HR:
        i = int(np.argmax(inst.values[inst.model_index(m)]))
        return Decision.at(i)
    if inst.kind is Kind.NE:
        return nash_equilibrium_2p(inst, m)
    return correlated_equilibrium(inst, m, coarse=inst.kind is Kind.CCE)


def validate_instance(inst: Instance, grid: Sequence[Decision] | None = None) -> dict:
    """Structural report; problems are listed, never raised."""
    report: dict = {"kind": inst.kind.value, "problems": []}
    lo, hi = inst.reward_range
    if inst.is_ma:
        R = inst.reward_matrix
        ok = bool(np.all((R >= lo - 1e-12) & (R <= hi + 1e-12)))
        report["reward_range"] = ok
        if not ok:
            report["problems"].append("reward outside declared range")
    if inst.reveals_sigma:
        ok = True
        for row in range(inst.n_rows):
            tag = inst.profile_of(row)
            support = np.nonzero(inst.kernels[:, row, :].max(axis=0) > 0)[0]
            if any(inst.obs[o].pure_tag != tag for o in support):
                ok = False
                break
        report["reveal_flag"] = ok
        if not ok:
            report["problems"].append(f"symbol in row {row} does not reveal profile {tag}")
    if inst.is_ma:
        grid = list(grid) if grid is not None else inst.pure_grid()
        gains = np.stack([inst.player_gains(d) for d in grid])
        worst = float(gains.min())
        report["monotonicity_min_gain"] = worst
        report["monotonicity"] = worst >= -NEG_TOL
        if worst < -NEG_TOL:
            report["problems"].append(f"negative deviation gain {worst:.3g}")
        existence = {}
        h = inst.loss_table(grid)
        for i, lab in enumerate(inst.labels):
            if h[i].min() <= NEG_TOL:
                existence[lab] = "verified"
                continue
            eq = find_equilibrium(inst, i)
            existence[lab] = "verified" if eq is not None and inst.suboptimality(i, eq) <= 1e-7 else "unverified"
        report["existence"] = existence
    else:
        v = inst.values
        report["value_range"] = (float(v.min()), float(v.max()))
    report["ok"] = not report["problems"]
    return report


# file format


def _num(x: float) -> str:
    return repr(float(x))


def instance_to_dict(inst: Instance) -> dict:
    out = {
        "K": inst.K,
        "kind": inst.kind.value,
        "pure_sets": inst.pure_sets,
        "obs": [],
        "models": [],
        "reveals_sigma": inst.reveals_sigma,
        "reward_range": list(inst.reward_range),
    }
    for s in inst.obs:
        entry = {"id": s.id, "rewards": [_num(r) for r in s.rewards]}
        if s.pure_tag is not None:
            entry["pure_tag"] = list(s.pure_tag)
        out["obs"].append(entry)
    for m in inst.models:
        entry = {"label": m.label, "kernel": [[_num(p) for p in row] for row in m.kernel]}
        if m.values is not None:
            entry["values"] = [_num(v) for v in m.values]
        out["models"].append(entry)
    if inst.meta:
        out["meta"] = inst.meta
    return out


class InstanceFormatError(ValueError):
    pass


def _field(d: dict, name: str, where: str):
    if name not in d:
        raise InstanceFormatError(f"{where}: missing field {name!r}")
    return d[name]


def _floats(values, where: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in values], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"{where}: {exc}") from None


def instance_from_dict(d: dict) -> Instance:
    K = int(_field(d, "K", "instance"))
    kind = _field(d, "kind", "instance")
    if kind not in Kind._value2member_map_:
        raise InstanceFormatError(f"instance: field 'kind' must be one of NE/CCE/CE/HR, got {kind!r}")
    pure_sets = _field(d, "pure_sets", "instance")
    obs = []
    for i, o in enumerate(_field(d, "obs", "instance")):
        where = f"obs[{i}]"
        tag = o.get("pure_tag")
        obs.append(ObsSymbol(str(_field(o, "id", where)), tuple(_floats(_field(o, "rewards", where), where)), tag))
    models = []
    for i, m in enumerate(_field(d, "models", "instance")):
        where = f"models[{i}]"
        label = str(_field(m, "label", where))
        rows = _field(m, "kernel", where)
        kernel = np.array([_floats(r, f"{where}.kernel") for r in rows])
        values = m.get("values")
        if values is not None:
            values = _floats(values, f"{where}.values")
        try:
            models.append(FiniteModel(label, kernel, values))
        except ValueError as exc:
            raise InstanceFormatError(f"{where}: {exc}") from None
    try:
        return Instance(
            K,
            kind,
            pure_sets,
            obs,
            models,
            reveals_sigma=bool(d.get("reveals_sigma", False)),
            reward_range=tuple(float(x) for x in d.get("reward_range", (0.0, 1.0))),
            meta=d.get("meta"),
        )
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None


def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a partial file."""
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_instance(inst, path) -> None:
    inst = inst.to_dense() if hasattr(inst, "to_dense") else inst
    atomic_write_text(path, json.dumps(instance_to_dict(inst)))


def load_instance(path) -> Instance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"not valid JSON: {exc}") from None
    return instance_from_dict(data)
