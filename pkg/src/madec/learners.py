"""Interactive learners: multi-agent exploration-by-optimization, an E2D-style
PAC learner, the first-hit rule for needle families, and a uniform baseline."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, minimize

from .constructions import LayeredInstance
from .core import hellinger_sq_rows
from .dec import ScaleParams, default_grid, offset_dec, solve_matrix_game
from .instances import Decision, FiniteModel, Instance, Kind, KindError


class ConfigError(ValueError):
    pass


class DegenerateObservation(ValueError):
    pass


@dataclass(frozen=True)
class LearnerConfig:
    eta: float = 0.05
    gamma: float | None = None
    solver_iters: int = 2000
    round_iters: int = 25
    pi_floor: float = 1e-4
    g_clamp: float | None = None
    delta: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.eta <= 0 or (self.gamma is not None and self.gamma <= 0):
            raise ConfigError("eta and gamma must be positive")
        if not 0 < self.pi_floor < 1:
            raise ConfigError("pi_floor must lie in (0, 1)")
        if self.solver_iters < 1 or self.round_iters < 1:
            raise ConfigError("iteration counts must be positive")

    @property
    def clamp(self) -> float:
        return self.g_clamp if self.g_clamp is not None else max(1.0, 1.0 / self.eta)


@dataclass
class Trace:
    records: list[dict] = field(default_factory=list)
    decision: Decision | None = None

    def __len__(self):
        return len(self.records)


class Environment:
    """The only channel through which a learner touches the true model."""

    def __init__(self, inst, true_model, rng: np.random.Generator):
        self._inst = inst
        self._m = inst.model_index(true_model)
        self._rng = rng

    def play(self, d: Decision) -> tuple[int, int]:
        row = self._inst.sample_profile(d, self._rng)
        return row, self._inst.sample_obs_at(self._m, row, self._rng)

    def play_row(self, row: int) -> int:
        return self._inst.sample_obs_at(self._m, row, self._rng)

    def layer_stream(self, T: int) -> np.ndarray:
        """Per-layer codes of T observations; decision-independent needle families only."""
        inst = self._inst
        if isinstance(inst, LayeredInstance):
            return inst.sample_layers(self._m, self._rng, T)
        obs = self._rng.choice(inst.n_obs, size=T, p=inst.kernels[self._m, 0])
        return obs[:, None]


# exponential weights


def exp_weights(gain_sums: np.ndarray, eta: float) -> np.ndarray:
    z = eta * np.asarray(gain_sums, dtype=float)
    w = np.exp(z - z.max())
    return w / w.sum()


def exp_weights_iterates(gains: np.ndarray, eta: float) -> np.ndarray:
    """q^1, ..., q^{T+1} for gain vectors f^1..f^T; q^t uses the sum up to t-1."""
    gains = np.asarray(gains, dtype=float)
    sums = np.vstack([np.zeros(gains.shape[1]), np.cumsum(gains, axis=0)])
    return np.array([exp_weights(s, eta) for s in sums])


def kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def mwu_regret_sides(gains: np.ndarray, eta: float, comparator: np.ndarray) -> tuple[float, float]:
    """(sum <q, f^t>, sum <q^{t+1}, f^t> - KL terms / eta + KL(q || q^1) / eta)."""
    gains = np.asarray(gains, dtype=float)
    Q = exp_weights_iterates(gains, eta)
    lhs = float(np.sum(gains @ comparator))
    stab = sum(float(Q[t + 1] @ gains[t]) - kl(Q[t + 1], Q[t]) / eta for t in range(len(gains)))
    return lhs, stab + kl(comparator, Q[0]) / eta


# deviation structure


def deviation_table(inst: Instance, k: int) -> tuple[np.ndarray, list[str]]:
    """Row index of U_k(dev, sigma) for every deviation and profile, shape (|dev|, |Sigma|)."""
    shape = inst.shape
    n_k = shape[k]
    profiles = [inst.profile_of(r) for r in range(inst.n_rows)]
    if inst.kind is Kind.CCE:
        maps = [None] + [(a,) * n_k for a in range(n_k)]
        names = ["none"] + inst.pure_sets[k]
    elif inst.kind is Kind.CE:
        if n_k > 3:
            raise KindError("CE deviation maps are enumerated only for at most 3 actions")
        maps = list(itertools.product(range(n_k), repeat=n_k))
        names = ["->".join(inst.pure_sets[k][a] for a in phi) for phi in maps]
    else:
        raise KindError("exploration-by-optimization needs a CCE or CE instance")
    U = np.empty((len(maps), inst.n_rows), dtype=int)
    for i, phi in enumerate(maps):
        for r, prof in enumerate(profiles):
            if phi is None:
                U[i, r] = r
            else:
                dev = list(prof)
                dev[k] = phi[prof[k]]
                U[i, r] = int(np.ravel_multi_index(tuple(dev), shape))
    return U, names


class GammaProblem:
    """Gamma objective for a fixed instance and learning rate, over reachable (sigma, o) pairs."""

    def __init__(self, inst: Instance, eta: float):
        if inst.kind not in (Kind.CCE, Kind.CE):
            raise KindError("exploration-by-optimization needs a CCE or CE instance")
        self.inst = inst
        self.eta = float(eta)
        ker = inst.kernels
        reach = np.argwhere(ker.max(axis=0) > 0)
        self.pair_sigma = reach[:, 0]
        self.pair_obs = reach[:, 1]
        self.Kp = ker[:, self.pair_sigma, self.pair_obs]  # (m, pairs)
        self.n_sigma = inst.n_rows
        self.agg = (self.pair_sigma[None, :] == np.arange(self.n_sigma)[:, None]).astype(float)
        F = inst.profile_rewards.reshape(inst.n_models, inst.n_rows, inst.K)
        self.U, self.dev_names, self.C = [], [], []
        for k in range(inst.K):
            U, names = deviation_table(inst, k)
            self.U.append(U)
            self.dev_names.append(names)
            self.C.append(F[:, U, k] - F[:, None, :, k])  # (m, dev, sigma)
        self.n_dev = [U.shape[0] for U in self.U]

    def _parts(self, pi, g, q):
        """Per-player tables G_k[m, s] = Gamma_k at adversary deviation s, plus cached terms."""
        eta = self.eta
        scale = eta / pi[self.pair_sigma]
        out = []
        for k in range(self.inst.K):
            diff = g[k][None, :, :] - g[k][:, None, :]  # [s, d', p]
            expo = scale[None, None, :] * diff
            if expo.max() > 700:
                raise ConfigError("exponent overflow in Gamma: raise pi_floor or lower eta")
            E = np.exp(expo)
            S = np.einsum("d,sdp->sp", q[k], E - 1.0)
            A = np.einsum("msr,r->ms", self.C[k], pi)
            B = np.einsum("p,mp,sp->ms", pi[self.pair_sigma], self.Kp, S) / eta
            out.append((A + B, E, diff, scale))
        return out

    def value(self, pi, g, q, model=None, pi_star=None) -> float:
        """max over (M, pi*) of Gamma, or Gamma at a fixed (M, pi*) when given."""
        parts = self._parts(pi, g, q)
        if model is not None:
            return float(sum(G[model, pi_star[k]] for k, (G, *_) in enumerate(parts)))
        total = sum(G.max(axis=1) for G, *_ in parts)
        return float(total.max())

    def value_and_subgradient(self, pi, g, q):
        parts = self._parts(pi, g, q)
        total = sum(G.max(axis=1) for G, *_ in parts)
        m = int(np.argmax(total))
        d_pi = np.zeros(self.n_sigma)
        d_g = []
        for k, (G, E, diff, scale) in enumerate(parts):
            s = int(np.argmax(G[m]))
            d_pi += self.C[k][m, s]
            Es = E[s]  # (d', p)
            inner = np.einsum("d,dp->p", q[k], Es - 1.0 - Es * scale[None, :] * diff[s])
            np.add.at(d_pi, self.pair_sigma, self.Kp[m] * inner / self.eta)
            qe = q[k][:, None] * Es
            grad = self.Kp[m][None, :] * qe
            grad[s] -= self.Kp[m] * qe.sum(axis=0)
            d_g.append(grad)
        return float(total[m]), d_pi, d_g


    def smooth_value_and_grad(self, pi, g, q, tau: float):
        """Log-sum-exp smoothing of max_M sum_k max_s Gamma_k at temperature tau, with gradients."""
        eta = self.eta
        pi_pair = pi[self.pair_sigma]
        scale = eta / pi_pair
        Kpi = self.Kp * pi_pair
        inner_vals, cache = [], []
        for k in range(self.inst.K):
            diff = g[k][None, :, :] - g[k][:, None, :]
            E = np.exp(np.minimum(scale * diff, 700.0))
            qE = q[k] @ E  # (s, p)
            G = self.C[k] @ pi + Kpi @ (qE - 1.0).T / eta
            top = G.max(axis=1, keepdims=True)
            z = np.exp((G - top) / tau)
            zs = z.sum(axis=1, keepdims=True)
            inner_vals.append(top[:, 0] + tau * np.log(zs[:, 0]))
            cache.append((z / zs, E, diff, qE))
        total = sum(inner_vals)
        top = total.max()
        wm = np.exp((total - top) / tau)
        value = float(top + tau * np.log(wm.sum()))
        wm /= wm.sum()
        d_pi = np.zeros(self.n_sigma)
        d_g = []
        for k, (u, E, diff, qE) in enumerate(cache):
            W = wm[:, None] * u  # (m, s)
            d_pi += W.ravel() @ self.C[k].reshape(-1, self.n_sigma)
            inner = qE - 1.0 - q[k] @ (E * diff) * scale
            V = W.T @ self.Kp  # (s, p)
            d_pi += self.agg @ np.sum(V * inner, axis=0) / eta
            grad = q[k][:, None] * np.sum(V[:, None, :] * E, axis=0) - V * qE
            d_g.append(grad)
        return value, d_pi, d_g


def project_floored_simplex(x: np.ndarray, lb: float) -> np.ndarray:
    """Euclidean projection onto {p >= lb, sum p = 1}."""
    n = x.size
    mass = 1.0 - n * lb
    y = x - lb
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - mass
    k = np.nonzero(u - css / np.arange(1, n + 1) > 0)[0][-1]
    theta = css[k] / (k + 1)
    return np.maximum(y - theta, 0.0) + lb


@dataclass
class GammaState:
    pi: np.ndarray
    g: list[np.ndarray]
    q: list[np.ndarray]
    value: float
    residual: float


def maexo_solve_step(problem: GammaProblem, q: list[np.ndarray], config: LearnerConfig,
                     start: GammaState | None = None, iters: int | None = None,
                     method: str = "smooth", tau: float = 1e-3) -> GammaState:
    """Approximate min over (pi, g) of max over (M, pi*) of Gamma.

    ``smooth`` runs L-BFGS-B on a log-sum-exp smoothing (pi through a floored
    softmax, g boxed); ``subgradient`` runs projected subgradient with c/sqrt(i)
    steps. The returned value is the exact (unsmoothed) objective.
    """
    iters = iters or config.solver_iters
    lb = config.pi_floor / problem.n_sigma
    alpha = config.clamp
    if start is None:
        pi = np.full(problem.n_sigma, 1.0 / problem.n_sigma)
        g = [np.zeros((n, problem.Kp.shape[1])) for n in problem.n_dev]
    else:
        pi, g = start.pi.copy(), [x.copy() for x in start.g]
    if method == "smooth":
        pi, g, residual = _solve_smooth(problem, q, pi, g, lb, alpha, iters, tau)
        return GammaState(pi, g, q, problem.value(pi, g, q), residual)
    if method != "subgradient":
        raise ConfigError(f"unknown solver method {method!r}")
    best_val, best = math.inf, (pi, g)
    history = []
    step_pi, step_g = 0.2, 0.5 * alpha
    for i in range(1, iters + 1):
        try:
            val, d_pi, d_g = problem.value_and_subgradient(pi, g, q)
        except ConfigError:
            if i == 1:
                raise
            pi, g = best
            step_pi, step_g = step_pi / 2, step_g / 2
            continue
        if val < best_val:
            best_val, best = val, (pi, g)
        history.append(best_val)
        npi = np.linalg.norm(d_pi - d_pi.mean())
        ng = math.sqrt(sum(float(np.sum(x * x)) for x in d_g))
        r = 1.0 / math.sqrt(i)
        if npi > 0:
            pi = project_floored_simplex(pi - step_pi * r * (d_pi - d_pi.mean()) / npi, lb)
        if ng > 0:
            g = [np.clip(x - step_g * r * dx / ng, -alpha, alpha) for x, dx in zip(g, d_g)]
    pi, g = best
    residual = history[-min(20, len(history))] - history[-1] if history else 0.0
    return GammaState(pi, g, q, best_val, residual)


def _solve_smooth(problem, q, pi, g, lb, alpha, iters, tau):
    n = problem.n_sigma
    mass = 1.0 - n * lb
    shapes = [x.shape for x in g]
    theta0 = np.log(np.maximum(pi - lb, 1e-300) / mass)
    theta0 -= theta0.max()
    theta0 = np.maximum(theta0, -60.0)
    x0 = np.concatenate([theta0] + [x.ravel() for x in g])

    def unpack(x):
        th = x[:n] - x[:n].max()
        sm = np.exp(th)
        sm /= sm.sum()
        out, o = [], n
        for sh in shapes:
            size = sh[0] * sh[1]
            out.append(x[o:o + size].reshape(sh))
            o += size
        return sm, lb + mass * sm, out

    def fun(x):
        sm, p, gg = unpack(x)
        v, d_pi, d_g = problem.smooth_value_and_grad(p, gg, q, tau)
        d_theta = mass * sm * (d_pi - sm @ d_pi)
        return v, np.concatenate([d_theta] + [d.ravel() for d in d_g])

    lo = np.full(x0.size, -alpha)
    lo[:n] = -np.inf
    bounds = Bounds(lo, -lo)
    v0 = fun(x0)[0]
    res = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds, options={"maxiter": iters})
    _, p, gg = unpack(res.x)
    return p, gg, float(v0 - res.fun)


def maexo_run(inst: Instance, true_model, T: int, config: LearnerConfig,
              problem: GammaProblem | None = None) -> tuple[Trace, Decision]:
    """Exploration-by-optimization over deviations; returns the averaged played profile."""
    if inst.kind is Kind.NE:
        raise KindError("exploration-by-optimization does not cover Nash instances")
    if T < 1:
        raise ConfigError("need T >= 1")
    problem = problem or GammaProblem(inst, config.eta)
    rng = np.random.default_rng(config.seed)
    env = Environment(inst, true_model, rng)
    sums = [np.zeros(n) for n in problem.n_dev]
    counts = np.zeros(inst.n_rows)
    trace = Trace()
    state = None
    pair_of = {(int(s), int(o)): i for i, (s, o) in enumerate(zip(problem.pair_sigma, problem.pair_obs))}
    for t in range(1, T + 1):
        q = [exp_weights(s, config.eta) for s in sums]
        state = maexo_solve_step(problem, q, config, start=state,
                                 iters=config.solver_iters if t == 1 else config.round_iters)
        row = int(rng.choice(inst.n_rows, p=state.pi))
        o = env.play_row(row)
        p = pair_of[(row, o)]
        fhat = [gk[:, p] / state.pi[row] for gk in state.g]
        for s, f in zip(sums, fhat):
            s += f
        counts[row] += 1
        trace.records.append({"round": t, "pi_max": float(state.pi.max()), "sigma": row, "obs": o,
                              "fhat": [f.tolist() for f in fhat], "residual": state.residual})
    d = Decision.joint((counts / T).reshape(inst.shape), label="maexo")
    trace.decision = d
    return trace, d


# posterior and E2D


@dataclass
class Posterior:
    """Tempered exponential weights over the model class."""

    log_w: np.ndarray
    est_h_running: float = 0.0

    @classmethod
    def uniform(cls, n: int) -> "Posterior":
        return cls(np.zeros(n))

    @property
    def weights(self) -> np.ndarray:
        w = np.exp(self.log_w - self.log_w.max())
        return w / w.sum()


def posterior_update(post: Posterior, likelihoods: np.ndarray) -> Posterior:
    """w_M <- w_M * M(o|pi)^(1/2); models with zero likelihood drop out."""
    lik = np.asarray(likelihoods, dtype=float)
    alive = np.isfinite(post.log_w)
    if not np.any((lik > 0) & alive):
        raise DegenerateObservation("observation has zero likelihood under every live model")
    with np.errstate(divide="ignore"):
        log_w = post.log_w + 0.5 * np.log(lik)
    return Posterior(log_w, post.est_h_running)


def _likelihoods(inst, d: Decision, row: int, o: int) -> np.ndarray:
    return inst.kernels[:, row, o]


def choose_gamma(inst, grid, T: int, delta: float, gammas=None) -> float:
    """gamma minimizing offset DEC (at the uniform reference) + gamma eps_upper^2 over a log grid."""
    eps = ScaleParams(T, delta, inst.n_models).eps_upper
    gammas = gammas if gammas is not None else np.geomspace(0.5, 4 * math.sqrt(T), 24)
    vals = [max(offset_dec(inst, g, grid).value, 0.0) + g * eps**2 for g in gammas]
    return float(gammas[int(np.argmin(vals))])


def e2d_pac_run(inst, true_model, T: int, config: LearnerConfig, grid=None,
                gamma: float | None = None) -> tuple[Trace, Decision]:
    """Offset E2D with p = q at the posterior mixture; outputs a draw from p^{t*}, t* uniform."""
    grid = list(grid) if grid is not None else default_grid(inst)
    rng = np.random.default_rng(config.seed)
    env = Environment(inst, true_model, rng)
    gamma = gamma or config.gamma or choose_gamma(inst, grid, T, config.delta)
    post = Posterior.uniform(inst.n_models)
    loss = inst.loss_table(grid)
    obs = inst.obs_table(grid)  # (m, j, o)
    sqrt_obs = np.sqrt(obs)
    trace = Trace()
    ps = []
    for t in range(1, T + 1):
        w = post.weights
        bar = np.einsum("m,mjo->jo", w, obs)
        H = np.sum((sqrt_obs - np.sqrt(bar)[None]) ** 2, axis=-1)
        sol = solve_matrix_game((loss - gamma * H).T)
        p = np.clip(sol.p, 0, None)
        p /= p.sum()
        ps.append(p)
        j = int(rng.choice(len(grid), p=p))
        row, o = env.play(grid[j])
        post = posterior_update(post, _likelihoods(inst, grid[j], row, o))
        nz = w[w > 0]
        trace.records.append({"round": t, "decision": j, "sigma": row, "obs": o, "weights": w, "p": p,
                              "entropy": float(-np.sum(nz * np.log(nz))), "residual": sol.gap})
    t_star = int(rng.integers(T)) if T > 0 else None
    if t_star is None:
        d = grid[int(rng.integers(len(grid)))]
    else:
        d = grid[int(rng.choice(len(grid), p=ps[t_star]))]
    trace.decision = d
    return trace, d


# needle families


def _needle_layers(inst):
    if isinstance(inst, LayeredInstance):
        return list(inst.sizes)
    if isinstance(inst, Instance) and inst.meta.get("family") == "twin":
        return [inst.meta["N"]]
    raise KindError("first-hit needs a twin or layered instance")


def first_hit_decide(codes: np.ndarray, sizes, rng: np.random.Generator) -> tuple[int, ...]:
    """Per layer, the first non-blank code; a uniform index when the layer stayed blank."""
    out = []
    for l, n in enumerate(sizes):
        col = codes[:, l] if codes.size else np.empty(0, dtype=int)
        hit = np.flatnonzero(col != n)
        out.append(int(col[hit[0]]) if hit.size else int(rng.integers(n)))
    return tuple(out)


def first_hit_run(inst, true_model, T: int, seed: int) -> Decision:
    sizes = _needle_layers(inst)
    rng = np.random.default_rng(seed)
    env = Environment(inst, true_model, rng)
    codes = env.layer_stream(T) if T > 0 else np.empty((0, len(sizes)), dtype=int)
    choice = first_hit_decide(codes, sizes, rng)
    if isinstance(inst, LayeredInstance):
        i = inst.index_of(choice)
        return Decision.at(i, label=inst.label(i))
    return Decision.at(choice[0], label=inst.pure_sets[0][choice[0]])


def first_hit_exact_risk(inst, true_model, T: int) -> float:
    """Closed-form expected gap of the first-hit rule."""
    if isinstance(inst, LayeredInstance):
        return float(sum(a / n * (1 - d * (n - 1)) ** T
                         for a, n, d in zip(inst.alphas, inst.sizes, inst.deltas)))
    N, d, b = inst.meta["N"], inst.meta["delta"], inst.meta["beta"]
    blank = 1 - d * (N - 1) - b
    return blank**T / N + (1 - blank**T) * b / (b + d * (N - 1))


def uniform_baseline_run(inst, true_model, T: int, seed: int, grid=None) -> Decision:
    """Uniform exploration, then the grid decision best for the posterior-mean model."""
    grid = list(grid) if grid is not None else default_grid(inst)
    rng = np.random.default_rng(seed)
    env = Environment(inst, true_model, rng)
    post = Posterior.uniform(inst.n_models)
    for _ in range(T):
        j = int(rng.integers(len(grid)))
        row, o = env.play(grid[j])
        post = posterior_update(post, _likelihoods(inst, grid[j], row, o))
    w = post.weights
    if inst.kind is Kind.HR:
        mean_values = w @ inst.values
        idx = np.array([d.index for d in grid])
        return grid[int(np.argmax(mean_values[idx]))]
    mean = Instance(inst.K, inst.kind, inst.pure_sets, inst.obs,
                    [FiniteModel("posterior-mean", np.einsum("m,mro->ro", w, inst.kernels))],
                    reveals_sigma=inst.reveals_sigma, reward_range=inst.reward_range)
    return grid[int(np.argmin(mean.loss_table(grid)[0]))]


def estimation_error(inst, true_model, grid, weights_seq, q_seq) -> float:
    """sum_t E_{pi ~ q^t} H^2(M*(pi), M-hat^t(pi)); diagnostic that needs the true model."""
    m = inst.model_index(true_model)
    obs = inst.obs_table(grid)
    total = 0.0
    for w, q in zip(weights_seq, q_seq):
        bar = np.einsum("m,mjo->jo", w, obs)
        total += float(q @ hellinger_sq_rows(obs[m], bar))
    return total
