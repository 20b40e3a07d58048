"""Offset and constrained Decision-Estimation Coefficients on finite grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import Dist, hellinger_sq_rows
from .instances import Decision, Kind

GAME_GAP_TOL = 1e-8
DEC_GAP_TOL = 1e-6
EXACT_MAX_UNIQUE = 12
UPPER = "upper"  # grid-restricted inf sits above the true value
LOWER = "lower"  # candidate-restricted sup sits below the true value


class SolverError(RuntimeError):
    pass


# matrix games (row player minimizes)


@dataclass
class GameSolution:
    p: np.ndarray
    q: np.ndarray
    value: float
    gap: float
    iterations: int = 0


def _check_matrix(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        raise ValueError("empty payoff matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("payoff matrix has non-finite entries")
    return A


def game_gap(A: np.ndarray, p: np.ndarray, q: np.ndarray) -> float:
    """max_j (p A)_j - min_i (A q)_i, zero exactly at an equilibrium."""
    return float(np.max(p @ A) - np.min(A @ q))


def solve_matrix_game(A) -> GameSolution:
    """Exact LP solve of min_p max_q p^T A q; q is read off the LP duals."""
    A = _check_matrix(A)
    n, m = A.shape
    if n == 1 or m == 1:
        if n == 1:
            j = int(np.argmax(A[0]))
            p, q = np.ones(1), np.eye(m)[j]
        else:
            i = int(np.argmin(A[:, 0]))
            p, q = np.eye(n)[i], np.ones(1)
        return GameSolution(p, q, float(p @ A @ q), 0.0)
    if n == 2:
        return _two_row_game(A)
    shift = A.min()
    B = A - shift
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.hstack([B.T, -np.ones((m, 1))])
    A_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, None)], method="highs")
    if res.status != 0:
        raise SolverError(f"matrix game LP failed: {res.message}")
    p = np.clip(res.x[:n], 0, None)
    p /= p.sum()
    q = np.clip(-res.ineqlin.marginals, 0, None)
    q = q / q.sum() if q.sum() > 0 else np.full(m, 1.0 / m)
    value = float(np.max(p @ A))
    return GameSolution(p, q, value, game_gap(A, p, q))


def _two_row_game(A: np.ndarray) -> GameSolution:
    """Exact solve with two rows: minimize the upper envelope of lines over p in [0, 1]."""
    a, b = A[0], A[1]
    slope = a - b
    cands = [0.0, 1.0]
    ds = slope[:, None] - slope[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = (b[None, :] - b[:, None]) / ds
    cross = cross[np.isfinite(cross) & (cross > 0) & (cross < 1)]
    cands = np.concatenate([cands, cross])
    env = (b[None, :] + cands[:, None] * slope[None, :]).max(axis=1)
    t = float(cands[int(np.argmin(env))])
    p = np.array([t, 1 - t])
    vals = b + t * slope
    top = vals.max()
    active = np.flatnonzero(vals >= top - 1e-12 * max(1.0, abs(top)))
    q = np.zeros(A.shape[1])
    up = active[slope[active] >= 0]
    down = active[slope[active] <= 0]
    if 0 < t < 1 and up.size and down.size:
        i = up[np.argmax(slope[up])]
        j = down[np.argmin(slope[down])]
        if slope[i] == slope[j]:
            q[i] = 1.0
        else:
            q[i] = -slope[j] / (slope[i] - slope[j])
            q[j] = 1.0 - q[i]
    else:
        # endpoint optimum: a line active there whose slope points inward
        pick = up if t == 0 and up.size else down if t == 1 and down.size else active
        q[pick[0]] = 1.0
    return GameSolution(p, q, float(top), game_gap(A, p, q))


def solve_matrix_games_mw(As, tol: float = 1e-5, eta: float = 2.0, max_iter: int = 500_000,
                          check_every: int = 50) -> list[GameSolution]:
    """Optimistic multiplicative-weights self-play on a batch of same-shape games.

    Keeps the best value bracket [min A q, max p A] seen over last and averaged
    iterates and stops once it is narrower than ``tol``; the bracket always
    contains the value. Independent of the LP route.
    """
    As = np.asarray([_check_matrix(A) for A in As])
    b, n, m = As.shape
    lo = As.min(axis=(1, 2))
    span = np.maximum(As.max(axis=(1, 2)) - lo, 1e-300)
    B = (As - lo[:, None, None]) / span[:, None, None]
    x_log = np.zeros((b, n))
    y_log = np.zeros((b, m))
    gx_prev = np.zeros((b, n))
    gy_prev = np.zeros((b, m))
    x_sum = np.zeros((b, n))
    y_sum = np.zeros((b, m))
    best_up = np.full(b, np.inf)
    best_lo = np.full(b, -np.inf)
    best_p = np.full((b, n), 1.0 / n)
    best_q = np.full((b, m), 1.0 / m)
    scaled_tol = tol / span
    t = 0
    for t in range(1, max_iter + 1):
        x = np.exp(x_log - x_log.max(axis=1, keepdims=True))
        x /= x.sum(axis=1, keepdims=True)
        y = np.exp(y_log - y_log.max(axis=1, keepdims=True))
        y /= y.sum(axis=1, keepdims=True)
        x_sum += x
        y_sum += y
        gx = (B @ y[:, :, None])[:, :, 0]  # row loss
        gy = (x[:, None, :] @ B)[:, 0, :]  # column gain
        x_log -= eta * (2 * gx - gx_prev)
        y_log += eta * (2 * gy - gy_prev)
        gx_prev, gy_prev = gx, gy
        if t % check_every == 0:
            for xs, ys in ((x, y), (x_sum / t, y_sum / t)):
                up = np.einsum("bnm,bn->bm", B, xs).max(axis=1)
                low = np.einsum("bnm,bm->bn", B, ys).min(axis=1)
                better = up < best_up
                best_up[better] = up[better]
                best_p[better] = xs[better]
                better = low > best_lo
                best_lo[better] = low[better]
                best_q[better] = ys[better]
            if np.all(best_up - best_lo <= scaled_tol):
                break
    return [
        GameSolution(best_p[i], best_q[i], float(lo[i] + span[i] * (best_up[i] + best_lo[i]) / 2),
                     float(span[i] * (best_up[i] - best_lo[i])), t)
        for i in range(b)
    ]


def solve_matrix_game_mw(A, tol: float = 1e-5, **kw) -> GameSolution:
    return solve_matrix_games_mw([A], tol=tol, **kw)[0]


# reference models


@dataclass(frozen=True)
class ReferenceModel:
    """A mixture of the instance's models, used as M-bar."""

    weights: Dist
    name: str = ""

    @classmethod
    def of_model(cls, inst, m) -> "ReferenceModel":
        i = inst.model_index(m)
        lab = inst.label(i) if hasattr(inst, "label") else inst.labels[i]
        return cls(Dist.point(inst.n_models, i), f"model:{lab}")

    @classmethod
    def uniform(cls, inst) -> "ReferenceModel":
        return cls(Dist.uniform(inst.n_models), "uniform")

    @classmethod
    def mixture(cls, inst, weights: dict, name: str = "") -> "ReferenceModel":
        w = np.zeros(inst.n_models)
        for lab, x in weights.items():
            w[inst.model_index(lab)] += float(x)
        return cls(Dist(w), name or "mixture")

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights.probs > 0)


def default_references(inst, n_random: int = 0, seed: int = 0) -> list[ReferenceModel]:
    """Each pure model, the uniform mixture, and ``n_random`` Dirichlet mixtures."""
    refs = [ReferenceModel.of_model(inst, i) for i in range(inst.n_models)]
    refs.append(ReferenceModel.uniform(inst))
    rng = np.random.default_rng(seed)
    for r in range(n_random):
        refs.append(ReferenceModel(Dist(rng.dirichlet(np.ones(inst.n_models))), f"dirichlet:{seed}:{r}"))
    return refs


def _reference(inst, reference) -> ReferenceModel:
    if reference is None:
        return ReferenceModel.uniform(inst)
    if isinstance(reference, ReferenceModel):
        return reference
    if isinstance(reference, Dist):
        return ReferenceModel(reference)
    return ReferenceModel.of_model(inst, reference)


def default_grid(inst) -> list[Decision]:
    if inst.kind is Kind.HR:
        return [Decision.at(i) for i in range(inst.n_rows)]
    return inst.pure_grid(include_uniform=True)


def dec_tables(inst, grid: Sequence[Decision], reference) -> tuple[np.ndarray, np.ndarray]:
    """Loss h (or g) and H^2 to the reference, both of shape (|M|, |grid|)."""
    ref = _reference(inst, reference)
    loss = np.asarray(inst.loss_table(grid), dtype=float)
    w = ref.weights.probs
    nz = ref.support()
    if inst.decision_independent:
        P = inst.model_obs_matrix()
        bar = w[nz] @ P[nz]
        d = hellinger_sq_rows(P, bar[None, :])
        H = np.broadcast_to(d[:, None], loss.shape).copy()
    else:
        bar = np.einsum("m,mjo->jo", w[nz], inst.obs_table(grid, nz))
        H = hellinger_sq_rows(inst.obs_table(grid), bar[None])
    return loss, np.clip(H, 0.0, 2.0)


# DEC results


@dataclass
class DecResult:
    variant: str
    param: float
    value: float
    p: Dist
    q: Dist | None = None
    active: list[str] = field(default_factory=list)
    gap: float = 0.0
    bound_direction: str = UPPER
    reference: str = ""
    meta: dict = field(default_factory=dict)


def _labels(inst, idx) -> list[str]:
    if hasattr(inst, "label"):
        return [inst.label(int(i)) for i in idx]
    return [inst.labels[int(i)] for i in idx]


def offset_dec(inst, gamma: float, grid: Sequence[Decision] | None = None, reference=None,
               tables=None) -> DecResult:
    """min_p max_M E_p[h^M - gamma H^2(M, M-bar)] over the grid."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    grid = list(grid) if grid is not None else default_grid(inst)
    if not grid:
        raise ValueError("decision grid is empty")
    ref = _reference(inst, reference)
    loss, H = tables if tables is not None else dec_tables(inst, grid, ref)
    sol = solve_matrix_game((loss - gamma * H).T)
    active = np.flatnonzero(sol.q > 1e-9)
    return DecResult("offset", float(gamma), sol.value, Dist(sol.p / sol.p.sum()), None,
                     _labels(inst, active), sol.gap, UPPER, ref.name)


def _unique_models(loss: np.ndarray, H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Representative indices of models with identical (loss, H^2) rows, and the inverse map."""
    key = np.round(np.hstack([loss, H]), 12)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return first, inverse.ravel()


def _restricted_value(loss: np.ndarray, cols: np.ndarray) -> GameSolution | None:
    if cols.size == 0:
        return None
    return solve_matrix_game(loss[cols].T)


def _exclusion_level(H: np.ndarray, rows: Sequence[int]) -> tuple[float, np.ndarray]:
    """max_q min_{M in rows} E_q H^2(M): how strongly some q can push the set out."""
    D = H[list(rows)]
    sol = solve_matrix_game(-D.T)  # row player q maximizes the min over models
    return -sol.value, sol.p


def constrained_dec(inst, eps: float, grid: Sequence[Decision] | None = None, reference=None,
                    tables=None, max_exact: int = EXACT_MAX_UNIQUE, restarts: int = 3,
                    seed: int = 0) -> DecResult:
    """inf_{p,q} sup {E_p h^M : E_q H^2(M, M-bar) <= eps^2} over the grid (0 if nothing is feasible)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    grid = list(grid) if grid is not None else default_grid(inst)
    if not grid:
        raise ValueError("decision grid is empty")
    ref = _reference(inst, reference)
    loss, H = tables if tables is not None else dec_tables(inst, grid, ref)
    thr = eps**2
    n_grid = len(grid)
    uniform_q = Dist.uniform(n_grid)
    if inst.decision_independent or np.allclose(H, H[:, :1], atol=1e-14, rtol=0):
        feasible = np.flatnonzero(H[:, 0] <= thr + 1e-12)
        return _finish(inst, ref, eps, loss, feasible, uniform_q, "exact", n_grid)
    reps, inverse = _unique_models(loss, H)
    Lu, Hu = loss[reps], H[reps]
    n = reps.size
    if n <= max_exact:
        best_excl, best_q = (), uniform_q.probs
        best_val = _value_of(Lu, np.arange(n))
        # excludable sets are closed under subsets, so grow them level by level
        level = []
        for i in range(n):
            if Hu[i].max() > thr + 1e-12:
                level.append(((i,), np.eye(n_grid)[int(np.argmax(Hu[i]))]))
        while level:
            for excl, qv in level:
                rest = np.setdiff1d(np.arange(n), excl)
                v = _value_of(Lu, rest)
                if v < best_val - 1e-12:
                    best_val, best_excl, best_q = v, excl, qv
            excl_sets = {e for e, _ in level}
            nxt = {}
            for e, _ in level:
                for j in range(e[-1] + 1, n):
                    cand = e + (j,)
                    if cand in nxt or not all(cand[:k] + cand[k + 1:] in excl_sets for k in range(len(cand))):
                        continue
                    t, qv = _exclusion_level(Hu, cand)
                    if t > thr + 1e-12:
                        nxt[cand] = qv
            level = list(nxt.items())
        rest = np.setdiff1d(np.arange(n), best_excl)
        feasible = np.flatnonzero(np.isin(inverse, rest))
        return _finish(inst, ref, eps, loss, feasible, Dist(_normalize(best_q)), "exact", n_grid)
    # greedy exclusion search with random orders; any q gives an upper bound
    rng = np.random.default_rng(seed)
    best = (math.inf, None, None)
    for r in range(restarts):
        excl: list[int] = []
        q = uniform_q.probs
        order = np.arange(n) if r == 0 else rng.permutation(n)
        improved = True
        while improved:
            improved = False
            rest_now = np.setdiff1d(np.arange(n), excl)
            base_val = _value_of(Lu, rest_now)
            scored = []
            for i in order:
                if i in excl:
                    continue
                t, qv = _exclusion_level(Hu, excl + [int(i)])
                if t > thr + 1e-12:
                    scored.append((_value_of(Lu, np.setdiff1d(rest_now, [i])), int(i), qv))
            if scored:
                v, i, qv = min(scored, key=lambda s: s[0])
                if v <= base_val:
                    excl.append(i)
                    q = qv
                    improved = True
        v = _value_of(Lu, np.setdiff1d(np.arange(n), excl))
        if v < best[0]:
            best = (v, list(excl), q)
    rest = np.setdiff1d(np.arange(n), best[1])
    feasible = np.flatnonzero(np.isin(inverse, rest))
    return _finish(inst, ref, eps, loss, feasible, Dist(_normalize(best[2])), "greedy", n_grid)


def _normalize(q: np.ndarray) -> np.ndarray:
    q = np.clip(np.asarray(q, dtype=float), 0, None)
    return q / q.sum()


def _value_of(L: np.ndarray, cols: np.ndarray) -> float:
    sol = _restricted_value(L, np.asarray(cols, dtype=int))
    return 0.0 if sol is None else sol.value


def _finish(inst, ref, eps, loss, feasible, q: Dist, method: str, n_grid: int) -> DecResult:
    sol = _restricted_value(loss, feasible)
    meta = {"method": method, "n_feasible": int(feasible.size)}
    if method != "exact":
        meta["certificate"] = "upper-bound"
    if sol is None:
        return DecResult("constrained", float(eps), 0.0, Dist.uniform(n_grid), q, [], 0.0, UPPER, ref.name,
                         dict(meta, empty=True))
    active = feasible[sol.q > 1e-9]
    return DecResult("constrained", float(eps), sol.value, Dist(_normalize(sol.p)), q,
                     _labels(inst, active), sol.gap, UPPER, ref.name, meta)


def sup_over_references(fn: Callable[..., DecResult], inst, candidates: Sequence[ReferenceModel],
                        **kw) -> DecResult:
    """Largest value of ``fn(inst, reference=c, **kw)`` over the candidates."""
    if not candidates:
        raise ValueError("need at least one candidate reference")
    best = None
    for c in candidates:
        r = fn(inst, reference=c, **kw)
        if best is None or r.value > best.value:
            best = r
    best.meta = dict(best.meta, sup_over=len(candidates), sup_certificate=LOWER)
    return best


def offset_to_constrained_bound(inst, eps: float, gamma_grid: Sequence[float],
                                grid: Sequence[Decision] | None = None, reference=None, tables=None) -> float:
    """min over gamma of max(offset DEC, 0) + gamma eps^2."""
    gamma_grid = list(gamma_grid)
    if not gamma_grid or min(gamma_grid) <= 0:
        raise ValueError("gamma grid must be nonempty and positive")
    grid = list(grid) if grid is not None else default_grid(inst)
    tables = tables if tables is not None else dec_tables(inst, grid, reference)
    return min(max(offset_dec(inst, g, grid, reference, tables).value, 0.0) + g * eps**2 for g in gamma_grid)


# scales


def density_ratio_bound(inst) -> float:
    """V(M): max over model pairs, pure decisions and symbols of M(o|pi)/M'(o|pi), floored at e."""
    K = inst.kernels
    best = math.e
    for a in range(K.shape[0]):
        num = K[a][None]
        pos = num > 0
        if np.any(pos & (K == 0)):
            return math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(pos, num / np.where(K > 0, K, 1.0), 0.0)
        best = max(best, float(r.max()))
    return best


@dataclass(frozen=True)
class ScaleParams:
    T: int
    delta: float
    n_models: int
    R: float = 1.0
    V_M: float = math.inf

    @property
    def C_T(self) -> float:
        return math.log(min(self.T, self.V_M))

    @property
    def eps_upper(self) -> float:
        return 16 * math.sqrt(math.ceil(math.log(2 / self.delta)) / self.T * math.log(self.n_models / self.delta))

    def eps_lower(self, dec_curve: Callable[[float], float]) -> "LowerScale":
        return lower_bound_scale(dec_curve, self.T, self.R, self.C_T)


@dataclass
class LowerScale:
    eps: float
    dec: float
    risk_lower_bound: float
    feasible: bool


def lower_bound_scale(dec_curve: Callable[[float], float], T: int, R: float, C_T: float,
                      eps_min: float = 1e-9, eps_max: float = 2.0, n_scan: int = 240,
                      rtol: float = 1e-6) -> LowerScale:
    """Largest eps with eps^2 C_T R T <= dec(eps)/8, by a log scan then bisection."""
    def ok(e):
        return e * e * C_T * R * T <= dec_curve(e) / 8

    scan = np.geomspace(eps_min, eps_max, n_scan)
    good = [e for e in scan if ok(e)]
    if not good:
        return LowerScale(0.0, 0.0, 0.0, False)
    lo = max(good)
    above = scan[scan > lo]
    if above.size == 0:
        d = dec_curve(lo)
        return LowerScale(float(lo), d, d / 6, True)
    hi = float(above[0])
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    d = dec_curve(lo)
    return LowerScale(float(lo), d, d / 6, True)


@dataclass
class GapReport:
    regularity_failures: list[float]
    alpha: int
    Delta: float
    scale_ok: bool
    chain_ok: bool
    lhs: float
    rhs: float
    fitted_C: float
    ok: bool
    detail: dict = field(default_factory=dict)


def gap_bound_report(dec_curve: Callable[[float], float], eps_upper: float, eps_lower: float, c_reg: float,
                     C_reg: float, beta: float, n_models: int, delta: float, C_T: float, T: int,
                     n_check: int = 24) -> GapReport:
    """Check regularity on the needed range and the polynomial gap between the two scales."""
    if not C_reg > c_reg > 1:
        raise ValueError("need C_reg > c_reg > 1")
    floor = math.log(c_reg) / math.log(C_reg / c_reg)
    if beta < floor - 1e-12:
        raise ValueError(f"beta={beta} below its floor {floor:.4g}")
    lo = max(eps_lower * c_reg / C_reg, 1e-12)
    fails = []
    for e in np.geomspace(lo, max(eps_upper, lo), n_check):
        if dec_curve(e) > c_reg**2 * dec_curve(e / C_reg) * (1 + 1e-9) + 1e-12:
            fails.append(float(e))
    d_up, d_low = dec_curve(eps_upper), dec_curve(eps_lower)
    Delta = d_up / (8 * eps_upper**2 * C_T * T)
    if Delta >= 1:
        alpha = 0
        scale_ok = eps_lower >= eps_upper * (1 - 1e-9)
        chain_ok = d_up <= d_low + 1e-12
    else:
        alpha = max(1, math.ceil(math.log(1 / Delta) / (2 * math.log(C_reg / c_reg))))
        scale_ok = eps_lower >= eps_upper / C_reg**alpha * (1 - 1e-9)
        chain_ok = d_up <= c_reg ** (2 * alpha) * d_low * (1 + 1e-9) + 1e-12
    k0 = 2048 * math.ceil(math.log(2 / delta)) * math.log(n_models / delta)
    rhs = (k0 * C_T * C_reg / c_reg) ** (beta / (1 + beta)) * d_low ** (1 / (1 + beta))
    fitted = k0 / (math.log(1 / delta) * math.log(n_models)) if n_models > 1 else math.inf
    ok = not fails and scale_ok and chain_ok and d_up <= rhs * (1 + 1e-9)
    return GapReport(fails, alpha, Delta, scale_ok, chain_ok, d_up, rhs, fitted, ok,
                     {"dec_upper": d_up, "dec_lower": d_low, "beta_floor": floor})


def fit_regularity(dec_curve: Callable[[float], float], eps_lo: float, eps_hi: float,
                   C_grid: Sequence[float] = (2.0, 3.0, 4.0, 6.0, 8.0), n: int = 24) -> tuple[float, float]:
    """Smallest (C_reg, c_reg) from the grid with c_reg^2 = max dec(e)/dec(e/C_reg) and c_reg < C_reg."""
    es = np.geomspace(eps_lo, eps_hi, n)
    for C in C_grid:
        ratios = []
        for e in es:
            lo = dec_curve(e / C)
            hi = dec_curve(e)
            ratios.append(math.inf if lo <= 0 < hi else (hi / lo if lo > 0 else 1.0))
        c = math.sqrt(max(max(ratios), 1.0 + 1e-9))
        if c < C:
            return float(C), float(max(c, 1.0 + 1e-6))
    raise ValueError("no regular pair on the grid")
