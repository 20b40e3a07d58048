"""Monte-Carlo risk estimation, sweeps and the named verification suites."""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import constructions as C
from .core import Dist, f_divergence
from .dec import (
    ReferenceModel,
    ScaleParams,
    constrained_dec,
    dec_tables,
    default_grid,
    default_references,
    fit_regularity,
    gap_bound_report,
    lower_bound_scale,
    offset_dec,
    offset_to_constrained_bound,
    solve_matrix_game,
    solve_matrix_games_mw,
)
from .instances import Decision, FiniteModel, Instance, Kind, find_equilibrium
from .learners import (
    GammaProblem,
    LearnerConfig,
    e2d_pac_run,
    estimation_error,
    first_hit_exact_risk,
    first_hit_run,
    maexo_run,
    mwu_regret_sides,
    uniform_baseline_run,
)

ALGOS = ("maexo", "e2d", "first-hit", "uniform")


def default_threads() -> int:
    env = os.environ.get("MADEC_THREADS")
    if env:
        return max(1, int(env))
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def rep_seed(seed: int, rep: int) -> int:
    """Seed of replicate ``rep``; depends only on (seed, rep), so batches split cleanly."""
    return int(np.random.SeedSequence(seed, spawn_key=(rep,)).generate_state(1, np.uint64)[0] >> np.uint64(1))


# risk estimation


@dataclass
class RiskEstimate:
    mean: float
    stderr: float
    reps: int
    risks: list[float] = field(default_factory=list)
    true_models: list[int] = field(default_factory=list)

    @classmethod
    def from_risks(cls, risks, true_models=()) -> "RiskEstimate":
        r = np.asarray(risks, dtype=float)
        if r.size == 0:
            raise ValueError("need at least one replicate")
        se = float(r.std(ddof=1) / math.sqrt(r.size)) if r.size > 1 else 0.0
        return cls(float(r.mean()), se, int(r.size), r.tolist(), list(true_models))

    @property
    def median(self) -> float:
        return float(np.median(self.risks))


def run_algo(algo: str, inst, true_model, T: int, seed: int, config: LearnerConfig | None = None,
             grid=None, problem=None) -> Decision:
    if algo == "first-hit":
        return first_hit_run(inst, true_model, T, seed)
    if algo == "uniform":
        return uniform_baseline_run(inst, true_model, T, seed, grid)
    cfg = LearnerConfig(**{**asdict(config or LearnerConfig()), "seed": seed})
    if algo == "e2d":
        return e2d_pac_run(inst, true_model, T, cfg, grid)[1]
    if algo == "maexo":
        if inst.kind not in (Kind.CCE, Kind.CE):
            raise ValueError("maexo runs on CCE or CE instances only")
        return maexo_run(inst, true_model, T, cfg, problem)[1]
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGOS}")


def _one_rep(args):
    algo, inst, true_model, T, seed, rep, config, grid, problem = args
    s = rep_seed(seed, rep)
    if true_model == "random":
        m = int(np.random.default_rng(s).integers(inst.n_models))
    else:
        m = inst.model_index(true_model)
    t0 = time.perf_counter()
    if algo == "e2d":
        risk = e2d_output_risk(inst, m, T, s, config, grid)
    else:
        risk = float(inst.suboptimality(m, run_algo(algo, inst, m, T, s, config, grid, problem)))
    ms = 1000 * (time.perf_counter() - t0)
    return rep, s, m, risk, ms


def e2d_output_risk(inst, m, T, seed, config=None, grid=None) -> float:
    """Expected loss of the E2D output law, the average of the per-round p^t; zero-variance in the final draw."""
    grid = list(grid) if grid is not None else default_grid(inst)
    cfg = LearnerConfig(**{**asdict(config or LearnerConfig()), "seed": seed})
    trace, d = e2d_pac_run(inst, m, T, cfg, grid)
    loss = inst.loss_table(grid, [m])[0]
    if not trace.records:
        return float(inst.suboptimality(m, d))
    return float(np.mean([r["p"] @ loss for r in trace.records]))


def run_reps(algo, inst, true_model, T, reps, seed, config=None, grid=None, first_rep=0, threads=1):
    """Per-rep rows (rep, seed, model, risk, ms), sorted by rep id."""
    problem = GammaProblem(inst, (config or LearnerConfig()).eta) if algo == "maexo" else None
    jobs = [(algo, inst, true_model, T, seed, r, config, grid, problem) for r in range(first_rep, first_rep + reps)]
    if threads > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(_one_rep, jobs, chunksize=max(1, reps // (4 * threads))))
    else:
        rows = [_one_rep(j) for j in jobs]
    return sorted(rows)


def estimate_risk(algo, inst, true_model, T, reps, seed, config=None, grid=None, first_rep=0,
                  threads=1) -> RiskEstimate:
    """Mean exact risk of ``reps`` seeded runs; ``true_model='random'`` draws it per rep."""
    rows = run_reps(algo, inst, true_model, T, reps, seed, config, grid, first_rep, threads)
    return RiskEstimate.from_risks([r[3] for r in rows], [r[2] for r in rows])


def loglog_slope(Ts, means) -> float:
    Ts, means = np.asarray(Ts, dtype=float), np.asarray(means, dtype=float)
    keep = means > 0
    if keep.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(Ts[keep]), np.log(means[keep]), 1)[0])


def scaling_sweep(algo, inst_for_T: Callable[[int], object] | object, Ts, reps, seed, true_model=0,
                  config=None, threads=1) -> tuple[list[tuple[int, float, float]], float]:
    """Rows (T, mean, stderr) and the fitted log-log slope of mean risk against T.

    ``inst_for_T`` and ``config`` may be callables of T.
    """
    rows = []
    for T in Ts:
        inst = inst_for_T(T) if callable(inst_for_T) else inst_for_T
        cfg = config(T) if callable(config) else config
        est = estimate_risk(algo, inst, true_model, T, reps, seed, cfg, threads=threads)
        rows.append((int(T), est.mean, est.stderr))
    return rows, loglog_slope([r[0] for r in rows], [r[1] for r in rows])


# suites


@dataclass
class Claim:
    id: str
    anchor: str
    lhs: float
    rhs: float
    tol: float
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        return {"id": self.id, "anchor": self.anchor, "lhs": _num(self.lhs), "rhs": _num(self.rhs),
                "tol": self.tol, "pass": bool(self.passed), **({"note": self.note} if self.note else {})}


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


@dataclass
class SuiteReport:
    suite: str
    claims: list[Claim]
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.claims) and all(c.passed for c in self.claims)

    def as_dict(self) -> dict:
        return {"suite": self.suite, "claims": [c.as_dict() for c in self.claims], "pass": self.passed,
                **({"info": self.info} if self.info else {})}

    def failures(self) -> list[Claim]:
        return [c for c in self.claims if not c.passed]


def _le(cid, anchor, lhs, rhs, tol=0.0, note="") -> Claim:
    return Claim(cid, anchor, float(lhs), float(rhs), tol, bool(lhs <= rhs + tol), note)


def _close(cid, anchor, lhs, rhs, tol, note="") -> Claim:
    return Claim(cid, anchor, float(lhs), float(rhs), tol, bool(abs(lhs - rhs) <= tol), note)


def hr_grid(inst) -> list[Decision]:
    return [Decision.at(i, label=str(i)) for i in range(inst.n_rows)]


def layered_dec_pairs(L: int = 3, eps_list=(0.15, 0.25, 0.35, 0.5)):
    """(eps, reference, instance, grid, tables, value) on the layered family within its valid range."""
    lay = C.layered_needle_instance(C.LayeredParams(L))
    grid = hr_grid(lay)
    eps_min = math.sqrt(2) / 2**L
    out = []
    for ref in (ReferenceModel.of_model(lay, "-".join(["1"] * L)), ReferenceModel.uniform(lay)):
        tables = dec_tables(lay, grid, ref)
        for e in eps_list:
            if e < eps_min:
                continue
            out.append((e, ref, lay, grid, tables, constrained_dec(lay, e, grid, ref, tables=tables).value))
    return out


def suite_gap_inherent(L: int = 3, L_sim: int = 6, Ts=(16, 32, 64), reps: int = 2000, seed: int = 0,
                       threads: int = 1) -> SuiteReport:
    claims = []
    by_eps: dict[float, list[float]] = {}
    for e, ref, *_, v in layered_dec_pairs(L):
        by_eps.setdefault(e, []).append(v)
        claims.append(_le(f"dec-upper[eps={e},{ref.name}]", "layered DEC at most 2 C_prob eps", v, 2 * e, 1e-6))
    for e, vals in sorted(by_eps.items()):
        claims.append(_le(f"dec-lower[eps={e}]", "layered DEC at least C_prob eps / (sqrt(8) L)",
                          e / (math.sqrt(8) * L), max(vals), 1e-6, "sup over the two references"))
    lay = C.layered_needle_instance(C.LayeredParams(L_sim))
    for T in Ts:
        est = estimate_risk("first-hit", lay, 0, T, reps, seed + T, threads=threads)
        claims.append(_le(f"first-hit[L={L_sim},T={T}]", "first-hit risk at most 8 C_prob^2 log T / T",
                          est.mean, 8 * math.log(T) / T + 3 * est.stderr))
        claims.append(_close(f"first-hit-closed-form[T={T}]", "first-hit risk closed form",
                             est.mean, first_hit_exact_risk(lay, 0, T), 3 * est.stderr + 1e-12))
    return SuiteReport("gap-inherent", claims)


def suite_fdiv_twin(N: int = 8, T: int = 64, eps: float = 0.5, phis=("hellinger", "chi2"),
                    mc_reps: int = 100_000, base_reps: int = 20_000, seed: int = 0, threads: int = 1) -> SuiteReport:
    claims = []
    info = {}
    for phi in phis:
        p = C.TwinParams(N, T, eps, phi)
        one, two, _ = C.twin_instances(p)
        same = np.array_equal(one.values, two.values)
        claims.append(Claim(f"values[{phi}]", "twin instances share value tables", float(same), 1.0, 0.0, same))
        worst = 0.0
        for i, j in itertools.permutations(range(N), 2):
            d1 = f_divergence(phi, one.kernels[i, 0], one.kernels[j, 0])
            d2 = f_divergence(phi, two.kernels[i, 0], two.kernels[j, 0])
            worst = max(worst, abs(d1 - d2))
        claims.append(_le(f"pairwise-divergence[{phi}]", "pairwise f-divergences matched", worst, 0.0, 1e-12))
        est = estimate_risk("first-hit", one, 0, T, mc_reps, seed, threads=threads)
        exact = first_hit_exact_risk(one, 0, T)
        claims.append(_close(f"first-hit[{phi}]", "first-hit risk on the first instance", est.mean, exact,
                             3 * est.stderr))
        S = p.horizon2
        lb = 2.0 ** (-1 - 2 / eps) / (N * (p.delta2 / p.beta2) ** (2 / eps))
        base = estimate_risk("uniform", two, "random", S, base_reps, seed + 1, threads=threads)
        claims.append(_le(f"hard-instance[{phi}]", "risk on the second instance at horizon S",
                          lb, base.mean + 3 * base.stderr, 0.0, f"S={S}"))
        info[phi] = {"delta1": p.delta1, "beta1": p.beta1, "delta2": p.delta2, "beta2": p.beta2, "S": S,
                     "first_hit_exact": exact}
    return SuiteReport("fdiv-twin", claims, info)


def random_cce_with_grid(seed: int, n_models: int = 3):
    rng = np.random.default_rng(seed)
    J = C.normal_form_instance(C.random_payoff_class(rng, n_models), "CCE")
    grid = J.pure_grid(include_uniform=True)
    for m in range(J.n_models):
        eq = find_equilibrium(J, m)
        grid.append(Decision.joint(eq.joint_probs(J.shape), label=f"eq:{J.labels[m]}"))
    return J, grid, rng


def reduction_pairs(seeds=range(5), eps_list=(0.2, 0.5)):
    """(eps, ref name, J value, I value, J tables) over random CCE classes and three references."""
    out = []
    for s in seeds:
        J, grid, rng = random_cce_with_grid(s)
        I = C.ma_to_hr(J, grid)
        refs = [ReferenceModel.of_model(J, 0), ReferenceModel.uniform(J),
                ReferenceModel(Dist(rng.dirichlet(np.ones(J.n_models))), "dirichlet")]
        for ref in refs:
            tJ = dec_tables(J, grid, ref)
            tI = dec_tables(I, hr_grid(I), ref)
            for e in eps_list:
                vJ = constrained_dec(J, e, grid, ref, tables=tJ).value
                vI = constrained_dec(I, e, hr_grid(I), ref, tables=tI).value
                out.append(dict(seed=s, eps=e, ref=ref, J=J, grid=grid, tables=tJ, vJ=vJ, vI=vI))
    return out


def embedding_sandwich(V: int = 10_000, eps_list=(0.1, 0.2, 0.3, 0.6), base=None):
    """dec(J) <= dec(I) <= 6/sqrt(V) + dec_{eps + sqrt(6/V)}(J) on a hidden-reward base."""
    base = base if base is not None else C.bandit_gap_family(3, 2)
    E = C.hr_to_ma(base, V)
    bgrid = hr_grid(base)
    unif = np.r_[0.0, np.full(V, 1.0 / V)]
    jgrid = [E.lift_decision(d) for d in bgrid]
    for s in range(base.n_rows):
        jgrid.append(Decision.product([np.eye(base.n_rows)[s], unif], label=f"({s},U)"))
    out = []
    base_refs = [ReferenceModel.of_model(base, 0), ReferenceModel.uniform(base)]
    for bref in base_refs:
        jref = ReferenceModel(Dist(E.lift_reference(bref.weights.probs)), bref.name + "xU")
        tJ = dec_tables(E, jgrid, jref)
        tI = dec_tables(base, bgrid, bref)
        for e in eps_list:
            dI = constrained_dec(base, e, bgrid, bref, tables=tI).value
            dJ = constrained_dec(E, e, jgrid, jref, tables=tJ)
            dJ2 = constrained_dec(E, e + math.sqrt(6 / V), jgrid, jref, tables=tJ)
            out.append(dict(eps=e, ref=jref, bref=bref, E=E, grid=jgrid, tables=tJ, dI=dI, dJ=dJ.value,
                            dJ2=dJ2.value, method=dJ.meta.get("method"), base=base, btables=tI))
    return out


def suite_reductions(V: int = 10_000) -> SuiteReport:
    claims = []
    for r in reduction_pairs():
        claims.append(_close(f"equality[seed={r['seed']},eps={r['eps']},{r['ref'].name}]",
                             "hidden-reward reduction preserves the constrained DEC", r["vJ"], r["vI"], 1e-6))
    for r in embedding_sandwich(V):
        tag = f"eps={r['eps']},{r['bref'].name}"
        claims.append(_le(f"sandwich-left[{tag}]", "embedded game DEC at most the base DEC", r["dJ"], r["dI"], 1e-6))
        claims.append(_le(f"sandwich-right[{tag}]", "base DEC at most 6/sqrt(V) plus the embedded DEC at a wider radius",
                          r["dI"], 6 / math.sqrt(V) + r["dJ2"], 1e-6,
                          "both sides grid-exact; the right side is an upper bound on its true value"))
    return SuiteReport("reductions", claims, {"V": V})


GAMMA_GRID = tuple(np.geomspace(0.01, 1e4, 20))


def suite_constrained_offset(gamma_grid=GAMMA_GRID) -> SuiteReport:
    claims = []
    for e, ref, lay, grid, tables, v in layered_dec_pairs():
        b = offset_to_constrained_bound(lay, e, gamma_grid, grid, ref, tables)
        claims.append(_le(f"layered[eps={e},{ref.name}]", "constrained DEC below the offset bound", v, b, 1e-6))
    for r in reduction_pairs():
        b = offset_to_constrained_bound(r["J"], r["eps"], gamma_grid, r["grid"], r["ref"], r["tables"])
        claims.append(_le(f"cce[seed={r['seed']},eps={r['eps']},{r['ref'].name}]",
                          "constrained DEC below the offset bound", r["vJ"], b, 1e-6))
    for r in embedding_sandwich():
        b = offset_to_constrained_bound(r["E"], r["eps"], gamma_grid, r["grid"], r["ref"], r["tables"])
        claims.append(_le(f"embedded[eps={r['eps']},{r['ref'].name}]", "constrained DEC below the offset bound",
                          r["dJ"], b, 1e-6))
        b = offset_to_constrained_bound(r["base"], r["eps"], gamma_grid, hr_grid(r["base"]), r["bref"], r["btables"])
        claims.append(_le(f"base[eps={r['eps']},{r['bref'].name}]", "constrained DEC below the offset bound",
                          r["dI"], b, 1e-6))
    return SuiteReport("constrained-offset", claims)


def hull_instance(J: Instance, n: int, seed: int) -> Instance:
    """The class plus ``n`` Dirichlet mixtures of its models."""
    rng = np.random.default_rng(seed)
    models = list(J.models)
    for i in range(n):
        w = rng.dirichlet(np.ones(J.n_models))
        models.append(FiniteModel(f"mix{i}", np.einsum("m,mro->ro", w, J.kernels)))
    return Instance(J.K, J.kind, J.pure_sets, J.obs, models, J.reveals_sigma, J.reward_range)


def maexo_bound(J: Instance, T: int, gammas, n_hull: int = 200, seed: int = 0, delta: float = 0.05,
                n_refs: int = 10) -> tuple[float, float, list[float]]:
    """min over gamma of dec^o_gamma(hull) + 16 gamma/T log(K max|dev| / delta), with the minimizer."""
    H = hull_instance(J, n_hull, seed)
    grid = J.pure_grid(include_uniform=True)
    for m in range(J.n_models):
        grid.append(Decision.joint(find_equilibrium(J, m).joint_probs(J.shape), label=f"eq{m}"))
    refs = [ReferenceModel.of_model(H, i) for i in range(J.n_models)] + [
        ReferenceModel(Dist(np.r_[np.zeros(J.n_models), np.eye(n_hull)[i]]), f"mix{i}") for i in range(n_refs)
    ] + [ReferenceModel(Dist(np.r_[np.full(J.n_models, 1.0 / J.n_models), np.zeros(n_hull)]), "uniform")]
    tables = [dec_tables(H, grid, r) for r in refs]
    n_dev = max(J.shape) + 1 if J.kind is Kind.CCE else max(n**n for n in J.shape)
    terms = []
    for g in gammas:
        d = max(offset_dec(H, g, grid, r, t).value for r, t in zip(refs, tables))
        terms.append(d + 16 * g / T * math.log(J.K * n_dev / delta))
    i = int(np.argmin(terms))
    return float(terms[i]), float(gammas[i]), terms


def maexo_instance(seed: int = 7) -> Instance:
    rng = np.random.default_rng(seed)
    return C.normal_form_instance(C.random_payoff_class(rng, 4), "CCE")


def suite_maexo(T: int = 2000, T_small: int = 250, reps: int = 20, seed: int = 0, gammas=None,
                round_iters: int = 3, threads: int = 1) -> SuiteReport:
    J = maexo_instance()
    gammas = gammas if gammas is not None else tuple(np.geomspace(0.5, 64, 15))
    bound, g_star, _ = maexo_bound(J, T, gammas)
    eta = 1.0 / (8 * g_star)
    cfg = LearnerConfig(eta=eta, round_iters=round_iters)
    big = estimate_risk("maexo", J, 0, T, reps, seed, cfg, threads=threads)
    small = estimate_risk("maexo", J, 0, T_small, reps, seed, cfg, threads=threads)
    claims = [
        _le(f"risk[T={T}]", "median suboptimality within twice K times the offset-DEC bound", big.median,
            2 * J.K * bound, 0.0, "hull DEC is a lower-bound certificate; factor 2 absorbs it"),
        Claim(f"decrease[{T_small}->{T}]", "median risk decreases with T", big.median, small.median, 0.0,
              big.median < small.median),
    ]
    return SuiteReport("maexo", claims, {"gamma": g_star, "eta": eta, "bound": bound,
                                         "median_T": big.median, "median_small": small.median})


def suite_estimation(T: int = 500, reps: int = 100, seed: int = 0, delta: float = 0.05) -> SuiteReport:
    inst = C.bandit_gap_family(5, 2)
    grid = hr_grid(inst)
    cap = 2 * math.log(inst.n_models / delta)
    errs = []
    for r in range(reps):
        s = rep_seed(seed, r)
        m = r % inst.n_models
        trace, _ = e2d_pac_run(inst, m, T, LearnerConfig(seed=s), grid)
        errs.append(estimation_error(inst, m, grid, [x["weights"] for x in trace.records],
                                     [x["p"] for x in trace.records]))
    good = sum(e <= cap for e in errs)
    return SuiteReport("estimation", [
        _le("est-h-coverage", "estimation error within 2 log(|M|/delta) in 90% of runs", 0.9 * reps, good),
    ], {"cap": cap, "max": max(errs), "median": float(np.median(errs))})


def mesh_simplex(n: int, step: float = 1e-3) -> np.ndarray:
    k = int(round(1 / step))
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        t = np.arange(k + 1) / k
        return np.column_stack([t, 1 - t])
    if n == 3:
        i, j = np.triu_indices(k + 1)
        a, b = i / k, (j - i) / k
        return np.column_stack([a, b, 1 - a - b])
    raise ValueError("mesh only for up to 3 decisions")


def brute_force_constrained(loss: np.ndarray, H: np.ndarray, eps: float, step: float = 1e-3,
                            decision_independent: bool = False) -> float:
    """Exhaustive search over a mesh of p and q (grid of at most 3 decisions)."""
    n_m, n_j = loss.shape
    P = mesh_simplex(n_j, step)
    exp_loss = P @ loss.T  # (mesh, models)
    subsets = {}
    for mask in range(1 << n_m):
        cols = [i for i in range(n_m) if mask >> i & 1]
        subsets[mask] = exp_loss[:, cols].max(axis=1).min() if cols else 0.0
    Q = P[:1] if decision_independent else P
    feas = (Q @ H.T) <= eps**2 + 1e-12
    masks = feas @ (1 << np.arange(n_m))
    return float(min(subsets[int(m)] for m in np.unique(masks)))


def tiny_instances():
    """Five small instances with at most 3 grid decisions and 4 models."""
    out = []
    twin = C.needle_instance(3, 0.2, 0.05)
    out.append(("needle", twin, hr_grid(twin), 0))
    bandit = C.bandit_gap_family(3, 2)
    out.append(("bandit", bandit, hr_grid(bandit), 0))
    rng = np.random.default_rng(5)
    kern = rng.dirichlet(np.ones(3), size=(3, 3))
    vals = rng.uniform(size=(3, 3))
    hr = Instance(1, "HR", [["a", "b", "c"]], [C.ObsSymbol(x) for x in "xyz"],
                  [FiniteModel(f"m{i}", kern[i], vals[i]) for i in range(3)])
    out.append(("random-hr", hr, hr_grid(hr), None))
    J = C.normal_form_instance(C.random_payoff_class(rng, 2), "CCE")
    out.append(("cce", J, [J.pure_decision((0, 0)), J.pure_decision((1, 1)), J.uniform_decision()], None))
    kern4 = rng.dirichlet(np.ones(2), size=(4, 2))
    vals4 = rng.uniform(size=(4, 2))
    hr4 = Instance(1, "HR", [["a", "b"]], [C.ObsSymbol("x"), C.ObsSymbol("y")],
                   [FiniteModel(f"m{i}", kern4[i], vals4[i]) for i in range(4)])
    out.append(("four-models", hr4, hr_grid(hr4), 1))
    return out


def suite_solvers(n_games: int = 50, size: int = 20, seed: int = 0, eps_list=(0.15, 0.3, 0.6)) -> SuiteReport:
    rng = np.random.default_rng(seed)
    games = [rng.uniform(-1, 1, (size, size)) for _ in range(n_games)]
    lp = [solve_matrix_game(A) for A in games]
    mw = solve_matrix_games_mw(games, tol=5e-5)
    claims = [_le("lp-vs-mw", "LP and multiplicative-weights values agree",
                  max(abs(a.value - b.value) for a, b in zip(lp, mw)), 1e-4)]
    claims.append(_le("lp-gap", "LP duality gap", max(s.gap for s in lp), 1e-8))
    for name, inst, grid, ref in tiny_instances():
        ref = ReferenceModel.uniform(inst) if ref is None else ReferenceModel.of_model(inst, ref)
        loss, H = dec_tables(inst, grid, ref)
        for e in eps_list:
            v = constrained_dec(inst, e, grid, ref, tables=(loss, H)).value
            b = brute_force_constrained(loss, H, e, decision_independent=inst.decision_independent)
            claims.append(_close(f"mesh[{name},eps={e}]", "constrained DEC equals mesh brute force", v, b, 2e-3))
    return SuiteReport("solvers", claims)


def ordering_grid(shape, n_random: int, rng) -> list[Decision]:
    grid = [Decision.product([np.eye(shape[0])[a], np.eye(shape[1])[b]], label=f"({a},{b})")
            for a in range(shape[0]) for b in range(shape[1])]
    grid.append(Decision.product([np.full(n, 1.0 / n) for n in shape], label="uniform"))
    for i in range(n_random):
        grid.append(Decision.product([rng.dirichlet(np.ones(n)) for n in shape], label=f"r{i}"))
    return grid


def suite_dec_ordering(n_classes: int = 10, gammas=(5.0, 20.0), n_models: int = 3, seed: int = 0) -> SuiteReport:
    claims = []
    for c in range(n_classes):
        rng = np.random.default_rng(seed + c)
        P = C.random_payoff_class(rng, n_models)
        inst = {k: C.normal_form_instance(P, k) for k in ("CCE", "CE", "NE")}
        grid = ordering_grid((2, 2), 4, rng)
        refs = default_references(inst["NE"], n_random=2, seed=c)
        for g in gammas:
            vals = {}
            for k, J in inst.items():
                vals[k] = max(offset_dec(J, g, grid, r).value for r in refs)
            claims.append(_le(f"cce<=ce[class={c},gamma={g}]", "coarse correlated DEC at most correlated DEC",
                              vals["CCE"], vals["CE"], 1e-6))
            claims.append(_le(f"ce<=ne[class={c},gamma={g}]", "correlated DEC at most Nash DEC",
                              vals["CE"], vals["NE"], 1e-6))
    return SuiteReport("dec-ordering", claims)


def bandit_offset_dec(means: np.ndarray, ref_means: np.ndarray, gamma: float) -> float:
    """Offset DEC of a Bernoulli bandit given as a (models, arms) mean table, by direct LP."""
    loss = means.max(axis=1, keepdims=True) - means
    H = (np.sqrt(means) - np.sqrt(ref_means)) ** 2 + (np.sqrt(1 - means) - np.sqrt(1 - ref_means)) ** 2
    return solve_matrix_game((loss - gamma * H).T).value


def suite_separation(K: int = 2, A: int = 4, gammas=(1.0, 10.0, 100.0), gamma_induced: float = 10.0,
                     gap: float = 0.25) -> SuiteReport:
    J = C.separation_instance(K, A, gap)
    zero = C.zero_profile(J)
    grid = J.pure_grid(include_uniform=True)
    refs = default_references(J, n_random=3, seed=0)
    claims = []
    h0 = J.loss_table([zero])[:, 0]
    claims.append(_le("zero-profile", "the all-zero profile is an equilibrium of every model", float(h0.max()), 0.0, 1e-12))
    for g in gammas:
        cert = max(float((J.loss_table([zero])[:, 0] - g * dec_tables(J, [zero], r)[1][:, 0]).max()) for r in refs)
        claims.append(_le(f"certificate[gamma={g}]", "multi-agent offset DEC vanishes", cert, 0.0, 1e-9))
        val = max(offset_dec(J, g, grid, r).value for r in refs)
        claims.append(_le(f"offset[gamma={g}]", "multi-agent offset DEC vanishes", val, 0.0, 1e-9))
    opponents = [(a,) for a in range(A + 1)]
    ind = C.induced_single_agent(J, 0, opponents)
    null_ref = ReferenceModel.of_model(ind, "null|opp=(1)")
    induced = offset_dec(ind, gamma_induced, None, null_ref).value
    arms = np.array([0.5 + gap * (np.arange(1, A + 1) == a) for a in range(1, A + 1)] + [np.full(A, 0.5)])
    embedded = bandit_offset_dec(arms, np.full(A, 0.5), gamma_induced)
    claims.append(_le(f"induced[gamma={gamma_induced}]", "induced single-agent class keeps the bandit DEC",
                      0.5 * embedded, induced, 0.0))
    claims.append(Claim("embedded-positive", "embedded bandit DEC is positive", embedded, 0.0, 0.0, embedded > 0))
    return SuiteReport("separation", claims, {"induced": induced, "embedded": embedded})


def suite_mwu(n_seq: int = 100, d: int = 5, T: int = 10, eta: float = 0.3, seed: int = 0) -> SuiteReport:
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(n_seq):
        gains = rng.uniform(-1, 1, (T, d))
        for j in range(d):
            lhs, rhs = mwu_regret_sides(gains, eta, np.eye(d)[j])
            worst = max(worst, lhs - rhs)
    return SuiteReport("mwu", [_le("regret", "exponential-weights stability bound", worst, 0.0, 1e-10)])


def suite_gap_bounding(L: int = 3, T: int = 64, delta: float = 0.1) -> SuiteReport:
    lay = C.layered_needle_instance(C.LayeredParams(L))
    grid = hr_grid(lay)
    refs = [ReferenceModel.of_model(lay, "-".join(["1"] * L)), ReferenceModel.uniform(lay)]
    tables = [dec_tables(lay, grid, r) for r in refs]
    cache: dict[float, float] = {}

    def curve(e):
        e = float(min(e, 2.0))
        if e not in cache:
            cache[e] = max(constrained_dec(lay, e, grid, r, tables=t).value for r, t in zip(refs, tables))
        return cache[e]

    scale = ScaleParams(T, delta, lay.n_models)
    C_T = scale.C_T
    eps_up = scale.eps_upper
    low = lower_bound_scale(curve, T, 1.0, C_T)
    claims = [Claim("eps-low", "lower scale has a positive solution", low.eps, 0.0, 0.0, low.feasible,
                    "largest eps with eps^2 C_T T <= dec(eps)/8")]
    log_cap = 2 * math.log(T)
    info = {"eps_upper": eps_up, "eps_lower": low.eps, "C_T": C_T}
    lo = low.eps if low.feasible else 1e-6
    try:
        C_reg, c_reg = fit_regularity(curve, lo, min(eps_up, 2.0), C_grid=np.linspace(2, log_cap, 12))
    except ValueError:
        claims.append(Claim("regularity", "regularity constants within O(log T)", math.inf, log_cap, 0.0, False,
                            "no C_reg <= 2 log T works on the required range"))
        return SuiteReport("gap-bounding", claims, info)
    claims.append(_le("regularity", "regularity constants within O(log T)", C_reg, log_cap))
    beta = math.log(c_reg) / math.log(C_reg / c_reg)
    rep = gap_bound_report(curve, min(eps_up, 2.0), low.eps, c_reg, C_reg, beta, lay.n_models, delta, C_T, T)
    claims.append(_le("interpolation", "upper-scale DEC bounded by a power of the lower-scale DEC",
                      rep.lhs, rep.rhs, 1e-12, f"fitted C = {rep.fitted_C:.4g}"))
    info.update(C_reg=C_reg, c_reg=c_reg, beta=beta)
    return SuiteReport("gap-bounding", claims, info)


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "gap-inherent": suite_gap_inherent,
    "fdiv-twin": suite_fdiv_twin,
    "reductions": suite_reductions,
    "constrained-offset": suite_constrained_offset,
    "dec-ordering": suite_dec_ordering,
    "separation": suite_separation,
    "mwu": suite_mwu,
    "gap-bounding": suite_gap_bounding,
    "maexo": suite_maexo,
    "estimation": suite_estimation,
    "solvers": suite_solvers,
}


def verify_suite(name: str, **params) -> SuiteReport:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}") from None
    return fn(**params)
