"""Command-line entry point: construct, dec, simulate, verify, inspect."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import constructions as C
from .core import Dist
from .dec import ReferenceModel, constrained_dec, dec_tables, default_grid, offset_dec
from .harness import ALGOS, SUITES, default_threads, run_reps, verify_suite
from .instances import (
    Decision,
    InstanceFormatError,
    Kind,
    atomic_write_text,
    load_instance,
    save_instance,
    validate_instance,
)
from .learners import LearnerConfig

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# construct


def _load(path):
    try:
        return C.rehydrate(load_instance(path))
    except FileNotFoundError:
        raise UsageError(f"no such instance file: {path}") from None


def _build_random_game(p):
    rng = np.random.default_rng(_req(p, "seed", int))
    shape = tuple(int(x) for x in str(p.get("shape", "2,2")).split(","))
    payoffs = C.random_payoff_class(rng, _get(p, "models", int, 3), shape)
    return C.normal_form_instance(payoffs, str(p.get("kind", "CCE")))


def _build_twin(p):
    tp = C.TwinParams(_get(p, "N", int, 8), _get(p, "T", int, 64), _get(p, "eps", float, 0.5),
                      str(p.get("phi", "hellinger")))
    one, two, _ = C.twin_instances(tp)
    which = _get(p, "which", int, 1)
    if which not in (1, 2):
        raise UsageError("twin: which must be 1 or 2")
    return one if which == 1 else two


CONSTRUCTIONS = {
    "layered": (("L", "cprob"), lambda p: C.layered_needle_instance(
        C.LayeredParams(_req(p, "L", int), _get(p, "cprob", float, 1.0)))),
    "twin": (("N", "T", "eps", "phi", "which"), _build_twin),
    "needle": (("N", "delta", "beta"), lambda p: C.needle_instance(
        _req(p, "N", int), _req(p, "delta", float), _req(p, "beta", float))),
    "bandit-gap": (("L", "A"), lambda p: C.bandit_gap_family(_get(p, "L", int, 3), _get(p, "A", int, 2))),
    "separation": (("K", "A", "gap"), lambda p: C.separation_instance(
        _get(p, "K", int, 2), _get(p, "A", int, 4), _get(p, "gap", float, 0.25))),
    "random-game": (("seed", "models", "shape", "kind"), _build_random_game),
    "ma-to-hr": (("instance", "grid"), lambda p: C.ma_to_hr(
        _load(_req(p, "instance", str)), _grid(_load(p["instance"]), str(p.get("grid", "pure"))))),
    "hr-to-ma": (("instance", "V"), lambda p: C.hr_to_ma(_load(_req(p, "instance", str)), _get(p, "V", int, 100))),
    "induced": (("instance", "player"), lambda p: _induced(_load(_req(p, "instance", str)), _get(p, "player", int, 0))),
}


def _induced(J, k):
    others = [range(n) for i, n in enumerate(J.shape) if i != k]
    return C.induced_single_agent(J, k, list(np.ndindex(*[len(r) for r in others])))


def _req(p, key, typ):
    if key not in p:
        raise UsageError(f"missing parameter {key}")
    return _cast(p, key, typ)


def _get(p, key, typ, default):
    return _cast(p, key, typ) if key in p else default


def _cast(p, key, typ):
    try:
        return typ(p[key])
    except (TypeError, ValueError):
        raise UsageError(f"parameter {key}: cannot read {p[key]!r} as {typ.__name__}") from None


def _kv_pairs(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _extra_flags(extra) -> dict:
    """--key value pairs that follow the construction name."""
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or i + 1 >= len(extra):
            raise UsageError(f"unexpected argument {tok!r}")
        out[tok[2:]] = extra[i + 1]
        i += 2
    return out


def cmd_construct(args, extra) -> int:
    if args.name not in CONSTRUCTIONS:
        raise UsageError(f"unknown construction {args.name!r}; expected one of {sorted(CONSTRUCTIONS)}")
    allowed, build = CONSTRUCTIONS[args.name]
    params = {**_extra_flags(extra), **_kv_pairs(args.params)}
    unknown = set(params) - set(allowed)
    if unknown:
        raise UsageError(f"{args.name}: unknown parameters {sorted(unknown)}; allowed {list(allowed)}")
    try:
        inst = build(params)
    except (ValueError, InstanceFormatError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise UsageError(f"{args.name}: {exc}") from None
    save_instance(inst, args.out)
    print(f"wrote {args.name} instance to {args.out}")
    return EXIT_OK


# dec


def _grid(inst, arg: str) -> list[Decision]:
    if arg == "pure":
        return default_grid(inst)
    if arg.startswith("file:"):
        with open(arg[5:]) as fh:
            return [decision_from_json(inst, e) for e in json.load(fh)]
    raise UsageError(f"grid must be 'pure' or 'file:<grid.json>', got {arg!r}")


def decision_from_json(inst, e: dict) -> Decision:
    """One of {index}, {pure: [a_1..a_K]}, {product: [[..],..]}, {joint: [..]}, each with an optional label."""
    label = str(e.get("label", ""))
    if "index" in e:
        return Decision.at(int(e["index"]), label=label)
    if "pure" in e:
        prof = [inst.pure_sets[k].index(a) if isinstance(a, str) else int(a) for k, a in enumerate(e["pure"])]
        d = inst.pure_decision(prof if inst.kind is not Kind.HR else prof[0])
        return Decision(d.kind, d.marginals, d.probs, d.index, label or d.label)
    if "product" in e:
        return Decision.product([[float(x) for x in m] for m in e["product"]], label=label)
    if "joint" in e:
        return Decision.joint(np.array([float(x) for x in e["joint"]]).reshape(inst.shape), label=label)
    raise InstanceFormatError(f"grid entry {e!r}: need one of index, pure, product, joint")


def _reference(inst, arg: str) -> ReferenceModel:
    if arg == "uniform":
        return ReferenceModel.uniform(inst)
    if arg.startswith("model:"):
        try:
            return ReferenceModel.of_model(inst, arg[6:])
        except KeyError as exc:
            raise UsageError(str(exc)) from None
    if arg.startswith("file:"):
        with open(arg[5:]) as fh:
            data = json.load(fh)
        w = data.get("weights", data)
        if isinstance(w, dict):
            return ReferenceModel.mixture(inst, {k: float(v) for k, v in w.items()}, arg[5:])
        return ReferenceModel(Dist([float(x) for x in w]), arg[5:])
    raise UsageError(f"ref must be uniform, model:<label> or file:<mix.json>, got {arg!r}")


def _floats(text: str | None, name: str) -> list[float]:
    if text is None:
        raise UsageError(f"--{name} is required for this variant")
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if any(v < 0 or not math.isfinite(v) for v in vals):
        raise UsageError(f"--{name} values must be finite and nonnegative")
    return vals


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_dec(args) -> int:
    params = _floats(args.gamma, "gamma") if args.variant == "offset" else _floats(args.eps, "eps")
    inst = _load(args.instance)
    grid = _grid(inst, args.grid)
    rows = []
    for arg in args.ref or ["uniform"]:
        ref = _reference(inst, arg)
        tables = dec_tables(inst, grid, ref)
        for x in params:
            if args.variant == "offset":
                r = offset_dec(inst, x, grid, ref, tables)
            else:
                r = constrained_dec(inst, x, grid, ref, tables)
            rows.append([r.variant, repr(x), arg, repr(r.value), repr(r.gap), r.bound_direction])
    text = _csv_text(["variant", "param", "ref", "value", "gap", "bound_direction"], rows)
    _emit(text, args.out)
    return EXIT_OK


# simulate


def cmd_simulate(args) -> int:
    if args.seed is None:
        raise UsageError("simulate: --seed is required")
    if args.T < 0 or args.reps < 1:
        raise UsageError("simulate: need T >= 0 and reps >= 1")
    if args.eta is not None and args.eta <= 0:
        raise UsageError("simulate: --eta must be positive")
    threads = args.threads or default_threads()
    inst = _load(args.instance)
    true = args.true_model
    if true != "random":
        try:
            inst.model_index(true if not true.isdigit() or true in inst.labels else int(true))
        except (KeyError, IndexError):
            raise UsageError(f"unknown true model {true!r}") from None
        true = true if true in inst.labels else int(true)
    kw = {}
    if args.eta is not None:
        kw["eta"] = args.eta
    if args.gamma is not None:
        kw["gamma"] = args.gamma
    cfg = LearnerConfig(**kw)
    grid = _grid(inst, args.grid) if args.grid else None
    rows = run_reps(args.algo, inst, true, args.T, args.reps, args.seed, cfg, grid, args.first_rep, threads)
    text = _csv_text(["rep", "seed", "algo", "T", "risk", "wallclock_ms"],
                     [[r, s, args.algo, args.T, repr(risk), f"{ms:.3f}"] for r, s, _, risk, ms in rows])
    _emit(text, args.out)
    risks = np.array([r[3] for r in rows])
    se = risks.std(ddof=1) / math.sqrt(len(risks)) if len(risks) > 1 else 0.0
    print(f"{args.algo} T={args.T} reps={len(risks)} mean risk {risks.mean():.6g} (se {se:.2g})", file=sys.stderr)
    return EXIT_OK


# verify


def _param_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return tuple(_param_value(x) for x in text.split(","))
    return text


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; expected one of {sorted(SUITES)}")
    params = {k: _param_value(v) for k, v in _kv_pairs(args.params).items()}
    if args.seed is not None:
        params["seed"] = args.seed
    try:
        report = verify_suite(args.suite, **params)
    except TypeError as exc:
        raise UsageError(f"{args.suite}: {exc}") from None
    text = json.dumps(report.as_dict(), indent=2)
    _emit(text + "\n", args.out)
    for c in report.claims:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.id}: {c.lhs:.6g} vs {c.rhs:.6g} (tol {c.tol:g})", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_CHECK


# inspect


def cmd_inspect(args) -> int:
    inst = _load(args.instance)
    info = {
        "kind": inst.kind.value,
        "K": inst.K,
        "|Pi|": int(inst.n_rows),
        "|M|": int(inst.n_models),
        "|O|": int(inst.n_obs),
    }
    if not hasattr(inst, "kernels") or isinstance(inst, C.LayeredInstance):
        info["validation"] = "structured instance; checked at construction"
    else:
        rep = validate_instance(inst)
        info["problems"] = rep["problems"]
    if args.json:
        print(json.dumps(info, indent=2))
    else:
        print(f"kind={info['kind']} K={info['K']} |Π|={info['|Pi|']} |M|={info['|M|']} |O|={info['|O|']}")
        for p in info.get("problems", []):
            print(f"problem: {p}")
    return EXIT_CHECK if info.get("problems") else EXIT_OK


def _emit(text: str, out: str | None) -> None:
    if out and out != "-":
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="madec", description="Decision-estimation coefficients for multi-agent instances.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    c = sub.add_parser("construct", help="build an instance family and write it as JSON")
    c.add_argument("name", help=", ".join(sorted(CONSTRUCTIONS)))
    c.add_argument("--params", nargs="*", metavar="K=V")
    c.add_argument("--out", required=True)

    d = sub.add_parser("dec", help="offset or constrained DEC of an instance file")
    d.add_argument("--instance", required=True)
    d.add_argument("--variant", choices=("offset", "constrained"), required=True)
    d.add_argument("--gamma", help="comma-separated gamma values (offset)")
    d.add_argument("--eps", help="comma-separated radii (constrained)")
    d.add_argument("--ref", action="append", help="uniform | model:<label> | file:<mix.json>; repeatable")
    d.add_argument("--grid", default="pure", help="pure | file:<grid.json>")
    d.add_argument("--out")

    s = sub.add_parser("simulate", help="seeded learner runs with exact risk")
    s.add_argument("--instance", required=True)
    s.add_argument("--true-model", required=True, help="model label, index, or 'random'")
    s.add_argument("--algo", choices=ALGOS, required=True)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--first-rep", type=int, default=0)
    s.add_argument("--eta", type=float)
    s.add_argument("--gamma", type=float)
    s.add_argument("--grid", help="pure | file:<grid.json>")
    s.add_argument("--threads", type=int)
    s.add_argument("--out")

    v = sub.add_parser("verify", help="run a named verification suite")
    v.add_argument("--suite", required=True, help=", ".join(sorted(SUITES)))
    v.add_argument("--params", nargs="*", metavar="K=V")
    v.add_argument("--seed", type=int, help="override the suite's fixed seed")
    v.add_argument("--out")

    i = sub.add_parser("inspect", help="sizes and validation report of an instance file")
    i.add_argument("instance")
    i.add_argument("--json", action="store_true")
    return p


COMMANDS = {"dec": cmd_dec, "simulate": cmd_simulate, "verify": cmd_verify, "inspect": cmd_inspect}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        if args.command == "construct":
            return cmd_construct(args, extra)
        if extra:
            raise UsageError(f"unrecognized arguments: {' '.join(extra)}")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceFormatError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
