"""Command-line entry point: ``mallows-match <command> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, harness, wild
from .core import WindowMatching
from .oracle import EdgeOracle
from .qseries import (
    bernoulli_cut_rate,
    coupling_constant,
    hardy_ramanujan,
    hardy_ramanujan_standard,
    q_pochhammer_inf,
)
from .samplers import (
    TameSampleConfig,
    run_cut_chain,
    sample_semiinfinite,
    stable_match_finite,
    tame_limit,
)


def _pair(text: str) -> tuple[int, int]:
    lo, hi = (int(x) for x in text.split(","))
    return lo, hi


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _prob(args) -> float:
    if args.q is not None:
        return 1.0 - args.q
    return args.p


def _add_pq(sp, p_default=0.5):
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--p", type=float, default=p_default, help="edge probability")
    g.add_argument("--q", type=float, default=None, help="1 - p")
    sp.add_argument("--seed", type=int, default=0)


def _emit(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_sample(args) -> int:
    oracle = EdgeOracle(_prob(args), args.seed)
    lo, hi = args.window
    if args.kind == "finite":
        m = stable_match_finite(range(lo, hi + 1), range(lo, hi + 1), oracle)
        d = m.to_dict()
        d["perfect"] = m.is_perfect_on_window()
    elif args.kind == "semiinf":
        top = hi if args.m is None else args.m
        d = sample_semiinfinite(top, (lo, hi), oracle, scan_cap=args.scan_cap).to_dict()
        d["m"] = top
    else:
        cfg = TameSampleConfig(args.flow, (lo, hi), args.tol, scan_cap=args.scan_cap)
        res = tame_limit(cfg, oracle)
        d = res.matching.to_dict()
        d["m"] = res.m
        d["error_bound"] = res.error_bound
    _emit(d, args.out)
    return 0


def cmd_chain(args) -> int:
    p = _prob(args)
    if args.backend == "graph":
        run = run_cut_chain(args.steps, EdgeOracle(p, args.seed))
    else:
        run = run_cut_chain(args.steps, np.random.default_rng(args.seed), q=1.0 - p)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["step", "u_before", "cut"])
    for s, (u, c) in enumerate(zip(run.u_before, run.cuts)):
        w.writerow([s, int(u), int(c)])
    if args.out:
        fh.close()
    return 0


def cmd_wild(args) -> int:
    oracle = EdgeOracle(_prob(args), args.seed)
    if args.variant == "Sharp":
        res = wild.build_wild_sharp(args.steps, oracle, args.scan_cap)
    else:
        cfg = wild.WildConfig(args.variant, args.a_seq, args.steps, args.scan_cap)
        res = wild.build_wild(cfg, oracle)
    d = res.to_dict()
    d["audit_problems"] = wild.audit(res, oracle)
    if res.h_trace:
        d["slope"] = wild.fitted_slope(res.h_trace[1:])
    _emit(d, args.out)
    return 1 if d["audit_problems"] else 0


def cmd_verify(args) -> int:
    m = WindowMatching.from_json(Path(args.matching).read_text())
    oracle = EdgeOracle(_prob(args), args.seed)
    blocking = analysis.verify_stable(m, oracle, args.window)
    for i, j in blocking:
        print(f"{i},{j}")
    print(f"{len(blocking)} blocking pair(s)", file=sys.stderr)
    return 1 if blocking else 0


def cmd_qseries(args) -> int:
    w = csv.writer(sys.stdout)
    w.writerow(["q", "q_pochhammer_inf", "truncation_k", "tail_bound",
                "coupling_constant", "cut_rate", "hardy_ramanujan", "ratio",
                "hardy_ramanujan_standard", "ratio_standard"])
    for q in args.q:
        v = q_pochhammer_inf(q, args.tol)
        nan = float("nan")
        hr = hardy_ramanujan(q) if q > 0 else nan
        hs = hardy_ramanujan_standard(q) if q > 0 else nan
        w.writerow([q, repr(v.value), v.truncation_k, v.tail_bound, repr(coupling_constant(q)),
                    repr(bernoulli_cut_rate(q)), repr(hr), repr(v.value / hr) if q > 0 else "nan",
                    repr(hs), repr(v.value / hs) if q > 0 else "nan"])
    return 0


def cmd_run_all(args) -> int:
    config = args.config or harness.battery_path(args.battery)
    t0 = time.perf_counter()
    try:
        summary = harness.run_all(config, args.seed, args.out, log=print if args.verbose else None)
    except harness.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    print(summary.table())
    print(f"total wall time {time.perf_counter() - t0:.1f}s")
    return 0 if summary.passed else 1


def cmd_experiment(args) -> int:
    params = {}
    for kv in args.set:
        k, _, v = kv.partition("=")
        try:
            params[k] = json.loads(v)
        except json.JSONDecodeError:
            params[k] = v
    try:
        rep = harness.run_experiment(args.name, params, args.seed, args.out)
    except (harness.UnknownExperiment, harness.ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(rep.to_json())
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mallows-match", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="sample a stable matching, print WindowMatching JSON")
    sp.add_argument("kind", choices=["finite", "semiinf", "tame"])
    _add_pq(sp)
    sp.add_argument("--window", type=_pair, default=(-10, 0), help="lo,hi")
    sp.add_argument("--m", type=int, default=None, help="top of (-inf, m] for semiinf")
    sp.add_argument("--flow", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--scan-cap", type=int, default=10**6)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("chain", help="cut-flag time series of the alpha-male chain, as CSV")
    _add_pq(sp)
    sp.add_argument("--steps", type=int, default=1000)
    sp.add_argument("--backend", choices=["graph", "dist"], default="graph")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_chain)

    sp = sub.add_parser("wild", help="build a wild matching and its audit trail")
    sp.add_argument("--variant", default="LocallyFiniteWild",
                    choices=[v.value for v in wild.Variant] + ["Sharp"])
    _add_pq(sp, p_default=0.3)
    sp.add_argument("--steps", type=int, default=12)
    sp.add_argument("--a-seq", type=_ints, default=())
    sp.add_argument("--scan-cap", type=int, default=wild.WILD_SCAN_CAP)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_wild)

    sp = sub.add_parser("verify", help="list blocking pairs of a WindowMatching JSON")
    sp.add_argument("matching")
    _add_pq(sp)
    sp.add_argument("--window", type=_pair, default=None)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("qseries", help="(q)_inf and related constants as CSV")
    sp.add_argument("--q", type=_floats, default=[0.1, 0.3, 0.5, 0.7, 0.9, 0.99])
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.set_defaults(func=cmd_qseries)

    sp = sub.add_parser("run-all", help="run a battery of experiments")
    sp.add_argument("--config", default=None, help="battery TOML (default: the shipped battery)")
    sp.add_argument("--battery", choices=["default", "smoke"], default="default")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--out", default="reports")
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_run_all)

    sp = sub.add_parser("experiment", help="run one named experiment")
    sp.add_argument("name", choices=sorted(harness.EXPERIMENTS))
    sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
