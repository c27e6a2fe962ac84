"""Named experiments, battery configs and report output.

A battery is a TOML file with one ``[[experiment]]`` table per run::

    [[experiment]]
    name = "perfect-prob"
    n = 10
    p = 0.6
    trials = 100000

Keys other than ``name`` override the experiment's defaults (listed in
``EXPERIMENTS``).  Probabilities may be given as ``p`` or ``q``.  Each run
gets its own seed derived from the battery seed, the name and the params,
so every report is a pure function of (config, seed).
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import analysis, wild
from .core import LowSet, crossing_arrays, flow_of
from .oracle import EdgeOracle, ScanCapExceeded, derive_seed, trial_seed, trial_seeds
from .qseries import bernoulli_cut_rate, coupling_tail_bound, euler_phi
from .report import Check, ExperimentReport, proportion_stderr
from .samplers import (
    MaxMExceeded,
    StepBudgetExceeded,
    TameSampleConfig,
    both_perfect_correlation,
    finite_perfect_batch,
    last_disagreement,
    perfect_match_probability,
    run_cut_chain,
    sample_semiinfinite,
    tame_limit,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SAMPLER_ERRORS = (ScanCapExceeded, StepBudgetExceeded, MaxMExceeded)


class UnknownExperiment(KeyError):
    pass


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


Rows = list[dict]


@dataclass(frozen=True)
class Experiment:
    name: str
    func: Callable[[dict, int], tuple[ExperimentReport, Rows]]
    defaults: dict
    positive: tuple[str, ...] = ()  # integer params that must be >= 1


EXPERIMENTS: dict[str, Experiment] = {}


def experiment(name: str, positive=(), **defaults):
    def deco(func):
        EXPERIMENTS[name] = Experiment(name, func, defaults, tuple(positive))
        return func

    return deco


def _p(params) -> float:
    return float(params["p"]) if "p" in params else 1.0 - float(params["q"])


def batch_means_stderr(x: np.ndarray, batches: int = 100) -> float:
    """Standard error of the mean of a correlated series, from batch means."""
    x = np.asarray(x, dtype=float)
    b = min(batches, x.size)
    if b < 2:
        return math.nan
    size = x.size // b
    means = x[: b * size].reshape(b, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(b))


# ---------------------------------------------------------------------------
# finite matchings
# ---------------------------------------------------------------------------


@experiment("exact-mallows", n=3, q="1/2")
def _exact_mallows(params, seed):
    n = int(params["n"])
    exact = n <= 3
    q = Fraction(str(params["q"])) if exact else float(Fraction(str(params["q"])))
    law = analysis.exact_conditional_law(n, q)
    rows, worst = [], 0
    for perm in analysis.all_permutations(n):
        got = law.conditional.get(perm, 0 * q)
        want = analysis.mallows_pmf(perm, q)
        worst = max(worst, abs(got - want))
        rows.append({"perm": " ".join(map(str, perm)), "law": float(got), "mallows": float(want)})
    tol = 0.0 if exact else 1e-12
    want_perfect = perfect_match_probability(n, float(q))
    checks = [
        Check("max |law - mallows|", float(worst), 0.0, 0.0, "equals", tol),
        Check("P(perfect)", float(law.perfect_prob), 0.0, want_perfect, "equals", 1e-12),
    ]
    extra = {"exact": exact, "max_abs_diff": str(worst) if exact else float(worst)}
    return ExperimentReport.from_checks("exact-mallows", params, checks, 2 ** (n * n), extra=extra), rows


@experiment("perfect-prob", positive=("n", "trials"), n=10, p=0.6, trials=100_000, chunk=20_000)
def _perfect_prob(params, seed):
    n, p, trials = int(params["n"]), _p(params), int(params["trials"])
    nodes = list(range(n))
    seeds = trial_seeds(seed, trials)
    hits = np.concatenate([
        finite_perfect_batch(nodes, nodes, p, seeds[s:s + int(params["chunk"])])
        for s in range(0, trials, int(params["chunk"]))
    ])
    k = int(hits.sum())
    target = perfect_match_probability(n, 1.0 - p)
    check = Check("P(perfect)", k / trials, proportion_stderr(k, trials), target)
    rows = [{"trial": t, "perfect": int(h)} for t, h in enumerate(hits)]
    return ExperimentReport.from_checks("perfect-prob", params, [check], trials), rows


@experiment("correlation", positive=("trials",), q=0.5, trials=100_000,
            pairs=[[[0, 1, 2], [0, 1, 2], [1, 2, 3], [1, 2, 3]],
                   [[0, 1, 2, 3], [0, 1, 2, 3], [2, 3, 4, 5], [1, 2, 3, 4]]])
def _correlation(params, seed):
    p, trials = _p(params), int(params["trials"])
    checks, rows = [], []
    for idx, (a, b, a2, b2) in enumerate(params["pairs"]):
        rep = both_perfect_correlation(a, b, a2, b2, trials, p, derive_seed(seed, [idx]))
        c = rep.checks[0]
        checks.append(Check(f"P(both perfect) pair {idx}", c.estimate, c.stderr, c.target, "at-least"))
        rows.append({"pair": idx, "A": a, "B": b, "A2": a2, "B2": b2,
                     "estimate": c.estimate, "stderr": c.stderr, "bound": c.target})
    return ExperimentReport.from_checks("correlation", params, checks, trials), rows


# ---------------------------------------------------------------------------
# cuts
# ---------------------------------------------------------------------------


def _chain(params, seed):
    p = _p(params)
    steps, burn = int(params["steps"]), int(params["burn_in"])
    run = run_cut_chain(steps + burn, EdgeOracle(p, seed))
    return run.cuts[burn:], run.u_before[burn:], 1.0 - p


@experiment("cut-density", positive=("steps",), q=0.5, steps=100_000, burn_in=1000, batches=100)
def _cut_density(params, seed):
    cuts, u, q = _chain(params, seed)
    est = float(cuts.mean())
    check = Check("cut frequency", est, batch_means_stderr(cuts, int(params["batches"])), euler_phi(q))
    rows = [{"step": s, "u_before": int(a), "cut": int(c)} for s, (a, c) in enumerate(zip(u, cuts))]
    return ExperimentReport.from_checks("cut-density", params, [check], cuts.size), rows


@experiment("cut-jump-law", positive=("steps",), q=0.5, steps=120_000, burn_in=1000,
            u_max=3, min_visits=10_000)
def _cut_jump_law(params, seed):
    cuts, u, q = _chain(params, seed)
    checks, rows = [], []
    for k in range(int(params["u_max"]) + 1):
        sel = cuts[u == k]
        visits, hits = int(sel.size), int(sel.sum())
        target = (1 - q) * perfect_match_probability(k, q)
        est = hits / visits if visits else math.nan
        checks.append(Check(f"P(cut | U={k})", est, proportion_stderr(hits, visits), target))
        checks.append(Check(f"visits U={k}", visits, 0.0, int(params["min_visits"]), "at-least"))
        rows.append({"u": k, "visits": visits, "cuts": hits, "frequency": est, "target": target})
    return ExperimentReport.from_checks("cut-jump-law", params, checks, cuts.size), rows


@experiment("no-cut-runs", positive=("steps", "k_max"), q=0.5, steps=100_000, burn_in=1000,
            k_max=10, batches=100)
def _no_cut_runs(params, seed):
    cuts, _, q = _chain(params, seed)
    rate = bernoulli_cut_rate(q)
    csum = np.concatenate([[0], np.cumsum(cuts)])
    checks, rows = [], []
    for k in range(1, int(params["k_max"]) + 1):
        none = (csum[k:] - csum[:-k]) == 0
        est = float(none.mean())
        se = batch_means_stderr(none, int(params["batches"]))
        bound = (1 - rate) ** k
        checks.append(Check(f"P(no cut in {k})", est, se, bound, "at-most"))
        rows.append({"k": k, "estimate": est, "stderr": se, "bound": bound})
    return ExperimentReport.from_checks("no-cut-runs", params, checks, cuts.size), rows


@experiment("semiinf-cut", positive=("trials", "depth"), q=0.5, trials=10_000, depth=50)
def _semiinf_cut(params, seed):
    p, trials, depth = _p(params), int(params["trials"]), int(params["depth"])
    hits = errored = 0
    rows = []
    for t in range(trials):
        oracle = EdgeOracle(p, trial_seed(seed, t))
        try:
            m = sample_semiinfinite(0, (-depth - 1, 0), oracle)
        except SAMPLER_ERRORS:
            errored += 1
            continue
        # -depth - 1/2 is a cut iff no male at or above -depth went below it
        cut = all(isinstance(m.forward[i], int) and m.forward[i] >= -depth for i in range(-depth, 1))
        hits += cut
        rows.append({"trial": t, "cut": int(cut)})
    done = trials - errored
    check = Check(f"P(-{depth}-1/2 is a cut)", hits / done, proportion_stderr(hits, done), euler_phi(1 - p))
    return ExperimentReport.from_checks("semiinf-cut", params, [check], done, errored), rows


# ---------------------------------------------------------------------------
# coupling
# ---------------------------------------------------------------------------


@experiment("coupling-tail", positive=("trials",), q=0.5, n=[1, 3, 5], trials=10_000,
            pair1=[[0, []], [0, []]], pair2=[[2, [4]], [1, [3, 6]]])
def _coupling_tail(params, seed):
    p, trials = _p(params), int(params["trials"])
    q = 1.0 - p
    pairs = [tuple(LowSet(r, above) for r, above in params[k]) for k in ("pair1", "pair2")]
    r_min = min(min(x.r for x in pr) for pr in pairs)
    if r_min != 0:
        raise ConfigError("coupling-tail needs min r over both pairs equal to 0")
    last = []
    errored = 0
    for t in range(trials):
        try:
            last.append(last_disagreement(pairs[0], pairs[1], EdgeOracle(p, trial_seed(seed, t))))
        except SAMPLER_ERRORS:
            errored += 1
    last = np.asarray(last)
    done = last.size
    checks = []
    for n in params["n"]:
        k = int((last >= n).sum())
        checks.append(Check(f"P(disagree beyond {n})", k / done, proportion_stderr(k, done),
                            coupling_tail_bound(q, int(n)), "at-most"))
    rows = [{"trial": t, "last_disagreement": int(x)} for t, x in enumerate(last)]
    return ExperimentReport.from_checks("coupling-tail", params, checks, done, errored), rows


# ---------------------------------------------------------------------------
# tame matchings
# ---------------------------------------------------------------------------


@experiment("tame-structure", positive=("seeds",), p=0.5, seeds=100, window=[-15, 15], tol=1e-6)
def _tame_structure(params, seed):
    p, seeds = _p(params), int(params["seeds"])
    window = tuple(params["window"])
    ladder_bad = flow_bad = blocking = errored = 0
    rows = []
    for s in range(seeds):
        oracle = EdgeOracle(p, trial_seed(seed, s))
        try:
            s0 = tame_limit(TameSampleConfig(0, window, params["tol"]), oracle).matching
            s1 = tame_limit(TameSampleConfig(1, window, params["tol"]), oracle).matching
        except SAMPLER_ERRORS:
            errored += 1
            continue
        rep = analysis.shift_ladder_check(s0, s1)
        fb = 0
        for n, sig in ((0, s0), (1, s1)):
            fb += sum(flow_of(sig, i + 0.5) != n for i in range(window[0], window[1]))
        bl = len(analysis.verify_stable(s0, oracle)) + len(analysis.verify_stable(s1, oracle))
        ladder_bad += len(rep.violations)
        flow_bad += fb
        blocking += bl
        rows.append({"seed": s, "exceptions": len(rep.exceptions), "ladder_violations": len(rep.violations),
                     "flow_violations": fb, "blocking_pairs": bl})
    done = seeds - errored
    checks = [
        Check("ladder violations", ladder_bad, 0.0, 0),
        Check("flow violations", flow_bad, 0.0, 0),
        Check("blocking pairs", blocking, 0.0, 0),
    ]
    return ExperimentReport.from_checks("tame-structure", params, checks, done, errored), rows


@experiment("tame-sharpness", positive=("seeds",), q=0.5, seeds=10, window=[-2000, 2000], tol=1e-6,
            ladder=[500, 2000, 100], ceiling=20.0, factor=0.5)
def _tame_sharpness(params, seed):
    p, seeds = _p(params), int(params["seeds"])
    q = 1.0 - p
    window = tuple(params["window"])
    a, b, step = params["ladder"]
    ladder = np.arange(a, b + 1, step)
    floor = float(params["factor"]) / math.log(1 / q)
    mins, maxs, rows = [], [], []
    errored = 0
    for s in range(seeds):
        oracle = EdgeOracle(p, trial_seed(seed, s))
        try:
            sig = tame_limit(TameSampleConfig(0, window, params["tol"]), oracle).matching
        except SAMPLER_ERRORS:
            errored += 1
            continue
        pos, _, _, mx = crossing_arrays(sig)
        i = pos - 0.5
        on_ladder = np.isin(i, ladder)
        ratio = mx[on_ladder] / np.log(i[on_ladder])
        rng = (i >= a) & (i <= b)
        full = mx[rng] / np.log(i[rng])
        mins.append(float(ratio.min()))
        maxs.append(float(full.max()))
        for x, r in zip(i[on_ladder], ratio):
            rows.append({"seed": s, "i": int(x), "M_over_log_i": float(r)})
    done = seeds - errored
    checks = [
        Check("min over ladder of M/log i", min(mins, default=math.nan), 0.0, floor, "at-least"),
        Check("max of M/log i", max(maxs, default=math.nan), 0.0, float(params["ceiling"]), "at-most"),
        Check("min over seeds of max M/log i", min(maxs, default=math.nan), 0.0, floor, "at-least"),
    ]
    return ExperimentReport.from_checks("tame-sharpness", params, checks, done, errored), rows


@experiment("min-distance", positive=("trials", "n_max"), q=0.5, trials=100_000, n_max=4)
def _min_distance(params, seed):
    p, trials = _p(params), int(params["trials"])
    q = 1.0 - p
    x = analysis.min_compatible_distance_batch(p, trial_seeds(seed, trials), max_d=64)
    errored = int((x < 0).sum())
    x = x[x >= 0]
    checks, rows = [], []
    for n in range(1, int(params["n_max"]) + 1):
        k = int((x >= n).sum())
        target = q ** (2 * n - 1)
        checks.append(Check(f"P(X >= {n})", k / x.size, proportion_stderr(k, x.size), target))
        rows.append({"n": n, "frequency": k / x.size, "target": target})
    return ExperimentReport.from_checks("min-distance", params, checks, x.size, errored), rows


# ---------------------------------------------------------------------------
# wild matchings
# ---------------------------------------------------------------------------


@experiment("wild-audit", positive=("runs", "steps"), p=0.3, runs=20, steps=10, a_alt=[2])
def _wild_audit(params, seed):
    p, runs, steps = _p(params), int(params["runs"]), int(params["steps"])
    problems = neg_matched = nlf_bad = same = errored = 0
    rows = []
    for v in wild.Variant:
        for r in range(runs):
            oracle = EdgeOracle(p, trial_seed(derive_seed(seed, v.value), r))
            try:
                res = wild.build_wild(wild.WildConfig(v, (), steps), oracle)
                alt = wild.build_wild(wild.WildConfig(v, tuple(params["a_alt"]), steps), oracle)
            except SAMPLER_ERRORS:
                errored += 1
                continue
            pr = len(wild.audit(res, oracle)) + len(wild.audit(alt, oracle))
            problems += pr
            if v is wild.Variant.NOT_PERFECT:
                neg_matched += sum(isinstance(res.matching.backward.get(j), int)
                                   for j in range(res.matching.lo, 0))
            if v is wild.Variant.NOT_LOCALLY_FINITE:
                nlf_bad += sum(1 for s in res.steps
                               if s.gender == wild.FEMALE and s.index < 0
                               and (s.partner is None or s.partner < 0))
            differ = res.matching.pairs() != alt.matching.pairs()
            same += not differ
            rows.append({"variant": v.value, "run": r, "audit_problems": pr,
                         "first_edge": list(res.steps[0].edge), "alt_first_edge": list(alt.steps[0].edge)})
    done = 3 * runs - errored
    checks = [
        Check("audit problems", problems, 0.0, 0),
        Check("negative females matched (NotPerfect)", neg_matched, 0.0, 0),
        Check("negative females with partner < 0 (NotLocallyFinite)", nlf_bad, 0.0, 0),
        Check("runs where distinct a-sequences agree", same, 0.0, 0),
    ]
    return ExperimentReport.from_checks("wild-audit", params, checks, done, errored), rows


@experiment("wild-sharpness", positive=("runs", "steps"), q=0.5, runs=200, steps=16, low=0.3, high=1.5)
def _wild_sharpness(params, seed):
    p, runs, steps = _p(params), int(params["runs"]), int(params["steps"])
    q = 1.0 - p
    slopes, rows = [], []
    nondecreasing = exceed = errored = 0
    for r in range(runs):
        oracle = EdgeOracle(p, trial_seed(seed, r))
        try:
            res = wild.build_wild_sharp(steps, oracle)
        except SAMPLER_ERRORS:
            errored += 1
            continue
        h = np.asarray(res.h_trace)
        slope = wild.fitted_slope(h[1:])
        slopes.append(slope)
        nondecreasing += bool((np.diff(h) >= 0).all())
        inc = np.diff(h)
        ns = np.arange(inc.size)
        exceed += bool((inc >= q ** -(ns // 2) / p).any())
        rows.append({"run": r, "slope": slope, "h_trace": " ".join(map(str, h))})
    done = runs - errored
    ref = 2 * math.log(1 / q)
    med = float(np.median(slopes)) if slopes else math.nan
    checks = [
        Check("median slope (low)", med, 0.0, float(params["low"]) * ref, "at-least"),
        Check("median slope (high)", med, 0.0, float(params["high"]) * ref, "at-most"),
        Check("nondecreasing traces", nondecreasing, 0.0, done),
        Check("fraction of runs with a large jump", exceed / done if done else math.nan, 0.0, 0.5, "at-least"),
    ]
    return ExperimentReport.from_checks("wild-sharpness", params, checks, done, errored), rows


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def _validate(name: str, params: dict) -> dict:
    if name not in EXPERIMENTS:
        raise UnknownExperiment(name)
    exp = EXPERIMENTS[name]
    unknown = set(params) - set(exp.defaults) - {"p", "q"}
    if unknown:
        raise ConfigError(f"{name}: unknown parameter(s) {sorted(unknown)}")
    merged = dict(exp.defaults)
    if "p" in params and "q" in params:
        raise ConfigError(f"{name}: give p or q, not both")
    if "p" in params or "q" in params:
        merged.pop("p", None)
        merged.pop("q", None)
    merged.update(params)
    for key in exp.positive:
        if int(merged[key]) < 1:
            raise ConfigError(f"{name}: {key} must be >= 1, got {merged[key]}")
    if "p" in merged and not 0 < float(merged["p"]) <= 1:
        raise ConfigError(f"{name}: p must lie in (0, 1]")
    if "q" in merged and not 0 <= float(Fraction(str(merged["q"]))) < 1:
        raise ConfigError(f"{name}: q must lie in [0, 1)")
    return merged


def run_experiment(name: str, params: dict | None = None, seed: int = 0, out: str | Path | None = None,
                   tag: str | None = None) -> ExperimentReport:
    """Run one registered experiment; with ``out`` also write its JSON report and CSV rows."""
    params = _validate(name, dict(params or {}))
    key = json.dumps(params, sort_keys=True, default=str)
    t0 = time.perf_counter()
    report, rows = EXPERIMENTS[name].func(params, derive_seed(seed, f"{name}:{key}"))
    report.params = params
    report.extra.setdefault("seed", seed)
    report.wall_time = time.perf_counter() - t0
    if out is not None:
        write_report(report, rows, Path(out), tag or name)
    return report


def write_report(report: ExperimentReport, rows: Rows, out: Path, stem: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(report.to_json() + "\n")
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        if rows:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for r in rows:
                w.writerow({k: (json.dumps(v) if isinstance(v, list) else v) for k, v in r.items()})


def _line_of(text: str, index: int, key: str | None) -> int | None:
    """1-based line of ``key`` inside the index-th [[experiment]] table."""
    lines = text.splitlines()
    seen = -1
    start = None
    for n, line in enumerate(lines):
        if line.strip().startswith("[[experiment]]"):
            seen += 1
            if seen == index:
                start = n
                if key is None:
                    return n + 1
            elif seen > index:
                break
        elif start is not None and key is not None and line.split("=")[0].strip() == key:
            return n + 1
    return start + 1 if start is not None else None


def load_config(path: str | Path) -> list[tuple[str, dict]]:
    """Parse and validate a battery file into [(name, params), ...]."""
    text = Path(path).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        line = getattr(e, "lineno", None)
        raise ConfigError(str(e), line) from None
    exps = data.get("experiment")
    if not isinstance(exps, list) or not exps:
        raise ConfigError("config needs at least one [[experiment]] table", 1)
    out = []
    for k, table in enumerate(exps):
        table = dict(table)
        name = table.pop("name", None)
        if name is None:
            raise ConfigError("experiment without a name", _line_of(text, k, None))
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {name!r}", _line_of(text, k, "name"))
        try:
            _validate(name, table)
        except ConfigError as e:
            bad = next((key for key in table if key in str(e)), None)
            raise ConfigError(str(e), _line_of(text, k, bad)) from None
        out.append((name, table))
    return out


@dataclass
class Summary:
    reports: list[ExperimentReport]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "experiments": [
                {"name": r.name, "pass": r.passed, "estimate": r.estimate, "target": r.target,
                 "relation": r.relation, "trials": r.trials, "errored": r.errored,
                 "failed_checks": [c.name for c in r.checks if not c.passed]}
                for r in self.reports
            ],
        }

    def table(self) -> str:
        lines = [f"{'experiment':<16} {'result':<6} {'time(s)':>8}  failed checks"]
        for r in self.reports:
            bad = ", ".join(c.name for c in r.checks if not c.passed)
            lines.append(f"{r.name:<16} {'PASS' if r.passed else 'FAIL':<6} {r.wall_time:8.2f}  {bad}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def run_all(config: str | Path, seed: int = 0, out: str | Path | None = None, log=None) -> Summary:
    """Run every experiment of a battery; writes one JSON+CSV per run and summary.json."""
    plan = load_config(config)
    reports = []
    for k, (name, params) in enumerate(plan):
        rep = run_experiment(name, params, seed, out, tag=f"{k:02d}-{name}")
        reports.append(rep)
        if log is not None:
            log(rep.summary_line() + f" [{rep.wall_time:.1f}s]")
    summary = Summary(reports)
    if out is not None:
        Path(out, "summary.json").write_text(
            json.dumps(summary.to_dict(), indent=2, sort_keys=True, default=str) + "\n")
    return summary


def battery_path(name: str = "default") -> Path:
    """Path of a battery shipped with the package ("default" or "smoke")."""
    return Path(__file__).with_name("batteries") / f"{name}.toml"
