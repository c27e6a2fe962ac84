"""Experiment reports: estimates, targets, 4-sigma bands and pass/fail."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

SIGMAS = 4.0
RELATIONS = ("equals", "at-least", "at-most")


@dataclass(frozen=True)
class Check:
    """One comparison of an estimate against a target.

    ``tol`` is an extra absolute slack, used for exact (non-random) checks
    where ``stderr`` is 0.
    """

    name: str
    estimate: float
    stderr: float
    target: float
    relation: str = "equals"
    tol: float = 0.0

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}")

    @property
    def band(self) -> float:
        return SIGMAS * self.stderr + self.tol

    @property
    def passed(self) -> bool:
        e, t, b = self.estimate, self.target, self.band
        if any(isinstance(x, float) and math.isnan(x) for x in (e, t)):
            return False
        if self.relation == "equals":
            return abs(e - t) <= b
        if self.relation == "at-least":
            return e >= t - b
        return e <= t + b

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


def proportion_stderr(k: int, n: int) -> float:
    if n <= 0:
        return math.nan
    f = k / n
    return math.sqrt(f * (1 - f) / n)


@dataclass
class ExperimentReport:
    name: str
    params: dict
    checks: list[Check]
    trials: int
    errored: int = 0
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_checks(cls, name, params, checks, trials, errored=0, extra=None):
        return cls(name, dict(params), list(checks), int(trials), int(errored), 0.0, dict(extra or {}))

    # headline numbers come from the first check
    @property
    def estimate(self) -> float:
        return self.checks[0].estimate

    @property
    def stderr(self) -> float:
        return self.checks[0].stderr

    @property
    def target(self) -> float:
        return self.checks[0].target

    @property
    def relation(self) -> str:
        return self.checks[0].relation

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def errored_fraction(self) -> float:
        attempted = self.trials + self.errored
        return self.errored / attempted if attempted else 0.0

    def to_dict(self) -> dict:
        # wall time is left out so reports are a pure function of (config, seed)
        return {
            "name": self.name,
            "params": self.params,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "target": self.target,
            "relation": self.relation,
            "pass": self.passed,
            "trials": self.trials,
            "errored": self.errored,
            "errored_fraction": self.errored_fraction,
            "checks": [c.to_dict() for c in self.checks],
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)

    def summary_line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"{tag} {self.name}: estimate={self.estimate:.6g} target={self.target:.6g} "
                f"({self.relation}, stderr={self.stderr:.3g}, trials={self.trials})")


def _jsonable(x):
    try:
        import numpy as np

        if isinstance(x, np.generic):
            return x.item()
        if isinstance(x, np.ndarray):
            return x.tolist()
    except ImportError:  # pragma: no cover
        pass
    if isinstance(x, (set, frozenset, tuple)):
        return sorted(x) if isinstance(x, (set, frozenset)) else list(x)
    return str(x)
