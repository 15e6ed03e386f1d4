"""Trial runner and summary statistics for simulation studies.

A scenario sweeps one generator parameter over a grid, runs repeated
independent discoveries at each grid point and reports false-negative /
false-positive rates with exact Clopper-Pearson intervals.  The network
study iterates the Lorenz trajectory, treats each coordinate in turn as the
target and counts how often each covariate is reported as a parent; edges
are declared by an exact one-sided binomial test against a 10% null rate.

Per-run seeds are derived from (scenario seed, grid index, run index), and
aggregation folds runs in index order, so results are byte-identical for any
worker count.
"""

from __future__ import annotations

import csv
import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .datagen import (
    IndependentGenConfig,
    LorenzGenConfig,
    SemGenConfig,
    gen_independent,
    gen_lorenz,
    gen_sem,
    split_environments,
)
from .discovery import DEFAULT_MAX_DIM, discover
from .errors import InvalidInputError
from .invariance import TestConfig

__all__ = [
    "RESULTS_SCHEMA_VERSION",
    "Scenario",
    "TrialMetrics",
    "NetworkResult",
    "run_trials",
    "network_detect",
    "clopper_pearson",
    "binomial_test_greater",
    "metrics_to_csv",
    "trials_to_dict",
]

RESULTS_SCHEMA_VERSION = 1

MAX_ATTEMPTS = 3


def _derived_seed(*parts: int) -> int:
    """Deterministic 64-bit seed from integer components."""
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(2)
    return (int(state[0]) << 32) | int(state[1])


def clopper_pearson(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval via Beta quantiles."""
    if not (0 <= successes <= trials) or trials < 1:
        raise InvalidInputError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    if not (0.0 < level < 1.0):
        raise InvalidInputError("level must lie in (0, 1)")
    tail = (1.0 - level) / 2.0
    lower = 0.0 if successes == 0 else float(stats.beta.ppf(tail, successes, trials - successes + 1))
    upper = 1.0 if successes == trials else float(stats.beta.ppf(1.0 - tail, successes + 1, trials - successes))
    return lower, upper


def binomial_test_greater(successes: int, trials: int, p0: float) -> float:
    """Exact one-sided tail P(Bin(trials, p0) >= successes)."""
    if not (0 <= successes <= trials) or trials < 1:
        raise InvalidInputError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    if not (0.0 < p0 < 1.0):
        raise InvalidInputError("p0 must lie in (0, 1)")
    if successes == 0:
        return 1.0
    return float(stats.binom.sf(successes - 1, trials, p0))


# ---------------------------------------------------------------------------
# Scenario sweeps


GENERATORS: dict[str, tuple[type, Callable]] = {
    "independent": (IndependentGenConfig, gen_independent),
    "sem": (SemGenConfig, gen_sem),
}


@dataclass(frozen=True)
class Scenario:
    """One experiment: a generator, a sweep grid and a test configuration."""

    generator_kind: str
    generator_config: IndependentGenConfig | SemGenConfig
    test_config: TestConfig
    sweep_parameter: str
    grid: tuple
    runs: int
    intercept: bool = True
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        if self.generator_kind not in GENERATORS:
            raise InvalidInputError(
                f"generator must be one of {sorted(GENERATORS)}, got {self.generator_kind!r}"
            )
        if self.runs < 1:
            raise InvalidInputError("runs must be at least 1")
        if len(self.grid) == 0:
            raise InvalidInputError("sweep grid must be non-empty")
        if not hasattr(self.generator_config, self.sweep_parameter):
            raise InvalidInputError(
                f"generator config has no parameter {self.sweep_parameter!r}"
            )

    @staticmethod
    def from_dict(doc: dict) -> "Scenario":
        try:
            gen = dict(doc["generator"])
            kind = gen.pop("kind")
            sweep = doc["sweep"]
            runs = int(doc["runs"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed scenario: {exc}") from None
        if kind not in GENERATORS:
            raise InvalidInputError(f"unknown generator kind {kind!r}")
        cfg_cls = GENERATORS[kind][0]
        try:
            gen_cfg = cfg_cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in gen.items()})
        except TypeError as exc:
            raise InvalidInputError(f"invalid generator config: {exc}") from None
        test_cfg = TestConfig(**doc.get("test", {}))
        return Scenario(
            generator_kind=kind,
            generator_config=gen_cfg,
            test_config=test_cfg,
            sweep_parameter=str(sweep["parameter"]),
            grid=tuple(sweep["grid"]),
            runs=runs,
            intercept=bool(doc.get("intercept", True)),
            max_dim=int(doc.get("max_dim", DEFAULT_MAX_DIM)),
        )


@dataclass(frozen=True)
class RunRecord:
    run: int
    estimated_parents: tuple[int, ...]
    status: str
    false_negative: bool
    false_positive: bool

    def to_dict(self) -> dict:
        return {
            "run": self.run,
            "estimated_parents": list(self.estimated_parents),
            "status": self.status,
            "false_negative": self.false_negative,
            "false_positive": self.false_positive,
        }


@dataclass(frozen=True)
class TrialMetrics:
    """Rates at one grid point, with exact 95% intervals and per-run detail."""

    grid_value: object
    fnr: float
    fpr: float
    fnr_ci: tuple[float, float]
    fpr_ci: tuple[float, float]
    runs: int
    failures: int
    records: tuple[RunRecord, ...] = field(default_factory=tuple)


def _single_trial(scenario: Scenario, gen_cfg, seed: int, grid_index: int, run: int):
    """One dataset + discovery; retries with fresh derived seeds on failure."""
    generate = GENERATORS[scenario.generator_kind][1]
    last_error = None
    for attempt in range(MAX_ATTEMPTS):
        try:
            data_seed = _derived_seed(seed, grid_index, run, attempt, 0)
            test_seed = _derived_seed(seed, grid_index, run, attempt, 1)
            dataset, truth = generate(gen_cfg, data_seed)
            if scenario.intercept:
                dataset = dataset.with_intercept()
            config = dataclasses.replace(scenario.test_config, seed=test_seed)
            result = discover(
                dataset, config, max_dim=scenario.max_dim, early_stop=True
            )
            estimated = set(result.estimated_parents)
            true_parents = set(truth.parent_set)
            return RunRecord(
                run=run,
                estimated_parents=result.estimated_parents,
                status=result.status,
                false_negative=bool(true_parents - estimated),
                false_positive=bool(estimated - true_parents),
            )
        except Exception as exc:  # noqa: BLE001 - recorded, never silently counted
            last_error = exc
    return last_error


def run_trials(scenario: Scenario, seed: int, workers: int = 1) -> list[TrialMetrics]:
    """Execute the sweep and aggregate FNR/FPR with Clopper-Pearson intervals.

    Failed runs (after retries) are counted separately and never contribute
    to a rate.
    """
    out = []
    for gi, value in enumerate(scenario.grid):
        gen_cfg = dataclasses.replace(
            scenario.generator_config, **{scenario.sweep_parameter: value}
        )
        task = lambda r: _single_trial(scenario, gen_cfg, seed, gi, r)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(task, range(scenario.runs)))
        else:
            results = [task(r) for r in range(scenario.runs)]
        records = tuple(r for r in results if isinstance(r, RunRecord))
        failures = scenario.runs - len(records)
        good = len(records)
        fn = sum(r.false_negative for r in records)
        fp = sum(r.false_positive for r in records)
        if good == 0:
            raise InvalidInputError(
                f"all {scenario.runs} runs failed at grid point {value!r}"
            )
        out.append(
            TrialMetrics(
                grid_value=value,
                fnr=fn / good,
                fpr=fp / good,
                fnr_ci=clopper_pearson(fn, good),
                fpr_ci=clopper_pearson(fp, good),
                runs=good,
                failures=failures,
                records=records,
            )
        )
    return out


def metrics_to_csv(metrics: Sequence[TrialMetrics], fh) -> None:
    """One row per grid point: sweep value, rates, interval endpoints, counts."""
    writer = csv.writer(fh)
    writer.writerow(
        ["sweep", "fnr", "fnr_lo", "fnr_hi", "fpr", "fpr_lo", "fpr_hi", "runs", "failures"]
    )
    for m in metrics:
        writer.writerow(
            [
                m.grid_value,
                repr(m.fnr),
                repr(m.fnr_ci[0]),
                repr(m.fnr_ci[1]),
                repr(m.fpr),
                repr(m.fpr_ci[0]),
                repr(m.fpr_ci[1]),
                m.runs,
                m.failures,
            ]
        )


def trials_to_dict(scenario: Scenario, metrics: Sequence[TrialMetrics], seed: int) -> dict:
    return {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "sweep_parameter": scenario.sweep_parameter,
        "seed": int(seed),
        "points": [
            {
                "sweep": m.grid_value,
                "fnr": m.fnr,
                "fnr_ci": list(m.fnr_ci),
                "fpr": m.fpr,
                "fpr_ci": list(m.fpr_ci),
                "runs": m.runs,
                "failures": m.failures,
                "run_detail": [r.to_dict() for r in m.records],
            }
            for m in metrics
        ],
    }


# ---------------------------------------------------------------------------
# Lorenz network detection


@dataclass(frozen=True)
class NetworkResult:
    """Parent counts per target over repeated runs plus declared edges."""

    counts: tuple[tuple[int, ...], ...]  # counts[i][j]: i reported as parent of target j+1
    edges: tuple[dict, ...]
    runs: int
    window: int
    failures: int
    per_run: tuple[tuple[tuple[int, ...], ...], ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "schema_version": RESULTS_SCHEMA_VERSION,
            "window": self.window,
            "runs": self.runs,
            "failures": self.failures,
            "counts": [list(row) for row in self.counts],
            "edges": list(self.edges),
            "per_run": [[list(s) for s in run] for run in self.per_run],
        }


def network_detect(
    lorenz_config: LorenzGenConfig,
    window: int,
    num_envs: int,
    runs: int,
    test_config: TestConfig,
    seed: int,
    warmup: int = 500,
    edge_alpha: float = 0.05,
    null_rate: float = 0.10,
    workers: int = 1,
) -> NetworkResult:
    """Repeatedly simulate the dynamical system and count reported parents.

    Each run regenerates an independent trajectory, splits it into
    ``num_envs`` time windows and discovers parents for all six next-step
    targets.  An edge i -> j is declared when covariate i was reported for
    target j more often than ``null_rate`` and the exact one-sided binomial
    p-value is at most ``edge_alpha``.
    """
    if runs < 1:
        raise InvalidInputError("runs must be at least 1")
    d = 6

    def one_run(run: int):
        last_error = None
        for attempt in range(MAX_ATTEMPTS):
            try:
                series = gen_lorenz(lorenz_config, _derived_seed(seed, run, attempt, 0))
                found = []
                for target in range(1, d + 1):
                    dataset = split_environments(
                        series, target, window, warmup, num_envs
                    ).with_intercept()
                    config = dataclasses.replace(
                        test_config, seed=_derived_seed(seed, run, attempt, target)
                    )
                    result = discover(dataset, config, early_stop=True)
                    found.append(result.estimated_parents)
                return tuple(found)
            except Exception as exc:  # noqa: BLE001
                last_error = exc
        return last_error

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_run, range(runs)))
    else:
        results = [one_run(r) for r in range(runs)]

    per_run = tuple(r for r in results if isinstance(r, tuple))
    failures = runs - len(per_run)
    good = len(per_run)
    if good == 0:
        raise InvalidInputError(f"all {runs} network runs failed")
    counts = np.zeros((d, d), dtype=int)
    for found in per_run:
        for j, parents in enumerate(found):
            for i in parents:
                counts[i - 1, j] += 1
    edges = []
    for j in range(d):
        for i in range(d):
            c = int(counts[i, j])
            p = binomial_test_greater(c, good, null_rate) if c > 0 else 1.0
            if c > null_rate * good and p <= edge_alpha:
                edges.append(
                    {"parent": i + 1, "target": j + 1, "count": c, "p_value": p}
                )
    return NetworkResult(
        counts=tuple(tuple(int(v) for v in row) for row in counts),
        edges=tuple(edges),
        runs=good,
        window=window,
        failures=failures,
        per_run=per_run,
    )
