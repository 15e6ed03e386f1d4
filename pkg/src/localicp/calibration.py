"""Self-checks of the test's statistical guarantees.

Two empirical properties are exercised on simulated null data:

* the scaled squared residual norm at the true parent set follows a
  chi-squared law with ``n - |parents| - 1`` degrees of freedom (intercept
  included), checked by a Kolmogorov-Smirnov test;
* the rejection frequency of the subset test at the true parent set stays
  within three binomial standard errors of the nominal level.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from .datagen import IndependentGenConfig, gen_independent
from .invariance import TestConfig, _fit_environments, phi_S

__all__ = [
    "null_test_pvalues",
    "rejection_rate",
    "residual_chi2_sample",
    "residual_ks_pvalue",
    "run_calibration",
]


def null_test_pvalues(
    replications: int,
    seed: int,
    n: int = 30,
    num_envs: int = 30,
    mc_samples: int = 100,
    family: str = "normal",
) -> np.ndarray:
    """p-values of the subset test at the true parents on fresh null datasets."""
    gen_cfg = IndependentGenConfig(
        num_envs=num_envs, samples_per_env=n, covariate_family=family
    )
    out = np.empty(replications)
    for r in range(replications):
        ss = np.random.SeedSequence([int(seed), r]).generate_state(2)
        rep_seed = (int(ss[0]) << 32) | int(ss[1])
        dataset, truth = gen_independent(gen_cfg, rep_seed)
        config = TestConfig(alpha=0.5, mc_samples=mc_samples, seed=rep_seed)
        report = phi_S(dataset.with_intercept(), truth.parent_set, config)
        out[r] = report.p_value
    return out


def rejection_rate(pvalues: np.ndarray, alpha: float) -> float:
    return float(np.mean(pvalues <= alpha))


def residual_chi2_sample(
    replications: int,
    seed: int,
    n: int = 30,
    num_parents: int = 2,
    sigma_y: float = 2.0,
) -> tuple[np.ndarray, int]:
    """Scaled squared residual norms at the true parents, one per environment.

    Returns the sample and the theoretical degrees of freedom
    ``n - num_parents - 1`` (intercept included).
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
    beta = rng.uniform(1.0, 5.0, num_parents)
    x = rng.normal(0.5, 2.0, size=(replications, n, num_parents))
    noise = sigma_y * rng.standard_normal((replications, n))
    y = np.einsum("rnk,k->rn", x, beta) + noise
    from .dataset import EnvironmentData, MultiEnvDataset

    envs = tuple(
        EnvironmentData(np.hstack([x[r], np.ones((n, 1))]), y[r])
        for r in range(replications)
    )
    dataset = MultiEnvDataset(environments=envs, num_covariates=num_parents, intercept_added=True)
    norms, _ = _fit_environments(dataset, list(range(num_parents + 1)), None)
    return norms / sigma_y**2, n - num_parents - 1


def residual_ks_pvalue(values: np.ndarray, dof: int) -> float:
    return float(stats.kstest(values, stats.chi2(dof).cdf).pvalue)


def run_calibration(
    alpha: float,
    mc_samples: int,
    replications: int,
    seed: int,
) -> dict:
    """Run both suites; each entry reports the measured quantity and pass/fail."""
    pvalues = null_test_pvalues(replications, seed, mc_samples=mc_samples)
    rate = rejection_rate(pvalues, alpha)
    se = math.sqrt(alpha * (1.0 - alpha) / replications)
    rate_ok = abs(rate - alpha) <= 3.0 * se

    values, dof = residual_chi2_sample(max(2000, replications), seed + 1)
    ks_p = residual_ks_pvalue(values, dof)
    ks_ok = ks_p > 0.01

    return {
        "checks": [
            {
                "name": "null_rejection_rate",
                "alpha": alpha,
                "measured": rate,
                "tolerance": 3.0 * se,
                "replications": replications,
                "passed": rate_ok,
            },
            {
                "name": "residual_chi2_law",
                "dof": dof,
                "ks_pvalue": ks_p,
                "passed": ks_ok,
            },
        ],
        "passed": rate_ok and ks_ok,
    }
