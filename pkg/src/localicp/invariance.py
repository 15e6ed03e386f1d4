"""Invariance test for a candidate parent subset.

For a subset S the statistic is the min/max ratio of per-environment sums of
squared regression residuals (``+inf`` when every residual vanishes, i.e. the
data is interpolated).  Under the null the ratio is distributed like the
min/max ratio of independent chi-squared variables whose degrees of freedom
are ``n_e - rank(Gram)``, so the p-value is obtained by Monte-Carlo sampling
of that reference ratio.  The conservative ``(1 + count) / (B + 1)`` estimator
with strict inequality is exactly valid under exchangeability.

Reproducibility contract: the random stream used for subset S is derived
deterministically from ``(config.seed, bitmask(S))``, so results do not depend
on the order or parallelism in which subsets are tested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .dataset import MultiEnvDataset
from .errors import InvalidInputError

__all__ = [
    "TestConfig",
    "SubsetTestReport",
    "test_statistic",
    "sample_null_ratio",
    "mc_pvalue",
    "phi_S",
    "subset_rng",
]


@dataclass(frozen=True)
class TestConfig:
    """Parameters of the subset test.

    ``alpha = 0`` is admitted as the degenerate never-reject configuration
    (the Monte-Carlo p-value is always at least ``1 / (mc_samples + 1)``).
    """

    alpha: float = 0.1
    mc_samples: int = 100
    seed: int = 0
    rank_tol: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise InvalidInputError("alpha must lie in [0, 1)")
        if self.mc_samples < 1:
            raise InvalidInputError("mc_samples must be at least 1")
        if self.rank_tol is not None and self.rank_tol <= 0:
            raise InvalidInputError("rank_tol must be positive")


@dataclass(frozen=True)
class SubsetTestReport:
    """Outcome of testing one subset, self-describing for serialization."""

    subset: tuple[int, ...]
    residual_norms_sq: tuple[float, ...]
    dofs: tuple[int, ...]
    statistic: float
    p_value: float
    rejected: bool

    def to_dict(self) -> dict:
        return {
            "subset": list(self.subset),
            "residual_norms_sq": list(self.residual_norms_sq),
            "dofs": list(self.dofs),
            "statistic": "inf" if math.isinf(self.statistic) else self.statistic,
            "p_value": self.p_value,
            "rejected": self.rejected,
        }


def subset_rng(seed: int, subset: Sequence[int]) -> np.random.Generator:
    """Random stream for a subset, a pure function of (seed, subset)."""
    bitmask = sum(1 << (d - 1) for d in subset)
    return np.random.default_rng(np.random.SeedSequence([int(seed), bitmask]))


def test_statistic(residual_norms_sq: Sequence[float]) -> float:
    """Min/max ratio of squared residual norms; ``+inf`` when all are zero."""
    norms = np.asarray(residual_norms_sq, dtype=np.float64)
    if norms.size == 0:
        raise InvalidInputError("residual norms must be non-empty")
    if not np.all(np.isfinite(norms)) or np.any(norms < 0):
        raise InvalidInputError("residual norms must be finite and non-negative")
    top = norms.max()
    if top == 0.0:
        return math.inf
    return float(norms.min() / top)


def sample_null_ratio(
    dofs: Sequence[int],
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw min/max ratios of independent chi-squared variables.

    An entry with zero degrees of freedom contributes an exact 0; if every
    entry is 0 the ratio is ``+inf`` (same convention as the statistic).
    Returns a scalar when ``size`` is None, else an array of ``size`` draws.
    """
    df = np.asarray(dofs, dtype=np.int64)
    if df.size == 0:
        raise InvalidInputError("dofs must be non-empty")
    if np.any(df < 0):
        raise InvalidInputError("dofs must be non-negative")
    b = 1 if size is None else int(size)
    z = np.zeros((b, df.size))
    positive = df > 0
    if positive.any():
        z[:, positive] = rng.chisquare(df[positive], size=(b, int(positive.sum())))
    top = z.max(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(top > 0.0, z.min(axis=1) / top, math.inf)
    return float(ratio[0]) if size is None else ratio


def mc_pvalue(
    statistic: float,
    dofs: Sequence[int],
    b: int,
    rng: np.random.Generator,
) -> float:
    """Conservative Monte-Carlo p-value ``(1 + #{R < T}) / (B + 1)``.

    An infinite statistic signals interpolated data, which carries no
    evidence against invariance; the p-value is then 1.
    """
    if b < 1:
        raise InvalidInputError("the number of Monte-Carlo samples must be at least 1")
    if math.isinf(statistic):
        return 1.0
    draws = sample_null_ratio(dofs, rng, size=b)
    count = int(np.count_nonzero(draws < statistic))
    return (1 + count) / (b + 1)


def _fit_environments(dataset: MultiEnvDataset, cols: list[int], rank_tol):
    """Per-environment squared residual norms and Gram ranks for the columns."""
    sizes = dataset.sample_sizes
    if len(set(sizes)) == 1 and len(cols) > 0:
        # Shared sample size: one batched SVD over the stacked Gram matrices.
        x = np.stack([env.covariates[:, cols] for env in dataset.environments])
        y = np.stack([env.target for env in dataset.environments])
        gram = np.einsum("eni,enj->eij", x, x)
        u, s, vt = np.linalg.svd(gram)
        tol = rank_tol if rank_tol is not None else linalg.default_rel_tol(gram.shape[1:])
        smax = s[:, :1]
        keep = s > tol * np.where(smax > 0, smax, 1.0)
        ranks = keep.sum(axis=1)
        s_inv = np.where(keep, 1.0, 0.0)
        np.divide(s_inv, s, out=s_inv, where=keep)
        xty = np.einsum("eni,en->ei", x, y)
        beta = np.einsum("eji,ej->ei", vt * s_inv[:, :, None], np.einsum("enj,en->ej", u, xty))
        resid = y - np.einsum("eni,ei->en", x, beta)
        norms = np.einsum("en,en->e", resid, resid)
        return norms, ranks.astype(int)
    norms = np.zeros(len(sizes))
    ranks = np.zeros(len(sizes), dtype=int)
    for i, env in enumerate(dataset.environments):
        x = env.covariates[:, cols]
        beta = linalg.least_squares(x, env.target, rank_tol)
        r = linalg.residuals(x, env.target, beta)
        norms[i] = float(r @ r)
        if len(cols) > 0:
            ranks[i] = linalg.numerical_rank(x.T @ x, rank_tol)
    return norms, ranks


def phi_S(
    dataset: MultiEnvDataset,
    subset: Sequence[int],
    config: TestConfig,
) -> SubsetTestReport:
    """Test whether ``subset`` yields environment-invariant residuals.

    Per environment this regresses the target on the subset columns (plus the
    intercept column when the dataset carries one), forms the min/max residual
    statistic, samples the chi-squared reference ratio and decides at level
    ``config.alpha``.
    """
    d = dataset.num_covariates
    subset = tuple(sorted(int(s) for s in subset))
    if len(set(subset)) != len(subset):
        raise InvalidInputError(f"subset contains repeated indices: {subset}")
    if any(s < 1 or s > d for s in subset):
        raise InvalidInputError(f"subset {subset} is not contained in 1..{d}")
    if dataset.num_envs < 2:
        raise InvalidInputError(
            "testing invariance requires at least 2 environments; a single "
            "environment permits no causal conclusion"
        )
    cols = [s - 1 for s in subset]
    if dataset.intercept_added:
        cols = cols + [d]

    norms, ranks = _fit_environments(dataset, cols, config.rank_tol)
    dofs = tuple(max(0, n - int(r)) for n, r in zip(dataset.sample_sizes, ranks))
    # Zero degrees of freedom means the regression interpolates; the residual
    # is exactly zero in exact arithmetic, so discard rounding noise.
    norms = np.where(np.asarray(dofs) == 0, 0.0, norms)
    statistic = test_statistic(norms)
    rng = subset_rng(config.seed, subset)
    p = mc_pvalue(statistic, dofs, config.mc_samples, rng)
    rejected = bool(p <= config.alpha and math.isfinite(statistic))
    return SubsetTestReport(
        subset=subset,
        residual_norms_sq=tuple(float(v) for v in norms),
        dofs=dofs,
        statistic=statistic,
        p_value=p,
        rejected=rejected,
    )
