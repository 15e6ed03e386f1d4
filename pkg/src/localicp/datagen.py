"""Synthetic multi-environment data processes.

Three generator families:

* independent covariates (normal / uniform / student-t), each environment with
  freshly drawn means, scales and coefficients;
* a fixed six-node linear structural equation model whose target has parents
  {2, 3}, optionally driven by a heterogeneity parameter ``h``;
* a noisy discrete-time five-dimensional Lorenz system plus an independent
  random walk, with a splitter that turns the trajectory into consecutive
  time-window environments.

Every generator derives per-environment substreams from ``(seed, env_index)``,
so a fixed seed yields bit-identical data for any worker layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import EnvironmentData, MultiEnvDataset, from_arrays
from .errors import DivergenceError, InvalidInputError, ShapeError

__all__ = [
    "IndependentGenConfig",
    "SemGenConfig",
    "LorenzGenConfig",
    "GroundTruth",
    "gen_independent",
    "gen_sem",
    "gen_lorenz",
    "split_environments",
]

FAMILIES = ("normal", "uniform", "student_t")

# Fixed structural weights of the six-node model: X2 = X1, X3 = 0.3 X1,
# X4 = 0.2 X3, X5 = 0.1 X2 + Y, X6 = Y (each plus noise).
SEM_PARENTS = (2, 3)

LORENZ_DEFAULT_STATE = (2.0, 0.97, 0.99, 1.0, 0.97, 1.0)
LORENZ_OVERFLOW = 1e15


@dataclass(frozen=True)
class GroundTruth:
    """True parent set and per-environment coefficient vectors."""

    parent_set: tuple[int, ...]
    betas: tuple[tuple[float, ...], ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for env_idx, beta in enumerate(self.betas):
            for d, value in enumerate(beta, start=1):
                if d not in self.parent_set and value != 0.0:
                    raise InvalidInputError(
                        f"environment {env_idx}: non-zero coefficient on non-parent {d}"
                    )

    def to_dict(self) -> dict:
        return {
            "parent_set": list(self.parent_set),
            "betas": [list(b) for b in self.betas],
            "metadata": self.metadata,
        }


def _env_rng(seed: int, env_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(env_index)]))


def _standard_draws(rng: np.random.Generator, family: str, size, t_dof: int) -> np.ndarray:
    """Zero-mean unit-variance draws from the requested family."""
    if family == "normal":
        return rng.standard_normal(size)
    if family == "uniform":
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)
    if family == "student_t":
        return rng.standard_t(t_dof, size) / math.sqrt(t_dof / (t_dof - 2.0))
    raise InvalidInputError(f"unknown distribution family {family!r}")


def _check_family(family: str, t_dof: int) -> None:
    if family not in FAMILIES:
        raise InvalidInputError(f"covariate family must be one of {FAMILIES}, got {family!r}")
    if family == "student_t" and t_dof <= 2:
        raise InvalidInputError(
            "student_t_dof must exceed 2 so the variance exists for standardization"
        )


def _check_range(name: str, rng_pair) -> None:
    lo, hi = rng_pair
    if hi < lo:
        raise InvalidInputError(f"{name} must be an ordered pair, got {rng_pair}")


# ---------------------------------------------------------------------------
# Independent covariates


@dataclass(frozen=True)
class IndependentGenConfig:
    num_envs: int = 30
    samples_per_env: int = 50
    dimension: int = 6
    parent_set: tuple[int, ...] = SEM_PARENTS
    covariate_family: str = "normal"
    sigma_range: tuple[float, float] = (1.0, 5.0)
    beta_range: tuple[float, float] = (1.0, 5.0)
    mean_range: tuple[float, float] = (-1.0, 1.0)
    target_noise_std: float = 2.0
    student_t_dof: int = 3

    def __post_init__(self):
        if self.num_envs < 1 or self.samples_per_env < 1 or self.dimension < 1:
            raise InvalidInputError("num_envs, samples_per_env and dimension must be positive")
        if not set(self.parent_set) <= set(range(1, self.dimension + 1)):
            raise InvalidInputError(
                f"parent_set {self.parent_set} not contained in 1..{self.dimension}"
            )
        for name in ("sigma_range", "beta_range", "mean_range"):
            _check_range(name, getattr(self, name))
        if self.sigma_range[0] <= 0:
            raise InvalidInputError("covariate scales must be positive")
        if self.target_noise_std <= 0:
            raise InvalidInputError("target_noise_std must be positive")
        _check_family(self.covariate_family, self.student_t_dof)


def gen_independent(
    config: IndependentGenConfig, seed: int
) -> tuple[MultiEnvDataset, GroundTruth]:
    """Independent covariates with per-environment scales, means and coefficients."""
    d = config.dimension
    n = config.samples_per_env
    parents = tuple(sorted(config.parent_set))
    covs, tgts, betas = [], [], []
    for e in range(config.num_envs):
        rng = _env_rng(seed, e)
        sigma = rng.uniform(*config.sigma_range, d)
        mu = rng.uniform(*config.mean_range, d)
        beta = np.zeros(d)
        beta[[p - 1 for p in parents]] = rng.uniform(*config.beta_range, len(parents))
        x = mu + sigma * _standard_draws(
            rng, config.covariate_family, (n, d), config.student_t_dof
        )
        noise = config.target_noise_std * _standard_draws(
            rng, config.covariate_family, n, config.student_t_dof
        )
        covs.append(x)
        tgts.append(x @ beta + noise)
        betas.append(tuple(beta))
    truth = GroundTruth(
        parent_set=parents,
        betas=tuple(betas),
        metadata={
            "generator": "independent",
            "covariate_family": config.covariate_family,
            "student_t_dof": config.student_t_dof,
            "target_noise_std": config.target_noise_std,
            "seed": int(seed),
        },
    )
    return from_arrays(covs, tgts), truth


# ---------------------------------------------------------------------------
# Structural equation model


@dataclass(frozen=True)
class SemGenConfig:
    num_envs: int = 30
    samples_per_env: int = 50
    noise_family: str = "normal"
    sigma_range: tuple[float, float] = (1.0, 5.0)
    beta_range: tuple[float, float] = (1.0, 5.0)
    sigma_y: float = 2.0
    heterogeneity: float | None = None
    separate_sigma4: bool = False
    student_t_dof: int = 3

    def __post_init__(self):
        if self.num_envs < 1 or self.samples_per_env < 1:
            raise InvalidInputError("num_envs and samples_per_env must be positive")
        _check_range("sigma_range", self.sigma_range)
        _check_range("beta_range", self.beta_range)
        if self.sigma_range[0] <= 0:
            raise InvalidInputError("noise scales must be positive")
        if self.sigma_y <= 0:
            raise InvalidInputError("sigma_y must be positive")
        if self.heterogeneity is not None and self.heterogeneity < 0:
            raise InvalidInputError("heterogeneity must be non-negative")
        _check_family(self.noise_family, self.student_t_dof)

    def env_ranges(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Sampling ranges for (noise scales, coefficients) in one environment."""
        if self.heterogeneity is None:
            return self.sigma_range, self.beta_range
        h = self.heterogeneity
        return (2.0, 2.0 + h), (1.0, 1.0 + h)


def sem_cascade(
    eps: np.ndarray, beta2: float, beta3: float
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the structural equations on pre-drawn noise.

    ``eps`` has seven columns, the additive terms of X1..X6 and Y in the
    order (e1, e2, e3, e4, eY, e5, e6).  Returns (covariates, target).
    """
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim != 2 or eps.shape[1] != 7:
        raise ShapeError("noise must have seven columns (e1, e2, e3, e4, eY, e5, e6)")
    x1 = eps[:, 0]
    x2 = x1 + eps[:, 1]
    x3 = 0.3 * x1 + eps[:, 2]
    x4 = 0.2 * x3 + eps[:, 3]
    y = beta2 * x2 + beta3 * x3 + eps[:, 4]
    x5 = 0.1 * x2 + y + eps[:, 5]
    x6 = y + eps[:, 6]
    return np.column_stack([x1, x2, x3, x4, x5, x6]), y


def gen_sem(config: SemGenConfig, seed: int) -> tuple[MultiEnvDataset, GroundTruth]:
    """Six-node linear SEM; X5 and X6 are descendants of the target."""
    n = config.samples_per_env
    sigma_rng, beta_rng = config.env_ranges()
    covs, tgts, betas = [], [], []
    for e in range(config.num_envs):
        rng = _env_rng(seed, e)
        sigma = rng.uniform(*sigma_rng, 6)
        beta2, beta3 = rng.uniform(*beta_rng, 2)
        # The X4 equation reuses sigma_3 as printed; opt in for a separate scale.
        sigma4 = sigma[3] if config.separate_sigma4 else sigma[2]
        scales = np.array(
            [sigma[0], sigma[1], sigma[2], sigma4, config.sigma_y, sigma[4], sigma[5]]
        )
        eps = scales * _standard_draws(
            rng, config.noise_family, (n, 7), config.student_t_dof
        )
        x, y = sem_cascade(eps, beta2, beta3)
        covs.append(x)
        tgts.append(y)
        betas.append((0.0, float(beta2), float(beta3), 0.0, 0.0, 0.0))
    truth = GroundTruth(
        parent_set=SEM_PARENTS,
        betas=tuple(betas),
        metadata={
            "generator": "sem",
            "noise_family": config.noise_family,
            "student_t_dof": config.student_t_dof,
            "sigma_y": config.sigma_y,
            "heterogeneity": config.heterogeneity,
            "seed": int(seed),
        },
    )
    return from_arrays(covs, tgts), truth


# ---------------------------------------------------------------------------
# Lorenz system and time-window environments


@dataclass(frozen=True)
class LorenzGenConfig:
    horizon: int = 8500
    initial_state: tuple[float, ...] = LORENZ_DEFAULT_STATE
    noise_std: float = 1.0

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidInputError("horizon must be at least 1")
        if len(self.initial_state) != 6:
            raise InvalidInputError("initial_state must have six coordinates")
        if self.noise_std < 0:
            raise InvalidInputError("noise_std must be non-negative")


def gen_lorenz(config: LorenzGenConfig, seed: int) -> np.ndarray:
    """Iterate the noisy discrete Lorenz map; returns a (horizon + 1, 6) series.

    Coordinates 1..5 form the chaotic system, coordinate 6 an independent
    random walk.  Raises :class:`DivergenceError` if the state leaves the
    representable range.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed)]))
    eps = config.noise_std * rng.standard_normal((config.horizon, 6))
    out = np.empty((config.horizon + 1, 6))
    out[0] = config.initial_state
    x1, x2, x3, x4, x5, x6 = (float(v) for v in config.initial_state)
    for t in range(config.horizon):
        e = eps[t]
        n1 = 0.9 * x1 + 0.1 * x2 + e[0]
        n2 = 0.28 * x1 - 0.01 * x1 * x3 + 0.99 * x2 + e[1]
        n3 = 0.01 * x1 * (x2 - x4) + 0.9733 * x3 + e[2]
        n4 = 0.01 * x1 * (x3 - 2.0 * x5) + 0.9366 * x4 + e[3]
        n5 = 0.02 * x1 * x4 + 0.96 * x5 + e[4]
        n6 = x6 + e[5]
        x1, x2, x3, x4, x5, x6 = n1, n2, n3, n4, n5, n6
        if max(abs(x1), abs(x2), abs(x3), abs(x4), abs(x5), abs(x6)) > LORENZ_OVERFLOW:
            raise DivergenceError(
                f"trajectory diverged at step {t + 1} (state magnitude above {LORENZ_OVERFLOW:g})",
                step=t + 1,
            )
        out[t + 1] = (x1, x2, x3, x4, x5, x6)
    return out


def split_environments(
    series: np.ndarray,
    target: int,
    window: int,
    warmup: int,
    num_envs: int,
) -> MultiEnvDataset:
    """Cut a trajectory into consecutive disjoint time-window environments.

    Within a window the covariate rows are the full state at time t and the
    target is coordinate ``target`` (1-based) at t + 1.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2:
        raise ShapeError("series must be a (steps, coords) array")
    d = series.shape[1]
    if not (1 <= target <= d):
        raise InvalidInputError(f"target coordinate must lie in 1..{d}")
    if window < 1 or num_envs < 1 or warmup < 0:
        raise InvalidInputError("window and num_envs must be positive, warmup non-negative")
    required = warmup + num_envs * window + 1
    if series.shape[0] < required:
        raise ShapeError(
            f"series has {series.shape[0]} steps but warmup={warmup}, "
            f"{num_envs} windows of {window} require at least {required}"
        )
    envs = []
    for w in range(num_envs):
        start = warmup + w * window
        stop = start + window
        envs.append(
            EnvironmentData(
                covariates=series[start:stop],
                target=series[start + 1 : stop + 1, target - 1],
            )
        )
    return MultiEnvDataset(environments=tuple(envs), num_covariates=d)
