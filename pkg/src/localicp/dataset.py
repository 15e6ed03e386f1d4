"""Multi-environment dataset container and its CSV/JSON serialization.

CSV layout: header ``env,x1,...,xD,y``, one row per observation, rows in any
order.  Environment labels are arbitrary strings mapped to indices by first
appearance; the mapping is preserved on the dataset for traceability.

JSON layout: a versioned document bundling the per-environment arrays plus
optional generator metadata and ground truth.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, ShapeError

DATASET_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EnvironmentData:
    """One environment: covariate matrix (n x D) and target vector (n)."""

    covariates: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.covariates, dtype=np.float64)
        tgt = np.asarray(self.target, dtype=np.float64)
        if cov.ndim != 2 or tgt.ndim != 1:
            raise ShapeError("covariates must be a matrix and target a vector")
        if cov.shape[0] != tgt.shape[0]:
            raise ShapeError(
                f"covariates have {cov.shape[0]} rows but target has {tgt.shape[0]} entries"
            )
        if cov.shape[0] < 1:
            raise InvalidInputError("an environment must contain at least one observation")
        if not (np.all(np.isfinite(cov)) and np.all(np.isfinite(tgt))):
            raise InvalidInputError("environment data contains non-finite entries")
        object.__setattr__(self, "covariates", cov)
        object.__setattr__(self, "target", tgt)

    @property
    def num_samples(self) -> int:
        return self.covariates.shape[0]


@dataclass(frozen=True)
class MultiEnvDataset:
    """Ordered collection of environments sharing a covariate layout.

    ``num_covariates`` counts candidate causal parents only; when
    ``intercept_added`` the physical matrices carry one extra trailing
    column of ones that is never a candidate.
    """

    environments: tuple[EnvironmentData, ...]
    num_covariates: int
    intercept_added: bool = False
    env_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        envs = tuple(self.environments)
        if len(envs) < 1:
            raise InvalidInputError("a dataset must contain at least one environment")
        width = self.num_covariates + (1 if self.intercept_added else 0)
        for i, env in enumerate(envs):
            if env.covariates.shape[1] != width:
                raise ShapeError(
                    f"environment {i} has {env.covariates.shape[1]} columns, expected {width}"
                )
        if self.env_labels is not None and len(self.env_labels) != len(envs):
            raise ShapeError("env_labels length must match the number of environments")
        object.__setattr__(self, "environments", envs)

    @property
    def num_envs(self) -> int:
        return len(self.environments)

    @property
    def sample_sizes(self) -> tuple[int, ...]:
        return tuple(env.num_samples for env in self.environments)

    def with_intercept(self) -> "MultiEnvDataset":
        """Append a constant-one column to every environment (idempotent)."""
        if self.intercept_added:
            return self
        envs = tuple(
            EnvironmentData(
                np.hstack([env.covariates, np.ones((env.num_samples, 1))]),
                env.target,
            )
            for env in self.environments
        )
        return replace(self, environments=envs, intercept_added=True)


def from_arrays(
    covariates: Sequence[np.ndarray],
    targets: Sequence[np.ndarray],
    env_labels: Sequence[str] | None = None,
) -> MultiEnvDataset:
    """Build a dataset from parallel lists of (n_e x D) matrices and (n_e) vectors."""
    if len(covariates) != len(targets):
        raise ShapeError("covariates and targets must have the same number of environments")
    if not covariates:
        raise InvalidInputError("empty dataset")
    envs = tuple(EnvironmentData(x, y) for x, y in zip(covariates, targets))
    return MultiEnvDataset(
        environments=envs,
        num_covariates=envs[0].covariates.shape[1],
        env_labels=tuple(env_labels) if env_labels is not None else None,
    )


# ---------------------------------------------------------------------------
# CSV


def write_csv(dataset: MultiEnvDataset, path) -> None:
    if dataset.intercept_added:
        raise InvalidInputError("export the raw dataset (without intercept column)")
    d = dataset.num_covariates
    labels = dataset.env_labels or tuple(str(i + 1) for i in range(dataset.num_envs))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["env"] + [f"x{j + 1}" for j in range(d)] + ["y"])
        for label, env in zip(labels, dataset.environments):
            for i in range(env.num_samples):
                row = [label] + [repr(float(v)) for v in env.covariates[i]] + [repr(float(env.target[i]))]
                writer.writerow(row)


def read_csv(path) -> MultiEnvDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "env" or header[-1] != "y":
            raise InvalidInputError(
                f"{path}: line 1: expected header 'env,x1,...,xD,y', got {','.join(header)}"
            )
        d = len(header) - 2
        expected = ["env"] + [f"x{j + 1}" for j in range(d)] + ["y"]
        if header != expected:
            raise InvalidInputError(
                f"{path}: line 1: expected header {','.join(expected)}, got {','.join(header)}"
            )
        order: list[str] = []
        rows: dict[str, list[list[float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 2:
                raise InvalidInputError(
                    f"{path}: line {lineno}: expected {d + 2} fields, got {len(row)}"
                )
            label = row[0]
            try:
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise InvalidInputError(f"{path}: line {lineno}: {exc}") from None
            if label not in rows:
                rows[label] = []
                order.append(label)
            rows[label].append(values)
    if not order:
        raise InvalidInputError(f"{path}: no data rows")
    covs, tgts = [], []
    for label in order:
        block = np.asarray(rows[label], dtype=np.float64)
        covs.append(block[:, :d])
        tgts.append(block[:, d])
    return from_arrays(covs, tgts, env_labels=order)


# ---------------------------------------------------------------------------
# JSON


def dataset_to_dict(dataset: MultiEnvDataset, metadata: dict | None = None) -> dict:
    if dataset.intercept_added:
        raise InvalidInputError("export the raw dataset (without intercept column)")
    doc = {
        "schema_version": DATASET_SCHEMA_VERSION,
        "num_covariates": dataset.num_covariates,
        "environments": [
            {
                "label": (dataset.env_labels[i] if dataset.env_labels else str(i + 1)),
                "covariates": env.covariates.tolist(),
                "target": env.target.tolist(),
            }
            for i, env in enumerate(dataset.environments)
        ],
    }
    if metadata is not None:
        doc["metadata"] = metadata
    return doc


def write_json(dataset: MultiEnvDataset, path, metadata: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(dataset_to_dict(dataset, metadata), fh)
        fh.write("\n")


def dataset_from_dict(doc: dict) -> MultiEnvDataset:
    try:
        envs = doc["environments"]
        d = int(doc["num_covariates"])
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed dataset document: {exc}") from None
    covs, tgts, labels = [], [], []
    for i, env in enumerate(envs):
        try:
            covs.append(np.asarray(env["covariates"], dtype=np.float64))
            tgts.append(np.asarray(env["target"], dtype=np.float64))
            labels.append(str(env.get("label", i + 1)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed environment {i}: {exc}") from None
    ds = from_arrays(covs, tgts, env_labels=labels)
    if ds.num_covariates != d:
        raise ShapeError(
            f"document declares {d} covariates but environments have {ds.num_covariates}"
        )
    return ds


def read_json(path) -> MultiEnvDataset:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return dataset_from_dict(doc)
