"""Geographic prediction: ridge regression, cross-validation, metrics.

Features are z-scored on the training portion only, the target is centered
through the intercept, and the ridge system is solved in closed form via a
Cholesky factorization of the regularized normal equations.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateTarget,
    DimMismatch,
    Misalignment,
    NodeMismatch,
    OverlapDetected,
    SingularSystem,
)
from .embedding import GeoRepresentation

DEFAULT_ALPHA = 1.0


@dataclass(frozen=True)
class AttributeVector:
    """A named scalar attribute per node, aligned to a node set by id."""

    node_ids: tuple[str, ...]
    values: np.ndarray
    name: str = "attribute"

    def __post_init__(self) -> None:
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.shape[0] != len(self.node_ids):
            raise ValueError(
                f"{v.shape} values for {len(self.node_ids)} node ids"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("attribute values must be finite")


@dataclass
class RidgeModel:
    """Closed-form ridge fit over standardized features.

    feature_means/stds describe the raw feature space; kept_columns lists
    the raw column indices that survived the constant-column drop, and
    weights apply to those standardized columns.
    """

    weights: np.ndarray
    intercept: float
    alpha: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    kept_columns: np.ndarray


def standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise z-score; constant columns are dropped.

    Returns (Xz, means, stds, kept_columns) where means/stds cover all raw
    columns (std 1.0 recorded for dropped ones) and kept_columns holds the
    surviving raw indices.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("standardize_fit needs a K x M matrix with K >= 2")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    kept = np.flatnonzero(stds > 0.0)
    safe_stds = np.where(stds > 0.0, stds, 1.0)
    Xz = (X[:, kept] - means[kept]) / safe_stds[kept]
    return Xz, means, safe_stds, kept


def ridge_fit(
    Xz: np.ndarray,
    y: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    feature_means: np.ndarray | None = None,
    feature_stds: np.ndarray | None = None,
    kept_columns: np.ndarray | None = None,
) -> RidgeModel:
    """Solve (Xz'Xz + alpha I) w = Xz'(y - mean(y)).

    Xz is expected to have (near) zero column means; the intercept is the
    target mean. The SPD system is factorized by Cholesky, retried once
    with a 1e-10 * trace jitter, then SingularSystem is raised.
    """
    Xz = np.asarray(Xz, dtype=float)
    y = np.asarray(y, dtype=float)
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    k, m = Xz.shape
    intercept = float(y.mean())
    if m == 0:
        weights = np.zeros(0)
    else:
        gram = Xz.T @ Xz + alpha * np.eye(m)
        rhs = Xz.T @ (y - intercept)
        weights = _spd_solve(gram, rhs)
    if feature_means is None:
        feature_means = np.zeros(m)
        feature_stds = np.ones(m)
        kept_columns = np.arange(m)
    return RidgeModel(
        weights=weights,
        intercept=intercept,
        alpha=float(alpha),
        feature_means=np.asarray(feature_means, dtype=float),
        feature_stds=np.asarray(feature_stds, dtype=float),
        kept_columns=np.asarray(kept_columns, dtype=int),
    )


def _spd_solve(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        jitter = 1e-10 * np.trace(gram)
        try:
            chol = np.linalg.cholesky(gram + jitter * np.eye(gram.shape[0]))
        except np.linalg.LinAlgError as e:
            raise SingularSystem(
                "normal equations are rank-deficient beyond jitter recovery"
            ) from e
    z = np.linalg.solve(chol, rhs)
    return np.linalg.solve(chol.T, z)


def fit_standardized(X: np.ndarray, y: np.ndarray, alpha: float = DEFAULT_ALPHA) -> RidgeModel:
    """standardize_fit + ridge_fit, keeping the scaler inside the model."""
    Xz, means, stds, kept = standardize_fit(X)
    return ridge_fit(Xz, y, alpha, feature_means=means, feature_stds=stds, kept_columns=kept)


def ridge_predict(model: RidgeModel, X: np.ndarray) -> np.ndarray:
    """Predict from raw features; standardization is applied internally."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.feature_means.shape[0]:
        raise DimMismatch(
            f"expected {model.feature_means.shape[0]} raw features, got {X.shape}"
        )
    kept = model.kept_columns
    Xz = (X[:, kept] - model.feature_means[kept]) / model.feature_stds[kept]
    return Xz @ model.weights + model.intercept


def metrics(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float, float]:
    """(MAE, RMSE, R^2) with R^2 about the mean of y_true; can be negative."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or y_true.shape[0] < 2:
        raise ValueError("metrics needs two equal-length vectors with Q >= 2")
    err = y_pred - y_true
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err ** 2)))
    sst = float(np.sum((y_true - y_true.mean()) ** 2))
    if sst == 0.0:
        raise DegenerateTarget("R^2 undefined for a constant target")
    r2 = 1.0 - float(np.sum(err ** 2)) / sst
    return mae, rmse, r2


@dataclass(frozen=True)
class CVReport:
    """Per-fold and mean metrics of a k-fold cross-validation run."""

    per_fold: tuple[tuple[float, float, float], ...]
    folds: int
    seed: int
    alpha: float

    @property
    def mean_mae(self) -> float:
        return float(np.mean([f[0] for f in self.per_fold]))

    @property
    def mean_rmse(self) -> float:
        return float(np.mean([f[1] for f in self.per_fold]))

    @property
    def mean_r2(self) -> float:
        return float(np.mean([f[2] for f in self.per_fold]))

    def to_dict(self) -> dict:
        return {
            "folds": self.folds,
            "seed": self.seed,
            "alpha": self.alpha,
            "per_fold": [
                {"mae": mae, "rmse": rmse, "r2": r2} for mae, rmse, r2 in self.per_fold
            ],
            "mean_mae": self.mean_mae,
            "mean_rmse": self.mean_rmse,
            "mean_r2": self.mean_r2,
        }


def fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle, then contiguous chunks of near-equal size."""
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(order, folds)]


def _align(rep: GeoRepresentation, attr: AttributeVector) -> np.ndarray:
    """Attribute values reordered to the representation's node order."""
    if set(rep.node_ids) != set(attr.node_ids):
        missing = set(rep.node_ids) ^ set(attr.node_ids)
        raise Misalignment(f"node ids differ between store and attribute: {sorted(missing)[:5]}")
    pos = {nid: i for i, nid in enumerate(attr.node_ids)}
    return attr.values[[pos[nid] for nid in rep.node_ids]]


def kfold_cv(
    rep: GeoRepresentation,
    attr: AttributeVector,
    folds: int = 5,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
) -> CVReport:
    """K-fold cross-validation of ridge regression, standardized per fold."""
    y = _align(rep, attr)
    n = rep.n_nodes
    if not 2 <= folds <= n:
        raise ValueError(f"need 2 <= folds <= {n}, got {folds}")
    X = rep.matrix.T
    per_fold = []
    for test_idx in fold_indices(n, folds, seed):
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        model = fit_standardized(X[mask], y[mask], alpha)
        y_pred = ridge_predict(model, X[test_idx])
        per_fold.append(metrics(y[test_idx], y_pred))
    return CVReport(per_fold=tuple(per_fold), folds=folds, seed=seed, alpha=alpha)


def holdout_eval(
    rep: GeoRepresentation,
    attr: AttributeVector,
    split: tuple[list[str], list[str]],
    alpha: float = DEFAULT_ALPHA,
    allow_overlap: bool = False,
) -> tuple[float, float, float]:
    """Fit on the train ids, report (MAE, RMSE, R^2) on the test ids."""
    train_ids, test_ids = split
    if not allow_overlap and set(train_ids) & set(test_ids):
        raise OverlapDetected("train and test id lists overlap")
    y = _align(rep, attr)
    pos = {nid: i for i, nid in enumerate(rep.node_ids)}
    try:
        train_idx = np.array([pos[nid] for nid in train_ids])
        test_idx = np.array([pos[nid] for nid in test_ids])
    except KeyError as e:
        raise Misalignment(f"split id {e} not present in the representation") from e
    X = rep.matrix.T
    model = fit_standardized(X[train_idx], y[train_idx], alpha)
    return metrics(y[test_idx], ridge_predict(model, X[test_idx]))


def concat_representations(reps: list[GeoRepresentation]) -> GeoRepresentation:
    """Stack representations vertically; node ids must match exactly."""
    if not reps:
        raise ValueError("nothing to concatenate")
    first = reps[0]
    for rep in reps[1:]:
        if rep.node_ids != first.node_ids:
            raise NodeMismatch("representations do not share identical node id order")
    if len(reps) == 1:
        return first
    h = hashlib.sha256("+".join(r.prompt_hash for r in reps).encode("ascii")).hexdigest()
    return GeoRepresentation(
        node_ids=first.node_ids,
        matrix=np.vstack([r.matrix for r in reps]),
        provider_id="+".join(r.provider_id for r in reps),
        variant=first.variant,
        prompt_hash=h,
    )
