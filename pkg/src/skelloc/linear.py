"""Per-(point, AP) linear reconstruction of the radio map from monitor readings.

Each reference point's RSS series is regressed against its cluster
exemplar's series with plain SGD on the squared-error loss; at query time a
fresh monitor snapshot is mapped through the fitted coefficients to predict
every reference point's current RSS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterModel
from .errors import DivergenceError
from .radiosim import RssDatabase

_VAR_FLOOR = 1e-12
_DIVERGENCE_BOUND = 1e8  # standardized coefficients live at data scale; beyond this is runaway


@dataclass(frozen=True)
class LinearModelSet:
    coeff: np.ndarray
    bias: np.ndarray
    degenerate: np.ndarray
    cluster_model: ClusterModel


def fit(
    db: RssDatabase,
    cm: ClusterModel,
    learning_rate: float = 0.1,
    epochs: int = 200,
    tol: float = 1e-6,
) -> LinearModelSet:
    """Fit one (coeff, bias) pair per (point, AP) by sequential SGD.

    Monitor inputs are standardized during fitting so the stated learning
    rate is stable on raw dB magnitudes; the returned coefficients are in
    original units.  A zero-variance monitor series yields coeff 0 and bias
    equal to the mean target, flagged degenerate.
    """
    if db.n_samples < 2:
        raise ValueError("need at least one non-reference sample to fit")
    n, n_ap = db.n_points, db.n_ap
    y = db.values[:, :, 1:]
    x = db.values[cm.exemplar_of, :, 1:]
    n_k = x.shape[2]

    mu = x.mean(axis=2)
    sd = x.std(axis=2)
    degenerate = sd < np.sqrt(_VAR_FLOOR)
    safe_sd = np.where(degenerate, 1.0, sd)
    xs = (x - mu[:, :, None]) / safe_sd[:, :, None]

    c = np.zeros((n, n_ap))
    b = np.zeros((n, n_ap))
    for _ in range(epochs):
        c0, b0 = c.copy(), b.copy()
        for k in range(n_k):
            err = c * xs[:, :, k] + b - y[:, :, k]
            b = b - learning_rate * err
            c = c - learning_rate * xs[:, :, k] * err
        bound = max(np.abs(c).max(), np.abs(b).max())
        if not np.isfinite(bound) or bound > _DIVERGENCE_BOUND:
            raise DivergenceError(
                f"divergence: regression coefficients blew up at learning rate {learning_rate}"
            )
        if max(np.abs(c - c0).max(), np.abs(b - b0).max()) < tol:
            break

    coeff = c / safe_sd
    bias = b - c * mu / safe_sd
    coeff[degenerate] = 0.0
    bias[degenerate] = y.mean(axis=2)[degenerate]
    return LinearModelSet(coeff=coeff, bias=bias, degenerate=degenerate, cluster_model=cm)


def reconstruct(models: LinearModelSet, mp_rss_now: np.ndarray) -> np.ndarray:
    """Predict the (point x AP) radio map from one monitor snapshot.

    mp_rss_now rows follow the sorted exemplar order of the cluster model.
    """
    cm = models.cluster_model
    mp_rss_now = np.asarray(mp_rss_now, dtype=float)
    if mp_rss_now.shape[0] != cm.n_mp:
        missing = min(mp_rss_now.shape[0], cm.n_mp)
        raise ValueError(
            f"missing monitor reading for cluster {missing} "
            f"(exemplar {int(cm.exemplars[missing]) if missing < cm.n_mp else '?'}): "
            f"got {mp_rss_now.shape[0]} rows, expected {cm.n_mp}"
        )
    if mp_rss_now.shape[1] != models.coeff.shape[1]:
        raise ValueError("monitor snapshot AP count does not match the fitted models")
    rows = np.array([cm.cluster_of(n) for n in range(len(models.coeff))])
    return models.coeff * mp_rss_now[rows, :] + models.bias


def save_linear_models(models: LinearModelSet, path) -> None:
    """One `n l coeff bias degenerate_flag` record per (point, AP)."""
    n, n_ap = models.coeff.shape
    with open(path, "w") as fh:
        for i in range(n):
            for l in range(n_ap):
                fh.write(
                    f"{i} {l} {models.coeff[i, l]:.17g} {models.bias[i, l]:.17g} "
                    f"{int(models.degenerate[i, l])}\n"
                )


def load_linear_models(path, cm: ClusterModel) -> LinearModelSet:
    records = []
    with open(path) as fh:
        for line in fh:
            toks = line.split()
            if toks:
                records.append(toks)
    n = max(int(t[0]) for t in records) + 1
    n_ap = max(int(t[1]) for t in records) + 1
    coeff = np.zeros((n, n_ap))
    bias = np.zeros((n, n_ap))
    degenerate = np.zeros((n, n_ap), dtype=bool)
    for toks in records:
        i, l = int(toks[0]), int(toks[1])
        coeff[i, l] = float(toks[2])
        bias[i, l] = float(toks[3])
        degenerate[i, l] = bool(int(toks[4]))
    return LinearModelSet(coeff=coeff, bias=bias, degenerate=degenerate, cluster_model=cm)
