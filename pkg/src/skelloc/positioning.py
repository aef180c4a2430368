"""User position estimation from a radio-map slice.

The cluster-scaled estimator divides each per-AP RSS mismatch by the spread
of the reconstructed RSS inside that point's cluster, fuses the scaled
mismatches across APs, inverts them into weights, keeps the top k, and
averages the selected point positions by weight.  Per-AP top-k weight sets
are also exposed (`weights`) for inspection and for estimators built on
per-AP unions.  A plain inverse-distance WkNN over the raw RSS vector
serves as the unscaled baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterModel

SIGMA_FLOOR_DB = 3.0
DIST_FLOOR = 1e-3


@dataclass(frozen=True)
class PositionEstimate:
    xy: np.ndarray
    selected: tuple[tuple[int, float], ...]
    k: int


def scaled_distances(
    adaptive_db: np.ndarray, cm: ClusterModel, user_rss: np.ndarray
) -> np.ndarray:
    """Variance-scaled RSS mismatch per (point, AP).

    Each |db[n, l] - user[l]| is divided by the standard deviation of the
    radio-map column over n's cluster, floored so singleton clusters and
    flat clusters stay usable.
    """
    adaptive_db = np.asarray(adaptive_db, dtype=float)
    user_rss = np.asarray(user_rss, dtype=float)
    sigma = np.empty_like(adaptive_db)
    for members in cm.clusters:
        sigma[members, :] = adaptive_db[members, :].std(axis=0)
    sigma = np.maximum(sigma, SIGMA_FLOOR_DB)
    return np.abs(adaptive_db - user_rss[None, :]) / sigma


def scaled_distance(
    n: int, l: int, adaptive_db: np.ndarray, cm: ClusterModel, user_rss: np.ndarray
) -> float:
    return float(scaled_distances(adaptive_db, cm, user_rss)[n, l])


def weights(
    adaptive_db: np.ndarray, cm: ClusterModel, user_rss: np.ndarray, k: int
) -> list[list[tuple[int, float]]]:
    """Per-AP top-k inverse scaled-distance weights, largest first.

    Ties keep the lower point index.
    """
    d = scaled_distances(adaptive_db, cm, user_rss)
    n, n_ap = d.shape
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    w = 1.0 / np.maximum(d, DIST_FLOOR)
    out = []
    for l in range(n_ap):
        order = np.argsort(-w[:, l], kind="stable")[:k]
        out.append([(int(i), float(w[i, l])) for i in order])
    return out


def csle_estimate(
    adaptive_db: np.ndarray,
    cm: ClusterModel,
    rp_positions: np.ndarray,
    user_rss: np.ndarray,
    k: int,
) -> PositionEstimate:
    """Cluster-scaled position estimate.

    The per-AP scaled mismatches of each point are fused into one distance
    (their Euclidean norm over the AP axis) before inverting to weights and
    keeping the top k, so a coincidental single-AP match cannot dominate.
    """
    d = np.linalg.norm(scaled_distances(adaptive_db, cm, user_rss), axis=1)
    n = len(d)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    w = 1.0 / np.maximum(d, DIST_FLOOR)
    order = np.argsort(-w, kind="stable")[:k]
    return estimate([[(int(i), float(w[i])) for i in order]], rp_positions)


def estimate(weight_sets, rp_positions: np.ndarray) -> PositionEstimate:
    """Weight-normalized average of the selected point positions."""
    rp_positions = np.asarray(rp_positions, dtype=float)
    flat = [(i, w) for per_ap in weight_sets for (i, w) in per_ap]
    if not flat or all(w <= 0 for _, w in flat):
        raise ValueError("no positive weights to average")
    total = sum(w for _, w in flat)
    xy = np.zeros(2)
    for i, w in flat:
        xy += w * rp_positions[i]
    xy /= total
    k = max(len(per_ap) for per_ap in weight_sets)
    return PositionEstimate(xy=xy, selected=tuple(flat), k=k)


def wknn_baseline(
    db_slice: np.ndarray, rp_positions: np.ndarray, user_rss: np.ndarray, k: int
) -> PositionEstimate:
    """Plain WkNN: inverse Euclidean RSS-vector distance, single top-k set."""
    db_slice = np.asarray(db_slice, dtype=float)
    user_rss = np.asarray(user_rss, dtype=float)
    n = len(db_slice)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    dist = np.linalg.norm(db_slice - user_rss[None, :], axis=1)
    w = 1.0 / np.maximum(dist, DIST_FLOOR)
    order = np.argsort(-w, kind="stable")[:k]
    selected = [[(int(i), float(w[i])) for i in order]]
    return estimate(selected, rp_positions)


def save_estimates(records, path) -> None:
    """`tp_index true_x true_y est_x est_y error_m` per line."""
    with open(path, "w") as fh:
        fh.write("# tp_index true_x true_y est_x est_y error_m\n")
        for tp, (tx, ty), (ex, ey), err in records:
            fh.write(f"{tp} {tx:.17g} {ty:.17g} {ex:.17g} {ey:.17g} {err:.17g}\n")


def load_estimates(path):
    records = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            toks = line.split()
            records.append(
                (
                    int(toks[0]),
                    (float(toks[1]), float(toks[2])),
                    (float(toks[3]), float(toks[4])),
                    float(toks[5]),
                )
            )
    return records
