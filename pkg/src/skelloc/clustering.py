"""Reference-point clustering and monitor-point selection.

Pairwise similarity between reference points combines three normalized
factors: mean absolute RSS difference, skeleton shortest-path distance, and
the inverse difference of long-term RSS drift.  Affinity propagation over
that similarity matrix selects exemplars (the monitor points) and assigns
every reference point to one of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .floorplan import Skeleton, SspMatrix, ssp_distance_matrix
from .radiosim import RssDatabase

DRIFT_EPS = 1e-6


@dataclass(frozen=True)
class SimilarityMatrix:
    """Combined similarity with its raw (unnormalized) factor matrices."""

    s: np.ndarray
    d_rss: np.ndarray
    d_ssp: np.ndarray
    delta: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class ClusterModel:
    exemplars: np.ndarray
    exemplar_of: np.ndarray
    clusters: tuple[np.ndarray, ...]
    converged: bool
    n_iter: int

    @property
    def n_mp(self) -> int:
        return len(self.exemplars)

    def cluster_of(self, n: int) -> int:
        """Ordinal cluster index (position of n's exemplar in ascending order)."""
        return int(np.searchsorted(self.exemplars, self.exemplar_of[n]))


def rss_difference(i: int, j: int, db: RssDatabase) -> float:
    """Mean absolute RSS difference between points i and j over all APs and
    all non-reference samples."""
    if db.n_samples < 2:
        raise ValueError("need at least one non-reference sample")
    if i == j:
        return 0.0
    diff = np.abs(db.values[i, :, 1:] - db.values[j, :, 1:])
    return float(diff.mean())


def rss_difference_matrix(db: RssDatabase) -> np.ndarray:
    if db.n_samples < 2:
        raise ValueError("need at least one non-reference sample")
    v = db.values[:, :, 1:]
    diff = np.abs(v[:, None, :, :] - v[None, :, :, :]).mean(axis=(2, 3))
    np.fill_diagonal(diff, 0.0)
    return diff


def time_variation_similarity(i: int, j: int, db: RssDatabase) -> float:
    """Inverse absolute difference of total drift from the reference snapshot.

    Small values mean the two points drift very differently over time; equal
    drift profiles saturate at 1/eps.
    """
    dev = db.values[:, :, 1:] - db.values[:, :, :1]
    totals = dev.sum(axis=(1, 2))
    return float(1.0 / max(DRIFT_EPS, abs(totals[i] - totals[j])))


def drift_similarity_matrix(db: RssDatabase) -> np.ndarray:
    dev = db.values[:, :, 1:] - db.values[:, :, :1]
    totals = dev.sum(axis=(1, 2))
    gap = np.abs(totals[:, None] - totals[None, :])
    delta = 1.0 / np.maximum(DRIFT_EPS, gap)
    np.fill_diagonal(delta, 1.0 / DRIFT_EPS)
    return delta


def _minmax_offdiag(m: np.ndarray) -> np.ndarray:
    """Min-max normalize the off-diagonal entries to [0, 1]; zero diagonal."""
    off = ~np.eye(len(m), dtype=bool)
    lo, hi = m[off].min(), m[off].max()
    out = np.zeros_like(m, dtype=float)
    if hi > lo:
        out[off] = (m[off] - lo) / (hi - lo)
    return out


def build_similarity(
    db: RssDatabase,
    rps: np.ndarray,
    sk: Skeleton,
    D: SspMatrix,
    weights,
    preference_override: float | None = None,
    delta_orientation: str = "literal",
) -> SimilarityMatrix:
    """Combine the three normalized factors into one similarity matrix.

    Off-diagonal entries are the negated weighted sum of the normalized
    factors; the diagonal (preference) is the per-column median of the
    off-diagonal similarities unless a scalar override is supplied.

    delta_orientation="literal" negates the normalized drift similarity as
    written; "inverted" uses its complement so that strongly drifting pairs
    come out more similar.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (3,) or (weights < 0).any() or not weights.any():
        raise ValueError("weights must be three non-negative values, not all zero")
    if delta_orientation not in ("literal", "inverted"):
        raise ValueError("delta_orientation must be 'literal' or 'inverted'")
    n = db.n_points
    if n < 2:
        raise ValueError("need at least two reference points to cluster")

    d_rss = rss_difference_matrix(db)
    d_ssp = ssp_distance_matrix(rps, sk, D)
    delta = drift_similarity_matrix(db)

    f_rss = _minmax_offdiag(d_rss)
    f_ssp = _minmax_offdiag(d_ssp)
    f_delta = _minmax_offdiag(delta)
    if delta_orientation == "inverted":
        off = ~np.eye(n, dtype=bool)
        inv = np.zeros_like(f_delta)
        inv[off] = 1.0 - f_delta[off]
        f_delta = inv

    s = -(weights[0] * f_rss + weights[1] * f_ssp + weights[2] * f_delta)
    off = ~np.eye(n, dtype=bool)
    if preference_override is not None:
        np.fill_diagonal(s, float(preference_override))
    else:
        for j in range(n):
            col = s[:, j][off[:, j]]
            s[j, j] = np.median(col)
    return SimilarityMatrix(s=s, d_rss=d_rss, d_ssp=d_ssp, delta=delta, weights=weights)


def _assignments(crit: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exemplar set and per-point exemplar from the message criterion r + a."""
    n = len(crit)
    best = np.argmax(crit, axis=1)  # first (lowest) index wins ties
    exemplars = np.flatnonzero(best == np.arange(n))
    if len(exemplars) == 0:
        exemplars = np.array([int(np.argmax(np.diag(crit)))])
    sub = crit[:, exemplars]
    exemplar_of = exemplars[np.argmax(sub, axis=1)]
    exemplar_of[exemplars] = exemplars
    return exemplars, exemplar_of


def affinity_propagation(
    s,
    damping: float = 0.5,
    max_iter: int = 500,
    stable_iters: int = 10,
) -> ClusterModel:
    """Message-passing exemplar clustering over a similarity matrix.

    Responsibility and availability messages are updated with damping
    `new = damping*old + (1-damping)*computed` until the cluster assignment
    stays unchanged for `stable_iters` consecutive iterations (converged) or
    `max_iter` is reached (returned with converged=False).  A fixed-seed
    jitter at machine-epsilon scale breaks symmetric degeneracies that would
    otherwise oscillate forever; results stay deterministic.
    """
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must be in [0, 1)")
    S = np.array(s.s if isinstance(s, SimilarityMatrix) else s, dtype=float)
    n = S.shape[0]
    if S.shape != (n, n):
        raise ValueError("similarity matrix must be square")
    if n == 1:
        return ClusterModel(
            exemplars=np.array([0]),
            exemplar_of=np.array([0]),
            clusters=(np.array([0]),),
            converged=True,
            n_iter=0,
        )

    jitter_rng = np.random.default_rng(0xAFF1)
    scale = np.finfo(float).eps * np.abs(S).max() * 100.0
    S = S + scale * jitter_rng.standard_normal(S.shape)

    R = np.zeros_like(S)
    A = np.zeros_like(S)
    idx = np.arange(n)
    prev = None
    stable = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # responsibilities: r_ij = s_ij - max_{j' != j} (a_ij' + s_ij')
        AS = A + S
        first = np.argmax(AS, axis=1)
        max1 = AS[idx, first]
        AS[idx, first] = -np.inf
        max2 = AS.max(axis=1)
        Rnew = S - max1[:, None]
        Rnew[idx, first] = S[idx, first] - max2
        R = damping * R + (1.0 - damping) * Rnew

        # availabilities: a_ij = min(0, r_jj + sum_{i' not in {i,j}} max(0, r_i'j))
        Rp = np.maximum(R, 0.0)
        np.fill_diagonal(Rp, np.diag(R))
        col = Rp.sum(axis=0)
        Anew = col[None, :] - Rp
        diag = np.diag(Anew).copy()  # sum_{i' != j} max(0, r_i'j)
        Anew = np.minimum(Anew, 0.0)
        np.fill_diagonal(Anew, diag)
        A = damping * A + (1.0 - damping) * Anew

        _, exemplar_of = _assignments(R + A)
        key = exemplar_of.tobytes()
        if key == prev:
            stable += 1
            if stable >= stable_iters:
                converged = True
                break
        else:
            stable = 0
        prev = key

    exemplars, exemplar_of = _assignments(R + A)
    clusters = tuple(np.flatnonzero(exemplar_of == mu) for mu in exemplars)
    return ClusterModel(
        exemplars=exemplars,
        exemplar_of=exemplar_of,
        clusters=clusters,
        converged=converged,
        n_iter=it,
    )


def net_similarity(S: np.ndarray, cm: ClusterModel) -> float:
    """Objective value of a clustering: member-to-exemplar similarities plus
    exemplar preferences."""
    S = np.asarray(S, dtype=float)
    total = sum(float(S[mu, mu]) for mu in cm.exemplars)
    for i, mu in enumerate(cm.exemplar_of):
        if i != mu:
            total += float(S[i, mu])
    return total


def save_clusters(cm: ClusterModel, path) -> None:
    """One `m: exemplar : member,member,...` line per cluster."""
    with open(path, "w") as fh:
        fh.write(f"# converged={int(cm.converged)} n_iter={cm.n_iter}\n")
        for m, (mu, members) in enumerate(zip(cm.exemplars, cm.clusters)):
            body = ",".join(str(int(i)) for i in members)
            fh.write(f"{m}: {int(mu)} : {body}\n")


def load_clusters(path) -> ClusterModel:
    exemplars = []
    clusters = []
    converged = True
    n_iter = 0
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                toks = dict(t.split("=") for t in line[1:].split())
                converged = bool(int(toks.get("converged", "1")))
                n_iter = int(toks.get("n_iter", "0"))
                continue
            _, mu, body = (part.strip() for part in line.split(":"))
            exemplars.append(int(mu))
            clusters.append(np.array([int(t) for t in body.split(",") if t], dtype=int))
    n = sum(len(c) for c in clusters)
    exemplar_of = np.empty(n, dtype=int)
    for mu, members in zip(exemplars, clusters):
        exemplar_of[members] = mu
    return ClusterModel(
        exemplars=np.array(exemplars, dtype=int),
        exemplar_of=exemplar_of,
        clusters=tuple(clusters),
        converged=converged,
        n_iter=n_iter,
    )


def save_similarity(sim: SimilarityMatrix, path) -> None:
    """Debug dump of the combined similarity matrix."""
    with open(path, "w") as fh:
        fh.write(f"# weights {' '.join(f'{w:.17g}' for w in sim.weights)}\n")
        for row in sim.s:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
