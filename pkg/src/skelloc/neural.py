"""Per-AP neural reconstruction of radio-map drift from monitor drift.

One fully connected network per AP maps the vector of monitor-point RSS
deltas (current minus reference snapshot) to the deltas of every reference
point.  Training happens in two phases: descent toward cluster-averaged
delta targets to get a warm start, then fine-tuning against the per-point
targets from the same initial parameters.  Reconstruction adds the predicted
deltas back onto the reference snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterModel
from .errors import DivergenceError
from .radiosim import RssDatabase

DEFAULT_HIDDEN = (64, 256, 512, 128, 64)


@dataclass
class NetworkParams:
    """Dense-layer weights/biases: hidden layers use a rectifier, the output
    layer is linear."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    ap_index: int = 0
    seed: int = 0

    @property
    def n_in(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_out(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(w.shape[0] for w in self.weights[:-1])

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            ap_index=self.ap_index,
            seed=self.seed,
        )


@dataclass(frozen=True)
class DeltaSample:
    """One training sample: monitor deltas in, per-point deltas (raw and
    cluster-averaged) out."""

    input: np.ndarray
    target: np.ndarray
    avg_target: np.ndarray


def init_params(
    n_mp: int,
    n_rp: int,
    hidden=DEFAULT_HIDDEN,
    seed: int = 0,
    ap_index: int = 0,
) -> NetworkParams:
    """Seeded uniform initialization in +-sqrt(6 / (fan_in + fan_out))."""
    rng = np.random.default_rng(seed)
    sizes = [n_mp, *hidden, n_rp]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(weights=weights, biases=biases, ap_index=ap_index, seed=seed)


def preprocess(db: RssDatabase, cm: ClusterModel, l: int) -> list[DeltaSample]:
    """Delta samples for AP l: one per non-reference time sample.

    Inputs are exemplar-row deltas in sorted exemplar order; targets are
    all-point deltas; the averaged target replaces each point's delta with
    the mean over its cluster.
    """
    exemplars = np.sort(cm.exemplars)
    ref = db.values[:, l, 0]
    samples = []
    for k in range(1, db.n_samples):
        target = db.values[:, l, k] - ref
        avg = np.empty_like(target)
        for members in cm.clusters:
            avg[members] = target[members].mean()
        samples.append(
            DeltaSample(
                input=db.values[exemplars, l, k] - db.values[exemplars, l, 0],
                target=target,
                avg_target=avg,
            )
        )
    return samples


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _forward_batch(theta: NetworkParams, x: np.ndarray) -> list[np.ndarray]:
    """Activations per layer, input first, linear output last."""
    acts = [x]
    for w, b in zip(theta.weights[:-1], theta.biases[:-1]):
        acts.append(_relu(acts[-1] @ w.T + b))
    acts.append(acts[-1] @ theta.weights[-1].T + theta.biases[-1])
    return acts


def forward(theta: NetworkParams, delta_mp) -> np.ndarray:
    """Predicted per-point delta vector for one monitor delta vector."""
    delta_mp = np.asarray(delta_mp, dtype=float)
    if delta_mp.shape != (theta.n_in,):
        raise ValueError(f"input shape {delta_mp.shape} does not match network input {theta.n_in}")
    return _forward_batch(theta, delta_mp[None, :])[-1][0]


def huber_loss(target, pred, gamma: float) -> float:
    """Mean per-component Huber loss: quadratic within gamma, linear beyond."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    target = np.asarray(target, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if target.shape != pred.shape:
        raise ValueError("target and prediction shapes differ")
    r = target - pred
    quad = 0.5 * r**2
    lin = gamma * (np.abs(r) - 0.5 * gamma)
    return float(np.where(np.abs(r) <= gamma, quad, lin).mean())


def loss_and_gradients(
    theta: NetworkParams, inputs: np.ndarray, targets: np.ndarray, gamma: float
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Batch Huber loss and its analytic gradients w.r.t. every parameter."""
    acts = _forward_batch(theta, inputs)
    pred = acts[-1]
    r = targets - pred
    loss = huber_loss(targets, pred, gamma)
    # d(loss)/d(pred); the loss averages over batch and components
    delta = -np.clip(r, -gamma, gamma) / r.size
    grads_w = [np.empty_like(w) for w in theta.weights]
    grads_b = [np.empty_like(b) for b in theta.biases]
    for h in range(len(theta.weights) - 1, -1, -1):
        grads_w[h] = delta.T @ acts[h]
        grads_b[h] = delta.sum(axis=0)
        if h > 0:
            delta = (delta @ theta.weights[h]) * (acts[h] > 0)
    return loss, grads_w, grads_b


def _descend(
    theta: NetworkParams,
    inputs: np.ndarray,
    targets: np.ndarray,
    gamma: float,
    learning_rate: float,
    iters: int,
    batch_size: int | None = None,
    batch_seed: int = 0,
) -> NetworkParams:
    theta = theta.copy()
    n = len(inputs)
    rng = np.random.default_rng(batch_seed)
    for _ in range(iters):
        if batch_size is None or batch_size >= n:
            batches = [np.arange(n)]
        else:
            perm = rng.permutation(n)
            batches = [perm[i : i + batch_size] for i in range(0, n, batch_size)]
        for idx in batches:
            loss, gw, gb = loss_and_gradients(theta, inputs[idx], targets[idx], gamma)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"divergence: non-finite loss at learning rate {learning_rate}"
                )
            for h in range(len(theta.weights)):
                theta.weights[h] -= learning_rate * gw[h]
                theta.biases[h] -= learning_rate * gb[h]
    return theta


def _stack(samples: list[DeltaSample], averaged: bool) -> tuple[np.ndarray, np.ndarray]:
    inputs = np.stack([s.input for s in samples])
    targets = np.stack([s.avg_target if averaged else s.target for s in samples])
    return inputs, targets


def pretrain(
    samples: list[DeltaSample],
    cm: ClusterModel,
    gamma: float,
    learning_rate: float,
    iters: int,
    hidden=DEFAULT_HIDDEN,
    seed: int = 0,
    ap_index: int = 0,
    batch_size: int | None = None,
    init: NetworkParams | None = None,
) -> NetworkParams:
    """Warm-start phase: descend on the cluster-averaged targets."""
    if not samples:
        raise ValueError("no training samples")
    inputs, targets = _stack(samples, averaged=True)
    theta = init.copy() if init is not None else init_params(
        n_mp=inputs.shape[1],
        n_rp=targets.shape[1],
        hidden=hidden,
        seed=seed,
        ap_index=ap_index,
    )
    return _descend(theta, inputs, targets, gamma, learning_rate, iters, batch_size, seed + 1)


def finetune(
    theta_p: NetworkParams,
    samples: list[DeltaSample],
    gamma: float,
    learning_rate: float,
    iters: int,
    batch_size: int | None = None,
) -> NetworkParams:
    """Fine-tuning phase: same descent against the unaveraged targets,
    starting exactly from the pretrained parameters."""
    if not samples:
        raise ValueError("no training samples")
    inputs, targets = _stack(samples, averaged=False)
    return _descend(
        theta_p, inputs, targets, gamma, learning_rate, iters, batch_size, theta_p.seed + 2
    )


def reconstruct_nn(
    theta: NetworkParams, mp_rss_now: np.ndarray, db: RssDatabase, cm: ClusterModel
) -> np.ndarray:
    """Adaptive radio-map column for this network's AP.

    mp_rss_now rows follow the sorted exemplar order; the predicted deltas
    are added onto the reference snapshot.
    """
    exemplars = np.sort(cm.exemplars)
    mp_rss_now = np.asarray(mp_rss_now, dtype=float)
    if mp_rss_now.shape[0] != len(exemplars):
        raise ValueError(
            f"missing exemplar reading: got {mp_rss_now.shape[0]} rows for "
            f"{len(exemplars)} monitor points"
        )
    l = theta.ap_index
    delta_mp = mp_rss_now[:, l] - db.values[exemplars, l, 0]
    return forward(theta, delta_mp) + db.values[:, l, 0]


def reconstruct_all(
    thetas: list[NetworkParams], mp_rss_now: np.ndarray, db: RssDatabase, cm: ClusterModel
) -> np.ndarray:
    """Full (point x AP) adaptive radio map from the per-AP networks."""
    out = np.empty((db.n_points, db.n_ap))
    for theta in thetas:
        out[:, theta.ap_index] = reconstruct_nn(theta, mp_rss_now, db, cm)
    return out


def save_network(theta: NetworkParams, path) -> None:
    """Shape header (layer sizes, input/output width, AP index, seed) followed
    by one text row per weight-matrix row and per bias vector."""
    with open(path, "w") as fh:
        sizes = " ".join(str(s) for s in theta.hidden_sizes)
        fh.write(f"{theta.n_in} {theta.n_out} {theta.ap_index} {theta.seed} {sizes}\n")
        for w, b in zip(theta.weights, theta.biases):
            fh.write(f"layer {w.shape[0]} {w.shape[1]}\n")
            for row in w:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
            fh.write(" ".join(f"{v:.17g}" for v in b) + "\n")


def load_network(path) -> NetworkParams:
    with open(path) as fh:
        head = fh.readline().split()
        n_in, n_out, ap_index, seed = (int(t) for t in head[:4])
        weights, biases = [], []
        line = fh.readline()
        while line:
            toks = line.split()
            assert toks[0] == "layer"
            rows, cols = int(toks[1]), int(toks[2])
            w = np.empty((rows, cols))
            for r in range(rows):
                w[r] = [float(v) for v in fh.readline().split()]
            b = np.array([float(v) for v in fh.readline().split()])
            weights.append(w)
            biases.append(b)
            line = fh.readline()
    theta = NetworkParams(weights=weights, biases=biases, ap_index=ap_index, seed=seed)
    assert theta.n_in == n_in and theta.n_out == n_out
    return theta
