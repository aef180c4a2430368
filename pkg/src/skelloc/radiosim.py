"""Synthetic time-varying RSS generation from a log-distance path-loss model.

Received power in dB at a point is transmit power minus an indoor
log-distance path loss, minus extra attenuation whenever the AP-to-receiver
segment crosses a configured crowd zone, plus seeded Gaussian measurement
noise.  Time sample 0 is always the clean reference snapshot (no crowd, no
noise); the per-(position, AP, sample) RNG streams are keyed so generation
order never matters.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

D_FLOOR_M = 0.1

_NOISE_TAG = 0x5E1
_JITTER_TAG = 0xC0D


@dataclass(frozen=True)
class AccessPoint:
    position: tuple[float, float]
    tx_power_dbm: float
    freq_mhz: float

    def __post_init__(self):
        if not np.isfinite(self.tx_power_dbm):
            raise ValueError("tx_power_dbm must be finite")
        if self.freq_mhz <= 0:
            raise ValueError("freq_mhz must be positive")


@dataclass(frozen=True)
class CrowdZone:
    """Axis-aligned rectangle that attenuates any AP->receiver segment crossing it.

    Besides the mean attenuation (with per-sample jitter shared by all
    receivers), a zone can add body-shadowing noise variance to crossing
    readings.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    extra_attenuation_db: float
    temporal_jitter_db: float = 0.0
    extra_noise_db: float = 0.0

    def __post_init__(self):
        if self.extra_attenuation_db < 0:
            raise ValueError("extra_attenuation_db must be >= 0")
        if self.extra_noise_db < 0:
            raise ValueError("extra_noise_db must be >= 0")


@dataclass(frozen=True)
class WallZone:
    """Static attenuation rectangle (interior walls); active at every sample,
    including the reference snapshot."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    attenuation_db: float

    def __post_init__(self):
        if self.attenuation_db < 0:
            raise ValueError("attenuation_db must be >= 0")


@dataclass(frozen=True)
class Environment:
    path_loss_coeff: float
    noise_sigma_db: float = 0.0
    crowd_zones: tuple[CrowdZone, ...] = ()
    wall_zones: tuple[WallZone, ...] = ()
    rng_seed: int = 0

    def __post_init__(self):
        if self.path_loss_coeff <= 0:
            raise ValueError("path_loss_coeff must be positive")
        if self.noise_sigma_db < 0:
            raise ValueError("noise_sigma_db must be >= 0")


@dataclass(frozen=True)
class RssDatabase:
    """values[n, l, k]: RSS in dB at point n from AP l at time sample k.

    Sample 0 is the clean reference snapshot.
    """

    values: np.ndarray
    point_positions: np.ndarray
    time_labels: np.ndarray

    def __post_init__(self):
        n, l, k = self.values.shape
        if self.point_positions.shape != (n, 2):
            raise ValueError("point_positions shape mismatch")
        if self.time_labels.shape != (k,):
            raise ValueError("time_labels shape mismatch")
        if not np.isfinite(self.values).all():
            raise ValueError("database holds non-finite RSS values")

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def n_ap(self) -> int:
        return self.values.shape[1]

    @property
    def n_samples(self) -> int:
        return self.values.shape[2]


def _float_bits(x: float) -> int:
    return int(np.float64(x).view(np.uint64))


def _segment_intersects_rect(p0, p1, zone: CrowdZone) -> bool:
    # Liang-Barsky clip of the segment parameter range against each slab.
    t0, t1 = 0.0, 1.0
    for a, b, lo, hi in (
        (p0[0], p1[0], zone.x_min, zone.x_max),
        (p0[1], p1[1], zone.y_min, zone.y_max),
    ):
        d = b - a
        if abs(d) < 1e-15:
            if a < lo or a > hi:
                return False
            continue
        ta, tb = (lo - a) / d, (hi - a) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return False
    return True


def zone_jitter(env: Environment, zone_index: int, t: int) -> float:
    """Per-sample crowd-density jitter of one zone, shared by all receivers."""
    zone = env.crowd_zones[zone_index]
    if zone.temporal_jitter_db == 0.0:
        return 0.0
    rng = np.random.default_rng([env.rng_seed, _JITTER_TAG, zone_index, t])
    return float(rng.uniform(-zone.temporal_jitter_db, zone.temporal_jitter_db))


def crowd_attenuation(pos, ap_pos, env: Environment, t: int) -> float:
    """Total extra attenuation (dB) along the AP->receiver segment at sample t."""
    total = 0.0
    for zi, zone in enumerate(env.crowd_zones):
        if _segment_intersects_rect(ap_pos, pos, zone):
            total += zone.extra_attenuation_db + zone_jitter(env, zi, t)
    return total


def _noise_sigma(env: Environment, pos, ap_pos) -> float:
    var = env.noise_sigma_db**2
    for zone in env.crowd_zones:
        if zone.extra_noise_db > 0.0 and _segment_intersects_rect(ap_pos, pos, zone):
            var += zone.extra_noise_db**2
    return float(np.sqrt(var))


def _noise(env: Environment, pos, ap: AccessPoint, t: int) -> float:
    sigma = _noise_sigma(env, pos, ap.position)
    if sigma == 0.0:
        return 0.0
    rng = np.random.default_rng(
        [
            env.rng_seed,
            _NOISE_TAG,
            _float_bits(pos[0]),
            _float_bits(pos[1]),
            _float_bits(ap.position[0]),
            _float_bits(ap.position[1]),
            _float_bits(ap.freq_mhz),
            t,
        ]
    )
    return float(rng.normal(0.0, sigma))


def wall_attenuation(pos, ap_pos, env: Environment) -> float:
    """Static attenuation (dB) from interior walls crossed by the segment."""
    total = 0.0
    for zone in env.wall_zones:
        if _segment_intersects_rect(ap_pos, pos, zone):
            total += zone.attenuation_db
    return total


def synth_rss(pos, ap: AccessPoint, env: Environment, t: int) -> float:
    """RSS (dB) at `pos` from `ap` at time sample `t`.

    t = 0 is the reference snapshot: crowd zones and noise are disabled;
    wall attenuation is part of the static geometry and always applies.
    """
    d = float(np.hypot(pos[0] - ap.position[0], pos[1] - ap.position[1]))
    d = max(d, D_FLOOR_M)
    path_loss = 20.0 * np.log10(ap.freq_mhz) + env.path_loss_coeff * np.log10(d) - 28.0
    rss = ap.tx_power_dbm - path_loss - wall_attenuation(pos, ap.position, env)
    if t != 0:
        rss -= crowd_attenuation(pos, ap.position, env, t)
        rss += _noise(env, pos, ap, t)
    return float(rss)


def build_database(points, aps, env: Environment, n_samples: int) -> RssDatabase:
    """Synthesize the full (point x AP x sample) database; sample 0 is the reference."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    values = np.empty((len(points), len(aps), n_samples))
    for n, pos in enumerate(points):
        for l, ap in enumerate(aps):
            for k in range(n_samples):
                values[n, l, k] = synth_rss(pos, ap, env, k)
    return RssDatabase(
        values=values,
        point_positions=points,
        time_labels=np.arange(n_samples),
    )


def snapshot(points, aps, env: Environment, t: int) -> np.ndarray:
    """One (point x AP) RSS slice at sample t, outside any stored database."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.empty((len(points), len(aps)))
    for n, pos in enumerate(points):
        for l, ap in enumerate(aps):
            out[n, l] = synth_rss(pos, ap, env, t)
    return out


def noiseless(env: Environment) -> Environment:
    """Same world state (crowd + jitter), Gaussian measurement noise off."""
    return replace(env, noise_sigma_db=0.0)


def mp_stream(db: RssDatabase, exemplars, t: int) -> np.ndarray:
    """Monitor-point rows of the database at sample t, in sorted exemplar order."""
    idx = sorted(int(i) for i in exemplars)
    for i in idx:
        if i < 0 or i >= db.n_points:
            raise IndexError(f"exemplar index {i} outside database of {db.n_points} points")
    if t < 0 or t >= db.n_samples:
        raise IndexError(f"time sample {t} outside database of {db.n_samples} samples")
    return db.values[idx, :, t].reshape(len(idx), db.n_ap)


def save_database(db: RssDatabase, path) -> None:
    """Text format: `n_points n_ap n_samples`, positions, time labels, then one
    `n l v0 v1 ...` series line per (point, AP)."""
    with open(path, "w") as fh:
        fh.write(f"{db.n_points} {db.n_ap} {db.n_samples}\n")
        for x, y in db.point_positions:
            fh.write(f"p {x:.17g} {y:.17g}\n")
        fh.write("t " + " ".join(str(int(t)) for t in db.time_labels) + "\n")
        for n in range(db.n_points):
            for l in range(db.n_ap):
                series = " ".join(f"{v:.17g}" for v in db.values[n, l])
                fh.write(f"{n} {l} {series}\n")


def load_database(path) -> RssDatabase:
    with open(path) as fh:
        first = fh.readline().split()
        n_points, n_ap, n_samples = int(first[0]), int(first[1]), int(first[2])
        positions = np.empty((n_points, 2))
        for n in range(n_points):
            toks = fh.readline().split()
            positions[n] = (float(toks[1]), float(toks[2]))
        toks = fh.readline().split()
        time_labels = np.array([int(t) for t in toks[1:]])
        values = np.empty((n_points, n_ap, n_samples))
        for line in fh:
            toks = line.split()
            if not toks:
                continue
            n, l = int(toks[0]), int(toks[1])
            values[n, l] = [float(v) for v in toks[2:]]
    return RssDatabase(values=values, point_positions=positions, time_labels=time_labels)
