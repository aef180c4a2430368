"""Scenario configuration: one plain key-value text file drives a full run.

Repeated keys declare lists (APs, crowd zones, explicit reference/test
points).  Stage seeds (synthesis, network init, batching, test-point draw)
are derived from the base seed but can each be pinned independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .floorplan import FloorMap, load_map
from .radiosim import AccessPoint, CrowdZone, Environment, WallZone

ALL_METHODS = (
    "csle-original",
    "csle-true",
    "csle-lr",
    "csle-nn",
    "wknn-original",
    "wknn-true",
    "wknn-lr",
    "wknn-nn",
)

_STAGE_OFFSETS = {"synth": 101, "init": 211, "batch": 307, "tp": 401}


def _derive(base_seed: int, stage: str) -> int:
    return int(np.random.SeedSequence([base_seed, _STAGE_OFFSETS[stage]]).generate_state(1)[0])


@dataclass
class Scenario:
    map_path: str
    aps: tuple[AccessPoint, ...]
    rp_positions: tuple[tuple[float, float], ...] = ()
    rp_pitch: float = 1.2
    rp_margin: float = 1.0
    tp_positions: tuple[tuple[float, float], ...] = ()
    tp_count: int = 89
    tp_margin: float = 0.3
    path_loss_coeff: float = 30.0
    noise_sigma_db: float = 1.0
    crowd_zones: tuple[CrowdZone, ...] = ()
    wall_zones: tuple[WallZone, ...] = ()
    n_samples: int = 41
    pretrain_samples: int = 20
    online_sample: int = -1  # -1: first index past the database
    similarity_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    preference: float | None = None  # None: per-column median
    delta_orientation: str = "literal"
    damping: float = 0.5
    cluster_max_iter: int = 500
    cluster_stable_iters: int = 10
    learning_rate: float = 0.1
    gamma: float = 1.0
    lr_epochs: int = 200
    nn_hidden: tuple[int, ...] = (64, 256, 512, 128, 64)
    nn_pretrain_iters: int = 800
    nn_finetune_iters: int = 800
    nn_batch_size: int | None = None
    k: int = 3
    methods: tuple[str, ...] = ALL_METHODS
    seed: int = 1
    seed_synth: int | None = None
    seed_init: int | None = None
    seed_batch: int | None = None
    seed_tp: int | None = None

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2 (reference plus training)")
        if not 1 <= self.pretrain_samples <= self.n_samples - 1:
            raise ValueError("pretrain_samples must be within the training samples")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.learning_rate <= 0 or self.gamma <= 0:
            raise ValueError("learning_rate and gamma must be positive")
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ValueError(f"unknown method '{m}'")

    def stage_seed(self, stage: str) -> int:
        pinned = getattr(self, f"seed_{stage}")
        return pinned if pinned is not None else _derive(self.seed, stage)

    @property
    def t_online(self) -> int:
        return self.n_samples if self.online_sample < 0 else self.online_sample

    def environment(self, crowded: bool = True) -> Environment:
        return Environment(
            path_loss_coeff=self.path_loss_coeff,
            noise_sigma_db=self.noise_sigma_db,
            crowd_zones=self.crowd_zones if crowded else (),
            wall_zones=self.wall_zones,
            rng_seed=self.stage_seed("synth"),
        )

    def with_seed(self, seed: int) -> "Scenario":
        return replace(
            self, seed=seed, seed_synth=None, seed_init=None, seed_batch=None, seed_tp=None
        )


def _grid_points(fmap: FloorMap, pitch: float, margin: float) -> list[tuple[float, float]]:
    """Pitch-spaced grid over walkable cells at least `margin` from any wall."""
    from scipy.ndimage import distance_transform_edt

    clearance = distance_transform_edt(~fmap.cells) * fmap.resolution
    points = []
    y = margin
    while y < fmap.height_m - margin / 2:
        x = margin
        while x < fmap.width_m - margin / 2:
            iy, ix = fmap.cell_of((x, y))
            if not fmap.cells[iy, ix] and clearance[iy, ix] >= margin:
                points.append((x, y))
            x += pitch
        y += pitch
    return points


def resolve_points(scenario: Scenario, fmap: FloorMap) -> tuple[np.ndarray, np.ndarray]:
    """Reference-point and test-point positions for a scenario on a map."""
    if scenario.rp_positions:
        rps = np.array(scenario.rp_positions, dtype=float)
    else:
        rps = np.array(_grid_points(fmap, scenario.rp_pitch, scenario.rp_margin))
    if len(rps) < 2:
        raise ValueError("scenario yields fewer than two reference points")
    for p in rps:
        if not fmap.is_walkable(p):
            raise ValueError(f"reference point {tuple(p)} is inside a wall")

    if scenario.tp_positions:
        tps = np.array(scenario.tp_positions, dtype=float)
    else:
        rng = np.random.default_rng(scenario.stage_seed("tp"))
        tps = []
        attempts = 0
        while len(tps) < scenario.tp_count:
            attempts += 1
            if attempts > 100000:
                raise ValueError("could not place test points inside the walkable area")
            x = rng.uniform(0, fmap.width_m)
            y = rng.uniform(0, fmap.height_m)
            iy, ix = fmap.cell_of((x, y))
            if fmap.cells[iy, ix]:
                continue
            if (
                x < scenario.tp_margin
                or y < scenario.tp_margin
                or x > fmap.width_m - scenario.tp_margin
                or y > fmap.height_m - scenario.tp_margin
            ):
                continue
            tps.append((x, y))
        tps = np.array(tps)
    for p in tps:
        if not fmap.is_walkable(p):
            raise ValueError(f"test point {tuple(p)} is inside a wall")
    return rps, tps


def load_scenario(path) -> Scenario:
    path = Path(path)
    pairs: list[tuple[str, str]] = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("//")[0].strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            pairs.append((key.strip(), value.strip()))

    single: dict[str, str] = {}
    aps, zones, walls, rps, tps, methods = [], [], [], [], [], []
    for key, value in pairs:
        if key == "ap":
            x, y, p, f = (float(t) for t in value.split())
            aps.append(AccessPoint(position=(x, y), tx_power_dbm=p, freq_mhz=f))
        elif key == "crowd_zone":
            toks = [float(t) for t in value.split()]
            zones.append(CrowdZone(*toks))
        elif key == "wall_zone":
            toks = [float(t) for t in value.split()]
            walls.append(WallZone(*toks))
        elif key == "rp":
            x, y = (float(t) for t in value.split())
            rps.append((x, y))
        elif key == "tp":
            x, y = (float(t) for t in value.split())
            tps.append((x, y))
        elif key == "method":
            methods.append(value)
        else:
            single[key] = value

    if "map" not in single:
        raise ValueError("scenario file must name a map")
    if not aps:
        raise ValueError("scenario file must declare at least one ap")
    map_path = str((path.parent / single["map"]).resolve())

    def fget(key, default):
        return float(single[key]) if key in single else default

    def iget(key, default):
        return int(single[key]) if key in single else default

    preference = None
    if single.get("preference", "median") != "median":
        preference = float(single["preference"])

    sc = Scenario(
        map_path=map_path,
        aps=tuple(aps),
        rp_positions=tuple(rps),
        rp_pitch=fget("rp_pitch", 1.2),
        rp_margin=fget("rp_margin", 1.0),
        tp_positions=tuple(tps),
        tp_count=iget("tp_count", 89),
        tp_margin=fget("tp_margin", 0.3),
        path_loss_coeff=fget("path_loss_coeff", 30.0),
        noise_sigma_db=fget("noise_sigma_db", 1.0),
        crowd_zones=tuple(zones),
        wall_zones=tuple(walls),
        n_samples=iget("n_samples", 41),
        pretrain_samples=iget("pretrain_samples", 20),
        online_sample=iget("online_sample", -1),
        similarity_weights=tuple(
            float(t) for t in single.get("weights", "0.3333333333333333 0.3333333333333333 0.3333333333333333").split()
        ),
        preference=preference,
        delta_orientation=single.get("delta_orientation", "literal"),
        damping=fget("damping", 0.5),
        cluster_max_iter=iget("cluster_max_iter", 500),
        cluster_stable_iters=iget("cluster_stable_iters", 10),
        learning_rate=fget("learning_rate", 0.1),
        gamma=fget("gamma", 1.0),
        lr_epochs=iget("lr_epochs", 200),
        nn_hidden=tuple(int(t) for t in single.get("nn_hidden", "64 256 512 128 64").split()),
        nn_pretrain_iters=iget("nn_pretrain_iters", 800),
        nn_finetune_iters=iget("nn_finetune_iters", 800),
        nn_batch_size=iget("nn_batch_size", 0) or None,
        k=iget("k", 3),
        methods=tuple(methods) if methods else ALL_METHODS,
        seed=iget("seed", 1),
        seed_synth=iget("seed_synth", -1),
        seed_init=iget("seed_init", -1),
        seed_batch=iget("seed_batch", -1),
        seed_tp=iget("seed_tp", -1),
    )
    # -1 sentinels mean "derive from the base seed"
    for stage in ("synth", "init", "batch", "tp"):
        if getattr(sc, f"seed_{stage}") == -1:
            setattr(sc, f"seed_{stage}", None)
    return sc


def save_scenario(sc: Scenario, path) -> None:
    path = Path(path)
    lines = [f"map = {Path(sc.map_path).name}"]
    for ap in sc.aps:
        lines.append(
            f"ap = {ap.position[0]:.17g} {ap.position[1]:.17g} "
            f"{ap.tx_power_dbm:.17g} {ap.freq_mhz:.17g}"
        )
    for z in sc.crowd_zones:
        lines.append(
            f"crowd_zone = {z.x_min:.17g} {z.y_min:.17g} {z.x_max:.17g} {z.y_max:.17g} "
            f"{z.extra_attenuation_db:.17g} {z.temporal_jitter_db:.17g} {z.extra_noise_db:.17g}"
        )
    for z in sc.wall_zones:
        lines.append(
            f"wall_zone = {z.x_min:.17g} {z.y_min:.17g} {z.x_max:.17g} {z.y_max:.17g} "
            f"{z.attenuation_db:.17g}"
        )
    for x, y in sc.rp_positions:
        lines.append(f"rp = {x:.17g} {y:.17g}")
    for x, y in sc.tp_positions:
        lines.append(f"tp = {x:.17g} {y:.17g}")
    lines += [
        f"rp_pitch = {sc.rp_pitch:.17g}",
        f"rp_margin = {sc.rp_margin:.17g}",
        f"tp_count = {sc.tp_count}",
        f"tp_margin = {sc.tp_margin:.17g}",
        f"path_loss_coeff = {sc.path_loss_coeff:.17g}",
        f"noise_sigma_db = {sc.noise_sigma_db:.17g}",
        f"n_samples = {sc.n_samples}",
        f"pretrain_samples = {sc.pretrain_samples}",
        f"online_sample = {sc.online_sample}",
        "weights = " + " ".join(f"{w:.17g}" for w in sc.similarity_weights),
        f"preference = {'median' if sc.preference is None else f'{sc.preference:.17g}'}",
        f"delta_orientation = {sc.delta_orientation}",
        f"damping = {sc.damping:.17g}",
        f"cluster_max_iter = {sc.cluster_max_iter}",
        f"cluster_stable_iters = {sc.cluster_stable_iters}",
        f"learning_rate = {sc.learning_rate:.17g}",
        f"gamma = {sc.gamma:.17g}",
        f"lr_epochs = {sc.lr_epochs}",
        "nn_hidden = " + " ".join(str(h) for h in sc.nn_hidden),
        f"nn_pretrain_iters = {sc.nn_pretrain_iters}",
        f"nn_finetune_iters = {sc.nn_finetune_iters}",
        f"nn_batch_size = {sc.nn_batch_size or 0}",
        f"k = {sc.k}",
        f"seed = {sc.seed}",
    ]
    for m in sc.methods:
        lines.append(f"method = {m}")
    path.write_text("\n".join(lines) + "\n")


def load_scenario_map(sc: Scenario) -> FloorMap:
    return load_map(sc.map_path)
