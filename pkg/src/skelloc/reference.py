"""Built-in two-room reference layout and its default scenario.

Two stacked 10 x 8 m rooms joined by a doorway, 56 reference points on a
1.2 m grid, 3 APs, and two crowd zones in the top room with independent
per-sample jitter.  Mirrors the default simulation configuration used by the
experiment scripts and the acceptance suite.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .floorplan import FloorMap, save_map
from .radiosim import AccessPoint, CrowdZone, WallZone
from .scenario import Scenario, save_scenario

RESOLUTION = 0.2


def two_room_map() -> FloorMap:
    """10.0 x 16.4 m map: two rooms split by a wall with a centered doorway."""
    nx, ny = 50, 82
    cells = np.zeros((ny, nx), dtype=bool)
    cells[0, :] = cells[-1, :] = True
    cells[:, 0] = cells[:, -1] = True
    cells[40, :] = True
    cells[40, 21:29] = False  # doorway, x in [4.2, 5.8]
    return FloorMap(width_m=10.0, height_m=16.4, resolution=RESOLUTION, cells=cells)


def reference_rps() -> tuple[tuple[float, float], ...]:
    """56 grid points at 1.2 m pitch, 28 per room."""
    cols = [1.4 + 1.2 * k for k in range(7)]
    rows = [2.2 + 1.2 * m for m in range(4)] + [10.4 + 1.2 * m for m in range(4)]
    return tuple((x, y) for y in rows for x in cols)


def reference_aps() -> tuple[AccessPoint, ...]:
    return (
        AccessPoint(position=(2.5, 0.7), tx_power_dbm=20.0, freq_mhz=2400.0),
        AccessPoint(position=(9.3, 8.9), tx_power_dbm=20.0, freq_mhz=2400.0),
        AccessPoint(position=(2.5, 15.7), tx_power_dbm=20.0, freq_mhz=2400.0),
    )


def reference_zones() -> tuple[CrowdZone, ...]:
    # two independently fluctuating crowd regions in the top room; neither
    # contains an AP, so no AP's readings are globally biased
    return (
        CrowdZone(0.2, 8.2, 5.0, 12.5, extra_attenuation_db=3.0, temporal_jitter_db=1.5,
                  extra_noise_db=2.5),
        CrowdZone(5.0, 12.5, 9.8, 16.2, extra_attenuation_db=2.4, temporal_jitter_db=1.2,
                  extra_noise_db=2.0),
    )


def reference_walls() -> tuple[WallZone, ...]:
    # dividing wall on both sides of the doorway
    return (
        WallZone(0.0, 8.0, 4.2, 8.2, attenuation_db=12.0),
        WallZone(5.8, 8.0, 10.0, 8.2, attenuation_db=12.0),
    )


def reference_scenario(map_path, seed: int = 1, **overrides) -> Scenario:
    params = dict(
        map_path=str(map_path),
        aps=reference_aps(),
        rp_positions=reference_rps(),
        tp_count=89,
        path_loss_coeff=30.0,
        noise_sigma_db=0.5,
        crowd_zones=reference_zones(),
        wall_zones=reference_walls(),
        n_samples=81,
        pretrain_samples=40,
        learning_rate=0.1,
        gamma=1.0,
        k=3,
        nn_pretrain_iters=800,
        nn_finetune_iters=800,
        seed=seed,
    )
    params.update(overrides)
    return Scenario(**params)


def materialize(out_dir, seed: int = 1, **overrides) -> Path:
    """Write the reference map and scenario files; returns the scenario path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    map_path = out / "two_room.map"
    save_map(two_room_map(), map_path)
    sc = reference_scenario(map_path, seed=seed, **overrides)
    scenario_path = out / "reference.scenario"
    save_scenario(sc, scenario_path)
    return scenario_path
