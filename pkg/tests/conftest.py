import numpy as np
import pytest

from skelloc.floorplan import FloorMap
from skelloc.reference import two_room_map


@pytest.fixture(scope="session")
def corridor_map() -> FloorMap:
    """Open-ended corridor: walls on the long sides, odd interior width."""
    ny, nx = 9, 21
    cells = np.zeros((ny, nx), dtype=bool)
    cells[0, :] = True
    cells[-1, :] = True
    return FloorMap(width_m=nx * 0.2, height_m=ny * 0.2, resolution=0.2, cells=cells)


@pytest.fixture(scope="session")
def square_room_map() -> FloorMap:
    """Closed square room, odd interior so the exact center cell exists."""
    n = 21
    cells = np.zeros((n, n), dtype=bool)
    cells[0, :] = cells[-1, :] = True
    cells[:, 0] = cells[:, -1] = True
    return FloorMap(width_m=n * 0.2, height_m=n * 0.2, resolution=0.2, cells=cells)


@pytest.fixture(scope="session")
def two_rooms() -> FloorMap:
    return two_room_map()


@pytest.fixture(scope="session")
def sealed_rooms_map() -> FloorMap:
    """Two rooms with no doorway at all: disconnected walkable components."""
    ny, nx = 21, 21
    cells = np.zeros((ny, nx), dtype=bool)
    cells[0, :] = cells[-1, :] = True
    cells[:, 0] = cells[:, -1] = True
    cells[10, :] = True
    return FloorMap(width_m=nx * 0.2, height_m=ny * 0.2, resolution=0.2, cells=cells)


def cell_set(fmap: FloorMap, vertices: np.ndarray) -> set[tuple[int, int]]:
    """Grid cells (iy, ix) touched by the given vertex positions."""
    res = fmap.resolution
    return {(int(round(y / res - 0.5)), int(round(x / res - 0.5))) for x, y in vertices}
