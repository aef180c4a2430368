"""Occupancy-grid floor maps, medial-axis skeletons, and skeleton shortest paths.

The walkable area of an indoor layout is represented as a boolean grid.  Its
medial axis (the ridge of the distance-to-wall field) is extracted as a graph
of vertices and edges, and all-pairs shortest paths over that graph give a
wall-aware distance between any two surveyed positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from skimage.morphology import medial_axis


class DegenerateMapError(ValueError):
    """Raised when a map has no usable walkable/obstacle structure."""


class DisconnectedRoomsError(ValueError):
    """Raised when a skeleton path is requested between unreachable areas."""


@dataclass(frozen=True)
class FloorMap:
    """Boolean occupancy grid: cells[iy, ix] is True where there is a wall.

    Cell (iy, ix) covers x in [ix*res, (ix+1)*res), y likewise; positions in
    meters with the origin at the bottom-left corner.
    """

    width_m: float
    height_m: float
    resolution: float
    cells: np.ndarray

    def __post_init__(self):
        nx = self.width_m / self.resolution
        ny = self.height_m / self.resolution
        if abs(nx - round(nx)) > 1e-9 or abs(ny - round(ny)) > 1e-9:
            raise ValueError("map extent must be an integral number of cells")
        if round(nx) < 2 or round(ny) < 2:
            raise ValueError("map must span at least 2 cells per axis")
        if self.cells.shape != (int(round(ny)), int(round(nx))):
            raise ValueError(
                f"cell grid shape {self.cells.shape} does not match extent "
                f"{int(round(ny))}x{int(round(nx))}"
            )
        if bool(self.cells.all()):
            raise DegenerateMapError("degenerate map: walkable region is empty")

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def cell_center(self, iy: int, ix: int) -> np.ndarray:
        return np.array([(ix + 0.5) * self.resolution, (iy + 0.5) * self.resolution])

    def cell_of(self, pos) -> tuple[int, int]:
        ny, nx = self.cells.shape
        ix = min(max(int(pos[0] / self.resolution), 0), nx - 1)
        iy = min(max(int(pos[1] / self.resolution), 0), ny - 1)
        return iy, ix

    def is_walkable(self, pos) -> bool:
        iy, ix = self.cell_of(pos)
        return not bool(self.cells[iy, ix])


@dataclass(frozen=True)
class Skeleton:
    """Medial-axis graph: vertex positions (meters) and undirected edges.

    Edges are stored once as (v, w, length_m) with v < w and queried
    symmetrically.
    """

    vertices: np.ndarray
    edges: tuple[tuple[int, int, float], ...]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class SspMatrix:
    """All-pairs shortest-path lengths between skeleton vertices (meters).

    Unreachable pairs hold numpy.inf.
    """

    d: np.ndarray


def load_map(path) -> FloorMap:
    """Read a map file: header `width_m height_m resolution`, then one text
    row per cell row, top row first, `#` = wall and `.` = walkable."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("//")]
    width_m, height_m, resolution = (float(tok) for tok in lines[0].split())
    rows = lines[1:]
    grid = np.array([[ch == "#" for ch in row] for row in rows], dtype=bool)
    cells = grid[::-1]  # file is top-down, array is bottom-up
    return FloorMap(width_m, height_m, resolution, cells)


def save_map(fmap: FloorMap, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{fmap.width_m:.17g} {fmap.height_m:.17g} {fmap.resolution:.17g}\n")
        for row in fmap.cells[::-1]:
            fh.write("".join("#" if c else "." for c in row) + "\n")


def build_skeleton(fmap: FloorMap) -> Skeleton:
    """Extract the medial-axis graph of the walkable region.

    Walkable cells on the ridge of the distance-to-obstacle field (grid
    thinning of the walkable mask, ordered by the distance transform) become
    vertices; 8-adjacent ridge cells are joined by edges whose length is the
    Euclidean distance between cell centers.
    """
    walkable = ~fmap.cells
    if not walkable.any():
        raise DegenerateMapError("degenerate map: walkable region is empty")
    if not fmap.cells.any():
        raise DegenerateMapError("degenerate map: no obstacle cells to skeletonize against")

    mask = medial_axis(walkable)
    ys, xs = np.nonzero(mask)
    order = np.lexsort((xs, ys))  # row-major, deterministic vertex ids
    ys, xs = ys[order], xs[order]
    vertices = np.column_stack([(xs + 0.5) * fmap.resolution, (ys + 0.5) * fmap.resolution])

    index_of = {(int(y), int(x)): i for i, (y, x) in enumerate(zip(ys, xs))}
    edges = []
    res = fmap.resolution
    for i, (y, x) in enumerate(zip(ys, xs)):
        for dy, dx in ((0, 1), (1, -1), (1, 0), (1, 1)):  # forward half of 8-neighborhood
            j = index_of.get((int(y) + dy, int(x) + dx))
            if j is not None:
                length = res * (np.sqrt(2.0) if dy != 0 and dx != 0 else 1.0)
                edges.append((min(i, j), max(i, j), float(length)))
    return Skeleton(vertices=vertices, edges=tuple(sorted(edges)))


def shortest_path_matrix(sk: Skeleton) -> SspMatrix:
    """All-pairs shortest paths over the skeleton graph (Dijkstra per source)."""
    n = sk.n_vertices
    if n < 1:
        raise ValueError("skeleton has no vertices")
    if not sk.edges:
        d = np.full((n, n), np.inf)
        np.fill_diagonal(d, 0.0)
        return SspMatrix(d)
    vs = np.array([e[0] for e in sk.edges])
    ws = np.array([e[1] for e in sk.edges])
    ls = np.array([e[2] for e in sk.edges])
    graph = csr_matrix((ls, (vs, ws)), shape=(n, n))
    d = dijkstra(graph, directed=False)
    return SspMatrix(d)


def nearest_vertex(pos, sk: Skeleton) -> int:
    """Index of the Euclidean-nearest skeleton vertex (lowest index on ties)."""
    d2 = np.sum((sk.vertices - np.asarray(pos, dtype=float)) ** 2, axis=1)
    return int(np.argmin(d2))


def ssp_distance(i: int, j: int, rps: np.ndarray, sk: Skeleton, D: SspMatrix) -> float:
    """Skeleton shortest-path distance between reference points i and j.

    Snap each point to its nearest skeleton vertex, travel along the
    skeleton between the two vertices, and add both snap distances.  The
    self-distance is 0 by convention.
    """
    if i == j:
        return 0.0
    vi = nearest_vertex(rps[i], sk)
    vj = nearest_vertex(rps[j], sk)
    through = D.d[vi, vj]
    if not np.isfinite(through):
        raise DisconnectedRoomsError(
            f"rooms disconnected: no skeleton path between vertices {vi} and {vj}"
        )
    di = float(np.linalg.norm(np.asarray(rps[i], dtype=float) - sk.vertices[vi]))
    dj = float(np.linalg.norm(np.asarray(rps[j], dtype=float) - sk.vertices[vj]))
    return di + float(through) + dj


def ssp_distance_matrix(rps: np.ndarray, sk: Skeleton, D: SspMatrix) -> np.ndarray:
    """Pairwise skeleton distances for all reference points (zero diagonal)."""
    rps = np.asarray(rps, dtype=float)
    n = len(rps)
    snap_idx = np.array([nearest_vertex(p, sk) for p in rps])
    snap_d = np.linalg.norm(rps - sk.vertices[snap_idx], axis=1)
    through = D.d[np.ix_(snap_idx, snap_idx)]
    if not np.isfinite(through).all():
        bad = np.argwhere(~np.isfinite(through))[0]
        raise DisconnectedRoomsError(
            f"rooms disconnected: reference points {bad[0]} and {bad[1]} share no skeleton path"
        )
    mat = snap_d[:, None] + through + snap_d[None, :]
    np.fill_diagonal(mat, 0.0)
    return mat


def save_skeleton(sk: Skeleton, path) -> None:
    """Write the skeleton as line-list text: `v x y` and `e v w length` rows."""
    with open(path, "w") as fh:
        for x, y in sk.vertices:
            fh.write(f"v {x:.17g} {y:.17g}\n")
        for v, w, length in sk.edges:
            fh.write(f"e {v} {w} {length:.17g}\n")


def load_skeleton(path) -> Skeleton:
    verts = []
    edges = []
    with open(path) as fh:
        for line in fh:
            toks = line.split()
            if not toks:
                continue
            if toks[0] == "v":
                verts.append((float(toks[1]), float(toks[2])))
            elif toks[0] == "e":
                edges.append((int(toks[1]), int(toks[2]), float(toks[3])))
    return Skeleton(vertices=np.array(verts, dtype=float).reshape(-1, 2), edges=tuple(edges))
