"""Greedy model construction: the deterministic baseline, the greedy
initialization of the stochastic search, and the final shrink to budget."""
from __future__ import annotations

import heapq
from functools import lru_cache

import numpy as np

from ..bitstream import encoded_size
from ..errors import BudgetInfeasibleError
from ..model import GridSpec, Raster, TriModel
from ..raster import rgb_to_ycocg
from .config import SearchConfig
from .mesh import LocalMesh
from .palette import cluster_palette, nearest, palette_ycc

SAMPLE_SIDE = 16


def working_grid(target: Raster, cfg: SearchConfig) -> GridSpec:
    return GridSpec(cfg.grid, target.width, target.height)


def grid_colors(target: Raster, grid: GridSpec) -> np.ndarray:
    """Target YCoCg at every grid point, (N_g, 3)."""
    gx, gy = grid.pixel_coords()
    return rgb_to_ycocg(target.pixels[gy, gx])


@lru_cache(maxsize=None)
def minimal_size() -> int:
    """Size of the smallest possible file: four corners, one color."""
    grid = GridSpec(2, 2, 2)
    return encoded_size(TriModel.build(grid, grid.corners, [[0, 0, 0]], [0] * 4))


def check_budget(budget: int) -> None:
    if budget < minimal_size():
        raise BudgetInfeasibleError(
            f"budget of {budget} bytes is below the {minimal_size()}-byte minimum file")


def _model(grid: GridSpec, points, palette, label_of) -> TriModel:
    pts = np.asarray(points, dtype=np.int64)
    return TriModel.build(grid, pts, palette, label_of[pts])


def greedy_prune(mesh: LocalMesh, palette: np.ndarray, label_of: np.ndarray, budget: int,
                 trace: list | None = None) -> TriModel:
    """Remove the least important vertex until the encoded size fits ``budget``.

    Once it fits, vertices whose removal does not increase the error are still
    dropped, so flat regions end up with as few vertices as possible.

    ``label_of`` maps grid index to palette index.  Costs are exact squared
    error changes; after each removal only the neighbours' costs are redone.
    ``trace`` (if given) receives (vertex, cost) for every removal.
    """
    grid = mesh.grid
    corners = mesh.corners
    heap = []
    stamp: dict[int, int] = {}

    def push(v):
        stamp[v] = stamp.get(v, 0) + 1
        heapq.heappush(heap, (mesh.remove_cost(v), v, stamp[v]))

    for v in mesh.vertices.tolist():
        if v not in corners:
            push(v)
    size = encoded_size(_model(grid, mesh.vertices, palette, label_of))
    removed, next_check, fits = 0, 0, False
    while True:
        if not fits and removed >= next_check:
            size = encoded_size(_model(grid, mesh.vertices, palette, label_of))
            fits = size <= budget
            # removing a vertex rarely saves more than a few bytes
            next_check = removed + max(1, (size - budget) // 16)
        while heap and (heap[0][1] not in mesh or heap[0][2] != stamp[heap[0][1]]):
            heapq.heappop(heap)
        if not heap:
            if fits:
                break
            raise BudgetInfeasibleError(f"even the corner-only model needs {size} bytes")
        if fits and heap[0][0] > 0:
            break       # within budget, and every remaining vertex is worth keeping
        cost, v, _ = heapq.heappop(heap)
        if trace is not None:
            trace.append((v, cost))
        for u in mesh.remove(v):
            if u not in corners:
                push(u)
        removed += 1
    return _model(grid, mesh.vertices, palette, label_of)


def _sample_colors(target: Raster) -> np.ndarray:
    xs = np.round(np.linspace(0, target.width - 1, SAMPLE_SIDE)).astype(np.int64)
    ys = np.round(np.linspace(0, target.height - 1, SAMPLE_SIDE)).astype(np.int64)
    return rgb_to_ycocg(target.pixels[np.ix_(ys, xs)].reshape(-1, 3))


def baseline_encode(target: Raster, cfg: SearchConfig, trace: list | None = None) -> TriModel:
    """Deterministic greedy encoder.

    Starts from every grid point, clusters a 16x16 pixel sample into the color
    table, gives each vertex its nearest color, then prunes the least
    important vertices until the file fits the budget.  The table is never
    re-clustered.
    """
    budget = cfg.budget_bytes
    check_budget(budget)
    grid = working_grid(target, cfg)
    palette = cluster_palette(_sample_colors(target), cfg.init_colors)
    label_of = nearest(grid_colors(target, grid), palette_ycc(palette))
    mesh = LocalMesh(grid, target.pixels, np.arange(grid.n_points), palette_ycc(palette)[label_of])
    return greedy_prune(mesh, palette, label_of, budget, trace)


def shrink_to_budget(model: TriModel, target: Raster, cfg: SearchConfig) -> TriModel:
    """Greedily drop vertices (colors fixed) until the model fits the budget."""
    budget = cfg.budget_bytes
    check_budget(budget)
    if encoded_size(model) <= budget:
        return model
    grid = model.grid
    palette = model.colors.channel_array()
    label_of = np.full(grid.n_points, -1, np.int64)
    label_of[model.vertices.points] = model.vertices.color_index
    cols = np.zeros((grid.n_points, 3))
    cols[model.vertices.points] = model.vertex_ycocg()
    mesh = LocalMesh(grid, target.pixels, model.vertices.points, cols)
    return greedy_prune(mesh, palette, label_of, budget)


def init_stochastic(target: Raster, cfg: SearchConfig, rng: np.random.Generator) -> TriModel:
    """Greedy forward selection of vertices, then color agglomeration.

    From the four corners, each step scores ``cfg.candidates`` random free
    grid points (vertex colored with the target pixel) and adds the one with
    the largest error reduction.  The chosen vertices' colors are merged down
    to ``cfg.init_colors`` entries and each vertex takes the nearest entry.
    """
    check_budget(cfg.budget_bytes)
    grid = working_grid(target, cfg)
    tyc = grid_colors(target, grid)
    want = cfg.vertex_target()
    if want >= grid.n_points:
        pts = np.arange(grid.n_points)
    else:
        mesh = LocalMesh(grid, target.pixels, grid.corners, tyc)
        free = np.array([p for p in range(grid.n_points) if p not in mesh.corners], dtype=np.int64)
        for _ in range(want - 4):
            k = min(cfg.candidates, free.size)
            pick = np.sort(rng.choice(free.size, size=k, replace=False))
            gains = [mesh.insert_gain(int(free[i]), tyc[free[i]]) for i in pick]
            best = int(pick[int(np.argmax(gains))])
            mesh.insert(int(free[best]), tyc[free[best]])
            free = np.delete(free, best)
        pts = mesh.vertices
    palette = cluster_palette(tyc[pts], cfg.init_colors)
    labels = nearest(tyc[pts], palette_ycc(palette))
    return TriModel.build(grid, pts, palette, labels)

