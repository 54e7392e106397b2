"""Stochastic hill climbing over models.

Every iteration applies a random mutation (a subset of the seven actions
below), re-triangulates, renders, encodes, and keeps the candidate only if the
objective strictly improves.

(a) displace a vertex one grid step    (e) split the most spread-out color
(b) add a vertex                       (f) drop a color
(c) remove a vertex                    (g) nudge one channel of a color by 1
(d) recolor a vertex
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..bitstream import encoded_size
from ..metrics import ssim
from ..model import CHANNEL_MAX, MAX_COLORS, Raster, TriModel
from ..raster import render, render_buffers, render_sse
from .config import OPS, SSIM_SCALE, SearchConfig
from .greedy import baseline_encode, grid_colors, init_stochastic, shrink_to_budget
from .palette import nearest, palette_ycc


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 generator for (seed, stream); streams are independent."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


@dataclass(frozen=True)
class Score:
    objective: float
    distortion: float
    bytes: int


def distortion(model: TriModel, target: Raster, metric: str) -> float:
    """MSE of the render, or (1 - SSIM) scaled to a comparable magnitude."""
    if metric == "ssim":
        rgb, _, _ = render_buffers(model)
        return (1.0 - ssim(rgb, target)) * SSIM_SCALE
    return render_sse(model, target.pixels) / target.pixels.size


def score(model: TriModel, target: Raster, cfg: SearchConfig) -> Score:
    d = distortion(model, target, cfg.metric)
    size = encoded_size(model)
    return Score(d + cfg.lam * max(0, size - cfg.budget_bytes), d, size)


def objective(model: TriModel, target: Raster, cfg: SearchConfig) -> float:
    """J = D + lambda * max(0, bytes - budget); lower is better."""
    return score(model, target, cfg).objective


@dataclass
class SearchState:
    model: TriModel
    current: Score
    rng: np.random.Generator
    target_colors: np.ndarray
    iteration: int = 0
    accepted: int = 0
    stale: int = 0
    history: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.current.objective

    def raster(self) -> Raster:
        return render(self.model)


def new_state(model: TriModel, target: Raster, cfg: SearchConfig,
              rng: np.random.Generator) -> SearchState:
    s = score(model, target, cfg)
    return SearchState(model, s, rng, grid_colors(target, model.grid), history=[s.objective])


# -- mutation ----------------------------------------------------------------

class _Draft:
    """Mutable copy of a model: grid-indexed labels plus a palette list."""

    def __init__(self, model: TriModel, target_colors: np.ndarray):
        self.grid = model.grid
        self.label = np.full(model.grid.n_points, -1, np.int64)
        self.label[model.vertices.points] = model.vertices.color_index
        self.palette = [list(e.channels) for e in model.colors]
        self.tyc = target_colors
        self.corners = np.array(model.grid.corners)

    def movable(self) -> np.ndarray:
        occ = self.label >= 0
        occ[self.corners] = False
        return np.flatnonzero(occ)

    def nearest_entry(self, points) -> np.ndarray:
        return nearest(self.tyc[points], palette_ycc(self.palette))

    def reassign(self, points, old) -> None:
        """Move ``points`` to the entry closest to their old entry ``old`` (6-bit
        channels), breaking ties by closeness to the target color."""
        pal = np.asarray(self.palette, dtype=np.int64)
        near = ((np.asarray(old)[:, None, :] - pal[None]) ** 2).sum(-1)
        far = ((self.tyc[points][:, None, :] - palette_ycc(pal)[None]) ** 2).sum(-1)
        far[near > near.min(axis=1, keepdims=True)] = np.inf
        self.label[points] = np.argmin(far, axis=1)

    def model(self) -> TriModel:
        pts = np.flatnonzero(self.label >= 0)
        return TriModel.build(self.grid, pts, self.palette, self.label[pts])


def _displace(d: _Draft, rng) -> None:
    cand = d.movable()
    if cand.size == 0:
        return
    v = int(cand[rng.integers(cand.size)])
    g = d.grid.g
    i, j = v % g, v // g
    moves = [(i + di, j + dj) for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))
             if 0 <= i + di < g and 0 <= j + dj < g and d.label[(j + dj) * g + i + di] < 0]
    if not moves:
        return
    ni, nj = moves[rng.integers(len(moves))]
    d.label[nj * g + ni] = d.label[v]
    d.label[v] = -1


def _add_vertex(d: _Draft, rng) -> None:
    free = np.flatnonzero(d.label < 0)
    if free.size == 0:
        return
    p = int(free[rng.integers(free.size)])
    d.label[p] = d.nearest_entry([p])[0]


def _remove_vertex(d: _Draft, rng) -> None:
    cand = d.movable()
    if cand.size:
        d.label[cand[rng.integers(cand.size)]] = -1


def _recolor_vertex(d: _Draft, rng) -> None:
    n = len(d.palette)
    if n < 2:
        return
    occ = np.flatnonzero(d.label >= 0)
    v = occ[rng.integers(occ.size)]
    k = int(rng.integers(n - 1))
    d.label[v] = k + (k >= d.label[v])


def _split_color(d: _Draft, rng) -> None:
    if len(d.palette) >= MAX_COLORS:
        return
    occ = np.flatnonzero(d.label >= 0)
    lab = d.label[occ]
    best, best_var, best_ch = -1, -1.0, 0
    for k in range(len(d.palette)):
        cols = d.tyc[occ[lab == k]]
        if len(cols) == 0:
            continue
        var = cols.var(axis=0)
        if var.sum() > best_var:
            best, best_var, best_ch = k, float(var.sum()), int(np.argmax(var))
    if best < 0:
        return
    old = np.asarray(d.palette)[lab]
    lo, hi = list(d.palette[best]), list(d.palette[best])
    lo[best_ch] = max(0, lo[best_ch] - 1)
    hi[best_ch] = min(CHANNEL_MAX, hi[best_ch] + 1)
    d.palette[best] = lo
    d.palette.append(hi)
    # only the split entry's vertices are equidistant from two entries
    d.reassign(occ, old)


def _drop_color(d: _Draft, rng) -> None:
    n = len(d.palette)
    if n < 2:
        return
    k = int(rng.integers(n))
    gone = d.palette.pop(k)
    hit = np.flatnonzero(d.label == k)
    d.label[d.label > k] -= 1
    if hit.size:
        d.reassign(hit, np.tile(gone, (hit.size, 1)))


def _perturb_color(d: _Draft, rng) -> None:
    k = int(rng.integers(len(d.palette)))
    ch = int(rng.integers(3))
    step = 1 if rng.integers(2) else -1
    v = d.palette[k][ch] + step
    if not 0 <= v <= CHANNEL_MAX:
        v = d.palette[k][ch] - step     # saturated: go the other way
    d.palette[k][ch] = v


ACTIONS = (_displace, _add_vertex, _remove_vertex, _recolor_vertex,
           _split_color, _drop_color, _perturb_color)


def mutate(state: SearchState, cfg: SearchConfig) -> TriModel:
    """Candidate model: each action fires independently with its probability.

    If nothing fires the draw is repeated; with all probabilities zero the
    current model is returned unchanged.
    """
    probs = np.asarray(cfg.probs)
    if not probs.any():
        return state.model
    rng = state.rng
    while True:
        fire = rng.random(len(OPS)) < probs
        if fire.any():
            break
    d = _Draft(state.model, state.target_colors)
    for act, on in zip(ACTIONS, fire):
        if on:
            act(d, rng)
    return d.model()


# -- search loop ---------------------------------------------------------------

def search(state: SearchState, target: Raster, cfg: SearchConfig) -> SearchState:
    """Hill-climb in place until the iteration or patience limit."""
    if not any(cfg.probs):
        return state
    while state.iteration < cfg.max_iterations and state.stale < cfg.patience:
        cand = mutate(state, cfg)
        state.iteration += 1
        s = score(cand, target, cfg)
        if s.objective < state.current.objective:
            state.model, state.current = cand, s
            state.accepted += 1
            state.stale = 0
            state.history.append(s.objective)
        else:
            state.stale += 1
    return state


def stochastic_encode(target: Raster, cfg: SearchConfig, rng: np.random.Generator | None = None,
                      init: TriModel | None = None) -> TriModel:
    """Greedy initialization, hill climbing, then a greedy shrink to the budget.

    The initialization is shrunk to the budget before the search starts, so
    the search never trades colors for bytes.  ``init`` skips the initialization (``rng`` is then used only by the
    search); by default the generator is ``make_rng(cfg.seed)``.
    """
    rng = make_rng(cfg.seed) if rng is None else rng
    model = init if init is not None else init_stochastic(target, cfg, rng)
    model = shrink_to_budget(model, target, cfg)
    state = search(new_state(model, target, cfg, rng), target, cfg)
    return shrink_to_budget(state.model, target, cfg)


def encode_image(target: Raster, cfg: SearchConfig, stream: int = 0) -> TriModel:
    """Run the configured algorithm on an already sized target."""
    if cfg.algorithm == "baseline":
        return baseline_encode(target, cfg)
    return stochastic_encode(target, cfg, make_rng(cfg.seed, stream))


def fork(rng: np.random.Generator) -> np.random.Generator:
    """Independent copy continuing from the same generator state."""
    return copy.deepcopy(rng)
