"""Domain types for the triangulated thumbnail representation.

A model is a square grid of candidate vertex positions, an occupancy bit per
grid point, a small palette of 6-bit YCoCg colors and one palette index per
occupied point.  All types are immutable once built.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ContractViolation

MAX_GRID = 255
MAX_DIM = 4095
MAX_COLORS = 32
CHANNEL_MAX = 63


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


# -- channel quantization ----------------------------------------------------

def quantize_ycocg(ycocg) -> np.ndarray:
    """Map real YCoCg triples (Y in [0,255], Co/Cg in [-255,255]) to 6 bits each."""
    c = np.asarray(ycocg, dtype=np.float64)
    y = _round_half_up(c[..., 0] * 63.0 / 255.0)
    co = _round_half_up((c[..., 1] / 2.0 + 63.5) * 63.0 / 127.0)
    cg = _round_half_up((c[..., 2] / 2.0 + 63.5) * 63.0 / 127.0)
    q = np.stack([y, co, cg], axis=-1)
    return np.clip(q, 0, CHANNEL_MAX).astype(np.int64)


def dequantize_ycocg(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    out = np.empty(q.shape, dtype=np.float64)
    out[..., 0] = q[..., 0] * 255.0 / 63.0
    out[..., 1] = (q[..., 1] * 127.0 / 63.0 - 63.5) * 2.0
    out[..., 2] = (q[..., 2] * 127.0 / 63.0 - 63.5) * 2.0
    return out


# -- grid --------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    g: int
    width: int
    height: int

    def __post_init__(self):
        msg = grid_problem(self.g, self.width, self.height)
        if msg:
            raise ContractViolation(msg)

    @property
    def n_points(self) -> int:
        return self.g * self.g

    @property
    def corners(self) -> tuple[int, int, int, int]:
        g = self.g
        return (0, g - 1, g * (g - 1), g * g - 1)

    def pixel_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel x and y for every grid point, indexed by row-major grid index."""
        return _pixel_coords(self.g, self.width, self.height)


def grid_problem(g: int, width: int, height: int) -> str | None:
    if not 2 <= g <= MAX_GRID:
        return f"grid size {g} outside 2..{MAX_GRID}"
    if not (2 <= width <= MAX_DIM and 2 <= height <= MAX_DIM):
        return f"image size {width}x{height} outside 2..{MAX_DIM}"
    if g > min(width, height):
        return f"grid size {g} exceeds image side {min(width, height)}"
    return None


def _axis_map(g: int, n: int) -> np.ndarray:
    i = np.arange(g, dtype=np.int64)
    # round-half-up of i*(n-1)/(g-1) in integers
    return (2 * i * (n - 1) + (g - 1)) // (2 * (g - 1))


@lru_cache(maxsize=64)
def _pixel_coords(g: int, width: int, height: int):
    ax = _axis_map(g, width)
    ay = _axis_map(g, height)
    xs = np.tile(ax, g)
    ys = np.repeat(ay, g)
    xs.flags.writeable = False
    ys.flags.writeable = False
    return xs, ys


def grid_to_pixel(grid: GridSpec, i: int, j: int) -> tuple[int, int]:
    if not (0 <= i < grid.g and 0 <= j < grid.g):
        raise ContractViolation(f"grid index ({i}, {j}) outside 0..{grid.g - 1}")
    gm = grid.g - 1
    x = (2 * i * (grid.width - 1) + gm) // (2 * gm)
    y = (2 * j * (grid.height - 1) + gm) // (2 * gm)
    return int(x), int(y)


# -- palette -----------------------------------------------------------------

class ColorEntry(NamedTuple):
    y: int
    co: int
    cg: int
    freq: int

    @property
    def channels(self) -> tuple[int, int, int]:
        return (self.y, self.co, self.cg)


@dataclass(frozen=True)
class ColorTable:
    entries: tuple[ColorEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k: int) -> ColorEntry:
        return self.entries[k]

    @property
    def freqs(self) -> tuple[int, ...]:
        return tuple(e.freq for e in self.entries)

    def channel_array(self) -> np.ndarray:
        return np.array([e.channels for e in self.entries], dtype=np.int64).reshape(-1, 3)

    def ycocg(self) -> np.ndarray:
        """Dequantized colors, shape (|C|, 3)."""
        return dequantize_ycocg(self.channel_array())


# -- vertices and model ------------------------------------------------------

def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class VertexSet:
    occupancy: np.ndarray      # bool, (g*g,), row-major
    color_index: np.ndarray    # int, (V_t,), aligned with occupied points in row-major order

    def __post_init__(self):
        object.__setattr__(self, "occupancy", _frozen(np.asarray(self.occupancy, dtype=bool)))
        object.__setattr__(self, "color_index", _frozen(np.asarray(self.color_index, dtype=np.int64)))

    @property
    def count(self) -> int:
        return int(self.occupancy.sum())

    @property
    def points(self) -> np.ndarray:
        return np.flatnonzero(self.occupancy)

    def __eq__(self, other):
        if not isinstance(other, VertexSet):
            return NotImplemented
        return (np.array_equal(self.occupancy, other.occupancy)
                and np.array_equal(self.color_index, other.color_index))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class TriModel:
    grid: GridSpec
    vertices: VertexSet
    colors: ColorTable

    def __eq__(self, other):
        if not isinstance(other, TriModel):
            return NotImplemented
        return (self.grid == other.grid and self.colors == other.colors
                and self.vertices == other.vertices)

    __hash__ = None

    @property
    def n_vertices(self) -> int:
        return self.vertices.count

    def vertex_ycocg(self) -> np.ndarray:
        """Dequantized color of each occupied point, (V_t, 3)."""
        return self.colors.ycocg()[self.vertices.color_index]

    @classmethod
    def build(cls, grid: GridSpec, points: Iterable[int], colors: Sequence[Sequence[int]],
              labels: Iterable[int]) -> "TriModel":
        """Canonical constructor.

        ``points`` are row-major grid indices, ``labels[k]`` indexes ``colors``
        for ``points[k]``.  Unused colors are dropped, frequencies are derived
        and the table is sorted by frequency (ties: first use in row-major scan).
        """
        pts = np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=np.int64)
        lab = np.asarray(list(labels) if not isinstance(labels, np.ndarray) else labels, dtype=np.int64)
        if pts.shape != lab.shape:
            raise ContractViolation("points and labels differ in length")
        if pts.size and (pts.min() < 0 or pts.max() >= grid.n_points):
            raise ContractViolation("grid index out of range")
        order = np.argsort(pts, kind="stable")
        pts, lab = pts[order], lab[order]
        if pts.size > 1 and np.any(pts[1:] == pts[:-1]):
            raise ContractViolation("duplicate vertex")
        pal = np.asarray(colors, dtype=np.int64).reshape(-1, 3)
        if lab.size and (lab.min() < 0 or lab.max() >= len(pal)):
            raise ContractViolation("label outside palette")
        if pal.size and (pal.min() < 0 or pal.max() > CHANNEL_MAX):
            raise ContractViolation("color channel outside 0..63")

        used, first_pos, counts = np.unique(lab, return_index=True, return_counts=True)
        # most frequent first; ties by first appearance
        rank = sorted(range(len(used)), key=lambda k: (-counts[k], first_pos[k]))
        remap = np.full(len(pal), -1, dtype=np.int64)
        entries = []
        for new, k in enumerate(rank):
            remap[used[k]] = new
            y, co, cg = (int(v) for v in pal[used[k]])
            entries.append(ColorEntry(y, co, cg, int(counts[k])))
        occ = np.zeros(grid.n_points, dtype=bool)
        occ[pts] = True
        return cls(grid, VertexSet(occ, remap[lab]), ColorTable(tuple(entries)))


@dataclass(frozen=True)
class Violation:
    message: str
    location: object = None

    def __str__(self):
        return self.message if self.location is None else f"{self.message} at {self.location}"


def validate(model: TriModel) -> Violation | None:
    """Return the first broken invariant of ``model``, or None if it is valid."""
    grid = model.grid
    msg = grid_problem(grid.g, grid.width, grid.height)
    if msg:
        return Violation(msg, "grid")
    occ = model.vertices.occupancy
    if occ.shape != (grid.n_points,):
        return Violation("occupancy size mismatch", occ.shape)
    g = grid.g
    for c in grid.corners:
        if not occ[c]:
            return Violation("corner unoccupied", (c % g, c // g))
    v_t = int(occ.sum())
    idx = model.vertices.color_index
    if idx.shape != (v_t,):
        return Violation("color index count mismatch", (idx.shape, v_t))
    table = model.colors
    if not 1 <= len(table) <= MAX_COLORS:
        return Violation("color table size outside 1..32", len(table))
    if len(table) > v_t:
        return Violation("more colors than vertices", len(table))
    for k, e in enumerate(table):
        if not all(0 <= ch <= CHANNEL_MAX for ch in e.channels):
            return Violation("color channel outside 0..63", k)
    if idx.size and (idx.min() < 0 or idx.max() >= len(table)):
        bad = int(np.flatnonzero((idx < 0) | (idx >= len(table)))[0])
        return Violation("color index out of range", bad)
    if sum(table.freqs) != v_t:
        return Violation("frequency mismatch", (sum(table.freqs), v_t))
    hist = np.bincount(idx, minlength=len(table))
    for k, e in enumerate(table):
        if e.freq != hist[k]:
            return Violation("frequency mismatch", k)
        if e.freq < 1:
            return Violation("unused color entry", k)
        if k and e.freq > table[k - 1].freq:
            return Violation("color table not sorted by frequency", k)
    return None


def check(model: TriModel) -> TriModel:
    v = validate(model)
    if v is not None:
        raise ContractViolation(f"invalid model: {v}")
    return model


# -- images ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Raster:
    """8-bit RGB image, ``pixels`` has shape (height, width, 3)."""
    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 3 or p.shape[2] != 3:
            raise ContractViolation(f"expected (h, w, 3) pixels, got {p.shape}")
        object.__setattr__(self, "pixels", _frozen(p.astype(np.uint8, copy=False)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None
