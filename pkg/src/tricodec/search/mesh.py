"""Editable Delaunay mesh that keeps the squared error of every triangle.

Greedy insertion and removal need the error change of many hypothetical
edits.  Each edit only touches a small region (the Bowyer-Watson cavity of an
inserted point, or the star of a removed one), so the mesh re-scores just the
triangles it would create.  Ties are broken exactly as in ``delaunay``, so
after any sequence of edits the mesh equals the canonical triangulation of
its vertex set.
"""
from __future__ import annotations

from collections import defaultdict

import numpy as np

from ..errors import ContractViolation
from ..model import GridSpec
from ..raster import rasterize
from ..triangulate import brute_force_hole, triangulate_points

_EMPTY_F = np.zeros((0, 0, 3), np.float64)
_EMPTY_U8 = np.zeros((0, 0, 3), np.uint8)
_EMPTY_I = np.zeros((0, 0), np.int64)


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


class LocalMesh:
    """Delaunay mesh over grid points of ``grid`` scored against ``target``.

    ``colors`` holds a YCoCg color for every grid index (only occupied ones
    matter); it can be changed with :meth:`set_color`.
    """

    def __init__(self, grid: GridSpec, target: np.ndarray, points, colors: np.ndarray):
        self.grid = grid
        self.target = np.ascontiguousarray(target, dtype=np.uint8)
        h, w = self.target.shape[:2]
        if (w, h) != (grid.width, grid.height):
            raise ContractViolation("target size does not match the grid")
        gx, gy = grid.pixel_coords()
        self.px = gx.tolist()
        self.py = gy.tolist()
        self.corners = frozenset(grid.corners)
        # same exact coordinate scaling as render(), so scores match it pixel for pixel
        self.vx = gx * (w - 1)
        self.vy = gy * (h - 1)
        self.mx, self.my = w - 1, h - 1
        self.col = np.ascontiguousarray(colors, dtype=np.float64).reshape(grid.n_points, 3).copy()
        self.owner = np.full((h, w), -1, np.int64)
        self.tris: dict[int, tuple[int, int, int]] = {}
        self.edges: dict[tuple[int, int], int] = {}
        self.star: dict[int, set[int]] = defaultdict(set)
        self.sse: dict[int, int] = {}
        self.total = 0
        self._next = 0
        pts = np.unique(np.asarray(points, dtype=np.int64))
        slots = triangulate_points(gx[pts], gy[pts], pts)
        self._add(pts[slots].tolist())

    # -- bookkeeping -----------------------------------------------------------

    @property
    def vertices(self) -> np.ndarray:
        return np.array(sorted(v for v, s in self.star.items() if s), dtype=np.int64)

    def __contains__(self, v) -> bool:
        return bool(self.star.get(v))

    def _score(self, tris, ids=None):
        """Squared error of each (ccw) triangle; also claims pixels when ``ids`` given."""
        arr = np.asarray(tris, dtype=np.int64).reshape(-1, 3)
        sse = np.zeros(len(arr), np.int64)
        h, w = self.owner.shape
        owner = self.owner if ids is not None else _EMPTY_I
        tid = np.asarray(ids if ids is not None else np.zeros(len(arr)), dtype=np.int64)
        rasterize(arr, self.vx, self.vy, self.col, w, h, self.mx, self.my,
                  _EMPTY_F, _EMPTY_U8, owner, tid, self.target, sse)
        return sse

    def _add(self, tris):
        ids = list(range(self._next, self._next + len(tris)))
        self._next += len(tris)
        sse = self._score(tris, ids)
        for t, (a, b, c), e in zip(ids, tris, sse.tolist()):
            self.tris[t] = (a, b, c)
            self.edges[(a, b)] = t
            self.edges[(b, c)] = t
            self.edges[(c, a)] = t
            for v in (a, b, c):
                self.star[v].add(t)
            self.sse[t] = e
            self.total += e

    def _drop(self, tids):
        for t in tids:
            a, b, c = self.tris.pop(t)
            for e in ((a, b), (b, c), (c, a)):
                if self.edges.get(e) == t:
                    del self.edges[e]
            for v in (a, b, c):
                self.star[v].discard(t)
            self.total -= self.sse.pop(t)

    # -- predicates --------------------------------------------------------------

    def _in_circle(self, a, b, c, d) -> bool:
        """Perturbed incircle test, identical to the triangulation kernel's."""
        px, py = self.px, self.py
        adx, ady = px[a] - px[d], py[a] - py[d]
        bdx, bdy = px[b] - px[d], py[b] - py[d]
        cdx, cdy = px[c] - px[d], py[c] - py[d]
        det = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
               + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
               + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
        if det:
            return det > 0
        m = min(a, b, c, d)
        if d == m:
            return True
        if a == m:
            return _orient(px[b], py[b], px[c], py[c], px[d], py[d]) < 0
        if b == m:
            return _orient(px[c], py[c], px[a], py[a], px[d], py[d]) < 0
        return _orient(px[a], py[a], px[b], py[b], px[d], py[d]) < 0

    # -- insertion ----------------------------------------------------------------

    def _cavity(self, p):
        t0 = int(self.owner[self.py[p], self.px[p]])
        cav = {t0}
        stack = [t0]
        while stack:
            a, b, c = self.tris[stack.pop()]
            for u, v in ((a, b), (b, c), (c, a)):
                nb = self.edges.get((v, u))
                if nb is None or nb in cav:
                    continue
                if self._in_circle(*self.tris[nb], p):
                    cav.add(nb)
                    stack.append(nb)
        new = []
        px, py = self.px, self.py
        for t in cav:
            a, b, c = self.tris[t]
            for u, v in ((a, b), (b, c), (c, a)):
                if self.edges.get((v, u)) in cav:
                    continue
                if _orient(px[u], py[u], px[v], py[v], px[p], py[p]) == 0:
                    continue        # p splits this hull edge
                new.append((u, v, p))
        return cav, new

    def insert_gain(self, p: int, color) -> int:
        """Error reduction from inserting ``p`` with ``color`` (positive is better)."""
        if p in self:
            raise ContractViolation(f"grid point {p} is already a vertex")
        cav, new = self._cavity(p)
        saved = self.col[p].copy()
        self.col[p] = color
        after = int(self._score(new).sum())
        self.col[p] = saved
        return sum(self.sse[t] for t in cav) - after

    def insert(self, p: int, color) -> None:
        if p in self:
            raise ContractViolation(f"grid point {p} is already a vertex")
        cav, new = self._cavity(p)
        self.col[p] = color
        self._drop(cav)
        self._add(new)

    # -- removal ----------------------------------------------------------------

    def _refill(self, v):
        if v in self.corners:
            raise ContractViolation("corners cannot be removed")
        star = sorted(self.star[v])
        if not star:
            raise ContractViolation(f"grid point {v} is not a vertex")
        link = sorted({u for t in star for u in self.tris[t]} - {v})
        px, py = self.px, self.py
        region = np.array([[px[a], py[a], px[b], py[b], px[c], py[c]]
                           for a, b, c in (self.tris[t] for t in star)], dtype=np.int64)
        lx = np.array([px[u] for u in link], dtype=np.int64)
        ly = np.array([py[u] for u in link], dtype=np.int64)
        local = brute_force_hole(lx, ly, np.array(link, dtype=np.int64), region)
        ids = np.array(link, dtype=np.int64)
        return star, [tuple(r) for r in ids[local].tolist()]

    def remove_cost(self, v: int) -> int:
        """Error increase from removing vertex ``v``."""
        star, new = self._refill(v)
        return int(self._score(new).sum()) - sum(self.sse[t] for t in star)

    def remove(self, v: int) -> list[int]:
        """Remove ``v``; returns the vertices whose star changed."""
        star, new = self._refill(v)
        link = sorted({u for t in star for u in self.tris[t]} - {v})
        self._drop(star)
        self._add(new)
        del self.star[v]
        return link

    # -- colors -------------------------------------------------------------------

    def set_colors(self, colors: np.ndarray) -> None:
        """Replace all vertex colors and re-score every triangle."""
        self.col[:] = np.asarray(colors, dtype=np.float64).reshape(self.col.shape)
        tids = list(self.tris)
        tris = [self.tris[t] for t in tids]
        sse = self._score(tris, tids).tolist()
        self.sse = dict(zip(tids, sse))
        self.total = sum(sse)
