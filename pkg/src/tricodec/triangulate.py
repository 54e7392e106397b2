"""Canonical Delaunay triangulation of grid-quantized vertices.

Encoder and decoder must rebuild the same mesh from vertex positions alone, so
everything here runs on exact integer pixel coordinates.  Cocircular ties,
which are everywhere on a lattice, are broken by symbolic perturbation: each
point's paraboloid lift is lowered by an infinitesimal that grows as its
row-major grid index shrinks.  For a set of cocircular points this yields the
fan around the smallest index; globally it is a consistent regular
triangulation, so the result does not depend on insertion order.

Coordinates are bounded by 4095, which keeps incircle determinants below 2**53
and lets the kernels use plain int64.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ContractViolation, DegenerateGeometryError
from .model import GridSpec, VertexSet


@numba.njit(cache=True, inline="always")
def orient(ax, ay, bx, by, cx, cy):
    """Twice the signed area of (a, b, c); positive when counter-clockwise in (x, y)."""
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@numba.njit(cache=True, inline="always")
def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """Positive when d is strictly inside the circle through ccw (a, b, c)."""
    adx = ax - dx
    ady = ay - dy
    bdx = bx - dx
    bdy = by - dy
    cdx = cx - dx
    cdy = cy - dy
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (ad * (bdx * cdy - cdx * bdy)
            + bd * (cdx * ady - adx * cdy)
            + cd * (adx * bdy - bdx * ady))


@numba.njit(cache=True)
def in_circle_sos(xs, ys, ids, a, b, c, d):
    """Perturbed strict incircle test; (a, b, c) must be counter-clockwise."""
    det = incircle(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c], xs[d], ys[d])
    if det != 0:
        return det > 0
    m = min(min(ids[a], ids[b]), min(ids[c], ids[d]))
    if ids[d] == m:
        return True
    if ids[a] == m:
        return orient(xs[b], ys[b], xs[c], ys[c], xs[d], ys[d]) < 0
    if ids[b] == m:
        return orient(xs[c], ys[c], xs[a], ys[a], xs[d], ys[d]) < 0
    return orient(xs[a], ys[a], xs[b], ys[b], xs[d], ys[d]) < 0


@numba.njit(cache=True)
def _locate(tv, tn, alive, ntri, xs, ys, p, start):
    t = start
    n_steps = 4 * ntri + 16
    for _ in range(n_steps):
        moved = False
        for k in range(3):
            a = tv[t, (k + 1) % 3]
            b = tv[t, (k + 2) % 3]
            if orient(xs[a], ys[a], xs[b], ys[b], xs[p], ys[p]) < 0:
                nb = tn[t, k]
                if nb >= 0:
                    t = nb
                    moved = True
                    break
        if not moved:
            return t
    # walk did not settle; fall back to a scan
    for t in range(ntri):
        if not alive[t]:
            continue
        inside = True
        for k in range(3):
            a = tv[t, (k + 1) % 3]
            b = tv[t, (k + 2) % 3]
            if orient(xs[a], ys[a], xs[b], ys[b], xs[p], ys[p]) < 0:
                inside = False
                break
        if inside:
            return t
    return -1


@numba.njit(cache=True)
def _bowyer_watson(xs, ys, ids, c00, cw0, c0h, cwh):
    """Triangulate points whose bounding rectangle corners are slots c00..cwh.

    Returns an (T, 3) array of counter-clockwise slot triples.
    """
    n = xs.shape[0]
    cap = 2 * n + 8
    tv = np.full((cap, 3), -1, np.int64)
    tn = np.full((cap, 3), -1, np.int64)
    alive = np.zeros(cap, np.bool_)
    mark = np.zeros(cap, np.int64)
    free = np.empty(cap, np.int64)
    nfree = 0
    cav = np.empty(cap, np.int64)
    stack = np.empty(cap, np.int64)
    ba = np.empty(cap, np.int64)
    bb = np.empty(cap, np.int64)
    bnb = np.empty(cap, np.int64)
    bk = np.empty(cap, np.int64)
    newt = np.empty(cap, np.int64)

    tv[0, 0] = c00
    tv[0, 1] = cw0
    tv[0, 2] = cwh
    tv[1, 0] = c00
    tv[1, 1] = cwh
    tv[1, 2] = c0h
    tn[0, 1] = 1
    tn[1, 2] = 0
    alive[0] = True
    alive[1] = True
    ntri = 2
    last = 0
    stamp = 0

    for p in range(n):
        if p == c00 or p == cw0 or p == c0h or p == cwh:
            continue
        t0 = _locate(tv, tn, alive, ntri, xs, ys, p, last)
        stamp += 1
        mark[t0] = stamp
        cav[0] = t0
        ncav = 1
        stack[0] = t0
        nstack = 1
        while nstack > 0:
            nstack -= 1
            u = stack[nstack]
            for k in range(3):
                nb = tn[u, k]
                if nb < 0 or mark[nb] == stamp:
                    continue
                if in_circle_sos(xs, ys, ids, tv[nb, 0], tv[nb, 1], tv[nb, 2], p):
                    mark[nb] = stamp
                    cav[ncav] = nb
                    ncav += 1
                    stack[nstack] = nb
                    nstack += 1

        nb_edges = 0
        for ci in range(ncav):
            u = cav[ci]
            for k in range(3):
                nb = tn[u, k]
                if nb >= 0 and mark[nb] == stamp:
                    continue
                a = tv[u, (k + 1) % 3]
                b = tv[u, (k + 2) % 3]
                if orient(xs[a], ys[a], xs[b], ys[b], xs[p], ys[p]) == 0:
                    # p sits on this hull edge; the edge is split, not kept
                    continue
                ba[nb_edges] = a
                bb[nb_edges] = b
                bnb[nb_edges] = nb
                kk = -1
                if nb >= 0:
                    for j in range(3):
                        if tn[nb, j] == u:
                            kk = j
                bk[nb_edges] = kk
                nb_edges += 1

        for ci in range(ncav):
            alive[cav[ci]] = False
            free[nfree] = cav[ci]
            nfree += 1

        for e in range(nb_edges):
            if nfree > 0:
                nfree -= 1
                t = free[nfree]
            else:
                t = ntri
                ntri += 1
            alive[t] = True
            mark[t] = 0
            tv[t, 0] = ba[e]
            tv[t, 1] = bb[e]
            tv[t, 2] = p
            tn[t, 0] = -1
            tn[t, 1] = -1
            tn[t, 2] = bnb[e]
            if bnb[e] >= 0:
                tn[bnb[e], bk[e]] = t
            newt[e] = t
        for i in range(nb_edges):
            for j in range(nb_edges):
                if ba[j] == bb[i]:
                    tn[newt[i], 0] = newt[j]
                if bb[j] == ba[i]:
                    tn[newt[i], 1] = newt[j]
        if nb_edges > 0:
            last = newt[0]

    count = 0
    for t in range(ntri):
        if alive[t]:
            count += 1
    out = np.empty((count, 3), np.int64)
    r = 0
    for t in range(ntri):
        if alive[t]:
            out[r, 0] = tv[t, 0]
            out[r, 1] = tv[t, 1]
            out[r, 2] = tv[t, 2]
            r += 1
    return out


@numba.njit(cache=True)
def brute_force_hole(xs, ys, ids, star):
    """Delaunay triangles of the points (xs, ys) that lie inside ``star``.

    ``star`` holds counter-clockwise coordinate triples (k, 6) describing the
    region to fill.  O(n^4); meant for vertex links of a dozen points.
    Returns ccw local index triples.
    """
    n = xs.shape[0]
    out = np.empty((max(1, 2 * n), 3), np.int64)
    m = 0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                o = orient(xs[i], ys[i], xs[j], ys[j], xs[k], ys[k])
                if o == 0:
                    continue
                a, b, c = i, j, k
                if o < 0:
                    b, c = k, j
                ok = True
                for d in range(n):
                    if d == i or d == j or d == k:
                        continue
                    if in_circle_sos(xs, ys, ids, a, b, c, d):
                        ok = False
                        break
                if not ok:
                    continue
                sx = xs[a] + xs[b] + xs[c]
                sy = ys[a] + ys[b] + ys[c]
                inside = False
                for s in range(star.shape[0]):
                    ok2 = True
                    for e in range(3):
                        px = 3 * star[s, 2 * e]
                        py = 3 * star[s, 2 * e + 1]
                        qx = 3 * star[s, 2 * ((e + 1) % 3)]
                        qy = 3 * star[s, 2 * ((e + 1) % 3) + 1]
                        if orient(px, py, qx, qy, sx, sy) < 0:
                            ok2 = False
                            break
                    if ok2:
                        inside = True
                        break
                if inside:
                    if m == out.shape[0]:
                        grown = np.empty((2 * m, 3), np.int64)
                        grown[:m] = out
                        out = grown
                    out[m, 0] = a
                    out[m, 1] = b
                    out[m, 2] = c
                    m += 1
    return out[:m]


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Triangles as row-major grid-index triples, each sorted, list sorted."""
    triangles: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Triangulation):
            return NotImplemented
        return np.array_equal(self.triangles, other.triangles)

    __hash__ = None

    def __len__(self):
        return len(self.triangles)


def canonical(tris: np.ndarray) -> np.ndarray:
    t = np.sort(np.asarray(tris, dtype=np.int64).reshape(-1, 3), axis=1)
    order = np.lexsort((t[:, 2], t[:, 1], t[:, 0]))
    return t[order]


def triangulate_points(xs, ys, ids) -> np.ndarray:
    """Counter-clockwise slot triples for points sorted by ``ids``.

    The point set must include the four corners of its bounding rectangle.
    """
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    ys = np.ascontiguousarray(ys, dtype=np.int64)
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    n = xs.size
    if n < 3:
        raise DegenerateGeometryError(f"need at least 3 vertices, got {n}")
    dx, dy = xs - xs[0], ys - ys[0]
    if not np.any(dx * dy[1] - dy * dx[1]):
        raise DegenerateGeometryError("all vertices are collinear")
    x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    slots = []
    for cx, cy in ((x0, y0), (x1, y0), (x0, y1), (x1, y1)):
        hit = np.flatnonzero((xs == cx) & (ys == cy))
        if hit.size == 0:
            raise ContractViolation("bounding-rectangle corners must be vertices")
        slots.append(int(hit[0]))
    if np.any(np.diff(ids) <= 0):
        raise ContractViolation("points must be sorted by strictly increasing id")
    return _bowyer_watson(xs, ys, ids, *slots)


def delaunay(grid: GridSpec, vertices: VertexSet) -> Triangulation:
    """Canonical Delaunay triangulation of the occupied grid points."""
    pts = vertices.points
    gx, gy = grid.pixel_coords()
    tris = triangulate_points(gx[pts], gy[pts], pts)
    return Triangulation(canonical(pts[tris]))
