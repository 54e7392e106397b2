"""Color conversion and triangle rasterization.

Each triangle is filled by linear (barycentric) interpolation of its three
vertex colors in YCoCg, then converted to RGB.  Pixel centers are the integer
coordinates themselves, so a vertex pixel reproduces its vertex color.

A pixel lying exactly on an edge belongs to the triangle that contains the
point nudged by (+eps, +eps**2): right of vertical edges, below horizontal
ones (the usual top-left convention).  On the last column/row the nudge is
mirrored so that border pixels still land inside the image.
"""
from __future__ import annotations

from pathlib import Path

import numba
import numpy as np

from .errors import ContractViolation
from .model import Raster, TriModel, check
from .triangulate import Triangulation, delaunay, orient


def rgb_to_ycocg(rgb) -> np.ndarray:
    c = np.asarray(rgb, dtype=np.float64)
    r, g, b = c[..., 0], c[..., 1], c[..., 2]
    return np.stack([r / 4 + g / 2 + b / 4, (r - b) / 2, -r / 4 + g / 2 - b / 4], axis=-1)


def ycocg_to_rgb(ycc) -> np.ndarray:
    """Inverse transform, rounded half away from zero and clamped to 0..255."""
    c = np.asarray(ycc, dtype=np.float64)
    y, co, cg = c[..., 0], c[..., 1], c[..., 2]
    tmp = y - cg
    rgb = np.stack([tmp + co, y + cg, tmp - co], axis=-1)
    out = np.sign(rgb) * np.floor(np.abs(rgb) + 0.5)
    return np.clip(out, 0, 255).astype(np.uint8)


@numba.njit(cache=True, inline="always")
def _owns(e, ax_, ay_, bx_, by_, sx, sy):
    # edge a->b of a ccw triangle; e is the edge function at the pixel
    if e > 0:
        return True
    if e < 0:
        return False
    gx = ay_ - by_
    gy = bx_ - ax_
    if gx * sx > 0:
        return True
    return gx == 0 and gy * sy > 0


@numba.njit(cache=True, inline="always")
def _to_u8(v):
    r = np.floor(v + 0.5) if v >= 0 else -np.floor(-v + 0.5)
    if r < 0:
        return 0
    if r > 255:
        return 255
    return np.uint8(r)


@numba.njit(cache=True)
def rasterize(tris, vx, vy, cols, out_w, out_h, mx, my, ycc, rgb, owner, tri_ids,
              target, sse):
    """Fill triangles into the output buffers.

    ``vx``/``vy`` are vertex coordinates in units where pixel (px, py) sits at
    (px*mx, py*my); both are integers so every edge test is exact.
    ``ycc`` (h, w, 3) float and ``rgb`` (h, w, 3) uint8 receive colors,
    ``owner`` (h, w) receives ``tri_ids[t]``, and when ``target`` (h, w, 3) is
    given ``sse[t]`` accumulates the squared RGB error of triangle t.  Any of
    these may be 0-sized to skip.
    """
    write_ycc = ycc.shape[0] > 0
    write_rgb = rgb.shape[0] > 0
    write_own = owner.shape[0] > 0
    score = target.shape[0] > 0
    for t in range(tris.shape[0]):
        a = tris[t, 0]
        b = tris[t, 1]
        c = tris[t, 2]
        area = orient(vx[a], vy[a], vx[b], vy[b], vx[c], vy[c])
        if area == 0:
            continue
        if area < 0:
            b, c = c, b
            area = -area
        ax_, ay_, bx_, by_, cx_, cy_ = vx[a], vy[a], vx[b], vy[b], vx[c], vy[c]
        x_lo = max(0, -((-min(ax_, min(bx_, cx_))) // mx))
        x_hi = min(out_w - 1, max(ax_, max(bx_, cx_)) // mx)
        y_lo = max(0, -((-min(ay_, min(by_, cy_))) // my))
        y_hi = min(out_h - 1, max(ay_, max(by_, cy_)) // my)
        a0, a1, a2 = cols[a, 0], cols[a, 1], cols[a, 2]
        b0, b1, b2 = cols[b, 0], cols[b, 1], cols[b, 2]
        c0, c1, c2 = cols[c, 0], cols[c, 1], cols[c, 2]
        fz = np.float64(area)
        acc = 0
        # edge functions step by a constant integer per pixel along a row
        dbc = -(cy_ - by_) * mx
        dca = -(ay_ - cy_) * mx
        dab = -(by_ - ay_) * mx
        for py in range(y_lo, y_hi + 1):
            sy = -1 if py == out_h - 1 else 1
            qy = py * my
            q0 = x_lo * mx
            e_bc = orient(bx_, by_, cx_, cy_, q0, qy) - dbc
            e_ca = orient(cx_, cy_, ax_, ay_, q0, qy) - dca
            e_ab = orient(ax_, ay_, bx_, by_, q0, qy) - dab
            for px in range(x_lo, x_hi + 1):
                e_bc += dbc
                e_ca += dca
                e_ab += dab
                if e_bc < 0 or e_ca < 0 or e_ab < 0:
                    continue
                sx = -1 if px == out_w - 1 else 1
                if not _owns(e_bc, bx_, by_, cx_, cy_, sx, sy):
                    continue
                if not _owns(e_ca, cx_, cy_, ax_, ay_, sx, sy):
                    continue
                if not _owns(e_ab, ax_, ay_, bx_, by_, sx, sy):
                    continue
                fa = np.float64(e_bc)
                fb = np.float64(e_ca)
                fc = np.float64(e_ab)
                yv = (fa * a0 + fb * b0 + fc * c0) / fz
                cov = (fa * a1 + fb * b1 + fc * c1) / fz
                cgv = (fa * a2 + fb * b2 + fc * c2) / fz
                if write_ycc:
                    ycc[py, px, 0] = yv
                    ycc[py, px, 1] = cov
                    ycc[py, px, 2] = cgv
                if write_rgb or score:
                    tmp = yv - cgv
                    r = _to_u8(tmp + cov)
                    gg = _to_u8(yv + cgv)
                    bb = _to_u8(tmp - cov)
                    if write_rgb:
                        rgb[py, px, 0] = r
                        rgb[py, px, 1] = gg
                        rgb[py, px, 2] = bb
                    if score:
                        d0 = np.int64(r) - np.int64(target[py, px, 0])
                        d1 = np.int64(gg) - np.int64(target[py, px, 1])
                        d2 = np.int64(bb) - np.int64(target[py, px, 2])
                        acc += d0 * d0 + d1 * d1 + d2 * d2
                if write_own:
                    owner[py, px] = tri_ids[t]
        if score:
            sse[t] += acc


@numba.njit(cache=True)
def coverage_counts(tris, vx, vy, out_w, out_h, mx, my):
    """How many triangles claim each pixel under the ownership rule."""
    counts = np.zeros((out_h, out_w), np.int64)
    for t in range(tris.shape[0]):
        a = tris[t, 0]
        b = tris[t, 1]
        c = tris[t, 2]
        area = orient(vx[a], vy[a], vx[b], vy[b], vx[c], vy[c])
        if area == 0:
            continue
        if area < 0:
            b, c = c, b
        ax_, ay_, bx_, by_, cx_, cy_ = vx[a], vy[a], vx[b], vy[b], vx[c], vy[c]
        for py in range(out_h):
            sy = -1 if py == out_h - 1 else 1
            for px in range(out_w):
                sx = -1 if px == out_w - 1 else 1
                qx = px * mx
                qy = py * my
                if (_owns(orient(bx_, by_, cx_, cy_, qx, qy), bx_, by_, cx_, cy_, sx, sy)
                        and _owns(orient(cx_, cy_, ax_, ay_, qx, qy), cx_, cy_, ax_, ay_, sx, sy)
                        and _owns(orient(ax_, ay_, bx_, by_, qx, qy), ax_, ay_, bx_, by_, sx, sy)):
                    counts[py, px] += 1
    return counts


_EMPTY_F = np.zeros((0, 0, 3), np.float64)
_EMPTY_U8 = np.zeros((0, 0, 3), np.uint8)
_EMPTY_I = np.zeros((0, 0), np.int64)
_EMPTY_T = np.zeros((0, 0, 3), np.uint8)
_EMPTY_S = np.zeros(0, np.int64)


def _slots(model: TriModel, tri: Triangulation) -> np.ndarray:
    return np.searchsorted(model.vertices.points, tri.triangles)


def _geometry(model: TriModel, scale: int):
    grid = model.grid
    gx, gy = grid.pixel_coords()
    pts = model.vertices.points
    w, h = grid.width, grid.height
    out_w, out_h = w * scale, h * scale
    # exact rescale: vertex x maps to x*(W'-1)/(w-1); multiply through by (w-1)
    vx = gx[pts] * (out_w - 1)
    vy = gy[pts] * (out_h - 1)
    return vx, vy, out_w, out_h, w - 1, h - 1


def render_buffers(model: TriModel, tri: Triangulation | None = None, *, scale: int = 1,
                   want_ycc: bool = False, want_rgb: bool = True, want_owner: bool = False):
    """Low-level render returning (rgb, ycc, owner); unrequested buffers are None."""
    if scale < 1:
        raise ContractViolation("scale must be a positive integer")
    if tri is None:
        tri = delaunay(model.grid, model.vertices)
    vx, vy, out_w, out_h, mx, my = _geometry(model, scale)
    tris = _slots(model, tri)
    cols = model.vertex_ycocg()
    ycc = np.zeros((out_h, out_w, 3), np.float64) if want_ycc else _EMPTY_F
    rgb = np.zeros((out_h, out_w, 3), np.uint8) if want_rgb else _EMPTY_U8
    owner = np.full((out_h, out_w), -1, np.int64) if want_owner else _EMPTY_I
    rasterize(tris, vx, vy, cols, out_w, out_h, mx, my, ycc, rgb, owner,
              np.arange(len(tris), dtype=np.int64), _EMPTY_T, _EMPTY_S)
    return (rgb if want_rgb else None, ycc if want_ycc else None,
            owner if want_owner else None)


def render_sse(model: TriModel, target: np.ndarray, tri: Triangulation | None = None) -> int:
    """Squared RGB error of the render against ``target`` without storing it."""
    if tri is None:
        tri = delaunay(model.grid, model.vertices)
    vx, vy, out_w, out_h, mx, my = _geometry(model, 1)
    tris = _slots(model, tri)
    sse = np.zeros(len(tris), np.int64)
    rasterize(tris, vx, vy, model.vertex_ycocg(), out_w, out_h, mx, my, _EMPTY_F, _EMPTY_U8,
              _EMPTY_I, np.zeros(len(tris), np.int64), np.ascontiguousarray(target, np.uint8), sse)
    return int(sse.sum())


def pixel_coverage(model: TriModel, tri: Triangulation | None = None, *, scale: int = 1) -> np.ndarray:
    """Per-pixel count of owning triangles (exhaustive; every triangle tests every pixel)."""
    if tri is None:
        tri = delaunay(model.grid, model.vertices)
    vx, vy, out_w, out_h, mx, my = _geometry(model, scale)
    return coverage_counts(_slots(model, tri), vx, vy, out_w, out_h, mx, my)


def render(model: TriModel, *, scale: int = 1) -> Raster:
    """Reconstruct the image a model describes.

    With ``scale`` > 1 the triangles are rasterized at ``scale`` times the
    stored size; vertex positions are rescaled exactly before filling.
    """
    check(model)
    rgb, _, _ = render_buffers(model, scale=scale)
    return Raster(rgb)


def render_ycocg(model: TriModel) -> np.ndarray:
    check(model)
    _, ycc, _ = render_buffers(model, want_ycc=True, want_rgb=False)
    return ycc


# -- image files -------------------------------------------------------------

def write_ppm(raster: Raster, path) -> None:
    header = f"P6\n{raster.width} {raster.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + raster.pixels.tobytes())


def read_ppm(path) -> Raster:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PPM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise ValueError("only binary PPM (P6) is supported")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError("only 8-bit PPM is supported")
    pos += 1
    body = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return Raster(body.reshape(h, w, 3))


def load_image(path) -> Raster:
    """Read PPM natively, anything else through Pillow."""
    path = Path(path)
    if path.suffix.lower() in (".ppm", ".pnm"):
        return read_ppm(path)
    from PIL import Image
    with Image.open(path) as im:
        return Raster(np.asarray(im.convert("RGB")))


def save_image(raster: Raster, path) -> None:
    path = Path(path)
    if path.suffix.lower() in (".ppm", ".pnm"):
        write_ppm(raster, path)
        return
    from PIL import Image
    Image.fromarray(raster.pixels).save(path)


def fit_to_square(raster: Raster, size: int = 221) -> Raster:
    """Center-crop to a square and resample to ``size`` x ``size``."""
    from PIL import Image
    h, w = raster.height, raster.width
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    crop = raster.pixels[top:top + side, left:left + side]
    if side == size:
        return Raster(crop)
    im = Image.fromarray(np.ascontiguousarray(crop)).resize((size, size), Image.LANCZOS)
    return Raster(np.asarray(im))


def wireframe(model: TriModel, *, scale: int = 1, color=(0, 0, 0)) -> Raster:
    """The render with every triangle edge drawn over it in ``color``."""
    img = render(model, scale=scale).pixels.copy()
    tri = delaunay(model.grid, model.vertices)
    vx, vy, out_w, out_h, mx, my = _geometry(model, scale)
    edges = {tuple(sorted((int(t[k]), int(t[(k + 1) % 3])))) for t in _slots(model, tri)
             for k in range(3)}
    for a, b in sorted(edges):
        x0, y0, x1, y1 = vx[a] / mx, vy[a] / my, vx[b] / mx, vy[b] / my
        n = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
        xs = np.rint(np.linspace(x0, x1, n + 1)).astype(np.int64)
        ys = np.rint(np.linspace(y0, y1, n + 1)).astype(np.int64)
        img[ys, xs] = color
    return Raster(img)
