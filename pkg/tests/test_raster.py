import numpy as np
import pytest

from helpers import random_model
from tricodec.errors import ContractViolation
from tricodec.metrics import sse
from tricodec.model import GridSpec, Raster, TriModel, dequantize_ycocg
from tricodec.raster import (fit_to_square, load_image, pixel_coverage, render, render_sse,
                             render_ycocg, rgb_to_ycocg, save_image, wireframe, ycocg_to_rgb)


def test_ycocg_examples():
    assert rgb_to_ycocg([255, 255, 255]).tolist() == [255, 0, 0]
    assert rgb_to_ycocg([0, 0, 0]).tolist() == [0, 0, 0]
    assert rgb_to_ycocg([255, 0, 0]).tolist() == [63.75, 127.5, -63.75]
    assert ycocg_to_rgb([255, 0, 0]).tolist() == [255, 255, 255]
    assert ycocg_to_rgb([63.75, 127.5, -63.75]).tolist() == [255, 0, 0]
    assert ycocg_to_rgb([300, 0, 0]).tolist() == [255, 255, 255]


def test_ycocg_round_trip_all_bytes():
    rng = np.random.default_rng(0)
    rgb = rng.integers(0, 256, size=(5000, 3))
    assert np.array_equal(ycocg_to_rgb(rgb_to_ycocg(rgb)), rgb)


def test_constant_model_renders_constant():
    rng = np.random.default_rng(1)
    m = random_model(rng, 15, n_colors=1)
    img = render(m).pixels
    expected = ycocg_to_rgb(dequantize_ycocg(m.colors.channel_array()[0]))
    assert np.all(img == expected)


def test_diagonal_is_two_point_interpolation():
    grid = GridSpec(2, 11, 11)
    a, b, c = [10, 20, 40], [60, 45, 30], [30, 30, 30]
    # corners 0 and 3 span the canonical diagonal
    m = TriModel.build(grid, [0, 1, 2, 3], [a, c, b], [0, 1, 1, 2])
    ycc = render_ycocg(m)
    rgb = render(m).pixels
    ya, yb = dequantize_ycocg(a), dequantize_ycocg(b)
    for t in range(11):
        want = ya + (yb - ya) * t / 10
        assert np.allclose(ycc[t, t], want, atol=1e-9)
        assert rgb[t, t].tolist() == ycocg_to_rgb(want).tolist()


def test_vertex_pixels_take_vertex_colors():
    rng = np.random.default_rng(2)
    m = random_model(rng, 10, density=0.4)
    ycc = render_ycocg(m)
    gx, gy = m.grid.pixel_coords()
    p = m.vertices.points
    assert np.allclose(ycc[gy[p], gx[p]], m.vertex_ycocg(), atol=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_every_pixel_owned_once(seed):
    rng = np.random.default_rng(seed)
    g = int(rng.choice([2, 3, 15, 52, 96]))
    w, h = int(rng.integers(g, 240)), int(rng.integers(g, 240))
    m = random_model(rng, g, w, h, density=rng.uniform(0, 0.5))
    assert np.all(pixel_coverage(m) == 1)
    assert np.all(pixel_coverage(m, scale=2) == 1)


def test_scale_two():
    rng = np.random.default_rng(3)
    m = random_model(rng, 52, density=0.05)
    big = render(m, scale=2)
    assert (big.width, big.height) == (442, 442)
    small = render(m).pixels
    # vertex positions scale exactly, so the corners agree
    assert np.array_equal(big.pixels[0, 0], small[0, 0])
    assert np.array_equal(big.pixels[-1, -1], small[-1, -1])
    with pytest.raises(ContractViolation):
        render(m, scale=0)


def test_render_sse_matches_full_render():
    rng = np.random.default_rng(4)
    m = random_model(rng, 30, density=0.2)
    target = rng.integers(0, 256, size=(221, 221, 3), dtype=np.uint8)
    assert render_sse(m, target) == sse(render(m), Raster(target))


def test_wireframe_draws_edges():
    grid = GridSpec(2, 21, 21)
    m = TriModel.build(grid, [0, 1, 2, 3], [[63, 32, 32]], [0] * 4)
    img = wireframe(m, color=(255, 0, 0)).pixels
    assert img[10, 10].tolist() == [255, 0, 0]       # diagonal 0-3
    assert img[0, 7].tolist() == [255, 0, 0]         # top edge
    assert np.array_equal(img[5, 12], render(m).pixels[5, 12])


def test_image_files(tmp_path):
    rng = np.random.default_rng(5)
    r = Raster(rng.integers(0, 256, size=(13, 17, 3), dtype=np.uint8))
    for name in ("a.ppm", "a.png"):
        save_image(r, tmp_path / name)
        assert load_image(tmp_path / name) == r
    sq = fit_to_square(r, 9)
    assert (sq.width, sq.height) == (9, 9)
    assert fit_to_square(Raster(r.pixels[:13, :13]), 13) == Raster(r.pixels[:13, :13])
