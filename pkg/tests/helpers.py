"""Random model generators shared by the tests."""
import numpy as np

from tricodec.model import CHANNEL_MAX, MAX_COLORS, GridSpec, TriModel


def random_model(rng, g, width=None, height=None, density=None, n_colors=None):
    """A valid random model on a g x g grid (221 x 221 pixels by default)."""
    width = width or max(g, 221)
    height = height or width
    grid = GridSpec(g, width, height)
    n = grid.n_points
    if density is None:
        density = rng.uniform(0.0, 1.0)
    extra = np.setdiff1d(np.arange(n), grid.corners)
    pick = extra[rng.random(extra.size) < density]
    pts = np.concatenate([np.array(grid.corners), pick])
    if n_colors is None:
        n_colors = int(rng.integers(1, min(MAX_COLORS, pts.size) + 1))
    palette = rng.integers(0, CHANNEL_MAX + 1, size=(n_colors, 3))
    labels = rng.integers(0, n_colors, size=pts.size)
    labels[:n_colors] = np.arange(n_colors)        # every entry used at least once
    return TriModel.build(grid, pts, palette, labels)
