# coding: utf-8

# # Encoding a thumbnail
#
# A photograph becomes a few hundred bytes: a coarse grid of candidate
# vertices, a small color table, and a Delaunay triangulation that the
# decoder rebuilds on its own.  Run from the repository root; images land in
# notebooks/out/.

# In[1]:

from pathlib import Path

from tricodec.bitstream import decode, encode
from tricodec.metrics import quality
from tricodec.raster import fit_to_square, load_image, render, save_image, wireframe
from tricodec.search import SearchConfig, baseline_encode, make_rng, stochastic_encode

OUT = Path("notebooks/out")
OUT.mkdir(parents=True, exist_ok=True)
target = fit_to_square(load_image("tests/data/corpus/chelsea.png"))
target.width, target.height


# The greedy baseline adds the vertex that lowers the squared error most,
# then prunes until the file fits the budget (200 bytes on a 52 x 52 grid).

# In[2]:

cfg = SearchConfig(grid=52)
greedy = baseline_encode(target, cfg)
print(quality(target, render(greedy), len(encode(greedy))))


# The stochastic encoder starts from a smaller greedy model and hill-climbs
# with random edits.  With only a few thousand iterations it can still trail
# the baseline on a soft image like this one; the default is 20,000.

# In[3]:

cfg = SearchConfig(grid=52, max_iterations=3000)
model = stochastic_encode(target, cfg, make_rng(cfg.seed))
data = encode(model)
print(quality(target, render(model), len(data)))
print(model.n_vertices, "vertices,", len(model.colors), "colors")


# The decoder needs nothing but the bytes.

# In[4]:

assert decode(data) == model
save_image(target, OUT / "chelsea_target.png")
save_image(render(decode(data), scale=2), OUT / "chelsea_decoded.png")
save_image(wireframe(model, scale=2), OUT / "chelsea_mesh.png")
data.hex()
