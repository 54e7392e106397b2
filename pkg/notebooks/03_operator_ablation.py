# coding: utf-8

# # Which edits matter
#
# The stochastic search draws one of seven edits per iteration:
# a displace, b add vertex, c remove vertex, d recolor vertex,
# e split color, f drop color, g perturb color.  Starting every run from the
# same initialization isolates the effect of the operator set.

# In[1]:

import numpy as np

from tricodec.bitstream import encode
from tricodec.metrics import quality
from tricodec.raster import fit_to_square, load_image, render
from tricodec.search import SearchConfig, init_stochastic, make_rng, shrink_to_budget
from tricodec.search import stochastic_encode
from tricodec.search.stochastic import fork

NAMES = ["astronaut", "coins", "rocket"]
cfg = SearchConfig(grid=52, max_iterations=2000)


# In[2]:

rows = []
for name in NAMES:
    target = fit_to_square(load_image(f"tests/data/corpus/{name}.png"))
    rng = make_rng(cfg.seed)
    init = shrink_to_budget(init_stochastic(target, cfg, rng), target, cfg)
    row = [quality(target, render(init)).psnr]
    for ops in ("abc", "abcdg", "abcdefg"):
        m = stochastic_encode(target, cfg.with_ops(ops), fork(rng), init)
        row.append(quality(target, render(m), len(encode(m))).psnr)
    rows.append(row)
    print(name, " ".join(f"{v:6.2f}" for v in row))


# Mean PSNR per operator set (dB).

# In[3]:

for label, v in zip(("init", "abc", "abcdg", "abcdefg"), np.mean(rows, axis=0)):
    print(f"{label:8s} {v:6.2f}")
