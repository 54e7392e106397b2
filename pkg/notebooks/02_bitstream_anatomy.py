# coding: utf-8

# # Where the bytes go
#
# The payload is a single rANS stream with five sections: delta-model
# parameters, color deltas, color frequencies, the occupancy map and the
# per-vertex color indices.  This script prints the ideal cost of each.

# In[1]:

from tricodec.bitstream import SECTIONS, encode, occupancy_bits, section_bits
from tricodec.raster import fit_to_square, load_image
from tricodec.search import SearchConfig, baseline_encode

target = fit_to_square(load_image("tests/data/corpus/coffee.png"))
model = baseline_encode(target, SearchConfig(grid=52))
data = encode(model)
len(data), model.n_vertices, len(model.colors)


# The 8-byte header carries the grid size, the image size, the table size
# and the vertex count.  Everything else is entropy coded.

# In[2]:

bits = section_bits(model)
for name in SECTIONS:
    print(f"{name:12s} {bits[name]:8.1f} bits")
print(f"{'total':12s} {sum(bits.values()) / 8:8.1f} bytes + 8 header")


# Occupancy is coded with the remaining-count probability V_r / N_r rather
# than one bit per grid point.

# In[3]:

occ = model.vertices.occupancy
for mode in ("raw", "fixed", "adaptive"):
    print(f"{mode:9s} {occupancy_bits(occ, 52, mode):8.1f} bits")


# Color indices are coded as a chain of yes/no questions.  Candidates are
# ordered by grid distance to the nearest earlier vertex of each color.

# In[4]:

plain = section_bits(model, spatial=False)
print("spatial order  ", round(bits["indices"], 2), "bits")
print("count order    ", round(plain["indices"], 2), "bits")
