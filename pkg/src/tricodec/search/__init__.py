"""Encoders that turn an image into a TriModel under a byte budget."""
from .config import (DEFAULT_PROBS, OPS, SearchConfig, apply_overrides, default_budget,
                     dump_config, load_config, parse_config)
from .greedy import baseline_encode, greedy_prune, init_stochastic, shrink_to_budget
from .mesh import LocalMesh
from .stochastic import (SearchState, encode_image, make_rng, mutate, new_state, objective,
                         score, search, stochastic_encode)
