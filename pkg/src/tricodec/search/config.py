"""Search configuration and its flat ``key = value`` file form."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..errors import ContractViolation

OPS = "abcdefg"
OP_NAMES = {
    "a": "displace",
    "b": "add_vertex",
    "c": "remove_vertex",
    "d": "recolor_vertex",
    "e": "split_color",
    "f": "drop_color",
    "g": "perturb_color",
}
DEFAULT_PROBS = (0.4, 0.2, 0.2, 0.2, 0.05, 0.05, 0.2)

# default byte budget by grid size; g=15 and g=96 follow the ~100 and ~400
# byte figures, g=52 gives the usual 200
BUDGET_KNOTS = ((15, 100), (52, 200), (96, 400))

# penalty per byte over budget: at a typical MSE of ~420 (22 dB) a 0.25 dB
# change is 420 * (10**0.025 - 1) ~= 25 MSE units
DEFAULT_LAMBDA = 25.0
# 1 - SSIM is scaled so its typical magnitude is close to the MSE's
SSIM_SCALE = 1000.0


def default_budget(g: int) -> int:
    xs, ys = zip(*BUDGET_KNOTS)
    return int(round(float(np.interp(g, xs, ys))))


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of both encoders.  ``budget=None`` means the grid's default."""

    grid: int = 52
    budget: int | None = None
    init_vertices: int = 300
    init_colors: int = 8
    probs: tuple[float, ...] = DEFAULT_PROBS
    max_iterations: int = 20_000
    patience: int = 2_000
    seed: int = 0
    lam: float = DEFAULT_LAMBDA
    metric: str = "mse"
    candidates: int = 64
    size: int = 221
    algorithm: str = "stochastic"

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        problem = self.problem()
        if problem:
            raise ContractViolation(problem)

    def problem(self) -> str | None:
        if len(self.probs) != len(OPS):
            return f"need {len(OPS)} operator probabilities"
        if any(not 0.0 <= p <= 1.0 for p in self.probs):
            return "operator probabilities must lie in [0, 1]"
        if not 2 <= self.grid <= 255:
            return f"grid {self.grid} outside 2..255"
        if self.budget is not None and self.budget < 1:
            return "budget must be positive"
        if self.init_vertices < 4:
            return "init_vertices must be at least 4 (the corners)"
        if not 1 <= self.init_colors <= 32:
            return "init_colors outside 1..32"
        if self.metric not in ("mse", "ssim"):
            return f"unknown metric {self.metric!r}"
        if self.algorithm not in ("baseline", "stochastic"):
            return f"unknown algorithm {self.algorithm!r}"
        if self.lam < 0:
            return "lambda must be non-negative"
        if self.max_iterations < 0 or self.patience < 1 or self.candidates < 1:
            return "iteration limits must be positive"
        if self.size < 2:
            return "working size must be at least 2"
        return None

    @property
    def budget_bytes(self) -> int:
        return self.budget if self.budget is not None else default_budget(self.grid)

    @property
    def ops(self) -> str:
        return "".join(op for op, p in zip(OPS, self.probs) if p > 0)

    def vertex_target(self) -> int:
        return min(self.init_vertices, self.grid * self.grid)

    def with_ops(self, ops: str) -> "SearchConfig":
        """Zero the probability of every operator not named in ``ops``."""
        bad = set(ops) - set(OPS)
        if bad:
            raise ContractViolation(f"unknown operators {''.join(sorted(bad))!r}")
        base = DEFAULT_PROBS
        probs = tuple(base[k] if op in ops else 0.0 for k, op in enumerate(OPS))
        return self.replace(probs=probs)

    def replace(self, **changes) -> "SearchConfig":
        return dataclasses.replace(self, **changes)


# -- key = value files ---------------------------------------------------------

_DOCS = {
    "grid": "grid points per side",
    "budget": "target size in bytes; 'auto' picks 100/200/400 for g=15/52/96",
    "init_vertices": "vertices chosen by the greedy initialization",
    "init_colors": "color table size after clustering",
    "max_iterations": "stochastic search iterations",
    "patience": "stop after this many iterations without improvement",
    "seed": "RNG seed",
    "lam": "objective penalty per byte over budget (distortion units)",
    "metric": "mse or ssim",
    "candidates": "random candidates scored per greedy insertion step",
    "size": "working image side in pixels",
    "algorithm": "baseline or stochastic",
}


def _format(value) -> str:
    return "auto" if value is None else str(value)


def dump_config(cfg: SearchConfig) -> str:
    lines = []
    for f in fields(SearchConfig):
        if f.name == "probs":
            for op, p in zip(OPS, cfg.probs):
                lines.append(f"# probability of operator ({op}) {OP_NAMES[op]}")
                lines.append(f"p_{op} = {p}")
            continue
        lines.append(f"# {_DOCS[f.name]}")
        lines.append(f"{f.name} = {_format(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def _parse_value(name: str, text: str):
    kind = {f.name: f.type for f in fields(SearchConfig)}[name]
    if text == "auto" and name == "budget":
        return None
    if "int" in str(kind):
        return int(text)
    if "float" in str(kind):
        return float(text)
    return text


def apply_overrides(cfg: SearchConfig, pairs: dict[str, str]) -> SearchConfig:
    """Apply string-valued overrides, e.g. parsed from a file or the CLI."""
    probs = list(cfg.probs)
    changes = {}
    known = {f.name for f in fields(SearchConfig)} - {"probs"}
    for key, text in pairs.items():
        key = key.strip()
        text = str(text).strip()
        if key.startswith("p_") and len(key) == 3 and key[2] in OPS:
            probs[OPS.index(key[2])] = float(text)
        elif key == "ops":
            changes["probs"] = cfg.with_ops(text).probs
        elif key in known:
            try:
                changes[key] = _parse_value(key, text)
            except ValueError:
                raise ContractViolation(f"bad value for {key}: {text!r}") from None
        else:
            raise ContractViolation(f"unknown config key {key!r}")
    if "probs" not in changes:
        changes["probs"] = tuple(probs)
    return cfg.replace(**changes)


def parse_config(text: str, base: SearchConfig | None = None) -> SearchConfig:
    pairs = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractViolation(f"line {n}: expected key = value")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return apply_overrides(base or SearchConfig(), pairs)


def load_config(path, base: SearchConfig | None = None) -> SearchConfig:
    return parse_config(Path(path).read_text(), base)
