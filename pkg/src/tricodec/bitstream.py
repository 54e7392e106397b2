"""The .tri format: an 8-byte header followed by one rANS payload.

Header (big-endian bit order, 57 bits used, 7 zero pad bits)::

    version 4 | g 8 | width 12 | height 12 | |C|-1 5 | V_t 16 | pad 7

Payload symbols, in decode order:

1. three delta-model parameters (Y, Co, Cg), uniform over 0..15;
2. the color channels of each table entry, as a two-sided geometric
   distribution around the rounded mean of the channel's earlier values
   (32 for the first entry);
3. frequencies of entries 0..|C|-2 under a truncated binomial model (the last
   one is implied);
4. the occupancy bit of every non-corner grid point, P(occupied) = V_r/N_r;
5. the color index of every vertex as a chain of Boolean decisions over
   candidates ordered by Manhattan distance to earlier vertices of each color.

Symbols whose model is deterministic cost nothing and are not written.
README.md shows the smallest possible file byte by byte.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numba
import numpy as np

from .entropy import (PROB_BITS, PROB_SCALE, RANS_L, FreqTable, RansDecoder,
                      binomial_bucketed, binomial_truncated, encode_intervals,
                      quantize, uniform)
from .errors import (ContractViolation, CorruptStreamError, InconsistentCountsError,
                     TruncatedStreamError, UnsupportedVersionError)
from .model import (CHANNEL_MAX, ColorEntry, ColorTable, GridSpec, TriModel,
                    VertexSet, check, grid_problem)

VERSION = 1
HEADER_BYTES = 8
HEADER_FIELDS = (("version", 4), ("g", 8), ("width", 12), ("height", 12),
                 ("n_colors", 5), ("v_t", 16))
HEADER_BITS = sum(b for _, b in HEADER_FIELDS)

N_DELTA_PARAMS = 16
# theta_k * 65536 for the geometric delta model, theta_k = exp(-1/b_k) with
# scale b_k = 2**((k-2)/2); stored as integers so tables are exact everywhere
DELTA_THETA = (8869, 15933, 24109, 32314, 39750, 46019, 51039, 54917,
               57835, 59992, 61565, 62703, 63520, 64104, 64520, 64816)
_THETA_ONE = 1 << 16
MID_GRAY = 32

SECTIONS = ("params", "deltas", "frequencies", "occupancy", "indices")


# -- header ------------------------------------------------------------------

@dataclass(frozen=True)
class Header:
    version: int
    g: int
    width: int
    height: int
    n_colors: int
    v_t: int

    def pack(self) -> bytes:
        word = 0
        for name, bits in HEADER_FIELDS:
            v = getattr(self, name) - (name == "n_colors")
            if not 0 <= v < (1 << bits):
                raise ContractViolation(f"header field {name}={getattr(self, name)} does not fit")
            word = (word << bits) | v
        word <<= 8 * HEADER_BYTES - HEADER_BITS
        return word.to_bytes(HEADER_BYTES, "big")

    @classmethod
    def unpack(cls, data: bytes) -> "Header":
        """Parse and sanity-check the header; raises a DecodeError subclass."""
        if len(data) < HEADER_BYTES:
            raise TruncatedStreamError(f"need {HEADER_BYTES} header bytes, got {len(data)}")
        word = int.from_bytes(data[:HEADER_BYTES], "big")
        pad = 8 * HEADER_BYTES - HEADER_BITS
        if word & ((1 << pad) - 1):
            raise CorruptStreamError("nonzero header padding")
        word >>= pad
        vals = {}
        for name, bits in reversed(HEADER_FIELDS):
            vals[name] = word & ((1 << bits) - 1)
            word >>= bits
        vals["n_colors"] += 1
        h = cls(**vals)
        if h.version != VERSION:
            raise UnsupportedVersionError(f"unsupported version {h.version}")
        msg = grid_problem(h.g, h.width, h.height)
        if msg:
            raise InconsistentCountsError(msg)
        if not 4 <= h.v_t <= h.g * h.g:
            raise InconsistentCountsError(f"vertex count {h.v_t} impossible on a {h.g}x{h.g} grid")
        if h.n_colors > h.v_t:
            raise InconsistentCountsError(f"{h.n_colors} colors for {h.v_t} vertices")
        return h


def header_of(model: TriModel) -> Header:
    grid = model.grid
    return Header(VERSION, grid.g, grid.width, grid.height, len(model.colors),
                  model.vertices.count)


# -- color table models --------------------------------------------------------

@lru_cache(maxsize=None)
def delta_model(pred: int, k: int) -> FreqTable:
    """Two-sided geometric distribution over 0..63 peaked at ``pred``."""
    num = DELTA_THETA[k]
    return quantize([num ** d * _THETA_ONE ** (CHANNEL_MAX - d)
                     for d in (abs(v - pred) for v in range(CHANNEL_MAX + 1))])


def channel_predictions(values: Sequence[int]) -> list[int]:
    """Prediction for each entry: rounded mean of the earlier values, 32 first."""
    preds, total = [], 0
    for k, v in enumerate(values):
        preds.append(MID_GRAY if k == 0 else (2 * total + k) // (2 * k))
        total += v
    return preds


def choose_delta_param(values: Sequence[int]) -> int:
    """Parameter with the smallest exact coded size for one channel."""
    return _best_param(tuple(int(v) for v in values))


@lru_cache(maxsize=4096)
def _best_param(values: tuple[int, ...]) -> int:
    preds = channel_predictions(values)
    best, best_k = -1, 0
    for k in range(N_DELTA_PARAMS):
        prod = 1
        for v, p in zip(values, preds):
            prod *= delta_model(p, k).counts[v]
        if prod > best:
            best, best_k = prod, k
    return best_k


def frequency_support(v_rem: int, c_rem: int, prev: int) -> tuple[int, int]:
    """(lo, hi) for the next frequency given the remaining vertices and entries."""
    return -(-v_rem // c_rem), min(v_rem, prev)


def _freq_symbols(value: int, v_rem: int, c_rem: int, lo: int, hi: int):
    """(symbol, model) pairs coding one frequency."""
    if hi - lo + 1 <= PROB_SCALE:
        return [(value, binomial_truncated(v_rem, _frac(c_rem), lo, hi))]
    buckets, s = binomial_bucketed(v_rem, _frac(c_rem), lo, hi)
    b = (value - lo) >> s
    size = min(1 << s, hi - lo + 1 - (b << s))
    return [(b, buckets), ((value - lo) & ((1 << s) - 1), uniform(size))]


@lru_cache(maxsize=64)
def _frac(c: int) -> Fraction:
    return Fraction(1, c)


# -- occupancy and color-index kernels ---------------------------------------

@numba.njit(cache=True, inline="always")
def _bern_count(num, den):
    c = (2 * PROB_SCALE * num + den) // (2 * den)
    if c < 1:
        return 1
    if c > PROB_SCALE - 1:
        return PROB_SCALE - 1
    return c


def occupancy_intervals(occupancy: np.ndarray, g: int, v_t: int):
    """(starts, freqs) of the non-deterministic occupancy bits in scan order."""
    mask = np.ones(g * g, dtype=bool)
    mask[[0, g - 1, g * (g - 1), g * g - 1]] = False
    bits = occupancy[mask].astype(np.int64)
    n = bits.size
    n_r = (g * g - 4) - np.arange(n, dtype=np.int64)
    v_r = (v_t - 4) - np.concatenate(([0], np.cumsum(bits)[:-1])) if n else bits
    live = (v_r > 0) & (v_r < n_r)
    bits, v_r, n_r = bits[live], v_r[live], n_r[live]
    c1 = np.clip((2 * PROB_SCALE * v_r + n_r) // (2 * n_r), 1, PROB_SCALE - 1)
    starts = np.where(bits == 1, PROB_SCALE - c1, 0)
    freqs = np.where(bits == 1, c1, PROB_SCALE - c1)
    return starts, freqs


@numba.njit(cache=True)
def _candidates(i, j, rem, seen, last, spatial, order, dist):
    """Fill ``order`` with the chain order for the vertex at grid (i, j)."""
    n_colors = rem.shape[0]
    g = last.shape[1]
    far = 1 << 30
    n = 0
    for c in range(n_colors):
        if rem[c] <= 0:
            continue
        d = far
        if spatial and seen[c]:
            for col in range(g):
                r = last[c, col]
                if r >= 0:
                    dd = abs(i - col) + (j - r)
                    if dd < d:
                        d = dd
        # insertion by (distance, higher remaining count, index)
        k = n
        while k > 0:
            o = order[k - 1]
            if dist[k - 1] < d or (dist[k - 1] == d and rem[o] >= rem[c]):
                break
            order[k] = o
            dist[k] = dist[k - 1]
            k -= 1
        order[k] = c
        dist[k] = d
        n += 1
    return n


@numba.njit(cache=True)
def _chain_intervals(pi, pj, labels, freqs, g, spatial):
    n_v = labels.shape[0]
    n_colors = freqs.shape[0]
    starts = np.empty(n_v * n_colors, np.int64)
    out_f = np.empty(n_v * n_colors, np.int64)
    rem = freqs.copy()
    seen = np.zeros(n_colors, np.bool_)
    last = np.full((n_colors, g), -1, np.int64)
    order = np.empty(n_colors, np.int64)
    dist = np.empty(n_colors, np.int64)
    v_rem = n_v
    m = 0
    for v in range(n_v):
        lab = labels[v]
        n = _candidates(pi[v], pj[v], rem, seen, last, spatial, order, dist)
        tot = v_rem
        for k in range(n - 1):
            c = order[k]
            c1 = _bern_count(rem[c], tot)
            if c == lab:
                starts[m] = PROB_SCALE - c1
                out_f[m] = c1
                m += 1
                break
            starts[m] = 0
            out_f[m] = PROB_SCALE - c1
            m += 1
            tot -= rem[c]
        rem[lab] -= 1
        v_rem -= 1
        seen[lab] = True
        last[lab, pi[v]] = pj[v]
    return starts[:m], out_f[:m]


@numba.njit(cache=True, inline="always")
def _pop_bit(data, pos, x, c1):
    """Decode one Boolean with P(true) = c1/4096; returns (bit, x, pos, ok)."""
    slot = x & (PROB_SCALE - 1)
    c0 = PROB_SCALE - c1
    if slot < c0:
        bit = 0
        x = c0 * (x >> PROB_BITS) + slot
    else:
        bit = 1
        x = c1 * (x >> PROB_BITS) + slot - c0
    while x < RANS_L:
        if pos >= data.shape[0]:
            return bit, x, pos, False
        x = (x << 8) | data[pos]
        pos += 1
    return bit, x, pos, True


@numba.njit(cache=True)
def _decode_tail(data, pos, x, g, v_t, freqs, occ, labels):
    """Occupancy then color indices; returns (ok, x, pos)."""
    n_g = g * g
    v_r = v_t - 4
    n_r = n_g - 4
    for idx in range(n_g):
        if idx == 0 or idx == g - 1 or idx == g * (g - 1) or idx == n_g - 1:
            occ[idx] = True
            continue
        if v_r == 0:
            bit = 0
        elif v_r == n_r:
            bit = 1
        else:
            bit, x, pos, ok = _pop_bit(data, pos, x, _bern_count(v_r, n_r))
            if not ok:
                return False, x, pos
        occ[idx] = bit == 1
        v_r -= bit
        n_r -= 1

    n_colors = freqs.shape[0]
    rem = freqs.copy()
    seen = np.zeros(n_colors, np.bool_)
    last = np.full((n_colors, g), -1, np.int64)
    order = np.empty(n_colors, np.int64)
    dist = np.empty(n_colors, np.int64)
    v_rem = v_t
    v = 0
    for idx in range(n_g):
        if not occ[idx]:
            continue
        i = idx % g
        j = idx // g
        n = _candidates(i, j, rem, seen, last, True, order, dist)
        lab = order[n - 1]
        tot = v_rem
        for k in range(n - 1):
            c = order[k]
            bit, x, pos, ok = _pop_bit(data, pos, x, _bern_count(rem[c], tot))
            if not ok:
                return False, x, pos
            if bit == 1:
                lab = c
                break
            tot -= rem[c]
        labels[v] = lab
        v += 1
        rem[lab] -= 1
        v_rem -= 1
        seen[lab] = True
        last[lab, i] = j
    return True, x, pos


# -- encode ------------------------------------------------------------------

def _table_symbols(model: TriModel):
    """(symbol, model) pairs for sections 1-3, with a section label each."""
    chans = model.colors.channel_array()
    cols = [list(map(int, chans[:, c])) for c in range(3)]
    params = [choose_delta_param(v) for v in cols]
    out = [(k, uniform(N_DELTA_PARAMS), "params") for k in params]
    preds = [channel_predictions(v) for v in cols]
    for e in range(len(chans)):
        for c in range(3):
            out.append((cols[c][e], delta_model(preds[c][e], params[c]), "deltas"))
    freqs = model.colors.freqs
    v_rem, prev = model.vertices.count, model.vertices.count
    for k in range(len(freqs) - 1):
        c_rem = len(freqs) - k
        lo, hi = frequency_support(v_rem, c_rem, prev)
        if not lo <= freqs[k] <= hi:
            raise ContractViolation(f"frequency {freqs[k]} of entry {k} outside [{lo}, {hi}]")
        for sym, table in _freq_symbols(freqs[k], v_rem, c_rem, lo, hi):
            out.append((sym, table, "frequencies"))
        v_rem -= freqs[k]
        prev = freqs[k]
    return out


def _vertex_grid(model: TriModel):
    g = model.grid.g
    pts = model.vertices.points
    return pts % g, pts // g


def _section_intervals(model: TriModel, spatial: bool = True) -> dict:
    parts = {name: ([], []) for name in SECTIONS[:3]}
    for sym, table, name in _table_symbols(model):
        start, f = table.interval(sym)
        if f < PROB_SCALE:
            parts[name][0].append(start)
            parts[name][1].append(f)
    out = {k: (np.asarray(s, np.int64), np.asarray(f, np.int64)) for k, (s, f) in parts.items()}
    g = model.grid.g
    out["occupancy"] = occupancy_intervals(model.vertices.occupancy, g, model.vertices.count)
    pi, pj = _vertex_grid(model)
    out["indices"] = _chain_intervals(pi, pj, model.vertices.color_index,
                                      np.asarray(model.colors.freqs, np.int64), g, spatial)
    return out


def encode(model: TriModel) -> bytes:
    """Serialize a valid model to .tri bytes."""
    check(model)
    parts = _section_intervals(model)
    starts = np.concatenate([parts[k][0] for k in SECTIONS])
    freqs = np.concatenate([parts[k][1] for k in SECTIONS])
    return header_of(model).pack() + encode_intervals(starts, freqs)


def encoded_size(model: TriModel) -> int:
    return len(encode(model))


def _bits(freqs: np.ndarray) -> float:
    freqs = np.asarray(freqs, dtype=np.float64)
    return float(np.sum(PROB_BITS - np.log2(freqs))) if freqs.size else 0.0


def section_bits(model: TriModel, *, spatial: bool = True) -> dict[str, float]:
    """Ideal codelength of each payload section, in bits (header excluded).

    ``spatial=False`` orders color-index chains by remaining count only,
    which is the reference point for the spatial ordering's saving.
    """
    check(model)
    parts = _section_intervals(model, spatial)
    return {k: _bits(parts[k][1]) for k in SECTIONS}


def occupancy_bits(occupancy, g: int, mode: str = "adaptive") -> float:
    """Cost of the occupancy map under the adaptive model or the alternatives.

    ``fixed`` uses P = V_t/N_g throughout, ``raw`` is one bit per point; both
    include the corners, matching the usual one-bit-per-point baseline.
    """
    occ = np.asarray(occupancy, dtype=bool)
    v_t = int(occ.sum())
    if mode == "adaptive":
        return _bits(occupancy_intervals(occ, g, v_t)[1])
    if mode == "raw":
        return float(occ.size)
    if mode == "fixed":
        if v_t in (0, occ.size):
            return 0.0
        c1 = min(PROB_SCALE - 1, max(1, (2 * PROB_SCALE * v_t + occ.size) // (2 * occ.size)))
        return v_t * (PROB_BITS - np.log2(c1)) + (occ.size - v_t) * (PROB_BITS - np.log2(PROB_SCALE - c1))
    raise ValueError(f"unknown occupancy mode {mode!r}")


# -- decode ------------------------------------------------------------------

def _decode_table(dec: RansDecoder, h: Header) -> tuple[ColorTable, list]:
    params = [dec.pop(uniform(N_DELTA_PARAMS)) for _ in range(3)]
    vals = [[], [], []]
    totals = [0, 0, 0]
    for e in range(h.n_colors):
        for c in range(3):
            pred = MID_GRAY if e == 0 else (2 * totals[c] + e) // (2 * e)
            v = dec.pop(delta_model(pred, params[c]))
            vals[c].append(v)
            totals[c] += v
    freqs = []
    v_rem, prev = h.v_t, h.v_t
    for k in range(h.n_colors - 1):
        c_rem = h.n_colors - k
        lo, hi = frequency_support(v_rem, c_rem, prev)
        if hi - lo + 1 <= PROB_SCALE:
            f = dec.pop(binomial_truncated(v_rem, _frac(c_rem), lo, hi))
        else:
            buckets, s = binomial_bucketed(v_rem, _frac(c_rem), lo, hi)
            b = dec.pop(buckets)
            size = min(1 << s, hi - lo + 1 - (b << s))
            f = lo + (b << s) + dec.pop(uniform(size))
        if f < 1:
            raise InconsistentCountsError(f"entry {k} has frequency 0")
        freqs.append(f)
        v_rem -= f
        prev = f
    if not 1 <= v_rem <= prev:
        raise InconsistentCountsError(f"implied last frequency {v_rem} is not in 1..{prev}")
    freqs.append(v_rem)
    entries = tuple(ColorEntry(vals[0][e], vals[1][e], vals[2][e], freqs[e])
                    for e in range(h.n_colors))
    return ColorTable(entries), params


def decode(data: bytes) -> TriModel:
    """Parse .tri bytes; malformed input raises a DecodeError subclass."""
    data = bytes(data)
    h = Header.unpack(data)
    dec = RansDecoder(data, HEADER_BYTES)
    table, _ = _decode_table(dec, h)
    g = h.g
    occ = np.zeros(g * g, np.bool_)
    labels = np.zeros(h.v_t, np.int64)
    ok, x, pos = _decode_tail(np.frombuffer(data, np.uint8), dec.pos, dec.x, g, h.v_t,
                              np.asarray(table.freqs, np.int64), occ, labels)
    if not ok:
        raise TruncatedStreamError("payload ended early")
    dec.x, dec.pos = int(x), int(pos)
    dec.finish()
    model = TriModel(GridSpec(g, h.width, h.height), VertexSet(occ, labels), table)
    try:
        check(model)
    except ContractViolation as exc:
        raise InconsistentCountsError(str(exc)) from None
    return model
