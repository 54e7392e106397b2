"""rANS entropy coding with exact-integer probability models.

Probabilities are quantized to 12 bits.  Every model used by the bitstream is
built from integer (or big-integer) weights so that encoder and decoder derive
bit-identical tables on any platform.

rANS is last-in-first-out: the encoder is handed the complete forward sequence
of (symbol, model) pairs, exactly as the decoder will meet them, and pushes
them in reverse.  Adaptive models are therefore fine as long as each model
depends only on symbols that precede it in decode order.
"""
from __future__ import annotations

import bisect
import heapq
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numba
import numpy as np

from .errors import ContractViolation, CorruptStreamError, TruncatedStreamError

PROB_BITS = 12
PROB_SCALE = 1 << PROB_BITS
RANS_L = 1 << 23          # lower bound of the normalized state interval
STATE_BYTES = 4


class FreqTable:
    """Quantized distribution over the integers ``offset .. offset+len(counts)-1``."""

    __slots__ = ("counts", "offset", "cum")

    def __init__(self, counts: Sequence[int], offset: int = 0):
        counts = tuple(int(c) for c in counts)
        if not counts or any(c < 0 for c in counts) or sum(counts) != PROB_SCALE:
            raise ContractViolation(f"counts must be non-negative and sum to {PROB_SCALE}")
        self.counts = counts
        self.offset = int(offset)
        cum = [0]
        for c in counts:
            cum.append(cum[-1] + c)
        self.cum = tuple(cum)

    def __len__(self):
        return len(self.counts)

    def __repr__(self):
        return f"FreqTable(offset={self.offset}, counts={self.counts})"

    def __eq__(self, other):
        return (isinstance(other, FreqTable) and self.counts == other.counts
                and self.offset == other.offset)

    def __hash__(self):
        return hash((self.counts, self.offset))

    @property
    def deterministic(self) -> bool:
        return PROB_SCALE in self.counts

    def admissible(self, symbol: int) -> bool:
        k = symbol - self.offset
        return 0 <= k < len(self.counts) and self.counts[k] > 0

    def interval(self, symbol: int) -> tuple[int, int]:
        """(start, freq) of ``symbol``; raises if it cannot be coded."""
        if not self.admissible(symbol):
            raise ContractViolation(f"symbol {symbol} has zero probability under {self!r}")
        k = symbol - self.offset
        return self.cum[k], self.counts[k]

    def lookup(self, slot: int) -> int:
        k = bisect.bisect_right(self.cum, slot) - 1
        return k + self.offset

    def probability(self, symbol: int) -> float:
        k = symbol - self.offset
        if not 0 <= k < len(self.counts):
            return 0.0
        return self.counts[k] / PROB_SCALE

    def cost_bits(self, symbol: int) -> float:
        _, f = self.interval(symbol)
        return PROB_BITS - math.log2(f)


# -- model construction ------------------------------------------------------

def quantize(weights: Sequence, offset: int = 0) -> FreqTable:
    """Quantize exact non-negative weights (ints or Fractions) to a FreqTable.

    Every listed symbol keeps a count of at least 1.  Counts start at the floor
    of their exact share and are then adjusted one unit at a time, always on the
    symbol whose count deviates most from its exact share, so each count stays
    as close to 4096*p as the floor allows.
    """
    n = len(weights)
    if n == 0 or n > PROB_SCALE:
        raise ContractViolation(f"cannot quantize {n} symbols to {PROB_BITS} bits")
    if n == 1:
        return FreqTable((PROB_SCALE,), offset)
    if all(isinstance(w, int) for w in weights):
        iw = list(weights)
    else:
        ws = [Fraction(w) for w in weights]
        den = math.lcm(*(w.denominator for w in ws))
        iw = [w.numerator * (den // w.denominator) for w in ws]
    if any(w < 0 for w in iw):
        raise ContractViolation("negative weight")
    total = sum(iw)
    if total == 0:
        iw = [1] * n
        total = n
    counts = [max(1, (PROB_SCALE * w) // total) for w in iw]
    have = sum(counts)
    if have < PROB_SCALE:
        # most under-represented first: largest 4096*w - c*total
        heap = [(-(PROB_SCALE * w - c * total), i) for i, (w, c) in enumerate(zip(iw, counts))]
        heapq.heapify(heap)
        while have < PROB_SCALE:
            _, i = heapq.heappop(heap)
            counts[i] += 1
            have += 1
            heapq.heappush(heap, (-(PROB_SCALE * iw[i] - counts[i] * total), i))
    elif have > PROB_SCALE:
        heap = [(-(c * total - PROB_SCALE * w), i)
                for i, (w, c) in enumerate(zip(iw, counts)) if c > 1]
        heapq.heapify(heap)
        while have > PROB_SCALE:
            _, i = heapq.heappop(heap)
            counts[i] -= 1
            have -= 1
            if counts[i] > 1:
                heapq.heappush(heap, (-(counts[i] * total - PROB_SCALE * iw[i]), i))
    return FreqTable(counts, offset)


@lru_cache(maxsize=4096)
def uniform(n: int, offset: int = 0) -> FreqTable:
    return quantize([1] * n, offset)


def bernoulli_count(num: int, den: int) -> int:
    """12-bit count of the event with probability num/den (0 < num < den)."""
    c = (2 * PROB_SCALE * num + den) // (2 * den)
    return min(PROB_SCALE - 1, max(1, c))


_FALSE_ONLY = FreqTable((PROB_SCALE, 0))
_TRUE_ONLY = FreqTable((0, PROB_SCALE))


def bernoulli(num: int, den: int) -> FreqTable:
    """Boolean model (symbol 1 = true) with P(true) = num/den, rounded half up."""
    if den < 1 or not 0 <= num <= den:
        raise ContractViolation(f"invalid probability {num}/{den}")
    if num == 0:
        return _FALSE_ONLY
    if num == den:
        return _TRUE_ONLY
    c1 = bernoulli_count(num, den)
    return FreqTable((PROB_SCALE - c1, c1))


def occupancy_model(v_r: int, n_r: int) -> FreqTable:
    """P(occupied) = remaining vertices / remaining grid points."""
    if n_r < 1 or v_r < 0:
        raise ContractViolation(f"invalid occupancy counts V_r={v_r}, N_r={n_r}")
    if v_r > n_r:
        raise ContractViolation(f"more remaining vertices ({v_r}) than grid points ({n_r})")
    return bernoulli(v_r, n_r)


def _as_fraction(p) -> Fraction:
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ContractViolation(f"probability {p} outside [0, 1]")
    return p


BINOMIAL_PRECISION = 160   # fixed-point bits of the largest binomial weight


def binomial_weights(n: int, p, lo: int, hi: int) -> list[int]:
    """Integer weights proportional to Binomial(n, p) on lo..hi.

    The largest weight in the window is 2**160 and the others follow from the
    mass ratio recurrence with floor division, so the result is a pure integer
    function of its arguments.  Weights that underflow to 0 are far below one
    quantization step and end up with the floor count of 1 anyway.
    """
    p = _as_fraction(p)
    lo, hi = max(lo, 0), min(hi, n)
    if p == 0 or p == 1:
        hit = 0 if p == 0 else n
        return [int(k == hit) for k in range(lo, hi + 1)]
    a, b = p.numerator, p.denominator - p.numerator   # odds of success
    m = min(hi, max(lo, (n + 1) * a // (a + b)))      # mode, clipped to the window
    out = [0] * (hi - lo + 1)
    top = 1 << BINOMIAL_PRECISION
    out[m - lo] = top
    w = top
    for k in range(m, hi):
        w = w * (n - k) * a // ((k + 1) * b)
        if w == 0:
            break
        out[k + 1 - lo] = w
    w = top
    for k in range(m, lo, -1):
        w = w * k * b // ((n - k + 1) * a)
        if w == 0:
            break
        out[k - 1 - lo] = w
    return out


def _support(n: int, lo: int, hi: int) -> tuple[int, int]:
    if lo > hi or hi < 0 or lo > n:
        raise ContractViolation(f"empty support [{lo}, {hi}] for n={n}")
    return max(lo, 0), min(hi, n)


@lru_cache(maxsize=4096)
def _binomial_table(n: int, p: Fraction, lo: int, hi: int) -> FreqTable:
    return quantize(binomial_weights(n, p, lo, hi), offset=lo)


def binomial_truncated(n: int, p, lo: int, hi: int) -> FreqTable:
    """Binomial(n, p) restricted to lo..hi (clipped to 0..n), renormalized."""
    lo, hi = _support(n, lo, hi)
    if hi - lo + 1 > PROB_SCALE:
        raise ContractViolation(f"support of {hi - lo + 1} symbols exceeds {PROB_SCALE}")
    return _binomial_table(int(n), _as_fraction(p), int(lo), int(hi))


def bucket_shift(width: int) -> int:
    """Smallest s such that ``width`` values fit in 4096 buckets of 2**s."""
    s = 0
    while (width + (1 << s) - 1) >> s > PROB_SCALE:
        s += 1
    return s


@lru_cache(maxsize=1024)
def _binomial_buckets(n: int, p: Fraction, lo: int, hi: int) -> FreqTable:
    w = binomial_weights(n, p, lo, hi)
    s = bucket_shift(len(w))
    step = 1 << s
    return quantize([sum(w[i:i + step]) for i in range(0, len(w), step)])


def binomial_bucketed(n: int, p, lo: int, hi: int) -> tuple[FreqTable, int]:
    """Two-stage model for supports wider than 4096 values.

    Returns a table over bucket indices and the bucket shift ``s``: value v
    falls in bucket (v - lo) >> s, and its position inside the bucket is coded
    uniformly.  Bucket masses are the summed binomial weights.
    """
    lo, hi = _support(n, lo, hi)
    return _binomial_buckets(int(n), _as_fraction(p), int(lo), int(hi)), bucket_shift(hi - lo + 1)


# -- rANS core ---------------------------------------------------------------

@numba.njit(cache=True)
def _rans_encode(starts, freqs):
    n = starts.shape[0]
    buf = np.empty(2 * n + STATE_BYTES, np.uint8)
    pos = buf.shape[0]
    x = np.int64(RANS_L)
    for i in range(n - 1, -1, -1):
        f = freqs[i]
        x_max = ((RANS_L >> PROB_BITS) << 8) * f
        while x >= x_max:
            pos -= 1
            buf[pos] = x & 0xFF
            x >>= 8
        x = ((x // f) << PROB_BITS) + (x % f) + starts[i]
    for _ in range(STATE_BYTES):
        pos -= 1
        buf[pos] = x & 0xFF
        x >>= 8
    return buf[pos:].copy()


def encode_intervals(starts, freqs) -> bytes:
    """rANS-encode (start, freq) pairs given in decode order."""
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    freqs = np.ascontiguousarray(freqs, dtype=np.int64)
    return _rans_encode(starts, freqs).tobytes()


class RansDecoder:
    """Pops symbols from an rANS stream in the order they were pushed forward."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = bytes(data)
        if len(self.data) - pos < STATE_BYTES:
            raise TruncatedStreamError("stream shorter than the coder state")
        x = 0
        for k in range(STATE_BYTES):
            x = (x << 8) | self.data[pos + k]
        if not RANS_L <= x < (RANS_L << 8):
            raise CorruptStreamError("coder state out of range")
        self.x = x
        self.pos = pos + STATE_BYTES

    def peek_slot(self) -> int:
        return self.x & (PROB_SCALE - 1)

    def advance(self, start: int, freq: int) -> None:
        x = freq * (self.x >> PROB_BITS) + (self.x & (PROB_SCALE - 1)) - start
        data, pos = self.data, self.pos
        while x < RANS_L:
            if pos >= len(data):
                raise TruncatedStreamError("rANS payload ended early")
            x = (x << 8) | data[pos]
            pos += 1
        self.x, self.pos = x, pos

    def pop(self, table: FreqTable) -> int:
        if table.deterministic:
            return table.counts.index(PROB_SCALE) + table.offset
        sym = table.lookup(self.peek_slot())
        start, freq = table.interval(sym)
        self.advance(start, freq)
        return sym

    def finish(self) -> None:
        """Check the stream was consumed exactly back to the initial state."""
        if self.x != RANS_L or self.pos != len(self.data):
            raise CorruptStreamError("payload did not decode back to the initial coder state")


def ans_encode(symbols: Iterable[int], models: Iterable[FreqTable]) -> bytes:
    starts, freqs = [], []
    for s, m in zip(symbols, models, strict=True):
        start, f = m.interval(s)
        if f == PROB_SCALE:
            continue
        starts.append(start)
        freqs.append(f)
    return encode_intervals(starts, freqs)


def ans_decode(data: bytes, count: int, models) -> list[int]:
    """Decode ``count`` symbols.

    ``models`` is either a sequence of FreqTables or a callable taking the
    list of symbols decoded so far and returning the next model.
    """
    dec = RansDecoder(data)
    out: list[int] = []
    if callable(models):
        for _ in range(count):
            out.append(dec.pop(models(out)))
    else:
        models = list(models)
        if len(models) != count:
            raise ContractViolation("need one model per symbol")
        for m in models:
            out.append(dec.pop(m))
    dec.finish()
    return out


def ideal_bits(symbols: Iterable[int], models: Iterable[FreqTable]) -> float:
    """Codelength under the quantized models, in bits."""
    return sum(m.cost_bits(s) for s, m in zip(symbols, models, strict=True))
