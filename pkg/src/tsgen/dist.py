"""Seeded random streams and the two elementary draws (multinomial, Gaussian).

Each sample gets its own xoshiro256++ stream whose 256-bit state is filled by
SplitMix64 from ``(master_seed, sample_index)``. :class:`RngStream` is the
scalar generator; :class:`StreamBatch` advances many such streams in lockstep
with numpy and yields bit-identical draws, which is what makes whole-dataset
generation fast without giving up per-sample determinism.

Gaussian draws use basic Box-Muller; the second variate of each pair is
cached on the stream and returned by the next call.
"""

from __future__ import annotations

import math
from itertools import accumulate
from typing import Sequence

import numpy as np

from .errors import InvalidDistribution

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO_PI = 2.0 * math.pi
_INV_2_53 = 2.0**-53
PROB_TOL = 1e-9


def mix64(z: int) -> int:
    """SplitMix64 output finalizer (a bijection on 64-bit integers)."""
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; returns ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, mix64(state)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def _box_muller(u1, u2):
    # u1 in (0, 1]. np functions so scalar and batched paths round identically.
    r = np.sqrt(-2.0 * np.log(u1))
    theta = _TWO_PI * u2
    return r * np.cos(theta), r * np.sin(theta)


def _stream_seed(master_seed: int, sample_index: int) -> int:
    return (mix64(master_seed & MASK64) + sample_index) & MASK64


class RngStream:
    """xoshiro256++ generator with a one-slot Box-Muller cache.

    Not thread-safe; give each worker its own stream.
    """

    __slots__ = ("state", "cached_normal")

    def __init__(self, state: Sequence[int]):
        if len(state) != 4 or not any(state):
            raise ValueError("xoshiro256++ needs four words, not all zero")
        self.state = [s & MASK64 for s in state]
        self.cached_normal: float | None = None

    @classmethod
    def from_seed(cls, seed: int) -> RngStream:
        """Fill the state with four consecutive SplitMix64 outputs."""
        words = []
        s = seed & MASK64
        for _ in range(4):
            s, w = splitmix64(s)
            words.append(w)
        return cls(words)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.state
        result = (_rotl((s0 + s3) & MASK64, 23) + s0) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.state = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def normal(self) -> float:
        if self.cached_normal is not None:
            z, self.cached_normal = self.cached_normal, None
            return z
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        z0, z1 = _box_muller(np.float64(u1), np.float64(u2))
        self.cached_normal = float(z1)
        return float(z0)


def derive_stream(master_seed: int, sample_index: int) -> RngStream:
    """Stream for one sample; depends only on ``(master_seed, sample_index)``.

    Distinct indices give distinct SplitMix64 seeds, and the first state word
    is a bijective image of that seed, so initial states never collide.
    """
    return RngStream.from_seed(_stream_seed(master_seed, sample_index))


class StreamBatch:
    """Many independent xoshiro256++ streams advanced together.

    Draw ``i`` of stream ``j`` equals the ``i``-th draw of
    ``derive_stream(master_seed, indices[j])``, provided every stream makes
    the same sequence of calls, which holds because all samples of one
    network walk the same node schedule.
    """

    def __init__(self, states: np.ndarray):
        self.state = np.array(states, dtype=np.uint64).reshape(4, -1)
        self.cached_normal: np.ndarray | None = None

    @classmethod
    def derive(cls, master_seed: int, indices: Sequence[int]) -> StreamBatch:
        idx = np.asarray(indices, dtype=np.uint64)
        with np.errstate(over="ignore"):
            s = np.uint64(mix64(master_seed & MASK64)) + idx
            words = []
            for _ in range(4):
                s = s + np.uint64(GOLDEN_GAMMA)
                words.append(_mix64_np(s))
        return cls(np.stack(words))

    def __len__(self) -> int:
        return self.state.shape[1]

    def next_u64(self) -> np.ndarray:
        s0, s1, s2, s3 = self.state
        result = _rotl_np(s0 + s3, 23) + s0
        t = s1 << np.uint64(17)
        s2 = s2 ^ s0
        s3 = s3 ^ s1
        s1 = s1 ^ s2
        s0 = s0 ^ s3
        s2 = s2 ^ t
        s3 = _rotl_np(s3, 45)
        self.state = np.stack([s0, s1, s2, s3])
        return result

    def uniform(self) -> np.ndarray:
        return (self.next_u64() >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self) -> np.ndarray:
        if self.cached_normal is not None:
            z, self.cached_normal = self.cached_normal, None
            return z
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        z0, z1 = _box_muller(u1, u2)
        self.cached_normal = z1
        return z0


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def _rotl_np(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


# --------------------------------------------------------------------------
# Elementary draws
# --------------------------------------------------------------------------


def check_probs(probs: Sequence[float]) -> None:
    if len(probs) == 0:
        raise InvalidDistribution("empty probability vector")
    if not all(math.isfinite(p) and p >= 0 for p in probs):
        raise InvalidDistribution(f"probabilities must be finite and >= 0: {list(probs)}")
    s = math.fsum(probs)
    if abs(s - 1.0) > PROB_TOL:
        raise InvalidDistribution(f"probabilities sum to {s:.12g}, not 1")


def level_from_cumulative(cum: Sequence[float], u: float) -> int:
    """Smallest 1-based level whose cumulative probability exceeds ``u``.

    If rounding leaves the total just under ``u``, the last level with
    nonzero mass is returned.
    """
    prev = 0.0
    last_positive = 1
    for level, c in enumerate(cum, start=1):
        if c > u:
            return level
        if c > prev:
            last_positive = level
        prev = c
    return last_positive


def multinomial_level(probs: Sequence[float], u: float) -> int:
    """Inverse-CDF lookup of ``u`` in [0, 1)."""
    return level_from_cumulative(list(accumulate(float(p) for p in probs)), u)


def sample_multinomial(stream: RngStream, probs: Sequence[float]) -> int:
    check_probs(probs)
    return multinomial_level(probs, stream.uniform())


def sample_gaussian(stream: RngStream, mu: float, sigma: float) -> float:
    if not (math.isfinite(sigma) and sigma > 0):
        raise InvalidDistribution(f"sigma must be > 0, got {sigma}")
    if not math.isfinite(mu):
        raise InvalidDistribution(f"mu must be finite, got {mu}")
    return mu + sigma * stream.normal()


def levels_from_cumulative(cum_rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Batched :func:`level_from_cumulative`; ``cum_rows`` is ``(B, K)``."""
    levels = (cum_rows <= u[:, None]).sum(axis=1) + 1
    overflow = levels > cum_rows.shape[1]
    if overflow.any():
        for i in np.flatnonzero(overflow):
            levels[i] = level_from_cumulative(cum_rows[i].tolist(), float(u[i]))
    return levels
