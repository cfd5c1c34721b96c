"""Deterministic splittable randomness and exact exponential-clock races.

Every replica of every simulation draws from counter-based Philox streams
keyed by (replica, site, clock kind). Identical keys replay identical draw
sequences, distinct keys give independent streams, and aggregation over
replicas is order-independent. This is what makes shared-noise couplings
(same spike clocks, extra leak clocks only on one process) assertable
pathwise instead of statistically.
"""

from __future__ import annotations

import math
from enum import IntEnum
from typing import Sequence

import numpy as np

from .core import NoActiveClocksError

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_SALT_KEY = 0xD1B54A32D192ED03


class ClockKind(IntEnum):
    """Which Poisson family a substream feeds.

    SPIKE, LEAK and LEAK_EXTRA are the per-site clocks of the graphical
    construction; RACE is an aggregated lane used by the single-stream
    Gillespie drivers.
    """

    SPIKE = 0
    LEAK = 1
    LEAK_EXTRA = 2
    RACE = 3


def _mix64(z: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit words."""
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def _zigzag(site: int) -> int:
    return (site << 1) if site >= 0 else ((-site) << 1) - 1


class Substream:
    """A single keyed uniform stream with a draw counter.

    Uniforms are pulled from numpy in growing blocks; `draws` counts the
    values served so far, so (key, draws) pins the next value exactly.
    """

    __slots__ = ("_gen", "_bitgen", "_pool", "_buf", "_i", "_block", "draws", "key")

    def __init__(self, bitgen: np.random.Philox, gen: np.random.Generator,
                 pool: list | None, key: tuple[int, int]):
        self._bitgen = bitgen
        self._gen = gen
        self._pool = pool
        self._buf: list[float] = []
        self._i = 0
        self._block = 64
        self.draws = 0
        self.key = key

    def uniform(self) -> float:
        """Next uniform in [0, 1)."""
        i = self._i
        buf = self._buf
        if i >= len(buf):
            buf = self._gen.random(self._block).tolist()
            if self._block < 8192:
                self._block *= 2
            self._buf = buf
            i = 0
        self._i = i + 1
        self.draws += 1
        return buf[i]

    def uniforms(self, n: int) -> np.ndarray:
        """Block of n uniforms, bypassing the scalar buffer."""
        if self._i < len(self._buf):
            raise RuntimeError("mixing scalar and block draws would reorder the stream")
        self.draws += n
        return self._gen.random(n)

    def exponential(self, rate: float) -> float:
        """Exp(rate) waiting time; strictly positive."""
        u = self.uniform()
        while u == 0.0:  # probability 2^-53, avoid a zero holding time
            u = self.uniform()
        return -math.log1p(-u) / rate

    def __del__(self):
        pool = self._pool
        if pool is not None and len(pool) < 64:
            try:
                pool.append((self._bitgen, self._gen))
            except Exception:
                pass


class EventStreams:
    """Master source of keyed substreams for one experiment.

    A substream is a pure function of (master_seed, replica, site, kind):
    the key is built by bijective 64-bit mixing, so distinct coordinates can
    never collide, and Philox guarantees independence across distinct keys.
    Construction cost is amortized by recycling (bitgen, generator) pairs.
    """

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed) & _M64
        self._h0 = _mix64(self.master_seed ^ _GOLDEN)
        self._h1 = _mix64(self.master_seed ^ _SALT_KEY)
        self._pool: list = []

    def _key(self, replica: int, site: int, kind: int) -> tuple[int, int]:
        if replica < 0:
            raise ValueError("replica index must be >= 0")
        k0 = _mix64(_zigzag(site) ^ self._h0)
        k1 = _mix64(((replica << 3) | (kind & 7)) ^ self._h1)
        return k0, k1

    def substream(self, replica: int, site: int, kind: ClockKind) -> Substream:
        k0, k1 = self._key(replica, site, int(kind))
        if self._pool:
            bitgen, gen = self._pool.pop()
            state = bitgen.state
            inner = state["state"]
            inner["counter"][:] = 0
            inner["key"][0] = k0
            inner["key"][1] = k1
            state["buffer_pos"] = 4
            state["has_uint32"] = 0
            state["uinteger"] = 0
            bitgen.state = state
        else:
            bitgen = np.random.Philox(key=k0 | (k1 << 64))
            gen = np.random.Generator(bitgen)
        return Substream(bitgen, gen, self._pool, (k0, k1))

    def child(self, tag: int) -> "EventStreams":
        """Derived independent master, for e.g. the two sides of a test."""
        return EventStreams(_mix64(self.master_seed ^ _mix64(tag ^ _GOLDEN)))


def split_stream(streams: EventStreams, replica: int, site: int,
                 kind: ClockKind) -> Substream:
    """Substream for the given (replica, site, clock kind) key."""
    return streams.substream(replica, site, kind)


def exp_race(rates: Sequence[float], stream: Substream) -> tuple[int, float]:
    """Race independent exponential clocks with the given rates.

    Returns (winner index, waiting time). The time is Exp(sum of rates) and
    the winner is index i with probability rates[i]/sum, independent of the
    time. A floating-point tie on the cumulative scan resolves to the lowest
    index.
    """
    total = 0.0
    for r in rates:
        if r < 0:
            raise NoActiveClocksError("negative rate")
        total += r
    if total <= 0.0:
        raise NoActiveClocksError("no active clocks")
    wait = stream.exponential(total)
    x = stream.uniform() * total
    acc = 0.0
    last = -1
    for i, r in enumerate(rates):
        if r > 0.0:
            acc += r
            last = i
            if x < acc:
                return i, wait
    return last, wait  # x landed on the top edge by rounding
