"""Deterministic random-number streams.

Every simulation run owns two independent PCG64 streams, derived as a pure
function of (master_seed, run_index, stream_id) through numpy's SeedSequence
spawn keys.  Run results therefore do not depend on execution order or worker
count, and ensembles can be split and merged freely.

Both simulation kernels (compiled and pure Python) consume the *raw* uint64
output of the bit generator through the same derived primitives (bounded
integers by masked rejection, doubles from the top 53 bits), so a run's
trajectory is bit-identical across kernels.
"""

from __future__ import annotations

import numpy as np

DYNAMICS_STREAM = 0
DECISIONS_STREAM = 1

# 53-bit mantissa scaling for uniform doubles in [0, 1).
_INV_2_53 = 1.0 / 9007199254740992.0


def stream_seed(master_seed: int, run_index: int, stream_id: int) -> np.random.SeedSequence:
    """SeedSequence for one stream of one run, as a pure function of the keys."""
    return np.random.SeedSequence(master_seed, spawn_key=(run_index, stream_id))


def run_bit_generators(master_seed: int, run_index: int) -> tuple[np.random.PCG64, np.random.PCG64]:
    """Fresh (dynamics, decisions) bit generators for one run."""
    return (
        np.random.PCG64(stream_seed(master_seed, run_index, DYNAMICS_STREAM)),
        np.random.PCG64(stream_seed(master_seed, run_index, DECISIONS_STREAM)),
    )


class BitStream:
    """Buffered uint64 reader over a numpy bit generator.

    Mirrors, in Python, exactly the primitives the compiled kernel implements
    in C: `next_u64`, `randbelow` (masked rejection) and `uniform` (top 53
    bits).  Identical seeds yield identical draws in both kernels.
    """

    __slots__ = ("_bg", "_buf", "_pos", "_bufsize")

    def __init__(self, source: int | np.random.SeedSequence | np.random.BitGenerator, bufsize: int = 1024):
        if isinstance(source, (int, np.integer)):
            source = np.random.PCG64(np.random.SeedSequence(int(source)))
        elif isinstance(source, np.random.SeedSequence):
            source = np.random.PCG64(source)
        self._bg = source
        self._bufsize = bufsize
        self._buf = ()
        self._pos = 0

    @property
    def bit_generator(self) -> np.random.BitGenerator:
        return self._bg

    def next_u64(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self._bg.random_raw(self._bufsize).tolist()
            self._pos = 0
        v = self._buf[self._pos]
        self._pos += 1
        return v

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by masked rejection; draws nothing for n <= 1."""
        if n <= 1:
            return 0
        mask = (1 << (n - 1).bit_length()) - 1
        while True:
            r = self.next_u64() & mask
            if r < n:
                return r

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits of one u64."""
        return (self.next_u64() >> 11) * _INV_2_53

    def shuffle_prefix(self, items: list, k: int) -> None:
        """Partial Fisher-Yates: after the call, items[:k] is a uniform
        ordered k-sample of the original list, drawn without replacement."""
        n = len(items)
        for i in range(k):
            j = i + self.randbelow(n - i)
            items[i], items[j] = items[j], items[i]
