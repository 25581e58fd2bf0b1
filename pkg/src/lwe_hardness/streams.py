"""Seeded, splittable random streams."""

from __future__ import annotations

import numpy as np


class RandomStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Children created with :meth:`substream` are derived from the key alone
    (they do not consume state from the parent), so chunked work is
    reproducible no matter how it is scheduled.
    """

    def __init__(self, seed: int, stream_id: int = 0, _path: tuple[int, ...] = ()):
        if not 0 <= seed < 2**64 or not 0 <= stream_id < 2**64:
            raise ValueError("seed and stream_id must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(int(p) for p in _path)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self._path)
        self.rng = np.random.Generator(np.random.PCG64(ss))

    def substream(self, *ids: int) -> "RandomStream":
        return RandomStream(self.seed, self.stream_id, self._path + tuple(ids))

    def __repr__(self) -> str:
        path = "" if not self._path else f", path={self._path}"
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id}{path})"


def as_stream(stream: "RandomStream | int") -> RandomStream:
    if isinstance(stream, RandomStream):
        return stream
    return RandomStream(int(stream))
