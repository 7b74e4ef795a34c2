"""Reproducible random streams keyed by ``(seed, stream_index)``."""

import numpy as np

from . import kernels

_U64 = 2 ** 64


class RngStream:
    """Counter-based uniform stream (Philox4x32-10).

    The seed is the 64-bit Philox key and the stream index fills the upper
    half of the 128-bit counter, so any ``(seed, stream_index)`` pair can be
    opened without coordination and replays the same sequence. ``position``
    counts uniforms consumed so far.

    A stream is mutated by every draw; give each concurrent worker its own.
    """

    __slots__ = ("seed", "stream_index", "position")

    def __init__(self, seed, stream_index=0, position=0):
        seed, stream_index, position = int(seed), int(stream_index), int(position)
        if not 0 <= seed < _U64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if not 0 <= stream_index < _U64:
            raise ValueError(f"stream_index out of range: {stream_index}")
        if not 0 <= position < _U64:
            raise ValueError(f"position out of range: {position}")
        self.seed = seed
        self.stream_index = stream_index
        self.position = position

    def __repr__(self):
        return (f"RngStream(seed={self.seed}, stream_index={self.stream_index}, "
                f"position={self.position})")

    def random(self, size=None):
        """Uniform variates on the open interval (0, 1).

        Returns a float when ``size`` is None, else an array of that shape.
        """
        n = 1 if size is None else int(np.prod(size))
        u = kernels.backend.uniforms(self.seed, self.stream_index, self.position, n)
        self.position += n
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def advance(self, n):
        """Skip ``n`` uniforms."""
        self.position += int(n)

    def spawn(self, stream_index):
        """Fresh stream with the same seed and a different index."""
        return RngStream(self.seed, stream_index)
