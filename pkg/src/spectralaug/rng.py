"""Counter-based random streams.

Every stochastic routine in the package takes an explicit :class:`RngStream`.
A stream is fully identified by ``(seed, stream_id)``; the same pair always
yields the same draw sequence, on every platform, because the underlying
generator is the counter-based Philox 4x64 whose 128-bit key is exactly the
``(seed, stream_id)`` pair.  Internal sub-streams (resampling attempts,
Monte Carlo chunks) are derived by jumping the 256-bit counter, which can
never collide with another ``(seed, stream_id)`` key.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .errors import ValidationError

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not (0 <= int(v) <= _UINT64_MAX):
                raise ValidationError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self, jumps: int = 0) -> Generator:
        """Fresh generator for this stream; ``jumps`` selects a derived sub-stream."""
        bitgen = Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        if jumps:
            bitgen = bitgen.jumped(jumps)
        return Generator(bitgen)

    def substream(self, jumps: int) -> "RngStream":
        """Stream-like view used for documentation purposes in error paths."""
        if jumps < 1:
            raise ValidationError("substream jumps must be >= 1")
        return _SubStream(self.seed, self.stream_id, jumps)


@dataclass(frozen=True)
class _SubStream(RngStream):
    jumps: int = 0

    def generator(self, jumps: int = 0) -> Generator:
        return super().generator(self.jumps + jumps)


def sample_gaussian(stream: RngStream, rows: int, cols: int) -> np.ndarray:
    """I.i.d. standard-normal matrix, deterministic given the stream."""
    if rows < 1 or cols < 1:
        raise ValidationError(f"rows and cols must be >= 1, got ({rows}, {cols})")
    return stream.generator().standard_normal((int(rows), int(cols)))
