"""Counter-based random streams.

Every draw is a pure function of ``(seed, stream name, counter)``: the stream
name and seed are hashed into a Philox key and the counter addresses a
position in that keyed sequence.  A draw fetched on its own equals the same
position fetched in bulk, so sampling order never changes results.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream_key", "uniforms", "uniform_at"]

# Philox4x64 emits four 64-bit words per counter block
_WORDS_PER_BLOCK = 4


def stream_key(seed: int, name: str) -> int:
    digest = hashlib.blake2b(f"{int(seed)}|{name}".encode(), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def uniforms(seed: int, name: str, n: int, start: int = 0) -> np.ndarray:
    """Draws ``start, ..., start + n - 1`` of the stream, uniform on ``[0, 1)``."""
    bg = np.random.Philox(key=stream_key(seed, name))
    block, offset = divmod(start, _WORDS_PER_BLOCK)
    if block:
        bg.advance(block)
    return np.random.Generator(bg).random(n + offset)[offset:]


def uniform_at(seed: int, name: str, index: int) -> float:
    return float(uniforms(seed, name, 1, start=index)[0])
