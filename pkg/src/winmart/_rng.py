"""Counter-based random streams.

Every path owns a reproducible stream derived from (seed, path index): paths
are grouped into fixed blocks of STREAM_BLOCK consecutive indices, and block
b draws from Philox keyed by the seed with its 256-bit counter offset by
b << 128.  Within a block, normals are generated row-major (one row per
path), so the numbers a path sees depend only on (seed, path index,
n_steps) and never on chunk sizes chosen by callers, worker counts, or
scheduling.  Terminal-completion uniforms live in a disjoint counter range
(bit 192 set).

STREAM_BLOCK is part of the sampling scheme's identity, like the seed:
changing it changes every draw.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

STREAM_BLOCK = 1024

_TERMINAL_OFFSET = 1 << 192


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


def block_normals(seed: int, block: int, n_rows: int, n_cols: int) -> np.ndarray:
    """Standard normals for paths [block*B, block*B + n_rows), shape (n_rows, n_cols).

    n_rows may be smaller than STREAM_BLOCK for the tail block; the leading
    rows are identical to what a full block would produce.
    """
    if not 0 < n_rows <= STREAM_BLOCK:
        raise ValueError("n_rows must be in (0, STREAM_BLOCK]")
    gen = Generator(Philox(key=_check_seed(seed), counter=block << 128))
    return gen.standard_normal((n_rows, n_cols))

def block_terminal_uniforms(seed: int, block: int, n_rows: int) -> np.ndarray:
    """Uniforms for terminal completion of the same path block."""
    if not 0 < n_rows <= STREAM_BLOCK:
        raise ValueError("n_rows must be in (0, STREAM_BLOCK]")
    gen = Generator(Philox(key=_check_seed(seed), counter=_TERMINAL_OFFSET + (block << 128)))
    return gen.random(n_rows)


def iter_blocks(n_paths: int):
    """Yield (block_index, start, stop) covering range(n_paths)."""
    for block in range((n_paths + STREAM_BLOCK - 1) // STREAM_BLOCK):
        start = block * STREAM_BLOCK
        yield block, start, min(start + STREAM_BLOCK, n_paths)
