"""Per-path random streams.

Each path owns a Philox generator whose 128-bit key packs the master seed
and the path index, so a path's increments never depend on how paths are
grouped into blocks or threads.
"""

import os

import numpy as np

_MASK64 = (1 << 64) - 1
BOOTSTRAP_STREAM = _MASK64  # path index reserved for resampling


def path_generator(seed: int, path: int) -> np.random.Generator:
    key = (int(seed) & _MASK64) | ((int(path) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def block_generators(seed, start, stop):
    return [path_generator(seed, p) for p in range(start, stop)]


def draw_block(gens, steps, k):
    """Normals of shape (steps, len(gens), k), each column from its own path."""
    out = np.empty((steps, len(gens), k))
    for j, g in enumerate(gens):
        out[:, j, :] = g.standard_normal((steps, k))
    return out


def thread_count(threads=None) -> int:
    if threads is None:
        threads = int(os.environ.get("DDECERT_THREADS", "0") or 0)
    threads = int(threads)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads
