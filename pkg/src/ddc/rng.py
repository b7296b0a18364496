"""Deterministic random-stream derivation.

All randomness in this package flows through :func:`stream`, which derives an
independent counter-based generator from a 64-bit seed plus an integer path
(task index, restart index, ...).  Worker count and evaluation order therefore
never affect results: record ``i`` of a survey always consumes the stream
``stream(seed, i)`` no matter which process computes it.

The derivation uses numpy's ``SeedSequence`` (a fixed, documented hash) feeding
a Philox counter-based bit generator.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def limit_blas_threads() -> None:
    """Pin BLAS pools to one thread.

    Every matrix in this package is tiny, so threaded BLAS only adds
    contention; surveys parallelize across processes instead.  Safe to call
    repeatedly; silently does nothing if threadpoolctl is unavailable.
    """
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=1)
    except ImportError:
        pass


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the given seed and derivation path."""
    ss = np.random.SeedSequence(entropy=seed & _MASK64, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit sub-seed, for handing a whole task its own seed."""
    ss = np.random.SeedSequence(entropy=seed & _MASK64, spawn_key=tuple(path))
    return int(ss.generate_state(1, np.uint64)[0])
