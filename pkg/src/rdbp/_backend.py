"""Backend selection for the simulation kernels.

Two interchangeable execution paths exist for the generation-stepping
simulation: a numba-compiled per-individual kernel and a pure-numpy
fallback. The environment variable ``RDBP_BACKEND`` selects one
(``numba``, ``python``, or ``auto``); callers can also pass an explicit
``backend=`` argument which takes precedence. ``RDBP_THREADS`` caps how
many worker threads the numba path may use for independent replications.
"""

from __future__ import annotations

import os


def _have_numba() -> bool:
    try:
        import numba  # noqa: F401

        return True
    except ImportError:
        return False


HAVE_NUMBA = _have_numba()

VALID_BACKENDS = ("numba", "python")


def resolve_backend(backend: str | None = None) -> str:
    """Pick the execution backend.

    Precedence: explicit argument, then ``RDBP_BACKEND``, then "numba"
    when importable else "python".
    """
    choice = backend or os.environ.get("RDBP_BACKEND", "auto")
    choice = choice.strip().lower()
    if choice == "auto":
        return "numba" if HAVE_NUMBA else "python"
    if choice not in VALID_BACKENDS:
        raise ValueError(f"unknown backend {choice!r}; expected one of {VALID_BACKENDS} or 'auto'")
    if choice == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return choice


def thread_count() -> int:
    """Worker-thread cap for replication batches (RDBP_THREADS, default 1)."""
    raw = os.environ.get("RDBP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def derive_seeds(master_seed: int, n: int):
    """Per-replication 32-bit seeds from a 64-bit master seed.

    Splitmix64 over the replication index; deterministic and
    collision-resistant for any practical replication count.
    """
    import numpy as np

    mask = (1 << 64) - 1
    out = np.empty(n, dtype=np.uint32)
    state = (int(master_seed) * 0x9E3779B97F4A7C15 + 0x2545F4914F6CDD1D) & mask
    for i in range(n):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        z = z ^ (z >> 31)
        out[i] = z & 0xFFFFFFFF
    return out
