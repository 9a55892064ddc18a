"""Backend selection for the hot game loops.

The compiled Cython kernel is preferred when importable; the numpy fallback
implements identical semantics. Force a choice with ``EVBET_BACKEND=python``
or ``EVBET_BACKEND=cython``; cap kernel threads with ``EVBET_THREADS``
(default: all CPUs).
"""

from __future__ import annotations

import os

from . import _pykernels

_requested = os.environ.get("EVBET_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "EVBET_BACKEND=cython requested but the compiled kernel is unavailable"
            )
        _impl = _pykernels
        BACKEND = "python"


def n_threads() -> int:
    raw = os.environ.get("EVBET_THREADS", "").strip()
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def up_game_batch(xs, mus, n_nodes, threads: int | None = None):
    """Dispatch the batch universal-portfolio runner to the active backend."""
    if threads is None:
        threads = n_threads()
    return _impl.up_game_batch(xs, mus, n_nodes, threads)
