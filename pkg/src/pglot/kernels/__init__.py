"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The Cython extension ``pglot.kernels._ckern`` is preferred when it was
built; ``pglot.kernels.pykern`` (numpy) is the fallback.  Selection
happens once at import time and can be forced with the environment
variable ``PGLOT_KERNELS=c`` or ``PGLOT_KERNELS=py`` (``c`` raises if
the extension is unavailable).

``benchmarks/bench_kernels.py`` compares the two backends.
"""

from __future__ import annotations

import os

from pglot.kernels import pykern


def _select():
    forced = os.environ.get("PGLOT_KERNELS", "").strip().lower()
    if forced not in ("", "c", "py"):
        raise ValueError(f"PGLOT_KERNELS must be 'c' or 'py', not {forced!r}")
    if forced == "py":
        return pykern
    try:
        from pglot.kernels import _ckern
        return _ckern
    except ImportError:
        if forced == "c":
            raise
        return pykern


_impl = _select()

BACKEND = _impl.NAME
hist256 = _impl.hist256
ngram_counts = _impl.ngram_counts
embed_windows = _impl.embed_windows
scatter_window_grads = _impl.scatter_window_grads


def available_backends() -> dict[str, object]:
    """Importable kernel modules by name; used by tests and benchmarks."""
    out: dict[str, object] = {"py": pykern}
    try:
        from pglot.kernels import _ckern
        out["c"] = _ckern
    except ImportError:
        pass
    return out
