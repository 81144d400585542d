"""Kernel selection: compiled extension if available, pure Python otherwise.

The two kernels are bit-identical per run (same seeds give the same
trajectory); they differ only in speed.  `CONSENSUS_CARDS_BACKEND` forces a
choice: `cython` (error if the extension is missing), `python`, or `auto`
(the default).
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel
except ImportError:  # extension not built on this install
    _kernel = None


def _select(name: str | None):
    name = (name or "auto").strip().lower()
    if name in ("", "auto"):
        return _kernel if _kernel is not None else _kernel_py
    if name in ("cython", "compiled", "c"):
        if _kernel is None:
            raise ImportError(
                "CONSENSUS_CARDS_BACKEND requests the compiled kernel but the "
                "extension is not built; run `pip install -e .` with a C compiler")
        return _kernel
    if name == "python":
        return _kernel_py
    raise ValueError(f"unknown backend {name!r}; use auto, cython or python")


_active = _select(os.environ.get("CONSENSUS_CARDS_BACKEND"))

simulate_run = _active.simulate_run
draw_subset_counts = _active.draw_subset_counts

STRATEGY_CODES = {
    "uniform": _kernel_py.STRATEGY_UNIFORM,
    "topc": _kernel_py.STRATEGY_TOPC,
    "gibbs": _kernel_py.STRATEGY_GIBBS,
}


def active_backend() -> str:
    """Name of the kernel in use: 'cython' or 'python'."""
    return _active.BACKEND_NAME


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _kernel is not None else ("python",)


def get_kernel(name: str):
    """Explicit kernel module lookup (used by equivalence tests and the
    backend benchmark)."""
    return _select(name)
