"""Kernel backend selection.

The compiled core (`winmart._backend._fastpath`, built from Cython) is used
when it imported successfully; otherwise the NumPy reference implementation
takes over.  Both expose the same `run_chunk` contract.  `get_backend` lets
callers and the benchmark pin one explicitly.
"""

from __future__ import annotations

from . import reference

try:
    from . import _fastpath

    HAS_FASTPATH = True
except ImportError:  # pragma: no cover - depends on the build
    _fastpath = None
    HAS_FASTPATH = False

DEFAULT = _fastpath if HAS_FASTPATH else reference

KIND_SIN = reference.KIND_SIN
KIND_FREE = reference.KIND_FREE
IG_NONE = reference.IG_NONE
IG_ANALYTIC = reference.IG_ANALYTIC
IG_BASS = reference.IG_BASS


def get_backend(name: str | None = None):
    """Resolve a backend module by name: None (default), 'fastpath', 'reference'."""
    if name is None:
        return DEFAULT
    if name == "reference":
        return reference
    if name == "fastpath":
        if not HAS_FASTPATH:
            raise RuntimeError("compiled backend requested but not built")
        return _fastpath
    raise ValueError(f"unknown backend {name!r}")


def backend_name(backend=None) -> str:
    return (backend or DEFAULT).NAME
