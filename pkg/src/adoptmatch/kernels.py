"""Backend selection for the hot loops.

``ADOPTMATCH_BACKEND=numpy`` forces the pure-numpy path; the default is numba
when it imports, numpy otherwise.
"""

import importlib
import logging
import os

log = logging.getLogger(__name__)

BACKENDS = ("numba", "numpy")


def load_backend(name: str):
    name = name.lower()
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    return importlib.import_module(f"adoptmatch._kernels_{name}")


def _default():
    requested = os.environ.get("ADOPTMATCH_BACKEND", "numba").lower()
    try:
        return load_backend(requested)
    except ImportError:
        log.warning("backend %s unavailable, falling back to numpy", requested)
        return load_backend("numpy")


K = _default()


def use_backend(name: str) -> None:
    """Switch the process-wide backend (mainly for tests and benchmarks)."""
    global K
    K = load_backend(name)


def backend_name() -> str:
    return K.NAME
