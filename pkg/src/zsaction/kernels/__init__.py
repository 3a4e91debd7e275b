"""Numeric kernels behind the engine's hot paths.

Two interchangeable backends implement the same operations: a compiled
Cython core (``_native``) and a pure NumPy fallback (``pure``).  The
compiled core is preferred when it was built; selection happens at
import time and can be overridden with the ``ZSACTION_BACKEND``
environment variable (``auto``, ``native`` or ``python``) or at runtime
with :func:`set_backend` (used by tests and the benchmark).

Backends agree to within a few ulps per operation; each backend is
individually deterministic, so repeated runs under one backend are
bit-identical.
"""

import os

import numpy as np

from . import pure

_BACKENDS = {"python": pure}
try:
    from . import _native
except ImportError:
    _native = None
else:
    _BACKENDS["native"] = _native

_requested = os.environ.get("ZSACTION_BACKEND", "auto")
if _requested not in ("auto", "native", "python"):
    raise ValueError(
        f"ZSACTION_BACKEND must be auto, native or python, got {_requested!r}"
    )
if _requested == "native" and _native is None:
    raise ImportError("ZSACTION_BACKEND=native but the compiled kernels are not built")

if _requested == "python":
    _impl = pure
else:
    _impl = _native if _native is not None else pure


def available_backends():
    """Names of the backends importable in this environment."""
    return sorted(_BACKENDS)


def active_backend():
    """Name of the backend currently answering kernel calls."""
    return "native" if _impl is _native else "python"


def set_backend(name):
    """Switch the active backend; returns the previous backend name."""
    global _impl
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    previous = active_backend()
    _impl = _BACKENDS[name]
    return previous


def get_backend(name):
    """Raw implementation module for one backend (testing/benchmarks)."""
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    return _BACKENDS[name]


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _i64(x):
    return np.ascontiguousarray(x, dtype=np.int64)


def gelu(x):
    """Elementwise x * Phi(x) (exact erf form); accepts 1D or 2D input."""
    return _impl.gelu(_f64(x))


def gelu_grad(x):
    """Elementwise derivative of gelu."""
    return _impl.gelu_grad(_f64(x))


def softmax_rows(x):
    """Row-wise softmax of a 2D array, computed with max subtraction."""
    return _impl.softmax_rows(_f64(x))


def softmax(x):
    """Softmax of a single vector."""
    return softmax_rows(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]


def keep_top_k_rows(x, k):
    """Zero all but the k largest entries per row (ties: lower index wins)."""
    return _impl.keep_top_k_rows(_f64(x), int(k))


def keep_top_k(v, k):
    """Vector form of :func:`keep_top_k_rows`."""
    return keep_top_k_rows(np.asarray(v, dtype=np.float64).reshape(1, -1), k)[0]


def forward_probs(x, weights, bias):
    """softmax(gelu(x @ W + b)) over the rows of x."""
    return _impl.forward_probs(_f64(x), _f64(weights), _f64(bias))


def ce_grads(x, labels, weights, bias):
    """Batch cross-entropy loss and (dW, db) through softmax(gelu(affine))."""
    return _impl.ce_grads(_f64(x), _i64(labels), _f64(weights), _f64(bias))
