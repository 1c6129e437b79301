"""Batch objective kernels.

Every kernel takes an ``(count, length)`` array of action indices (one string
per row) and returns one value per row.  Each kernel exists twice: a numba
``@njit`` version and a pure-numpy version performing the same floating-point
operations in the same order.  The task kernels agree bit for bit; the
measurement kernels can differ by one ulp because numpy's vectorized ``log``
and the scalar libm ``log`` used by numba round differently.  A given backend
is always deterministic.  ``STRSUB_DISABLE_NUMBA=1`` forces the numpy
path; it is also used automatically when numba cannot be imported.

Rows are independent, so splitting a batch into chunks never changes any
output value.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

_DISABLED = os.environ.get("STRSUB_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = HAS_NUMBA and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"

# fastmath stays off: reassociation would break bit-equality between paths.
JIT_OPTIONS = {"nogil": True, "cache": True}


def task_values_numpy(strings, q):
    """Mean completion probability for each row.

    ``q[i, j, a]`` is the failure probability ``1 - p`` of subtask ``i`` at
    stage ``j`` with agent ``a``.
    """
    count, length = strings.shape
    n = q.shape[0]
    acc = np.zeros(count)
    for i in range(n):
        prod = np.ones(count)
        for j in range(length):
            prod = prod * q[i, j, strings[:, j]]
        acc = acc + (1.0 - prod)
    return acc / n


def measurement_values_numpy(strings, inv_var, e_grid, e_comp):
    """Information gain ``0.5 * ln(S * T)`` for each row."""
    count, length = strings.shape
    s = np.ones(count)
    t = np.ones(count)
    for j in range(length):
        idx = strings[:, j]
        s = s + e_grid[idx] * inv_var[j]
        t = t + e_comp[idx] * inv_var[j]
    return 0.5 * np.log(s * t)


def _task_values_py(strings, q):
    count, length = strings.shape
    n = q.shape[0]
    out = np.empty(count)
    for r in range(count):
        acc = 0.0
        for i in range(n):
            prod = 1.0
            for j in range(length):
                prod = prod * q[i, j, strings[r, j]]
            acc = acc + (1.0 - prod)
        out[r] = acc / n
    return out


def _measurement_values_py(strings, inv_var, e_grid, e_comp):
    count, length = strings.shape
    out = np.empty(count)
    for r in range(count):
        s = 1.0
        t = 1.0
        for j in range(length):
            k = strings[r, j]
            s = s + e_grid[k] * inv_var[j]
            t = t + e_comp[k] * inv_var[j]
        out[r] = 0.5 * np.log(s * t)
    return out


if HAS_NUMBA:
    task_values_numba = numba.njit(**JIT_OPTIONS)(_task_values_py)
    measurement_values_numba = numba.njit(**JIT_OPTIONS)(_measurement_values_py)
else:  # pragma: no cover
    task_values_numba = None
    measurement_values_numba = None


if USE_NUMBA:
    task_values = task_values_numba
    measurement_values = measurement_values_numba
else:
    task_values = task_values_numpy
    measurement_values = measurement_values_numpy


def all_strings(alphabet_size: int, length: int, first: int | None = None) -> np.ndarray:
    """Every string of ``length`` in lexicographic order, one per row.

    With ``first`` set, only the strings starting with that action.
    """
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if first is None:
        grid = np.indices((alphabet_size,) * length, dtype=np.int64)
        return grid.reshape(length, -1).T.copy()
    tail = all_strings(alphabet_size, length - 1)
    head = np.full((tail.shape[0], 1), first, dtype=np.int64)
    return np.hstack([head, tail])
