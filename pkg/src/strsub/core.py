"""Strings over a finite action alphabet and the objective-oracle contract.

A string is a tuple of non-negative action indices; ``()`` is the empty
string.  Oracles map strings of length at most ``horizon`` to floats, with
``f(()) == 0``.
"""

from __future__ import annotations

import itertools
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from . import kernels

ActionString = tuple[int, ...]

DEFAULT_BUDGET = 10**8


class InstanceTooLarge(RuntimeError):
    """Raised when an enumeration would exceed the evaluation budget."""


class InvariantViolation(RuntimeError):
    """Raised when a computed result contradicts a guaranteed property."""


def concat(m: Sequence[int], n: Sequence[int]) -> ActionString:
    return tuple(m) + tuple(n)


def is_prefix(m: Sequence[int], n: Sequence[int]) -> bool:
    """True iff ``n == m + l`` for some (possibly empty) ``l``."""
    return len(m) <= len(n) and tuple(n[: len(m)]) == tuple(m)


def count_strings(alphabet_size: int, min_len: int, max_len: int) -> int:
    return sum(alphabet_size**k for k in range(min_len, max_len + 1))


def enumerate_strings(alphabet_size: int, min_len: int, max_len: int) -> Iterator[ActionString]:
    """Yield all strings with ``min_len <= len <= max_len``, length first then lexicographic."""
    if min_len > max_len:
        raise ValueError(f"min_len={min_len} exceeds max_len={max_len}")
    for k in range(min_len, max_len + 1):
        yield from itertools.product(range(alphabet_size), repeat=k)


def check_budget(alphabet_size: int, min_len: int, max_len: int, budget: int) -> int:
    total = count_strings(alphabet_size, min_len, max_len)
    if total > budget:
        raise InstanceTooLarge(
            f"{total} strings (alphabet {alphabet_size}, lengths {min_len}..{max_len}) "
            f"exceed the evaluation budget of {budget}; reduce the alphabet or K"
        )
    return total


class Oracle:
    """Base objective oracle.

    Subclasses implement :meth:`evaluate_many`; rows of the input array are
    strings of equal length.  :meth:`evaluate` goes through the same batch
    path, so a value never depends on how it was requested.
    """

    horizon: int
    alphabet_size: int

    def evaluate_many(self, strings: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, string: Sequence[int]) -> float:
        string = tuple(string)
        if not string:
            return 0.0
        self._check(string)
        return float(self.evaluate_many(np.asarray([string], dtype=np.int64))[0])

    def __call__(self, string: Sequence[int]) -> float:
        return self.evaluate(string)

    def _check(self, string: ActionString) -> None:
        if len(string) > self.horizon:
            raise ValueError(f"string of length {len(string)} exceeds horizon {self.horizon}")
        for a in string:
            if not 0 <= a < self.alphabet_size:
                raise ValueError(f"action {a} outside alphabet of size {self.alphabet_size}")


class FunctionOracle(Oracle):
    """Wrap a plain Python callable ``fn(string) -> float``."""

    def __init__(self, fn: Callable[[ActionString], float], alphabet_size: int, horizon: int):
        if alphabet_size < 1 or horizon < 1:
            raise ValueError("alphabet_size and horizon must be positive")
        self.fn = fn
        self.alphabet_size = alphabet_size
        self.horizon = horizon

    def evaluate_many(self, strings: np.ndarray) -> np.ndarray:
        out = np.empty(strings.shape[0])
        for r, row in enumerate(strings):
            s = tuple(int(a) for a in row)
            out[r] = 0.0 if not s else float(self.fn(s))
        return out


class TableOracle(Oracle):
    """Explicit string -> value table; unlisted non-empty strings are an error."""

    def __init__(self, values: Mapping[Sequence[int], float], alphabet_size: int, horizon: int):
        table: dict[ActionString, float] = {}
        for key, v in values.items():
            key = tuple(int(a) for a in key)
            if len(key) > horizon:
                raise ValueError(f"table entry {key} longer than horizon {horizon}")
            if any(not 0 <= a < alphabet_size for a in key):
                raise ValueError(f"table entry {key} uses an action outside the alphabet")
            table[key] = float(v)
        if table.get((), 0.0) != 0.0:
            raise ValueError("the empty string must have value 0")
        table[()] = 0.0
        self.table = table
        self.alphabet_size = alphabet_size
        self.horizon = horizon

    def evaluate_many(self, strings: np.ndarray) -> np.ndarray:
        out = np.empty(strings.shape[0])
        for r, row in enumerate(strings):
            key = tuple(int(a) for a in row)
            try:
                out[r] = self.table[key]
            except KeyError:
                raise KeyError(f"string {key} missing from value table") from None
        return out


class CountingOracle(Oracle):
    """Proxy that counts evaluations; safe under concurrent calls."""

    def __init__(self, inner: Oracle):
        self.inner = inner
        self.alphabet_size = inner.alphabet_size
        self.horizon = inner.horizon
        self.count = 0
        self._lock = threading.Lock()

    def evaluate_many(self, strings: np.ndarray) -> np.ndarray:
        with self._lock:
            self.count += strings.shape[0]
        return self.inner.evaluate_many(strings)


def _evaluate_length(oracle: Oracle, length: int, threads: int) -> np.ndarray:
    m = oracle.alphabet_size
    if length == 0:
        return np.zeros(1)
    chunks = [kernels.all_strings(m, length, first=a) for a in range(m)]
    if threads > 1 and m > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(oracle.evaluate_many, chunks))
    else:
        parts = [oracle.evaluate_many(c) for c in chunks]
    return np.concatenate(parts)


@dataclass(frozen=True)
class ValueTable:
    """Objective values of every string up to ``max_len``.

    ``values[k][r]`` is f of the ``r``-th length-``k`` string in
    lexicographic order, i.e. the string whose base-``m`` digits spell ``r``.
    Lengths below ``min_len`` are left as ``None``.
    """

    alphabet_size: int
    max_len: int
    values: tuple

    @classmethod
    def build(
        cls,
        oracle: Oracle,
        max_len: int,
        *,
        min_len: int = 0,
        threads: int = 1,
        budget: int = DEFAULT_BUDGET,
    ) -> "ValueTable":
        if max_len > oracle.horizon:
            raise ValueError(f"K={max_len} exceeds oracle horizon {oracle.horizon}")
        check_budget(oracle.alphabet_size, min_len, max_len, budget)
        vals = [None] * (max_len + 1)
        for k in range(min_len, max_len + 1):
            vals[k] = _evaluate_length(oracle, k, threads)
        return cls(oracle.alphabet_size, max_len, tuple(vals))

    @property
    def num_values(self) -> int:
        return sum(v.size for v in self.values if v is not None)

    def string_at(self, length: int, rank: int) -> ActionString:
        m = self.alphabet_size
        digits = []
        for _ in range(length):
            rank, d = divmod(rank, m)
            digits.append(int(d))
        return tuple(reversed(digits))

    def rank_of(self, string: Sequence[int]) -> int:
        r = 0
        for a in string:
            r = r * self.alphabet_size + int(a)
        return r

    def value(self, string: Sequence[int]) -> float:
        return float(self.values[len(string)][self.rank_of(string)])
