"""Small numerical helpers shared by the geometry and path modules."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    raw = os.environ.get("HEISLORENTZ_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sweep(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Map ``fn`` over ``items``; results keep input order regardless of thread count."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def expm_small(a: np.ndarray, order: int = 18) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    Meant for the 2x2 blocks used here; accurate to a few ulps for norms up to ~1e3.
    """
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a, 1)
    squarings = max(0, math.ceil(math.log2(norm / 0.25))) if norm > 0.25 else 0
    x = a / 2.0**squarings
    term = np.eye(a.shape[0])
    out = term.copy()
    for k in range(1, order + 1):
        term = term @ x / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def central_difference(f: Callable[[float], np.ndarray], x: float, h: float):
    return (np.asarray(f(x + h)) - np.asarray(f(x - h))) / (2.0 * h)


def derivative_with_fallback(f: Callable[[float], np.ndarray], x: float, h: float, min_step: float = 1e-12):
    """Central difference at step h, Richardson-extrapolated when the estimate is unstable.

    The estimate is unstable when halving the step changes it by more than the
    O(h^2) truncation model allows (a sign of cancellation).
    """
    if h < min_step or x + h == x:
        raise ValueError(f"difference step {h:g} is too small at {x:g}")
    d1 = central_difference(f, x, h)
    d2 = central_difference(f, x, h / 2)
    diff = np.max(np.abs(d1 - d2))
    scale = max(1.0, float(np.max(np.abs(d2))))
    if diff <= 1e-6 * scale:
        return d2
    return (4.0 * d2 - d1) / 3.0
