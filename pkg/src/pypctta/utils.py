from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar, Union

import numpy as np

Number = Union[int, float]
T = TypeVar("T")
R = TypeVar("R")

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """
    Returns the splitmix64 output for a 64-bit state.

    Parameters
    ----------
    state:
        Any integer, reduced modulo 2**64.

    Returns
    -------
    int
        Mixed 64-bit unsigned integer.
    """
    z = (state + _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """
    Derives the seed of the `index`-th stream from a master seed.

    The seed equals the `index`-th output of a splitmix64 generator started at
    `master_seed`, so seeds are pairwise distinct for distinct indices.

    Parameters
    ----------
    master_seed:
        The master seed.
    index:
        The non-negative stream index.
    """
    if index < 0:
        raise ValueError(f"Stream index must be non-negative, but got {index}.")
    return splitmix64((master_seed & _MASK64) + index * _GOLDEN_GAMMA)


def make_rng(seed: int) -> np.random.Generator:
    """Returns a numpy Generator seeded with the splitmix64 mix of `seed`."""
    return np.random.default_rng(splitmix64(seed))


def get_thread_count(requested: int | None = None) -> int:
    """
    Returns the number of worker threads.

    Parameters
    ----------
    requested:
        Explicit worker count. If None, the ``PCTTA_THREADS`` environment variable is
        used. A value of 0 (or an unset variable) means: use all available cores.

    Raises
    ------
    ValueError
        If the requested count or the environment variable is not a non-negative
        integer.
    """
    if requested is None:
        raw = os.environ.get("PCTTA_THREADS", "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            raise ValueError(
                f"PCTTA_THREADS must be a non-negative integer, but got '{raw}'."
            )
    if requested < 0:
        raise ValueError(
            f"Thread count must be a non-negative integer, but got {requested}."
        )
    if requested == 0:
        return os.cpu_count() or 1
    return requested


def map_ordered(
    func: Callable[[T], R], items: Sequence[T], threads: int | None = None
) -> List[R]:
    """
    Applies `func` to every item on a thread pool and returns the results in item
    order, independent of scheduling.

    Parameters
    ----------
    func:
        The function to apply; it must not mutate shared state.
    items:
        The inputs.
    threads:
        Worker count, see `get_thread_count`. A single worker runs inline.
    """
    workers = min(get_thread_count(threads), max(len(items), 1))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
