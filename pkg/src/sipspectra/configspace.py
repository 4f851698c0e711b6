"""Enumeration and indexing of k-particle configuration spaces.

A configuration is an occupation vector over the vertices; the space of all
k-particle configurations is enumerated once in ascending lexicographic order
and indexed both ways.  The partition into the interaction-absorbing part
(no two adjacent occupied sites) and its complement, refined by the number of
occupied sites ("stacks"), is computed at enumeration time.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .graphs import WeightedGraph

__all__ = [
    "SpaceCapExceeded",
    "ConfigSpace",
    "enumerate_configs",
    "move",
    "stack_count",
]

DEFAULT_CAP = 200_000


class SpaceCapExceeded(RuntimeError):
    """Requested state space is larger than the configured cap."""


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def move(occupation: tuple[int, ...], x: int, y: int) -> tuple[int, ...]:
    """Relocate one particle from site x to site y (dense indices)."""
    if occupation[x] < 1:
        raise ValueError(f"no particle to move at site index {x}")
    out = list(occupation)
    out[x] -= 1
    out[y] += 1
    return tuple(out)


def stack_count(occupation) -> int:
    """Number of occupied sites."""
    return int(np.count_nonzero(np.asarray(occupation)))


@dataclass(frozen=True)
class ConfigSpace:
    """Indexed k-particle configuration space over a fixed graph."""

    graph: WeightedGraph
    k: int
    occupations: np.ndarray  # (size, n) in ascending lexicographic order

    @property
    def size(self) -> int:
        return self.occupations.shape[0]

    @property
    def n_sites(self) -> int:
        return self.occupations.shape[1]

    def config(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.occupations[i])

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(map(int, row)): i for i, row in enumerate(self.occupations)}

    def index_of(self, occupation) -> int:
        return self.index[tuple(int(v) for v in occupation)]

    @cached_property
    def _tails(self) -> np.ndarray:
        # _tails[rem, p] = C(rem + p, p): configurations of <= rem particles
        # on p sites; only remainders up to k occur, keeping entries small.
        n, k = self.n_sites, self.k
        table = np.ones((k + 1, n + 1), dtype=np.int64)
        for rem in range(1, k + 1):
            for p in range(1, n + 1):
                table[rem, p] = table[rem - 1, p] + table[rem, p - 1]
        return table

    def rank_rows(self, occ: np.ndarray) -> np.ndarray:
        """Vectorized lexicographic rank of occupation rows (shape (m, n))."""
        occ = np.asarray(occ, dtype=np.int64)
        n, k = self.n_sites, self.k
        tails = self._tails
        rem = k - np.cumsum(occ, axis=1) + occ  # particles left from column j on
        ranks = np.zeros(occ.shape[0], dtype=np.int64)
        for j in range(n - 1):
            p = n - 1 - j
            ranks += tails[rem[:, j], p] - tails[rem[:, j] - occ[:, j], p]
        return ranks

    # -- partition into absorbing / transient parts -------------------------

    @cached_property
    def delta_mask(self) -> np.ndarray:
        """True where some edge joins two occupied sites."""
        occupied = (self.occupations > 0)
        touched = occupied @ self.graph.adjacency
        mask = np.any(occupied & touched, axis=1)
        mask.setflags(write=False)
        return mask

    @cached_property
    def omega_mask(self) -> np.ndarray:
        mask = ~self.delta_mask
        mask.setflags(write=False)
        return mask

    @cached_property
    def omega(self) -> np.ndarray:
        return np.nonzero(self.omega_mask)[0]

    @cached_property
    def delta(self) -> np.ndarray:
        return np.nonzero(self.delta_mask)[0]

    @cached_property
    def stack_counts(self) -> np.ndarray:
        counts = np.count_nonzero(self.occupations, axis=1)
        counts.setflags(write=False)
        return counts

    @cached_property
    def omega_by_stacks(self) -> dict[int, np.ndarray]:
        """m -> global indices of absorbing configurations with m stacks."""
        out: dict[int, np.ndarray] = {}
        counts = self.stack_counts
        for m in range(1, self.k + 1):
            idx = np.nonzero(self.omega_mask & (counts == m))[0]
            if idx.size:
                out[m] = idx
        return out


def enumerate_configs(g: WeightedGraph, k: int, cap: int = DEFAULT_CAP) -> ConfigSpace:
    """Enumerate the k-particle configuration space on g."""
    if k < 0:
        raise ValueError("k must be non-negative")
    n = g.n
    size = comb(n + k - 1, k)
    if size > cap:
        raise SpaceCapExceeded(
            f"configuration space has {size} states, above the cap {cap}"
        )
    occ = np.fromiter(
        (v for c in _compositions(k, n) for v in c), dtype=np.int64, count=size * n
    ).reshape(size, n)
    occ.setflags(write=False)
    return ConfigSpace(graph=g, k=k, occupations=occ)
