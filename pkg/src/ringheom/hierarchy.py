"""Multi-index bookkeeping for hierarchies of auxiliary fields."""

from __future__ import annotations

from math import comb

import numpy as np
import scipy.sparse as sp

__all__ = ["HierarchyCapacityError", "HierarchySpace", "enumerate_hierarchy",
           "MAX_INDICES"]

MAX_INDICES = 2_000_000


class HierarchyCapacityError(ValueError):
    """Raised when a hierarchy would hold more members than allowed."""


class HierarchySpace:
    """All multi-indices of ``n_slots`` non-negative counts with level <= depth.

    Indices are ordered by level and then lexicographically (descending in the
    first slot), so position 0 is always the all-zero index.

    Attributes
    ----------
    indices : ndarray, shape (size, n_slots)
    level : ndarray, shape (size,)
    raise_map, lower_map : ndarray, shape (size, n_slots)
        Position of ``index +/- e_slot`` or -1 when it is absent.
    """

    def __init__(self, n_slots: int, depth: int, max_size: int = MAX_INDICES):
        if int(n_slots) != n_slots or n_slots < 1:
            raise ValueError("n_slots must be a positive integer")
        if int(depth) != depth or depth < 0:
            raise ValueError("depth must be a non-negative integer")
        self.n_slots = int(n_slots)
        self.depth = int(depth)
        size = comb(self.n_slots + self.depth, self.depth)
        if size > max_size:
            raise HierarchyCapacityError(
                f"hierarchy with {n_slots} slots and depth {depth} has {size} "
                f"members, above the limit of {max_size}")

        rows = []
        for level in range(self.depth + 1):
            rows.extend(_compositions(level, self.n_slots))
        self.indices = np.array(rows, dtype=np.int64).reshape(-1, self.n_slots)
        self.level = self.indices.sum(axis=1)
        self._lookup = {tuple(r): i for i, r in enumerate(self.indices.tolist())}

        self.raise_map = np.full((len(self), self.n_slots), -1, dtype=np.int64)
        self.lower_map = np.full((len(self), self.n_slots), -1, dtype=np.int64)
        for i, r in enumerate(self.indices.tolist()):
            for s in range(self.n_slots):
                r[s] += 1
                j = self._lookup.get(tuple(r), -1)
                r[s] -= 1
                if j >= 0:
                    self.raise_map[i, s] = j
                    self.lower_map[j, s] = i

    def __len__(self) -> int:
        return self.indices.shape[0]

    def position(self, counts) -> int:
        """Position of a multi-index, or -1 when it lies outside the space."""
        return self._lookup.get(tuple(int(c) for c in counts), -1)

    def raise_matrix(self, slot: int, weight=None) -> sp.csr_matrix:
        """Sparse ``R[j, raise(j)] = 1`` coupling each member to its parent."""
        src = np.nonzero(self.raise_map[:, slot] >= 0)[0]
        dst = self.raise_map[src, slot]
        w = np.ones(len(src)) if weight is None else np.broadcast_to(weight, len(src))
        return sp.csr_matrix((w, (src, dst)), shape=(len(self), len(self)))

    def lower_matrix(self, slot: int) -> sp.csr_matrix:
        """Sparse ``L[j, lower(j)] = n_slot(j)``."""
        src = np.nonzero(self.lower_map[:, slot] >= 0)[0]
        dst = self.lower_map[src, slot]
        w = self.indices[src, slot].astype(float)
        return sp.csr_matrix((w, (src, dst)), shape=(len(self), len(self)))


def _compositions(total: int, parts: int):
    # all tuples of `parts` non-negative ints summing to `total`, first slot descending
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_hierarchy(K: int, N_trunc: int, n_baths: int = 2) -> HierarchySpace:
    """Hierarchy for ``n_baths`` baths with ``K + 1`` exponential modes each.

    Slot ``alpha * (K + 1) + k`` holds the count of mode ``k`` of bath ``alpha``;
    mode 0 is the Drude cut-off ``gamma``.
    """
    if int(K) != K or K < 0:
        raise ValueError("K must be a non-negative integer")
    if int(N_trunc) != N_trunc or N_trunc < 0:
        raise ValueError("N_trunc must be a non-negative integer")
    return HierarchySpace(n_baths * (int(K) + 1), int(N_trunc))
