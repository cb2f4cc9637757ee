"""Bin topology, connectivity checks, recurrent/transient partitioning, and
Laplacian views of the self-loop-free neighbor graph."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .density import check_density

__all__ = [
    "Topology",
    "Partition",
    "LaplacianView",
    "make_topology",
    "build_grid_topology",
    "is_strongly_connected",
    "partition_states",
    "laplacian_of",
]


@dataclass(frozen=True)
class Topology:
    """Allowable one-step transitions between bins.

    ``adjacency[i, j]`` is True when an agent may move between bins ``i`` and
    ``j`` in one step.  The table is symmetric with an all-True diagonal
    (staying put is always allowed).  Bins are indexed 0..m-1.
    """

    m: int
    adjacency: np.ndarray


def make_topology(adjacency: np.ndarray) -> Topology:
    """Validate an adjacency table and freeze it into a Topology."""
    adj = np.asarray(adjacency, dtype=bool).copy()
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {adj.shape}")
    if not np.array_equal(adj, adj.T):
        raise ValueError("adjacency must be symmetric")
    if not adj.diagonal().all():
        raise ValueError("adjacency diagonal must be True: staying put is always allowed")
    adj.flags.writeable = False
    return Topology(m=adj.shape[0], adjacency=adj)


def build_grid_topology(rows: int, cols: int, hop: int = 1) -> Topology:
    """Grid of ``rows`` x ``cols`` bins, numbered row-major.

    Two bins are adjacent when the Manhattan distance between their cells is
    at most ``hop``, so ``hop`` bounds how far an agent may travel per step.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid needs at least one row and one column, got {rows}x{cols}")
    if hop < 1:
        raise ValueError(f"hop must be at least 1, got {hop}")
    r, c = np.divmod(np.arange(rows * cols), cols)
    dist = np.abs(r[:, np.newaxis] - r) + np.abs(c[:, np.newaxis] - c)
    return make_topology(dist <= hop)


def _as_subset(m: int, subset) -> np.ndarray:
    idx = np.unique(np.asarray(subset, dtype=np.int64))
    if idx.size != np.asarray(subset).size:
        raise ValueError("subset contains duplicate bin indices")
    if idx.size == 0:
        raise ValueError("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= m:
        raise ValueError(f"subset indices must lie in [0, {m})")
    return idx


def is_strongly_connected(topology: Topology, subset=None) -> bool:
    """True when every bin of ``subset`` reaches every other inside it.

    Transitions are symmetric, so plain graph search over the induced
    subgraph settles strong connectivity.  ``subset`` defaults to all bins.
    """
    if subset is None:
        subset = np.arange(topology.m)
    idx = _as_subset(topology.m, subset)
    member = np.zeros(topology.m, dtype=bool)
    member[idx] = True
    seen = np.zeros(topology.m, dtype=bool)
    seen[idx[0]] = True
    queue = deque([int(idx[0])])
    adj = topology.adjacency
    while queue:
        i = queue.popleft()
        for j in np.nonzero(adj[i] & member & ~seen)[0]:
            seen[j] = True
            queue.append(int(j))
    return bool(seen[idx].all())


@dataclass(frozen=True)
class Partition:
    """Recurrent/transient split with distance layers and block renumbering.

    ``recurrent`` holds the bins carrying positive desired density, ascending.
    ``layers[k]`` holds the transient bins at graph distance k+1 from the
    recurrent set.  ``ordering`` lists every bin farthest-layer-first with the
    recurrent bins last; renumbering rows and columns by it makes the
    transient-to-transient block of any matrix built here strictly lower
    triangular, hence nilpotent.
    """

    recurrent: np.ndarray
    layers: tuple[np.ndarray, ...]
    ordering: np.ndarray

    @property
    def m_r(self) -> int:
        return int(self.recurrent.size)

    @property
    def m_t(self) -> int:
        return int(self.ordering.size - self.recurrent.size)


def partition_states(topology: Topology, desired: np.ndarray) -> Partition:
    """Split bins by the support of ``desired`` and layer the rest by distance.

    Raises when no bin has positive desired density, when the support is not
    connected, or when some bin cannot reach the support at all.
    """
    v = check_density(desired, name="desired density")
    if v.size != topology.m:
        raise ValueError(f"desired density has {v.size} bins, topology has {topology.m}")
    recurrent = np.nonzero(v > 0.0)[0]
    if recurrent.size == 0:
        raise ValueError("desired density must be positive on at least one bin")
    if not is_strongly_connected(topology, recurrent):
        raise ValueError("bins with positive desired density must form a connected subgraph")
    dist = np.full(topology.m, -1, dtype=np.int64)
    dist[recurrent] = 0
    frontier = recurrent
    layers: list[np.ndarray] = []
    while True:
        reach = topology.adjacency[frontier].any(axis=0) & (dist < 0)
        nxt = np.nonzero(reach)[0]
        if nxt.size == 0:
            break
        dist[nxt] = len(layers) + 1
        layers.append(nxt)
        frontier = nxt
    stranded = np.nonzero(dist < 0)[0]
    if stranded.size:
        raise ValueError(f"bins {stranded.tolist()} cannot reach any bin with positive desired density")
    if layers:
        ordering = np.concatenate([*reversed(layers), recurrent])
    else:
        ordering = recurrent.copy()
    for arr in (recurrent, ordering, *layers):
        arr.flags.writeable = False
    return Partition(recurrent=recurrent, layers=tuple(layers), ordering=ordering)


@dataclass(frozen=True)
class LaplacianView:
    """Degrees and combinatorial Laplacian of the self-loop-free graph induced
    on a subset of bins, in the subset's own indexing."""

    subset: np.ndarray
    degree: np.ndarray
    max_degree: int
    laplacian: np.ndarray


def laplacian_of(topology: Topology, subset=None) -> LaplacianView:
    """Laplacian view over ``subset`` (default: all bins).

    The induced subgraph must be connected; self-loops are dropped before
    counting degrees, so ``max_degree`` is the largest neighbor count.
    """
    if subset is None:
        subset = np.arange(topology.m)
    idx = _as_subset(topology.m, subset)
    if not is_strongly_connected(topology, idx):
        raise ValueError("Laplacian view requires a connected subset")
    sub = topology.adjacency[np.ix_(idx, idx)].astype(float)
    np.fill_diagonal(sub, 0.0)
    degree = sub.sum(axis=1).astype(np.int64)
    lap = np.diag(degree.astype(float)) - sub
    for arr in (idx, degree, lap):
        arr.flags.writeable = False
    return LaplacianView(subset=idx, degree=degree, max_degree=int(degree.max()), laplacian=lap)
