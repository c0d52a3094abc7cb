"""Agglomerative complete-linkage clustering of correlation distances.

The linkage is written out by hand so tie-breaking is fully deterministic:
at every step the candidate pair with the smallest (distance, id pair) wins,
comparing id pairs lexicographically. Complete linkage makes merge heights
nondecreasing, which the Dendrogram type asserts on every construction.

Cluster ids: leaves are 0..N-1; the cluster created by merge k is N+k.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .linalg import symmetrize

_HEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class Dendrogram:
    """Merge tree of a complete-linkage run: (id_a, id_b, height) per merge,
    id_a < id_b, heights nondecreasing."""

    labels: tuple[str, ...]
    merges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        n = len(self.labels)
        if len(self.merges) != max(0, n - 1):
            raise DataError(
                f"{n} leaves require {n - 1} merges, got {len(self.merges)}"
            )
        norm = []
        last = -np.inf
        for k, (a, b, height) in enumerate(self.merges):
            a, b, height = int(a), int(b), float(height)
            if not a < b:
                raise DataError(f"merge {k}: ids must satisfy id_a < id_b")
            if a < 0 or b >= n + k:
                raise DataError(f"merge {k}: id out of range")
            if height < last - _HEIGHT_TOL:
                raise DataError(
                    f"merge heights must be nondecreasing; merge {k} at "
                    f"{height} after {last}"
                )
            last = max(last, height)
            norm.append((a, b, height))
        object.__setattr__(self, "merges", tuple(norm))

    @property
    def n(self) -> int:
        return len(self.labels)

    def heights(self) -> tuple[float, ...]:
        return tuple(h for _, _, h in self.merges)


def corr_distance(corr: np.ndarray) -> np.ndarray:
    """Distance d_ij = 1 - rho_ij; zero diagonal exactly."""
    c = symmetrize(corr)
    if np.abs(np.diag(c) - 1.0).max() > 1e-12:
        raise DataError("correlation matrix must have a unit diagonal")
    if np.abs(c).max() > 1.0 + 1e-12:
        raise DataError("correlation entries must lie in [-1, 1]")
    d = 1.0 - c
    np.fill_diagonal(d, 0.0)
    return d


def complete_linkage(dist: np.ndarray, labels: tuple[str, ...]) -> Dendrogram:
    """Agglomerate with d(A u B, C) = max(d(A, C), d(B, C))."""
    d = symmetrize(dist)
    n = d.shape[0]
    if len(labels) != n:
        raise DataError(f"{len(labels)} labels for a {n}x{n} distance matrix")
    if np.any(d < 0.0):
        raise DataError("distances must be nonnegative")
    if n == 0:
        raise DataError("empty distance matrix")
    # pair distances keyed by (smaller id, larger id) over active cluster ids
    pair: dict[tuple[int, int], float] = {
        (i, j): float(d[i, j]) for i in range(n) for j in range(i + 1, n)
    }
    active = set(range(n))
    merges: list[tuple[int, int, float]] = []
    for k in range(n - 1):
        (a, b), height = min(pair.items(), key=lambda kv: (kv[1], kv[0]))
        new = n + k
        active.discard(a)
        active.discard(b)
        for c in active:
            da = pair.pop((min(a, c), max(a, c)))
            db = pair.pop((min(b, c), max(b, c)))
            pair[(c, new)] = max(da, db)
        del pair[(a, b)]
        active.add(new)
        merges.append((a, b, height))
    return Dendrogram(labels=tuple(labels), merges=tuple(merges))


def cut_tree(dend: Dendrogram, k: int) -> np.ndarray:
    """Assignments for exactly k clusters: undo the last k-1 merges.

    Cluster ids are 0..k-1, numbered by each cluster's smallest leaf.
    """
    n = dend.n
    if not (1 <= k <= n):
        raise DataError(f"k must be in [1, {n}], got {k}")
    parent = list(range(n + max(0, n - 1)))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for idx, (a, b, _) in enumerate(dend.merges[: n - k]):
        new = n + idx
        parent[find(a)] = new
        parent[find(b)] = new
    roots: dict[int, list[int]] = {}
    for leaf in range(n):
        roots.setdefault(find(leaf), []).append(leaf)
    assign = np.empty(n, dtype=int)
    for cid, members in enumerate(sorted(roots.values(), key=lambda m: m[0])):
        for leaf in members:
            assign[leaf] = cid
    return assign


def to_newick(dend: Dendrogram) -> str:
    """Newick text with branch lengths = height differences (nonnegative
    because complete-linkage heights are monotone)."""
    n = dend.n
    height = {i: 0.0 for i in range(n)}
    node: dict[int, str] = {i: _quote(lab) for i, lab in enumerate(dend.labels)}
    root = n - 1 if n == 1 else 0
    for k, (a, b, h) in enumerate(dend.merges):
        new = n + k
        la = h - height[a]
        lb = h - height[b]
        node[new] = f"({node[a]}:{la:.10g},{node[b]}:{lb:.10g})"
        height[new] = h
        root = new
    return node[root] + ";"


def _quote(label: str) -> str:
    # Newick reserved characters force quoting.
    if any(ch in label for ch in "(),:;'\" \t"):
        return "'" + label.replace("'", "''") + "'"
    return label


def dendrogram_to_json(dend: Dendrogram) -> dict:
    """JSON-ready dict: labels, merge triples, and the Newick rendering."""
    return {
        "labels": list(dend.labels),
        "merges": [[a, b, h] for a, b, h in dend.merges],
        "newick": to_newick(dend),
    }
