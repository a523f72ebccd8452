"""Loopless k-shortest paths (Yen) over link lengths.

Paths are ranked by length with ties broken by the node sequence compared
lexicographically, so results are fully deterministic.
"""

from __future__ import annotations

import heapq
from typing import Iterable, Optional

from qotplan.netmodel import Topology

Path = tuple[str, ...]

# lengths are compared after rounding so that float summation order cannot
# reorder paths of equal length
_DIGITS = 6


def path_key(length: float, path: Path) -> tuple[float, Path]:
    return (round(length, _DIGITS), path)


def _adjacency(topo: Topology) -> dict[str, list[tuple[str, float]]]:
    adj: dict[str, list[tuple[str, float]]] = {n: [] for n in topo.nodes}
    for link in topo.links:
        adj[link.source].append((link.target, link.length_km))
        adj[link.target].append((link.source, link.length_km))
    return adj


def shortest_path(adj: dict[str, list[tuple[str, float]]], source: str, target: str,
                  banned_nodes: Iterable[str] = (),
                  banned_edges: Iterable[frozenset] = ()) -> Optional[tuple[float, Path]]:
    """Dijkstra returning the (length, node sequence)-minimal path, or None."""
    banned_nodes = set(banned_nodes)
    banned_edges = set(banned_edges)
    if source in banned_nodes or target in banned_nodes:
        return None
    heap = [(0.0, (source,), 0.0)]
    done = set()
    while heap:
        _, path, dist = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done.add(node)
        if node == target:
            return dist, path
        for nxt, w in adj[node]:
            if nxt in done or nxt in banned_nodes or frozenset((node, nxt)) in banned_edges:
                continue
            nd = dist + w
            heapq.heappush(heap, (round(nd, _DIGITS), path + (nxt,), nd))
    return None


def k_shortest_paths(topo: Topology, source: str, target: str, k: int) -> list[Path]:
    """Up to ``k`` simple paths from ``source`` to ``target``, shortest first."""
    if source == target:
        raise ValueError("source and target must differ")
    if k < 1:
        return []
    adj = _adjacency(topo)
    first = shortest_path(adj, source, target)
    if first is None:
        return []
    found: list[tuple[float, Path]] = [first]
    candidates: dict[Path, float] = {}
    while len(found) < k:
        _, prev = found[-1]
        for i in range(len(prev) - 1):
            spur, root = prev[i], prev[:i + 1]
            banned_edges = {frozenset((p[i], p[i + 1])) for _, p in found
                            if len(p) > i + 1 and p[:i + 1] == root}
            tail = shortest_path(adj, spur, target, banned_nodes=root[:-1], banned_edges=banned_edges)
            if tail is None:
                continue
            path = root[:-1] + tail[1]
            if path in candidates or any(path == p for _, p in found):
                continue
            candidates[path] = topo.path_length(path)
        if not candidates:
            break
        best = min(candidates, key=lambda p: path_key(candidates[p], p))
        found.append((candidates.pop(best), best))
    return [p for _, p in found]
