"""Decoding: greedy maximal cliques, exact enumeration, Steiner trees, paths.

All procedures read an immutable adjacency matrix plus a directed energy
matrix (``+inf`` on non-adjacent pairs) and are deterministic: ties break
toward the lowest node id, and the best-over-seeds reduction orders by
(energy, seed id).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import EnumerationLimitError, SentenceGraph, UncoverableInputError

DEFAULT_CLIQUE_LIMIT = 25
DEFAULT_BEAM = 128


@dataclass(frozen=True)
class Prediction:
    kind: str  # clique | tree | path
    node_ids: tuple[int, ...]
    energy: float
    seed_node: int | None = None
    # directed edges actually scored, for tree/path structures; cliques score
    # every ordered pair of their nodes
    edges: tuple[tuple[int, int], ...] | None = None


def clique_energy(energy: np.ndarray, ids) -> float:
    """Sum of both directed edges of every pair inside the clique."""
    ids = list(ids)
    sub = energy[np.ix_(ids, ids)].copy()
    np.fill_diagonal(sub, 0.0)
    return float(sub.sum())


def _adj_uint8(g: SentenceGraph) -> np.ndarray:
    return np.ascontiguousarray(g.adjacency, dtype=np.uint8)


def greedy_clique_from_seed(g: SentenceGraph, energy: np.ndarray, seed: int) -> Prediction:
    """One run of the greedy clique-growth heuristic starting at ``seed``."""
    ids = kernels.greedy_clique(np.ascontiguousarray(energy), _adj_uint8(g), seed)
    ids = tuple(sorted(int(i) for i in ids))
    return Prediction("clique", ids, clique_energy(energy, ids), seed_node=seed)


def greedy_inference(
    g: SentenceGraph, energy: np.ndarray, workers: int = 1
) -> tuple[Prediction, list[Prediction]]:
    """Run the greedy heuristic from every seed node.

    Returns the minimum-energy clique plus the deduplicated sample set; every
    node is covered by at least one sampled clique.
    """
    if g.n_nodes == 0:
        raise ValueError("empty graph")
    energy = np.ascontiguousarray(energy)
    adj = _adj_uint8(g)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(lambda s: kernels.greedy_clique(energy, adj, s), range(g.n_nodes)))
    else:
        raw = kernels.greedy_cliques_all(energy, adj)
    samples: list[Prediction] = []
    seen = set()
    for seed, ids in enumerate(raw):
        key = frozenset(int(i) for i in ids)
        if key in seen:
            continue
        seen.add(key)
        ids = tuple(sorted(key))
        samples.append(Prediction("clique", ids, clique_energy(energy, ids), seed_node=seed))
    best = min(samples, key=lambda p: (p.energy, p.seed_node))
    return best, samples


def exact_maximal_cliques(g: SentenceGraph, limit: int = DEFAULT_CLIQUE_LIMIT) -> list[frozenset[int]]:
    """All maximal cliques by Bron-Kerbosch with pivoting; oracle-sized only."""
    n = g.n_nodes
    if n > limit:
        raise EnumerationLimitError(
            f"{n} nodes exceeds clique enumeration limit {limit}; use greedy inference"
        )
    neighbors = [frozenset(np.nonzero(g.adjacency[i])[0].tolist()) for i in range(n)]
    out: list[frozenset[int]] = []

    def expand(r: set, p: set, x: set):
        if not p and not x:
            out.append(frozenset(r))
            return
        pivot = max(sorted(p | x), key=lambda u: len(p & neighbors[u]))
        for v in sorted(p - neighbors[pivot]):
            expand(r | {v}, p & neighbors[v], x & neighbors[v])
            p.remove(v)
            x.add(v)

    expand(set(), set(range(n)), set())
    return sorted(out, key=sorted)


def steiner_tree_from_seed(g: SentenceGraph, energy: np.ndarray, seed: int) -> Prediction:
    nodes, edges, total = kernels.steiner_tree(
        np.ascontiguousarray(energy), _adj_uint8(g), seed
    )
    return Prediction(
        "tree",
        tuple(sorted(int(i) for i in nodes)),
        float(total),
        seed_node=seed,
        edges=tuple((int(a), int(b)) for a, b in edges),
    )


def steiner_tree_inference(
    g: SentenceGraph, energy: np.ndarray, workers: int = 1
) -> tuple[Prediction, list[Prediction]]:
    """Best greedy tree over all seeds, plus the per-seed sample set."""
    if g.n_nodes == 0:
        raise ValueError("empty graph")
    seeds = range(g.n_nodes)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            all_preds = list(pool.map(lambda s: steiner_tree_from_seed(g, energy, s), seeds))
    else:
        all_preds = [steiner_tree_from_seed(g, energy, s) for s in seeds]
    samples: list[Prediction] = []
    seen = set()
    for p in all_preds:
        key = (frozenset(p.node_ids), frozenset(p.edges))
        if key in seen:
            continue
        seen.add(key)
        samples.append(p)
    best = min(samples, key=lambda p: (p.energy, p.seed_node))
    return best, samples


# ---------------------------------------------------------------------------
# lattice decoding


def _lattice_order(lat: SentenceGraph) -> list[int]:
    return sorted(
        range(lat.n_nodes),
        key=lambda i: (lat.nodes[i].start, lat.nodes[i].end, i),
    )


def lattice_successors(lat: SentenceGraph) -> dict[int, list[int]]:
    """Directed lattice edges: adjacency oriented by span order."""
    order = _lattice_order(lat)
    pos = {nid: k for k, nid in enumerate(order)}
    succ: dict[int, list[int]] = {i: [] for i in range(lat.n_nodes)}
    for i in range(lat.n_nodes):
        for j in np.nonzero(lat.adjacency[i])[0].tolist():
            if pos[i] < pos[j]:
                succ[i].append(j)
    for i in succ:
        succ[i].sort(key=lambda j: pos[j])
    return succ


def lattice_beam(lat: SentenceGraph, energy: np.ndarray, beam: int = DEFAULT_BEAM) -> list[Prediction]:
    """Top-``beam`` start-to-end paths, best first.

    Keeps the ``beam`` best partial paths per node, ordered by (energy, path),
    so beam = 1 reproduces the exact dynamic program including tie handling.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    if lat.start_marker is None or lat.end_marker is None:
        raise ValueError("graph is not a lattice; call to_lattice first")
    succ = lattice_successors(lat)
    order = _lattice_order(lat)
    paths: dict[int, list[tuple[float, tuple[int, ...]]]] = {
        i: [] for i in range(lat.n_nodes)
    }
    paths[lat.start_marker] = [(0.0, (lat.start_marker,))]
    for u in order:
        if not paths[u]:
            continue
        for v in succ[u]:
            w = float(energy[u, v])
            extended = [(e + w, p + (v,)) for e, p in paths[u]]
            merged = sorted(paths[v] + extended)[:beam]
            paths[v] = merged
    complete = paths[lat.end_marker]
    if not complete:
        raise UncoverableInputError([], "lattice has no start-to-end path")
    out = []
    for e, p in complete:
        interior = tuple(sorted(n for n in p[1:-1]))
        edges = tuple(zip(p[:-1], p[1:]))
        out.append(Prediction("path", interior, float(e), seed_node=None, edges=edges))
    return out


def lattice_decode(lat: SentenceGraph, energy: np.ndarray) -> Prediction:
    """Minimum-energy start-to-end path by dynamic programming in span order.

    Ties resolve toward the lexicographically smaller path, matching the
    ordering the beam decoder uses, so a width-1 beam reproduces this exactly.
    """
    if lat.start_marker is None or lat.end_marker is None:
        raise ValueError("graph is not a lattice; call to_lattice first")
    succ = lattice_successors(lat)
    order = _lattice_order(lat)
    best: list[tuple[float, tuple[int, ...]] | None] = [None] * lat.n_nodes
    best[lat.start_marker] = (0.0, (lat.start_marker,))
    for u in order:
        if best[u] is None:
            continue
        eu, pu = best[u]
        for v in succ[u]:
            cand = (eu + float(energy[u, v]), pu + (v,))
            if best[v] is None or cand < best[v]:
                best[v] = cand
    final = best[lat.end_marker]
    if final is None:
        raise UncoverableInputError([], "lattice has no start-to-end path")
    e, p = final
    interior = tuple(sorted(p[1:-1]))
    edges = tuple(zip(p[:-1], p[1:]))
    return Prediction("path", interior, float(e), seed_node=None, edges=edges)
