"""Pure numpy decoding kernels; fallback for the compiled extension.

Semantics here define the contract: the Cython module mirrors these loops
(same accumulation order, ties broken toward the lowest node id) so both
backends return identical results.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"


def greedy_clique(energy: np.ndarray, adj: np.ndarray, seed: int) -> np.ndarray:
    """Grow a maximal clique from ``seed`` by cheapest summed out-edges.

    At each step the candidate with the minimum total energy of its directed
    edges into the current clique joins, and every node conflicting with it
    (non-adjacent) leaves the candidate pool.
    """
    cand = adj[seed].astype(bool).copy()
    cand[seed] = False
    cost = energy[:, seed].copy()
    clique = [seed]
    while True:
        masked = np.where(cand, cost, np.inf)
        j = int(np.argmin(masked))
        if not cand[j] or masked[j] == np.inf:
            break
        clique.append(j)
        cand &= adj[j].astype(bool)
        cand[j] = False
        cost = cost + energy[:, j]
    return np.array(clique, dtype=np.int64)


def greedy_cliques_all(energy: np.ndarray, adj: np.ndarray) -> list[np.ndarray]:
    return [greedy_clique(energy, adj, seed) for seed in range(energy.shape[0])]


def steiner_tree(energy: np.ndarray, adj: np.ndarray, seed: int):
    """Grow a conflict-free tree from ``seed`` by cheapest single attachment.

    Each step attaches the candidate whose cheapest directed edge to or from
    any tree node is minimal, then drops candidates conflicting with it; the
    result spans a maximal conflict-free node set.  Returns (nodes, edges,
    total energy) with edges as (from, to) pairs.
    """
    n = energy.shape[0]
    cand = adj[seed].astype(bool).copy()
    cand[seed] = False
    # per-candidate best attachment: cost, tree endpoint, direction
    best_cost = np.minimum(energy[:, seed], energy[seed, :])
    best_other = np.full(n, seed, dtype=np.int64)
    best_outgoing = energy[:, seed] <= energy[seed, :]
    nodes = [seed]
    edges = []
    total = 0.0
    while True:
        masked = np.where(cand, best_cost, np.inf)
        j = int(np.argmin(masked))
        if not cand[j] or masked[j] == np.inf:
            break
        t = int(best_other[j])
        if best_outgoing[j]:
            edges.append((j, t))
            total += float(energy[j, t])
        else:
            edges.append((t, j))
            total += float(energy[t, j])
        nodes.append(j)
        cand &= adj[j].astype(bool)
        cand[j] = False
        alt = np.minimum(energy[:, j], energy[j, :])
        better = alt < best_cost
        best_cost = np.where(better, alt, best_cost)
        best_other = np.where(better, j, best_other)
        best_outgoing = np.where(better, energy[:, j] <= energy[j, :], best_outgoing)
    return (
        np.array(nodes, dtype=np.int64),
        np.array(edges, dtype=np.int64).reshape(-1, 2),
        total,
    )
