# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled decoding kernels.

Mirrors cliqueseg._kernels_py exactly: same visit order, same accumulation
order, ties toward the lowest node id.  Inner loops run without the GIL so
per-sentence decoding threads scale.
"""

import numpy as np

from libc.math cimport INFINITY

IMPLEMENTATION = "compiled"


cdef Py_ssize_t _argmin_masked(double[::1] cost, unsigned char[::1] cand, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, best = -1
    cdef double best_cost = INFINITY
    for i in range(n):
        if cand[i] and cost[i] < best_cost:
            best_cost = cost[i]
            best = i
    return best


def greedy_clique(double[:, ::1] energy, unsigned char[:, ::1] adj, Py_ssize_t seed):
    """Grow a maximal clique from ``seed`` by cheapest summed out-edges."""
    cdef Py_ssize_t n = energy.shape[0]
    cdef unsigned char[::1] cand = np.empty(n, dtype=np.uint8)
    cdef double[::1] cost = np.empty(n, dtype=np.float64)
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] clique = out
    cdef Py_ssize_t size
    with nogil:
        size = _greedy_clique_inner(energy, adj, seed, cand, cost, clique)
    return out[:size].copy()


cdef Py_ssize_t _greedy_clique_inner(
    double[:, ::1] energy,
    unsigned char[:, ::1] adj,
    Py_ssize_t seed,
    unsigned char[::1] cand,
    double[::1] cost,
    long long[::1] clique,
) nogil:
    cdef Py_ssize_t n = energy.shape[0]
    cdef Py_ssize_t size = 0, i, j
    for i in range(n):
        cand[i] = adj[seed, i]
        cost[i] = energy[i, seed]
    cand[seed] = 0
    clique[size] = seed
    size += 1
    while True:
        j = _argmin_masked(cost, cand, n)
        if j < 0:
            break
        clique[size] = j
        size += 1
        for i in range(n):
            if not adj[j, i]:
                cand[i] = 0
            cost[i] += energy[i, j]
        cand[j] = 0
    return size


def greedy_cliques_all(double[:, ::1] energy, unsigned char[:, ::1] adj):
    cdef Py_ssize_t n = energy.shape[0]
    cdef Py_ssize_t seed
    return [greedy_clique(energy, adj, seed) for seed in range(n)]


def steiner_tree(double[:, ::1] energy, unsigned char[:, ::1] adj, Py_ssize_t seed):
    """Grow a conflict-free tree from ``seed`` by cheapest single attachment."""
    cdef Py_ssize_t n = energy.shape[0]
    cdef unsigned char[::1] cand = np.empty(n, dtype=np.uint8)
    cdef double[::1] best_cost = np.empty(n, dtype=np.float64)
    cdef long long[::1] best_other = np.empty(n, dtype=np.int64)
    cdef unsigned char[::1] best_outgoing = np.empty(n, dtype=np.uint8)
    nodes_out = np.empty(n, dtype=np.int64)
    edges_out = np.empty((n, 2), dtype=np.int64)
    cdef long long[::1] nodes = nodes_out
    cdef long long[:, ::1] edges = edges_out
    cdef Py_ssize_t size = 1, i, j, t
    cdef double total = 0.0, alt
    with nogil:
        for i in range(n):
            cand[i] = adj[seed, i]
            if energy[i, seed] <= energy[seed, i]:
                best_cost[i] = energy[i, seed]
                best_outgoing[i] = 1
            else:
                best_cost[i] = energy[seed, i]
                best_outgoing[i] = 0
            best_other[i] = seed
        cand[seed] = 0
        nodes[0] = seed
        while True:
            j = _argmin_masked(best_cost, cand, n)
            if j < 0:
                break
            t = best_other[j]
            if best_outgoing[j]:
                edges[size - 1, 0] = j
                edges[size - 1, 1] = t
                total += energy[j, t]
            else:
                edges[size - 1, 0] = t
                edges[size - 1, 1] = j
                total += energy[t, j]
            nodes[size] = j
            size += 1
            for i in range(n):
                if not adj[j, i]:
                    cand[i] = 0
                if energy[i, j] <= energy[j, i]:
                    alt = energy[i, j]
                else:
                    alt = energy[j, i]
                if alt < best_cost[i]:
                    best_cost[i] = alt
                    best_other[i] = j
                    best_outgoing[i] = energy[i, j] <= energy[j, i]
            cand[j] = 0
    return nodes_out[:size].copy(), edges_out[: size - 1].copy(), total
