import itertools

import numpy as np
import pytest

from cliqueseg.graph import (
    CandidateSpace,
    EnumerationLimitError,
    GraphConfig,
    Segment,
    SentenceGraph,
    build_graph,
    enumerate_exhaustive_segmentations,
    to_lattice,
)
from cliqueseg.inference import (
    Prediction,
    clique_energy,
    exact_maximal_cliques,
    greedy_clique_from_seed,
    greedy_inference,
    lattice_beam,
    lattice_decode,
    steiner_tree_from_seed,
    steiner_tree_inference,
)
from cliqueseg.synthlang import random_candidate_space


def graph_from_adjacency(adj) -> SentenceGraph:
    """Ad-hoc graph with fake spans; adjacency provided directly."""
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[0]
    nodes = [Segment(f"w{i}", f"l{i}", "noun:x=a", i, i + 1) for i in range(n)]
    return SentenceGraph(input="x" * n, nodes=nodes, adjacency=adj)


def random_energy(rng, g):
    e = rng.normal(size=(g.n_nodes, g.n_nodes))
    e[~g.adjacency] = np.inf
    np.fill_diagonal(e, np.inf)
    return e


class TestExactCliques:
    def test_triangle(self):
        g = graph_from_adjacency([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
        assert exact_maximal_cliques(g) == [frozenset({0, 1, 2})]

    def test_path_graph(self):
        g = graph_from_adjacency([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        assert set(exact_maximal_cliques(g)) == {frozenset({0, 1}), frozenset({1, 2})}

    def test_limit_guard(self):
        g = graph_from_adjacency(np.zeros((30, 30)))
        with pytest.raises(EnumerationLimitError):
            exact_maximal_cliques(g, limit=25)

    def test_equals_enumerated_segmentations(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            cs = random_candidate_space(rng, max_nodes=13)
            g = build_graph(cs)
            assert set(exact_maximal_cliques(g)) == set(
                enumerate_exhaustive_segmentations(cs)
            )


class TestGreedyClique:
    def test_forced_completion(self):
        # seed 0's only completion is {0, 1}
        g = graph_from_adjacency([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
        e = np.full((3, 3), np.inf)
        e[0, 1] = e[1, 0] = 1.0
        pred = greedy_clique_from_seed(g, e, 0)
        assert pred.node_ids == (0, 1)
        assert pred.energy == pytest.approx(2.0)

    def test_single_greedy_step_prefers_cheaper(self):
        # two completions of seed 0: via 1 (cheap) or via 2 (expensive)
        g = graph_from_adjacency([[0, 1, 1], [1, 0, 0], [1, 0, 0]])
        e = np.full((3, 3), np.inf)
        e[0, 1] = e[1, 0] = 1.0
        e[0, 2] = e[2, 0] = 5.0
        pred = greedy_clique_from_seed(g, e, 0)
        assert pred.node_ids == (0, 1)

    def test_greedy_outputs_are_maximal_cliques(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            cs = random_candidate_space(rng, max_nodes=16)
            g = build_graph(cs)
            e = random_energy(rng, g)
            truth = set(exact_maximal_cliques(g))
            for seed in range(g.n_nodes):
                pred = greedy_clique_from_seed(g, e, seed)
                assert frozenset(pred.node_ids) in truth
                assert seed in pred.node_ids

    def test_every_node_covered(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            cs = random_candidate_space(rng, max_nodes=16)
            g = build_graph(cs)
            e = random_energy(rng, g)
            _, samples = greedy_inference(g, e)
            covered = set().union(*(p.node_ids for p in samples))
            assert covered == set(range(g.n_nodes))

    def test_greedy_is_upper_bound_on_exact_minimum(self):
        rng = np.random.default_rng(51)
        for _ in range(100):
            cs = random_candidate_space(rng, max_nodes=14)
            g = build_graph(cs)
            e = random_energy(rng, g)
            best, _ = greedy_inference(g, e)
            exact_best = min(
                clique_energy(e, ids) for ids in exact_maximal_cliques(g)
            )
            assert best.energy >= exact_best - 1e-9

    def test_deterministic(self):
        rng = np.random.default_rng(61)
        cs = random_candidate_space(rng)
        g = build_graph(cs)
        e = random_energy(rng, g)
        a1, s1 = greedy_inference(g, e)
        a2, s2 = greedy_inference(g, e)
        assert a1 == a2
        assert s1 == s2

    def test_parallel_matches_sequential(self):
        rng = np.random.default_rng(71)
        cs = random_candidate_space(rng)
        g = build_graph(cs)
        e = random_energy(rng, g)
        seq, _ = greedy_inference(g, e, workers=1)
        par, _ = greedy_inference(g, e, workers=4)
        assert seq == par


class TestSteiner:
    def test_forced_segmentation(self):
        g = graph_from_adjacency([[0, 1], [1, 0]])
        e = np.full((2, 2), np.inf)
        e[0, 1], e[1, 0] = 3.0, 2.0
        pred, _ = steiner_tree_inference(g, e)
        assert pred.node_ids == (0, 1)
        # cheaper direction chosen for the single tree edge
        assert pred.energy == pytest.approx(2.0)
        assert pred.edges == ((1, 0),)

    def test_node_set_is_exhaustive_segmentation(self):
        rng = np.random.default_rng(81)
        for _ in range(100):
            cs = random_candidate_space(rng, max_nodes=14)
            g = build_graph(cs)
            e = random_energy(rng, g)
            truth = set(enumerate_exhaustive_segmentations(cs))
            pred, samples = steiner_tree_inference(g, e)
            for p in samples:
                assert frozenset(p.node_ids) in truth

    def test_tree_energy_below_clique_energy_for_nonnegative(self):
        rng = np.random.default_rng(91)
        for _ in range(50):
            cs = random_candidate_space(rng, max_nodes=14)
            g = build_graph(cs)
            e = np.abs(random_energy(rng, g))  # abs(inf) stays inf
            for seed in range(g.n_nodes):
                tree = steiner_tree_from_seed(g, e, seed)
                assert tree.energy <= clique_energy(e, tree.node_ids) + 1e-9

    def test_tree_edge_count(self):
        rng = np.random.default_rng(101)
        cs = random_candidate_space(rng)
        g = build_graph(cs)
        e = random_energy(rng, g)
        pred, _ = steiner_tree_inference(g, e)
        assert len(pred.edges) == len(pred.node_ids) - 1


class TestLattice:
    def _lattice(self, rng, max_nodes=12):
        cs = random_candidate_space(rng, max_nodes=max_nodes)
        g = build_graph(cs)
        lat = to_lattice(g)
        e = rng.normal(size=(lat.n_nodes, lat.n_nodes))
        e[~lat.adjacency] = np.inf
        np.fill_diagonal(e, np.inf)
        return lat, e

    def test_single_path_lattice(self):
        cs = CandidateSpace(
            input="abcd",
            segments=[
                Segment("ab", "lab", "noun:x=a", 0, 2),
                Segment("cd", "lcd", "noun:x=a", 2, 4),
            ],
        )
        lat = to_lattice(build_graph(cs))
        e = np.zeros((4, 4))
        e[lat.start_marker, 0] = 0.25
        e[0, 1] = 1.0
        e[1, lat.end_marker] = 0.5
        pred = lattice_decode(lat, e)
        assert pred.node_ids == (0, 1)
        assert pred.energy == pytest.approx(1.75)

    def test_beam1_equals_dp(self):
        rng = np.random.default_rng(111)
        for _ in range(100):
            lat, e = self._lattice(rng)
            dp = lattice_decode(lat, e)
            b1 = lattice_beam(lat, e, beam=1)[0]
            assert dp == b1

    def test_beam_returns_sorted_unique_paths(self):
        rng = np.random.default_rng(121)
        lat, e = self._lattice(rng)
        preds = lattice_beam(lat, e, beam=8)
        energies = [p.energy for p in preds]
        assert energies == sorted(energies)
        assert len({p.edges for p in preds}) == len(preds)

    def test_beam_contains_dp_best_and_improves(self):
        rng = np.random.default_rng(131)
        for _ in range(30):
            lat, e = self._lattice(rng)
            dp = lattice_decode(lat, e)
            top = lattice_beam(lat, e, beam=16)
            assert top[0].energy == pytest.approx(dp.energy)

    def test_no_path_raises(self):
        # isolated lattice: markers only connect through nodes; cut them off
        cs = CandidateSpace(
            input="ab",
            segments=[Segment("ab", "l", "noun:x=a", 0, 2)],
        )
        lat = to_lattice(build_graph(cs))
        # sever the start marker
        lat.adjacency[lat.start_marker, :] = False
        lat.adjacency[:, lat.start_marker] = False
        e = np.zeros((3, 3))
        from cliqueseg.graph import UncoverableInputError

        with pytest.raises(UncoverableInputError):
            lattice_decode(lat, e)
        with pytest.raises(UncoverableInputError):
            lattice_beam(lat, e, beam=4)
