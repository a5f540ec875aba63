"""Sentence graphs over segmentation candidates.

A candidate analysis of an input string is a set of segments, each claiming a
character span plus a lexical analysis (surface, lemma, morphological class).
An *exhaustive segmentation* is a subset of segments that jointly covers the
input from start to end, chaining left to right with bounded overlaps and gaps
at the junctures (euphonic rewriting at word boundaries shifts spans by a
character or so in either direction).

The sentence graph connects every pair of segments that co-occur in at least
one exhaustive segmentation.  By construction the maximal cliques of this
graph are exactly the exhaustive segmentations, which is what the decoding
procedures in :mod:`cliqueseg.inference` rely on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

DEFAULT_ALLOW_OVERLAP = 1
DEFAULT_ALLOW_GAP = 1
DEFAULT_ENUM_LIMIT = 25


class UncoverableInputError(ValueError):
    """No exhaustive segmentation exists for the input."""

    def __init__(self, uncovered_positions, message: str | None = None):
        self.uncovered_positions = list(uncovered_positions)
        super().__init__(
            message
            or "input has no exhaustive segmentation; uncovered positions: %s"
            % (self.uncovered_positions,)
        )


class EnumerationLimitError(ValueError):
    """Instance too large for exact enumeration; use the greedy decoder."""


@dataclass(frozen=True)
class Segment:
    """One candidate analysis: a surface form at a character span.

    ``span`` is 0-based and half-open.  Two nodes with the same
    (lemma, morph_class, span) are the same analysis and get deduplicated.
    """

    surface: str
    lemma: str
    morph_class: str
    start: int
    end: int

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"empty span [{self.start},{self.end})")

    @property
    def span(self):
        return (self.start, self.end)

    def key(self):
        return (self.lemma, self.morph_class, self.start, self.end)


@dataclass
class CandidateSpace:
    """All candidate segments for one input string, with optional gold ids."""

    input: str
    segments: list[Segment]
    gold: list[int] | None = None
    sentence_id: str = ""


@dataclass
class GraphConfig:
    allow_overlap: int = DEFAULT_ALLOW_OVERLAP
    allow_gap: int = DEFAULT_ALLOW_GAP
    enum_limit: int = DEFAULT_ENUM_LIMIT


@dataclass
class SentenceGraph:
    """Nodes plus a symmetric co-occurrence adjacency matrix.

    ``adjacency[u, v]`` is True iff u and v appear together in some
    exhaustive segmentation.  ``gold_ids`` are indices into ``nodes``.
    """

    input: str
    nodes: list[Segment]
    adjacency: np.ndarray
    config: GraphConfig = field(default_factory=GraphConfig)
    gold_ids: list[int] | None = None
    sentence_id: str = ""
    # lattice extras: ids of start/end marker nodes, None for plain graphs
    start_marker: int | None = None
    end_marker: int | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def edges(self):
        """Unordered adjacent pairs (u, v) with u < v."""
        iu, iv = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(iu.tolist(), iv.tolist()))


def overlap_chars(a: Segment, b: Segment) -> int:
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def conflicts(a: Segment, b: Segment, allow_overlap: int = DEFAULT_ALLOW_OVERLAP) -> bool:
    """True iff the two spans cannot co-exist in one segmentation.

    Identical spans always conflict (alternative analyses of the same chunk);
    otherwise spans conflict when they overlap by more than ``allow_overlap``
    characters.
    """
    if a.span == b.span:
        return True
    return overlap_chars(a, b) > allow_overlap


def _can_follow(prev: Segment, nxt: Segment, cfg: GraphConfig) -> bool:
    # juncture step: the next span may re-use up to allow_overlap trailing
    # characters or skip up to allow_gap characters, but must strictly
    # progress (a span contained in its predecessor is never a successor)
    return (
        -cfg.allow_overlap <= nxt.start - prev.end <= cfg.allow_gap
        and nxt.start > prev.start
        and nxt.end > prev.end
    )


def _sorted_unique_segments(segments) -> list[Segment]:
    seen = {}
    for s in segments:
        seen.setdefault(s.key(), s)
    return sorted(seen.values(), key=lambda s: (s.start, s.end, s.surface, s.lemma, s.morph_class))


def _chain_matrices(nodes: list[Segment], length: int, cfg: GraphConfig):
    """Step relation, start/end reachability and step-transitive closure."""
    n = len(nodes)
    step = np.zeros((n, n), dtype=bool)
    for i, a in enumerate(nodes):
        for j, b in enumerate(nodes):
            if i != j and _can_follow(a, b, cfg):
                step[i, j] = True

    # overlaps and gaps arise at internal junctures only; a segmentation
    # covers the input exactly from its first to its last character
    initial = np.array([s.start == 0 for s in nodes], dtype=bool)
    final = np.array([s.end == length for s in nodes], dtype=bool)

    reach_start = initial.copy()
    changed = True
    while changed:
        nxt = reach_start | (reach_start @ step)
        changed = bool((nxt != reach_start).any())
        reach_start = nxt

    reach_end = final.copy()
    changed = True
    while changed:
        nxt = reach_end | (step @ reach_end)
        changed = bool((nxt != reach_end).any())
        reach_end = nxt

    # transitive closure of the step relation (reflexive for convenience)
    closure = step | np.eye(n, dtype=bool)
    changed = True
    while changed:
        nxt = closure | (closure @ closure)
        changed = bool((nxt != closure).any())
        closure = nxt

    return step, reach_start, reach_end, closure


def canonical_nodes(cs: CandidateSpace, cfg: GraphConfig | None = None) -> list[Segment]:
    """The deduplicated, sorted nodes that occur in >= 1 exhaustive segmentation.

    Candidates reachable neither from the input start nor to its end cannot be
    part of any solution; dropping them keeps the maximal-clique bijection
    intact.  Both :func:`build_graph` and the enumeration oracle number their
    nodes against this list.
    """
    cfg = cfg or GraphConfig()
    nodes = _sorted_unique_segments(cs.segments)
    if not nodes:
        return []
    _, reach_start, reach_end, _ = _chain_matrices(nodes, len(cs.input), cfg)
    ok = reach_start & reach_end
    return [s for s, keep in zip(nodes, ok) if keep]


def build_graph(cs: CandidateSpace, cfg: GraphConfig | None = None) -> SentenceGraph:
    """Build the sentence graph for a candidate space.

    Two nodes are adjacent iff they are non-conflicting and some chain of
    candidate segments runs from the input start through both of them to the
    input end.  With the default 1-character allowances this relation equals
    pairwise co-occurrence in an exhaustive segmentation (cross-checked
    against :func:`enumerate_exhaustive_segmentations` in the test suite).
    """
    cfg = cfg or GraphConfig()
    nodes = canonical_nodes(cs, cfg)
    if not nodes:
        covered = np.zeros(len(cs.input), dtype=bool)
        for s in cs.segments:
            covered[s.start:s.end] = True
        raise UncoverableInputError(np.nonzero(~covered)[0].tolist())
    n = len(nodes)
    length = len(cs.input)

    _, reach_start, reach_end, closure = _chain_matrices(nodes, length, cfg)

    adjacency = np.zeros((n, n), dtype=bool)
    for i, j in itertools.combinations(range(n), 2):
        a, b = nodes[i], nodes[j]
        if conflicts(a, b, cfg.allow_overlap):
            continue
        # orient the pair left to right
        u, v = (i, j) if (a.start, a.end) <= (b.start, b.end) else (j, i)
        if closure[u, v]:
            adjacency[i, j] = adjacency[j, i] = True

    gold_ids = None
    if cs.gold is not None:
        index = {s.key(): k for k, s in enumerate(nodes)}
        try:
            gold_ids = [index[cs.segments[g].key()] for g in cs.gold]
        except KeyError as exc:
            raise ValueError(
                f"gold segment {exc} is not part of any exhaustive segmentation"
            ) from exc

    return SentenceGraph(
        input=cs.input,
        nodes=nodes,
        adjacency=adjacency,
        config=cfg,
        gold_ids=gold_ids,
        sentence_id=cs.sentence_id,
    )


def _valid_chain(segs: list[Segment], length: int, cfg: GraphConfig) -> bool:
    """Whole-sequence check: spans sorted, consecutive steps within the
    allowances, exact coverage of [0, length), no pairwise conflicts."""
    if not segs:
        return False
    segs = sorted(segs, key=lambda s: (s.start, s.end))
    if segs[0].start != 0 or segs[-1].end != length:
        return False
    for a, b in zip(segs, segs[1:]):
        if not _can_follow(a, b, cfg):
            return False
    for a, b in itertools.combinations(segs, 2):
        if conflicts(a, b, cfg.allow_overlap):
            return False
    return True


def enumerate_exhaustive_segmentations(
    cs: CandidateSpace, cfg: GraphConfig | None = None
) -> list[frozenset[int]]:
    """Enumerate every exhaustive segmentation as a frozenset of node ids.

    An exhaustive segmentation is a chain covering the input to which no
    further candidate can be added: a chain with an allowance-sized gap does
    not count when some candidate slots into that gap.  Exponential; guarded
    by ``cfg.enum_limit`` nodes.  Node ids refer to the canonical node list
    used by :func:`build_graph`, so results are directly comparable with
    clique enumeration on the built graph.
    """
    cfg = cfg or GraphConfig()
    nodes = canonical_nodes(cs, cfg)
    if len(nodes) > cfg.enum_limit:
        raise EnumerationLimitError(
            f"{len(nodes)} nodes exceeds enumeration limit {cfg.enum_limit}; "
            "use greedy inference"
        )
    length = len(cs.input)
    order = sorted(range(len(nodes)), key=lambda i: (nodes[i].start, nodes[i].end))
    results: set[frozenset[int]] = set()
    origin = Segment("<origin>", "<origin>", "<origin>", -1, 0)

    def is_maximal(chosen: list[int]) -> bool:
        present = set(chosen)
        segs = [nodes[c] for c in chosen]
        for i in order:
            if i in present:
                continue
            if _valid_chain(segs + [nodes[i]], length, cfg):
                return False
        return True

    def extend(chosen: list[int], prev: Segment):
        if prev.end == length and chosen and is_maximal(chosen):
            results.add(frozenset(chosen))
        for i in order:
            s = nodes[i]
            if s.start > prev.end + cfg.allow_gap:
                break
            if not chosen and s.start != 0:
                continue
            if not _can_follow(prev, s, cfg):
                continue
            if any(conflicts(nodes[c], s, cfg.allow_overlap) for c in chosen):
                continue
            chosen.append(i)
            extend(chosen, s)
            chosen.pop()

    extend([], origin)
    return sorted(results, key=sorted)


def prune_edges(g: SentenceGraph, k: float) -> SentenceGraph:
    """Keep an edge only when the gap between its spans is at most ``k``.

    The gap is the number of characters strictly between the two spans
    (0 for touching or overlapping spans).  ``k = inf`` is a no-op.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if np.isinf(k):
        return g
    adjacency = g.adjacency.copy()
    n = g.n_nodes
    for i, j in itertools.combinations(range(n), 2):
        if not adjacency[i, j]:
            continue
        a, b = g.nodes[i], g.nodes[j]
        gap = max(a.start, b.start) - min(a.end, b.end)
        if gap > k:
            adjacency[i, j] = adjacency[j, i] = False
    return SentenceGraph(
        input=g.input,
        nodes=g.nodes,
        adjacency=adjacency,
        config=g.config,
        gold_ids=g.gold_ids,
        sentence_id=g.sentence_id,
    )


# Sentinel analysis attributes for the lattice start/end marker nodes.  The
# markers sit outside the input string, so they get reserved out-of-vocabulary
# attribute values; feature smoothing assigns them finite evidence.
BOS = "<bos>"
EOS = "<eos>"


def to_lattice(g: SentenceGraph) -> SentenceGraph:
    """Restrict the graph to juncture-adjacent edges and add path markers.

    The lattice keeps an edge u -> v only when v can directly follow u in an
    exhaustive segmentation: v follows at the juncture and no third candidate
    slots in between (otherwise every segmentation through u, v contains that
    candidate and the pair is never consecutive).  Every start -> end path is
    then an exhaustive segmentation read left to right.  Marker nodes are
    appended after the real nodes: start connects to chain-initial segments,
    end to chain-final ones.
    """
    cfg = g.config
    n = g.n_nodes
    length = len(g.input)
    nodes = list(g.nodes)
    # markers get 1-character pseudo-spans hugging the input edges
    start_node = Segment(BOS, BOS, BOS, -1, 0)
    end_node = Segment(EOS, EOS, EOS, length, length + 1)
    nodes.append(start_node)
    nodes.append(end_node)
    start_id, end_id = n, n + 1

    def insertable_between(u: Segment, v: Segment) -> bool:
        for m in g.nodes:
            if m is u or m is v:
                continue
            if _can_follow(u, m, cfg) and _can_follow(m, v, cfg) \
                    and not conflicts(u, m, cfg.allow_overlap) \
                    and not conflicts(m, v, cfg.allow_overlap):
                return True
        return False

    adjacency = np.zeros((n + 2, n + 2), dtype=bool)
    for i in range(n):
        for j in range(n):
            if (
                i != j
                and g.adjacency[i, j]
                and _can_follow(nodes[i], nodes[j], cfg)
                and not insertable_between(nodes[i], nodes[j])
            ):
                adjacency[i, j] = adjacency[j, i] = True
    step, reach_start, reach_end, _ = _chain_matrices(g.nodes, length, cfg)
    for i in range(n):
        if nodes[i].start == 0 and reach_end[i]:
            adjacency[start_id, i] = adjacency[i, start_id] = True
        if nodes[i].end == length and reach_start[i]:
            adjacency[end_id, i] = adjacency[i, end_id] = True

    return SentenceGraph(
        input=g.input,
        nodes=nodes,
        adjacency=adjacency,
        config=cfg,
        gold_ids=g.gold_ids,
        sentence_id=g.sentence_id,
        start_marker=start_id,
        end_marker=end_id,
    )
