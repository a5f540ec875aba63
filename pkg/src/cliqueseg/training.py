"""Structured hinge training for the clique, tree and lattice variants.

Per sentence: run the variant's inference to sample candidate structures,
compare the gold structure's energy against the most offending candidate
under a margin that grows quadratically with the number of wrong nodes, and
take one subgradient step when the margin is violated.  Updates are applied
immediately (per-sentence), so epochs are sequential; the per-seed searches
inside one sentence may still run in parallel.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import evaluation
from .energy import (
    EnergyModel,
    apply_gradient,
    batched_gradient,
    energy_matrix,
    init_model,
)
from .features import FeatureComputer, FeatureSpec, node_feature_matrices
from .graph import SentenceGraph, to_lattice
from .inference import (
    clique_energy,
    greedy_inference,
    lattice_beam,
    lattice_decode,
    lattice_successors,
    steiner_tree_inference,
)

log = logging.getLogger(__name__)

VARIANTS = ("clique", "tree", "lattice", "lattice_beam")


@dataclass
class TrainConfig:
    variant: str = "clique"
    learning_rate: float = 1e-3
    epochs: int = 30
    hidden_size: int = 50
    alpha: float = 0.01
    beam: int = 128
    seed: int = 0
    patience: int = 5
    clip_norm: float | None = 10.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.learning_rate <= 0 or self.epochs <= 0 or self.hidden_size <= 0:
            raise ValueError("learning_rate, epochs and hidden_size must be positive")
        if self.beam < 1:
            raise ValueError("beam must be >= 1")


@dataclass
class SentenceInstance:
    """A featurized sentence: graph plus per-node feature matrices."""

    graph: SentenceGraph
    src: np.ndarray  # (V, K) source rows
    dst: np.ndarray  # (V, K) target rows
    gold_ids: list[int]

    @property
    def sentence_id(self) -> str:
        return self.graph.sentence_id


def featurize(
    graph: SentenceGraph, computer: FeatureComputer, spec: FeatureSpec
) -> SentenceInstance:
    src, dst = node_feature_matrices(spec, computer, graph.nodes)
    return SentenceInstance(graph, src, dst, list(graph.gold_ids or []))


def feature_rms(instances) -> float:
    """Root-mean-square feature component over a set of instances.

    Negative-log features have component magnitudes of several nats, which
    makes raw subgradient steps on W1 enormous relative to its initialization.
    Training therefore standardizes inputs by this constant and folds it back
    into W1 afterwards, so the stored model operates on raw edge vectors.
    """
    total, count = 0.0, 0
    for inst in instances:
        total += float((inst.src ** 2).sum() + (inst.dst ** 2).sum())
        count += inst.src.size + inst.dst.size
    return max(np.sqrt(total / max(count, 1)), 1e-12)


def _scaled(instances, scale: float):
    return [
        SentenceInstance(i.graph, i.src / scale, i.dst / scale, i.gold_ids)
        for i in instances
    ]


def margin(predicted, gold) -> float:
    """Squared count of predicted nodes outside the gold set."""
    wrong = len(set(predicted) - set(gold))
    return float(wrong * wrong)


def hinge_loss(gold_energy: float, candidates) -> tuple[float, int]:
    """Margin-rescaled hinge against the most offending candidate.

    ``candidates`` is a sequence of (energy, margin) pairs; the most offending
    one minimizes energy - margin.  Returns (loss, its index).
    """
    if not candidates:
        raise ValueError("empty candidate list")
    best_idx = 0
    best_val = candidates[0][0] - candidates[0][1]
    for i, (e, m) in enumerate(candidates[1:], start=1):
        if e - m < best_val:
            best_val = e - m
            best_idx = i
    return max(0.0, gold_energy - best_val), best_idx


def directed_clique_edges(ids) -> set[tuple[int, int]]:
    return {(u, v) for u in ids for v in ids if u != v}


def _signed_edge_batch(inst: SentenceInstance, plus, minus):
    """Stack edge vectors for the +1/-1 subgradient sets; shared edges cancel."""
    plus, minus = set(plus), set(minus)
    both = plus & minus
    plus -= both
    minus -= both
    pairs = sorted(plus) + sorted(minus)
    if not pairs:
        return None, None
    xs = np.stack([inst.src[u] + inst.dst[v] for u, v in pairs])
    mult = np.array([1.0] * len(plus) + [-1.0] * len(minus))
    return xs, mult


def gold_min_tree(
    energy: np.ndarray, gold_ids
) -> tuple[tuple[tuple[int, int], ...], float]:
    """Minimum spanning tree over the gold clique.

    Each unordered pair contributes its cheaper directed edge; the result
    realizes the lowest-energy tree spanning the gold nodes.  Requires the
    gold nodes to be pairwise adjacent (finite energies).
    """
    ids = sorted(gold_ids)
    if not ids:
        raise ValueError("empty gold set")
    for a in ids:
        for b in ids:
            if a != b and not np.isfinite(energy[a, b]):
                raise ValueError(f"gold nodes {a} and {b} are not adjacent")
    in_tree = {ids[0]}
    edges: list[tuple[int, int]] = []
    total = 0.0
    while len(in_tree) < len(ids):
        best = None
        for b in ids:
            if b in in_tree:
                continue
            for a in sorted(in_tree):
                w = min(energy[a, b], energy[b, a])
                cand = (float(w), b, a)
                if best is None or cand < best:
                    best = cand
        w, b, a = best
        if energy[a, b] <= energy[b, a]:
            edges.append((a, b))
        else:
            edges.append((b, a))
        total += w
        in_tree.add(b)
    return tuple(edges), total


# ---------------------------------------------------------------------------
# gold-side structures per variant


def _gold_clique_ok(inst: SentenceInstance) -> bool:
    ids = inst.gold_ids
    if not ids:
        return False
    adj = inst.graph.adjacency
    return all(adj[a, b] for a in ids for b in ids if a != b)


def gold_lattice_path(lat: SentenceGraph, gold_ids) -> tuple[int, ...] | None:
    """Gold ids as a start-to-end marker path, or None if they do not chain."""
    succ = lattice_successors(lat)
    order = sorted(gold_ids, key=lambda i: (lat.nodes[i].start, lat.nodes[i].end, i))
    path = [lat.start_marker] + order + [lat.end_marker]
    for u, v in zip(path[:-1], path[1:]):
        if v not in succ[u]:
            return None
    return tuple(path)


def _path_edges(path) -> set[tuple[int, int]]:
    return set(zip(path[:-1], path[1:]))


def _path_energy(energy: np.ndarray, path) -> float:
    return float(sum(energy[u, v] for u, v in zip(path[:-1], path[1:])))


# ---------------------------------------------------------------------------
# the per-sentence update rules


def _step_clique(model, inst, lr, workers=1, clip=None) -> float:
    adj = inst.graph.adjacency
    e = energy_matrix(model, inst.src, inst.dst, adj)
    _, samples = greedy_inference(inst.graph, e, workers=workers)
    gold = inst.gold_ids
    gold_e = clique_energy(e, gold)
    cands = [(p.energy, margin(p.node_ids, gold)) for p in samples]
    loss, off = hinge_loss(gold_e, cands)
    if loss > 0:
        offender = samples[off]
        xs, mult = _signed_edge_batch(
            inst,
            directed_clique_edges(gold),
            directed_clique_edges(offender.node_ids),
        )
        if xs is not None:
            apply_gradient(model, batched_gradient(model, xs, mult), lr, clip)
    return loss


def _step_tree(model, inst, lr, workers=1, clip=None) -> float:
    adj = inst.graph.adjacency
    e = energy_matrix(model, inst.src, inst.dst, adj)
    _, samples = steiner_tree_inference(inst.graph, e, workers=workers)
    gold_edges, gold_e = gold_min_tree(e, inst.gold_ids)
    cands = [(p.energy, margin(p.node_ids, inst.gold_ids)) for p in samples]
    loss, off = hinge_loss(gold_e, cands)
    if loss > 0:
        offender = samples[off]
        xs, mult = _signed_edge_batch(inst, set(gold_edges), set(offender.edges))
        if xs is not None:
            apply_gradient(model, batched_gradient(model, xs, mult), lr, clip)
    return loss


def _step_lattice(model, inst, lr, gold_path, beam=None, clip=None) -> float:
    lat = inst.graph
    e = energy_matrix(model, inst.src, inst.dst, lat.adjacency)
    gold_e = _path_energy(e, gold_path)
    gold_interior = inst.gold_ids
    if beam is None:
        decoded = [lattice_decode(lat, e)]
    else:
        decoded = lattice_beam(lat, e, beam)
    total_loss = 0.0
    plus: list = []
    minus: list = []
    for cand in decoded:
        viol = gold_e - (cand.energy - margin(cand.node_ids, gold_interior))
        if viol > 0:
            total_loss += viol
            plus.extend(_path_edges(gold_path))
            minus.extend(cand.edges)
    if total_loss > 0:
        # multiset semantics: a candidate edge shared with gold cancels once
        # per violating candidate
        pc, mc = Counter(plus), Counter(minus)
        pairs, mult = [], []
        for edge in sorted(set(pc) | set(mc)):
            net = pc[edge] - mc[edge]
            if net:
                pairs.append(edge)
                mult.append(float(net))
        if pairs:
            xs = np.stack([inst.src[u] + inst.dst[v] for u, v in pairs])
            apply_gradient(model, batched_gradient(model, xs, np.array(mult)), lr, clip)
    return total_loss


# ---------------------------------------------------------------------------
# training loops


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    n_updates: int
    dev_wpt_f: float | None = None
    dev_wp3t_f: float | None = None


@dataclass
class TrainResult:
    model: EnergyModel
    history: list[EpochRecord] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)


def _dev_score(model, instances, variant: str, task: str) -> float:
    preds, golds = {}, {}
    for inst in instances:
        g = inst.graph
        e = energy_matrix(model, inst.src, inst.dst, g.adjacency)
        if variant in ("lattice", "lattice_beam"):
            p = lattice_decode(g, e)
        elif variant == "tree":
            p, _ = steiner_tree_inference(g, e)
        else:
            p, _ = greedy_inference(g, e)
        preds[g.sentence_id] = [g.nodes[i] for i in p.node_ids]
        golds[g.sentence_id] = [g.nodes[i] for i in inst.gold_ids]
    return evaluation.score(preds, golds, task).macro_f


def train(
    instances: list[SentenceInstance],
    cfg: TrainConfig,
    dev_instances: list[SentenceInstance] | None = None,
    feature_fingerprint: str = "",
) -> TrainResult:
    """Train an energy model with per-sentence subgradient updates.

    Sentences whose gold analysis is not a valid structure for the variant
    (not a clique, or not a lattice path) are skipped with a warning.  With a
    dev set, keeps the parameters of the best dev WPT epoch and stops after
    ``cfg.patience`` epochs without improvement.
    """
    if not instances:
        raise ValueError("no training sentences")
    k = instances[0].src.shape[1]
    model = init_model(
        k, cfg.hidden_size, cfg.alpha, seed=cfg.seed, feature_fingerprint=feature_fingerprint
    )
    scale = feature_rms(instances)
    instances = _scaled(instances, scale)
    if dev_instances:
        dev_instances = _scaled(dev_instances, scale)
    lattice_mode = cfg.variant in ("lattice", "lattice_beam")

    usable: list[tuple[SentenceInstance, tuple[int, ...] | None]] = []
    skipped = []
    for inst in instances:
        if lattice_mode:
            gold_path = gold_lattice_path(inst.graph, inst.gold_ids)
            if gold_path is None:
                skipped.append(inst.sentence_id)
                log.warning(
                    "skipping %s: gold is not a lattice path", inst.sentence_id
                )
                continue
            usable.append((inst, gold_path))
        else:
            if not _gold_clique_ok(inst):
                skipped.append(inst.sentence_id)
                log.warning("skipping %s: gold is not a clique", inst.sentence_id)
                continue
            usable.append((inst, None))
    if not usable:
        raise ValueError("no trainable sentences after gold alignment checks")

    rng = np.random.default_rng(cfg.seed)
    history: list[EpochRecord] = []
    best_f, best_model, stale = -1.0, None, 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(usable))
        losses = []
        for idx in order:
            inst, gold_path = usable[idx]
            if cfg.variant == "clique":
                loss = _step_clique(model, inst, cfg.learning_rate, clip=cfg.clip_norm)
            elif cfg.variant == "tree":
                loss = _step_tree(model, inst, cfg.learning_rate, clip=cfg.clip_norm)
            elif cfg.variant == "lattice":
                loss = _step_lattice(model, inst, cfg.learning_rate, gold_path, clip=cfg.clip_norm)
            else:
                loss = _step_lattice(model, inst, cfg.learning_rate, gold_path,
                                     beam=cfg.beam, clip=cfg.clip_norm)
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss on sentence {inst.sentence_id}; training diverged"
                )
            losses.append(loss)
        record = EpochRecord(
            epoch=epoch,
            mean_loss=float(np.mean(losses)),
            n_updates=int(sum(l > 0 for l in losses)),
        )
        if dev_instances:
            record.dev_wpt_f = _dev_score(model, dev_instances, cfg.variant, evaluation.WPT)
            record.dev_wp3t_f = _dev_score(model, dev_instances, cfg.variant, evaluation.WP3T)
            if record.dev_wpt_f > best_f:
                best_f, best_model, stale = record.dev_wpt_f, model.copy(), 0
            else:
                stale += 1
        history.append(record)
        log.info(
            "epoch %d: loss %.4f, updates %d%s",
            epoch,
            record.mean_loss,
            record.n_updates,
            f", dev WPT F {record.dev_wpt_f:.2f}" if record.dev_wpt_f is not None else "",
        )
        if dev_instances and stale >= cfg.patience:
            log.info("early stop after %d stale epochs", stale)
            break
    final = best_model if best_model is not None else model
    final.W1 = final.W1 / scale  # fold standardization back into the weights
    return TrainResult(model=final, history=history, skipped=skipped)


def train_clique_ebm(instances, cfg=None, dev_instances=None, **kw) -> TrainResult:
    cfg = cfg or TrainConfig(variant="clique")
    if cfg.variant != "clique":
        raise ValueError("config variant must be 'clique'")
    return train(instances, cfg, dev_instances, **kw)


def train_tree_ebm(instances, cfg=None, dev_instances=None, **kw) -> TrainResult:
    cfg = cfg or TrainConfig(variant="tree")
    if cfg.variant != "tree":
        raise ValueError("config variant must be 'tree'")
    return train(instances, cfg, dev_instances, **kw)


def train_lattice_ebm(instances, cfg=None, dev_instances=None, **kw) -> TrainResult:
    cfg = cfg or TrainConfig(variant="lattice")
    if cfg.variant not in ("lattice", "lattice_beam"):
        raise ValueError("config variant must be 'lattice' or 'lattice_beam'")
    return train(instances, cfg, dev_instances, **kw)


def make_lattice_instances(
    graphs, computer: FeatureComputer, spec: FeatureSpec
) -> list[SentenceInstance]:
    """Featurized lattices (markers included as extra nodes)."""
    out = []
    for g in graphs:
        lat = to_lattice(g)
        src, dst = node_feature_matrices(spec, computer, lat.nodes)
        out.append(SentenceInstance(lat, src, dst, list(lat.gold_ids or [])))
    return out
