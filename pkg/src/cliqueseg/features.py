"""Constraint-conditioned co-occurrence features for graph edges.

A directed edge u -> v is scored by how strongly u's attributes predict v's
attributes through a morphological constraint g: the feature value is

    -ln( P_co(n_j | g) * P_co(g | n_i) )

where n_i is one of u's three attributes (surface form, root, class) and n_j
one of v's.  The template space is therefore 3 * |MC| * 3 for a constraint
set MC.  Evidence for a partial constraint is the summed evidence of the
classes it denotes.  Zero counts are add-1 smoothed, so every value is finite
and non-negative.

Each feature splits into a source part depending only on (u, template) and a
target part depending only on (v, template); the per-node matrices built here
make an edge vector a sum of two rows, which is what keeps dense graphs cheap
to featurize.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .corpus import (
    CLASS,
    ROOT,
    WORD,
    CooccurrenceStats,
    MorphConstraintSet,
)

ATTRS = (WORD, ROOT, CLASS)


@dataclass(frozen=True)
class FeatureTemplate:
    source_attr: str
    constraint_id: int
    target_attr: str


@dataclass
class FeatureSpec:
    """An ordered template selection; the edge-vector layout contract."""

    templates: list[FeatureTemplate]
    constraint_fingerprint: str

    @property
    def dimension(self) -> int:
        return len(self.templates)

    def fingerprint(self) -> str:
        blob = json.dumps(
            [self.constraint_fingerprint]
            + [[t.source_attr, t.constraint_id, t.target_attr] for t in self.templates]
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "format": "cliqueseg-featurespec",
            "version": 1,
            "constraint_fingerprint": self.constraint_fingerprint,
            "templates": [
                [t.source_attr, t.constraint_id, t.target_attr] for t in self.templates
            ],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "FeatureSpec":
        if payload.get("format") != "cliqueseg-featurespec" or payload.get("version") != 1:
            raise ValueError("unrecognized feature-spec payload")
        templates = [
            FeatureTemplate(src, int(gid), dst) for src, gid, dst in payload["templates"]
        ]
        return cls(templates=templates, constraint_fingerprint=payload["constraint_fingerprint"])


def full_template_space(constraints: MorphConstraintSet) -> list[FeatureTemplate]:
    """All 3 * |MC| * 3 templates in canonical order."""
    return [
        FeatureTemplate(sa, gid, da)
        for sa in ATTRS
        for gid in range(len(constraints))
        for da in ATTRS
    ]


def effective_value(stats: CooccurrenceStats, node, attr: str) -> tuple[str, str]:
    """Resolve a node attribute to the corpus value used for lookups.

    Out-of-vocabulary surface forms back off to the node's root; roots and
    classes stay as themselves (add-1 smoothing covers unseen ones).
    """
    if attr == CLASS:
        return (CLASS, node.morph_class)
    if not node.lemma:
        raise ValueError(f"node {node!r} has an empty root")
    if attr == ROOT:
        return (ROOT, node.lemma)
    if attr == WORD:
        if stats.count((WORD, node.surface)) > 0:
            return (WORD, node.surface)
        return (ROOT, node.lemma)
    raise ValueError(f"unknown attribute {attr!r}")


class FeatureComputer:
    """Evaluates constraint-conditioned probabilities against corpus stats.

    Holds the constraint-membership matrix so partial-constraint evidence is
    a single matrix-vector product, and caches the per-value probability
    vectors (values recur heavily across sentences).
    """

    def __init__(self, stats: CooccurrenceStats, constraints: MorphConstraintSet):
        self.stats = stats
        self.constraints = constraints
        class_names = constraints.schema.class_names()
        self.class_index = {name: i for i, name in enumerate(class_names)}
        n_g, n_c = len(constraints), len(class_names)
        self.membership = np.zeros((n_g, n_c), dtype=np.float64)
        for gid, mem in enumerate(constraints.members):
            for cls in mem:
                self.membership[gid, self.class_index[cls]] = 1.0
        class_counts = np.array(
            [stats.count((CLASS, c)) for c in class_names], dtype=np.float64
        )
        self.constraint_counts = self.membership @ class_counts
        self._joint_cache: dict[tuple[str, str], np.ndarray] = {}
        self._src_cache: dict[tuple[str, str], np.ndarray] = {}
        self._dst_cache: dict[tuple[str, str], np.ndarray] = {}

    def _constraint_joints(self, value: tuple[str, str]) -> np.ndarray:
        """Summed joint evidence of each constraint with ``value``."""
        cached = self._joint_cache.get(value)
        if cached is not None:
            return cached
        joints = np.array(
            [
                self.stats.joint((CLASS, c), value)
                for c in self.constraints.schema.class_names()
            ],
            dtype=np.float64,
        )
        out = self.membership @ joints
        self._joint_cache[value] = out
        return out

    def neglog_p_constraint_given(self, value: tuple[str, str]) -> np.ndarray:
        """-ln P(g | value) for every constraint g.

        Summed partial evidence can exceed the conditioning count, so the
        ratio is clamped into (0, 1]; zero joints take the add-1 path.
        """
        cached = self._src_cache.get(value)
        if cached is not None:
            return cached
        jv = self._constraint_joints(value)
        ca = float(self.stats.count(value))
        n_g = len(self.constraints)
        with np.errstate(divide="ignore", invalid="ignore"):
            plain = np.minimum(jv / max(ca, 1.0), 1.0)
        smoothed = (jv + 1.0) / (ca + n_g)
        probs = np.where(jv > 0, plain, smoothed)
        out = -np.log(probs)
        self._src_cache[value] = out
        return out

    def neglog_p_value_given_constraint(self, value: tuple[str, str]) -> np.ndarray:
        """-ln P(value | g) for every constraint g."""
        cached = self._dst_cache.get(value)
        if cached is not None:
            return cached
        jv = self._constraint_joints(value)
        cg = self.constraint_counts
        domain = max(self.stats.domain_sizes.get(value[0], 1), 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            plain = np.minimum(jv / np.maximum(cg, 1.0), 1.0)
        smoothed = (jv + 1.0) / (cg + domain)
        probs = np.where(jv > 0, plain, smoothed)
        out = -np.log(probs)
        self._dst_cache[value] = out
        return out


def feature_value(
    computer: FeatureComputer, tmpl: FeatureTemplate, src_node, dst_node
) -> float:
    """Single feature value for the directed edge src -> dst."""
    src_val = effective_value(computer.stats, src_node, tmpl.source_attr)
    dst_val = effective_value(computer.stats, dst_node, tmpl.target_attr)
    src_part = computer.neglog_p_constraint_given(src_val)[tmpl.constraint_id]
    dst_part = computer.neglog_p_value_given_constraint(dst_val)[tmpl.constraint_id]
    return float(src_part + dst_part)


def edge_vector(
    spec: FeatureSpec, computer: FeatureComputer, src_node, dst_node
) -> np.ndarray:
    """Edge feature vector in spec order; directed, so (u, v) != (v, u)."""
    src = node_source_row(spec, computer, src_node)
    dst = node_target_row(spec, computer, dst_node)
    return src + dst


def _template_arrays(spec: FeatureSpec):
    cached = spec.__dict__.get("_tmpl_arrays")
    if cached is not None:
        return cached
    attr_idx = {a: i for i, a in enumerate(ATTRS)}
    sa = np.array([attr_idx[t.source_attr] for t in spec.templates])
    gid = np.array([t.constraint_id for t in spec.templates])
    da = np.array([attr_idx[t.target_attr] for t in spec.templates])
    spec.__dict__["_tmpl_arrays"] = (sa, gid, da)
    return sa, gid, da


def node_source_row(spec: FeatureSpec, computer: FeatureComputer, node) -> np.ndarray:
    sa, gid, _ = _template_arrays(spec)
    vecs = np.stack(
        [
            computer.neglog_p_constraint_given(effective_value(computer.stats, node, a))
            for a in ATTRS
        ]
    )
    return vecs[sa, gid]


def node_target_row(spec: FeatureSpec, computer: FeatureComputer, node) -> np.ndarray:
    _, gid, da = _template_arrays(spec)
    vecs = np.stack(
        [
            computer.neglog_p_value_given_constraint(effective_value(computer.stats, node, a))
            for a in ATTRS
        ]
    )
    return vecs[da, gid]


def node_feature_matrices(spec: FeatureSpec, computer: FeatureComputer, nodes):
    """(source, target) matrices, one row per node.

    The edge vector for u -> v is ``source[u] + target[v]``.
    """
    sa, gid, da = _template_arrays(spec)
    n, k = len(nodes), spec.dimension
    src = np.empty((n, k))
    dst = np.empty((n, k))
    for i, node in enumerate(nodes):
        svecs = np.stack(
            [
                computer.neglog_p_constraint_given(effective_value(computer.stats, node, a))
                for a in ATTRS
            ]
        )
        tvecs = np.stack(
            [
                computer.neglog_p_value_given_constraint(effective_value(computer.stats, node, a))
                for a in ATTRS
            ]
        )
        src[i] = svecs[sa, gid]
        dst[i] = tvecs[da, gid]
    return src, dst


# ---------------------------------------------------------------------------
# feature selection


def binned_mutual_information(x: np.ndarray, y: np.ndarray, bins: int = 16) -> float:
    """Plug-in MI between two real columns after equal-frequency binning."""
    bx = _equal_frequency_bins(x, bins)
    by = _equal_frequency_bins(y, bins)
    nx, ny = bx.max() + 1, by.max() + 1
    joint = np.zeros((nx, ny))
    np.add.at(joint, (bx, by), 1.0)
    joint /= joint.sum()
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log(joint[mask] / (px @ py)[mask])))


def _equal_frequency_bins(x: np.ndarray, bins: int) -> np.ndarray:
    edges = np.unique(np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1]))
    return np.searchsorted(edges, x, side="right")


def select_features(
    pairs,
    computer: FeatureComputer,
    k: int,
    min_samples: int = 20,
    bins: int = 16,
) -> FeatureSpec:
    """Rank the full template space by mutual information with the label.

    ``pairs`` is a sequence of (src_node, dst_node) samples; the label is the
    directed word-to-word co-occurrence probability.  Ties break on template
    index, so the selection is deterministic given the sample.
    """
    pairs = list(pairs)
    if len(pairs) < min_samples:
        raise ValueError(f"need at least {min_samples} sampled pairs, got {len(pairs)}")
    space = full_template_space(computer.constraints)
    full_spec = FeatureSpec(space, computer.constraints.fingerprint())
    n, t = len(pairs), len(space)
    matrix = np.empty((n, t))
    labels = np.empty(n)
    for i, (u, v) in enumerate(pairs):
        matrix[i] = edge_vector(full_spec, computer, u, v)
        labels[i] = computer.stats.p_co((WORD, v.surface), (WORD, u.surface))
    scores = np.array(
        [binned_mutual_information(matrix[:, j], labels, bins) for j in range(t)]
    )
    order = np.lexsort((np.arange(t), -scores))
    chosen = sorted(order[: min(k, t)].tolist())
    templates = [space[j] for j in chosen]
    return FeatureSpec(templates, computer.constraints.fingerprint())
