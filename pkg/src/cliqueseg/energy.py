"""Scalar edge energies from a single-hidden-layer perceptron.

The network maps an edge feature vector x in [0, inf)^K to a real energy:

    energy(x) = w2 . leakyrelu(W1 x + b1) + b2

with a leaky ReLU at the hidden layer.  The energy of a structure is the sum
of the energies of its directed edges.  The subgradient at a pre-activation of
exactly zero takes the positive branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_HIDDEN = 50
DEFAULT_ALPHA = 0.01

MODEL_FORMAT = "cliqueseg-energy-model"
MODEL_VERSION = 1


@dataclass
class EnergyModel:
    W1: np.ndarray  # (H, K)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H,)
    b2: float
    alpha: float = DEFAULT_ALPHA
    feature_fingerprint: str = ""

    @property
    def hidden_size(self) -> int:
        return self.W1.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]

    def copy(self) -> "EnergyModel":
        return EnergyModel(
            self.W1.copy(), self.b1.copy(), self.w2.copy(), float(self.b2),
            self.alpha, self.feature_fingerprint,
        )


def init_model(
    k: int,
    hidden: int = DEFAULT_HIDDEN,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    feature_fingerprint: str = "",
) -> EnergyModel:
    """Uniform initialization in +-sqrt(6 / (K + H)) with a seeded generator."""
    rng = np.random.default_rng(seed)
    bound = np.sqrt(6.0 / (k + hidden))
    return EnergyModel(
        W1=rng.uniform(-bound, bound, size=(hidden, k)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-bound, bound, size=hidden),
        b2=0.0,
        alpha=alpha,
        feature_fingerprint=feature_fingerprint,
    )


def leaky_relu(z: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(z >= 0, z, alpha * z)


def edge_energy(m: EnergyModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (m.input_dim,):
        raise ValueError(f"expected feature vector of dim {m.input_dim}, got {x.shape}")
    z = m.W1 @ x + m.b1
    return float(m.w2 @ leaky_relu(z, m.alpha) + m.b2)


def edge_energies(m: EnergyModel, xs: np.ndarray) -> np.ndarray:
    """Energies for a batch of feature vectors, shape (n, K) -> (n,)."""
    z = xs @ m.W1.T + m.b1
    return leaky_relu(z, m.alpha) @ m.w2 + m.b2


def structure_energy(m: EnergyModel, edges) -> float:
    """Total energy of a structure: the sum over its directed edge vectors."""
    total = 0.0
    for x in edges:
        total += edge_energy(m, x)
    return total


def energy_matrix(
    m: EnergyModel, src: np.ndarray, dst: np.ndarray, adjacency: np.ndarray
) -> np.ndarray:
    """Directed energies E[u, v] for all adjacent pairs, +inf elsewhere.

    ``src``/``dst`` are the per-node feature matrices; the edge vector for
    u -> v is src[u] + dst[v], so the hidden pre-activation splits into a sum
    of two per-node projections and the whole matrix costs O(V^2 H).
    """
    p = src @ m.W1.T  # (V, H)
    q = dst @ m.W1.T  # (V, H)
    z = p[:, None, :] + q[None, :, :] + m.b1
    energies = leaky_relu(z, m.alpha) @ m.w2 + m.b2
    out = np.where(adjacency, energies, np.inf)
    np.fill_diagonal(out, np.inf)
    return out


@dataclass
class GradientAccumulator:
    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    @classmethod
    def zeros_like(cls, m: EnergyModel) -> "GradientAccumulator":
        return cls(np.zeros_like(m.W1), np.zeros_like(m.b1), np.zeros_like(m.w2), 0.0)

    def add(self, other: "GradientAccumulator"):
        self.W1 += other.W1
        self.b1 += other.b1
        self.w2 += other.w2
        self.b2 += other.b2


def energy_gradient(m: EnergyModel, x: np.ndarray, multiplier: float = 1.0) -> GradientAccumulator:
    """Gradient of multiplier * edge_energy(m, x) w.r.t. all parameters."""
    x = np.asarray(x, dtype=np.float64)
    z = m.W1 @ x + m.b1
    a = leaky_relu(z, m.alpha)
    dz = np.where(z >= 0, 1.0, m.alpha)
    back = multiplier * m.w2 * dz  # (H,)
    return GradientAccumulator(
        W1=np.outer(back, x),
        b1=back,
        w2=multiplier * a,
        b2=multiplier,
    )


def batched_gradient(
    m: EnergyModel, xs: np.ndarray, multipliers: np.ndarray
) -> GradientAccumulator:
    """Summed parameter gradient over a batch of signed edge vectors."""
    z = xs @ m.W1.T + m.b1  # (n, H)
    a = leaky_relu(z, m.alpha)
    dz = np.where(z >= 0, 1.0, m.alpha)
    back = multipliers[:, None] * dz * m.w2  # (n, H)
    return GradientAccumulator(
        W1=back.T @ xs,
        b1=back.sum(axis=0),
        w2=(multipliers[:, None] * a).sum(axis=0),
        b2=float(multipliers.sum()),
    )


def apply_gradient(m: EnergyModel, grad: GradientAccumulator, lr: float,
                   max_norm: float | None = None):
    """SGD step; optionally clips the global gradient norm first.

    Margin violations scale with the squared wrong-node count, so raw
    per-sentence subgradients span orders of magnitude; clipping keeps the
    constant learning rate stable across that range.
    """
    if max_norm is not None:
        norm = np.sqrt(
            (grad.W1 ** 2).sum() + (grad.b1 ** 2).sum()
            + (grad.w2 ** 2).sum() + grad.b2 ** 2
        )
        if norm > max_norm:
            factor = max_norm / norm
            grad = GradientAccumulator(
                grad.W1 * factor, grad.b1 * factor, grad.w2 * factor, grad.b2 * factor
            )
    m.W1 -= lr * grad.W1
    m.b1 -= lr * grad.b1
    m.w2 -= lr * grad.w2
    m.b2 -= lr * grad.b2


def save_model(m: EnergyModel, path):
    np.savez(
        path,
        format=MODEL_FORMAT,
        version=MODEL_VERSION,
        W1=m.W1,
        b1=m.b1,
        w2=m.w2,
        b2=np.float64(m.b2),
        alpha=np.float64(m.alpha),
        feature_fingerprint=m.feature_fingerprint,
    )


def load_model(path, expect_fingerprint: str | None = None) -> EnergyModel:
    with np.load(path, allow_pickle=False) as data:
        if str(data["format"]) != MODEL_FORMAT or int(data["version"]) != MODEL_VERSION:
            raise ValueError(f"{path}: not a version-{MODEL_VERSION} energy model file")
        m = EnergyModel(
            W1=data["W1"],
            b1=data["b1"],
            w2=data["w2"],
            b2=float(data["b2"]),
            alpha=float(data["alpha"]),
            feature_fingerprint=str(data["feature_fingerprint"]),
        )
    if expect_fingerprint is not None and m.feature_fingerprint != expect_fingerprint:
        raise ValueError(
            "feature-spec fingerprint mismatch: model was trained against "
            f"{m.feature_fingerprint}, expected {expect_fingerprint}"
        )
    return m
