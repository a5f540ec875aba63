"""Joint word segmentation and morphological tagging on sentence graphs.

Candidate analyses become graph nodes; pairs that can co-occur in a full
segmentation become edges carrying constraint-conditioned co-occurrence
features; a small MLP assigns each edge an energy; decoding greedily selects
the minimum-energy maximal clique (with Steiner-tree and lattice baselines);
training minimizes a margin-rescaled structured hinge loss.
"""

__version__ = "0.1.0"
