"""Kernel backend selection: compiled extension if built, numpy otherwise."""

try:
    from . import _kernels as _impl

    COMPILED = True
except ImportError:  # extension not built; pure fallback
    from . import _kernels_py as _impl

    COMPILED = False

IMPLEMENTATION = _impl.IMPLEMENTATION
greedy_clique = _impl.greedy_clique
greedy_cliques_all = _impl.greedy_cliques_all
steiner_tree = _impl.steiner_tree

from . import _kernels_py as pure  # noqa: E402  (always importable, for benchmarks)
