"""Small composite Gauss-Legendre helpers shared by the numerical modules."""

from __future__ import annotations

import functools

import numpy as np

__all__ = ["gauss_legendre", "composite_nodes", "geometric_edges"]


@functools.lru_cache(maxsize=64)
def _gl(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order: int):
    """Nodes and weights of the ``order``-point rule on [-1, 1] (cached, read-only)."""
    return _gl(int(order))


def composite_nodes(edges, order: int):
    """Gauss-Legendre nodes and weights on consecutive panels ``edges[i], edges[i+1]``.

    Returns flat arrays plus the panel index of each node.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    panel = np.repeat(np.arange(edges.size - 1), order)
    return nodes.ravel(), weights.ravel(), panel


def geometric_edges(start: float, stop: float, ratio: float = 2.0):
    """Edges ``start, start*ratio, ...`` capped at ``stop`` (``start > 0``)."""
    out = [start]
    while out[-1] * ratio < stop:
        out.append(out[-1] * ratio)
    out.append(stop)
    return np.asarray(out)
