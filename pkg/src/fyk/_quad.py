"""Internal quadrature helpers: composite Gauss rules on panel decompositions."""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _leg(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_panels(edges, order=10):
    """Composite Gauss-Legendre rule over the panels defined by ``edges``.

    Returns (nodes, weights) as flat arrays covering [edges[0], edges[-1]].
    """
    edges = np.asarray(edges, dtype=float)
    x, w = _leg(order)
    a = edges[:-1]
    h = np.diff(edges)
    nodes = (a[:, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (0.5 * h[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_edges(a, b, h0, ratio=1.3, h_max=None):
    """Panel edges on [a, b] with width h0 at ``a`` growing geometrically."""
    edges = [a]
    h = h0
    while edges[-1] < b:
        edges.append(min(b, edges[-1] + h))
        h *= ratio
        if h_max is not None:
            h = min(h, h_max)
    return np.array(edges)
