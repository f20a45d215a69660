"""Finite-difference stencils on the uniform parameter grid.

Interior rows use the classical centered second-order weights (exact
integer coefficients, so e.g. fourth-difference row sums vanish exactly);
rows too close to an end fall back to one-sided stencils whose weights are
generated by a Vandermonde solve.  A one-sided stencil for the m-th
derivative built on m+2 points is second-order accurate; passing more
points raises the order, which the admissibility checker exploits.
"""

from functools import lru_cache
from math import factorial

import numpy as np
from scipy import sparse

from .errors import StencilTooWide

# centered weights (numerator; divide by h**order)
_CENTRAL = {
    1: np.array([-0.5, 0.0, 0.5]),
    2: np.array([1.0, -2.0, 1.0]),
    3: np.array([-0.5, 1.0, 0.0, -1.0, 0.5]),
    4: np.array([1.0, -4.0, 6.0, -4.0, 1.0]),
}


def fd_weights(offsets, order):
    """Weights w with sum_j w_j f(x + offsets_j h) = h^order f^(order)(x) + h.o.t."""
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    if n < order + 1:
        raise StencilTooWide(f"{n} points cannot resolve derivative order {order}")
    A = np.vander(offsets, n, increasing=True).T
    b = np.zeros(n)
    b[order] = factorial(order)
    return np.linalg.solve(A, b)


@lru_cache(maxsize=None)
def diff_matrix(n_nodes, order, acc=2):
    """Sparse d^order/dx^order on n_nodes uniform nodes spanning [0, 1].

    Centered where the stencil fits, one-sided (same accuracy) otherwise.
    The 1/h^order factor is included.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    npts = order + acc  # one-sided point count for the requested accuracy
    if n_nodes < npts:
        raise StencilTooWide(
            f"need {npts} nodes for derivative order {order} at accuracy {acc}, got {n_nodes}"
        )
    h = 1.0 / (n_nodes - 1)
    rows, cols, vals = [], [], []
    use_central = acc == 2 and order in _CENTRAL
    hw = len(_CENTRAL[order]) // 2 if use_central else None
    for i in range(n_nodes):
        if use_central and hw <= i <= n_nodes - 1 - hw:
            w = _CENTRAL[order]
            idx = np.arange(i - hw, i + hw + 1)
        else:
            start = min(max(i - npts // 2, 0), n_nodes - npts)
            idx = np.arange(start, start + npts)
            w = fd_weights(idx - i, order)
        rows.extend([i] * len(idx))
        cols.extend(idx.tolist())
        vals.extend((w / h**order).tolist())
    m = sparse.csr_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes))
    m.sum_duplicates()
    return m


@lru_cache(maxsize=None)
def one_sided_row(n_nodes, order, npts, left):
    """(indices, weights) of a one-sided stencil at node 0 or node n-1.

    Weights include the 1/h^order factor; accuracy is npts - order.
    """
    if n_nodes < npts:
        raise StencilTooWide(f"need {npts} nodes, got {n_nodes}")
    h = 1.0 / (n_nodes - 1)
    if left:
        idx = np.arange(npts)
        offs = idx
    else:
        idx = np.arange(n_nodes - npts, n_nodes)
        offs = idx - (n_nodes - 1)
    return idx, fd_weights(offs, order) / h**order
