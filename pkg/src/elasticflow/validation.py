"""Input validation helpers, in the spirit of sklearn's check_array."""

import numpy as np

from .errors import NonRegularCurve


def check_nodes(X, min_intervals=8):
    """Validate and coerce curve nodes to a float64 array of shape (N+1, 2).

    Accepts anything array-like, a DiscreteCurve, or an object exposing
    ``.nodes``.  Raises ValueError on bad shape and NonRegularCurve on
    non-finite entries or coincident consecutive nodes.
    """
    nodes = getattr(X, "nodes", X)
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != 2:
        raise ValueError(f"curve nodes must have shape (N+1, 2), got {nodes.shape}")
    if nodes.shape[0] < min_intervals + 1:
        raise ValueError(
            f"need at least {min_intervals + 1} nodes (N >= {min_intervals}), got {nodes.shape[0]}"
        )
    if not np.all(np.isfinite(nodes)):
        raise NonRegularCurve("curve nodes contain non-finite values")
    chords = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
    if np.any(chords <= 0.0):
        raise NonRegularCurve("consecutive nodes coincide")
    return np.ascontiguousarray(nodes)


def check_positive(name, value):
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value
