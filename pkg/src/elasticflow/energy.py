"""Bending-plus-length energy, normal velocity and curvature norms.

The functional is E(gamma) = int k^2 + mu ds with mu > 0.  Its L^2
gradient descent moves the curve with normal velocity
V = -2 d^2k/ds^2 - k^3 + mu k, and along the flow dE/dt = -int V^2 ds.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import arclength_integrate, compute_geometry
from .validation import check_positive


@dataclass(frozen=True)
class EnergyBreakdown:
    bending: float   # int k^2 ds
    length: float    # ell(gamma)
    mu: float
    total: float     # bending + mu * length, exact by construction

    @classmethod
    def from_parts(cls, bending, length, mu):
        return cls(bending=bending, length=length, mu=mu, total=bending + mu * length)


def elastic_energy(curve, mu):
    """Quadrature of k^2 + mu against ds."""
    mu = check_positive("mu", mu)
    geom = compute_geometry(curve, max_ds_order=0)
    bending = arclength_integrate(geom.curvature**2, geom)
    length = arclength_integrate(np.ones_like(geom.curvature), geom)
    return EnergyBreakdown.from_parts(bending, length, mu)


def normal_velocity(geom, mu):
    """V = -2 ds^2 k - k^3 + mu k, per node."""
    k = geom.curvature
    return -2.0 * geom.ds_curvature(2) - k**3 + mu * k


def dissipation(geom, mu):
    """int V^2 ds >= 0."""
    v = normal_velocity(geom, mu)
    return arclength_integrate(v**2, geom)


def curvature_norm(geom, j):
    """L^2(ds) norm of the j-th arclength derivative of curvature."""
    if not 0 <= j <= 6:
        raise ValueError(f"j must be in 0..6, got {j}")
    d = geom.ds_curvature(j)
    return float(np.sqrt(arclength_integrate(d**2, geom)))
