"""Per-step monitoring, identity verification and singularity classification.

Boundary-condition residuals here are measured with the *solver's* own
discretization (the nested first-difference pipeline and the second-order
one-sided rows), so the flow's BC-preservation guarantee is checked
against exactly what the stepper enforces.  The a-priori curvature norms
are monitored quantities with alarm semantics, not enforced constraints.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._stencils import one_sided_row
from .energy import EnergyBreakdown, curvature_norm, dissipation, elastic_energy, normal_velocity
from .errors import GridMismatch, InsufficientRecords
from .geometry import compute_geometry


def signed_boundary_residuals(curve, mu):
    """Signed Navier/analytic residuals, shape (2, 4).

    Columns: attachment gamma_2(y); second-order (Dx^2 gamma)_1 and
    (Dx^2 gamma)_2; third-order -2 dk/ds nu_1 + mu tau_1.
    """
    geom = compute_geometry(curve, max_ds_order=1)
    nodes = curve.nodes
    n_nodes = nodes.shape[0]
    out = np.zeros((2, 4))
    for side, left in ((0, True), (1, False)):
        i = 0 if left else -1
        idx, w2 = one_sided_row(n_nodes, 2, 4, left)
        d2 = w2 @ nodes[idx]
        g = -2.0 * geom.dsk[1][i] * geom.normal[i, 0] + mu * geom.tangent[i, 0]
        out[side] = (nodes[i, 1], d2[0], d2[1], g)
    return out


def boundary_residuals(curve, mu):
    """Absolute values of signed_boundary_residuals."""
    return np.abs(signed_boundary_residuals(curve, mu))


def interior_sup(values, n):
    """Sup norm over nodes 2..N-2 (one-sided endpoint values excluded)."""
    return float(np.max(np.abs(np.asarray(values)[2:n - 1])))


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    energy: EnergyBreakdown
    dissipation: float
    length: float
    boundary_tau2: np.ndarray        # tau_2 at the two endpoints
    norm_k: float
    norm_ds2k: float
    norm_ds6k: Optional[float]
    bc_residuals: np.ndarray         # (2, 4), see boundary_residuals
    v_sup: float                     # interior sup of |V|


def record(state, config, with_ds6=False):
    """Fill one diagnostics record from a flow state."""
    curve = state.curve
    mu = config.mu
    want6 = bool(with_ds6) and curve.n >= 512
    geom = compute_geometry(curve, max_ds_order=6 if want6 else 2)
    v = normal_velocity(geom, mu)
    energy = elastic_energy(curve, mu)
    return DiagnosticsRecord(
        time=state.time,
        energy=energy,
        dissipation=dissipation(geom, mu),
        length=geom.length,
        boundary_tau2=geom.tangent[[0, -1], 1].copy(),
        norm_k=curvature_norm(geom, 0),
        norm_ds2k=curvature_norm(geom, 2),
        norm_ds6k=curvature_norm(geom, 6) if want6 else None,
        bc_residuals=boundary_residuals(curve, mu),
        v_sup=interior_sup(v, curve.n),
    )


def verify_dissipation(records):
    """Max defect of (E_{n+1}-E_n)/Delta + averaged dissipation over a record sequence."""
    if len(records) < 3:
        raise InsufficientRecords(f"need at least 3 records, got {len(records)}")
    t = np.array([r.time for r in records])
    dts = np.diff(t)
    delta = dts[0]
    if delta <= 0.0 or np.any(np.abs(dts - delta) > 1e-9 * max(delta, 1e-300)):
        raise InsufficientRecords("records are not uniformly spaced in time")
    e = np.array([r.energy.total for r in records])
    d = np.array([r.dissipation for r in records])
    defect = (e[1:] - e[:-1]) / delta + 0.5 * (d[1:] + d[:-1])
    return float(np.max(np.abs(defect)))


def verify_curvature_evolution(states, config, exclude=4):
    """Sup defect of the curvature evolution identity on three consecutive states.

    dk/dt is the centered difference at fixed grid node; the tangential
    velocity is recovered from the actual motion of the nodes.  ``exclude``
    nodes near each boundary are left out (default 4; note the nested
    fourth arclength derivative touches the one-sided closures up to 6
    nodes in, and grid-refinement studies should scale the exclusion with
    N so both grids measure the same parameter sub-interval).
    """
    if len(states) != 3:
        raise GridMismatch(f"need exactly 3 states, got {len(states)}")
    sm, s0, sp = states
    n = s0.curve.n
    if sm.curve.n != n or sp.curve.n != n:
        raise GridMismatch("states live on different grids")
    dt1 = s0.time - sm.time
    dt2 = sp.time - s0.time
    if dt1 <= 0 or abs(dt2 - dt1) > 1e-9 * dt1:
        raise GridMismatch("states are not uniformly spaced in time")
    mu = config.mu
    gm = compute_geometry(s0.curve, max_ds_order=4)
    k_minus = compute_geometry(sm.curve, max_ds_order=0).curvature
    k_plus = compute_geometry(sp.curve, max_ds_order=0).curvature
    lhs = (k_plus - k_minus) / (2.0 * dt1)
    motion = (sp.curve.nodes - sm.curve.nodes) / (2.0 * dt1)
    lam = np.einsum("ij,ij->i", motion, gm.tangent)
    k = gm.curvature
    k1, k2, k4 = gm.dsk[1], gm.dsk[2], gm.dsk[4]
    rhs = (-2.0 * k4 - 5.0 * k**2 * k2 - 6.0 * k * k1**2 + lam * k1
           - k**5 + mu * (k2 + k**3))
    sl = slice(exclude, n + 1 - exclude)
    return float(np.max(np.abs(lhs[sl] - rhs[sl])))


def classify_singularity(rec, config):
    """Return the singular termination reason a record triggers, if any.

    Length takes precedence when both thresholds trip.
    """
    from .flow import TerminationReason  # local import to avoid a cycle

    if rec.length < config.length_min:
        return TerminationReason.SINGULAR_LENGTH
    if float(np.min(rec.boundary_tau2)) < config.rho_min:
        return TerminationReason.SINGULAR_DEGENERACY
    return None
