"""Non-degenerate evolution of the curve and its time steppers.

Motion equation (the gradient-flow normal velocity plus the tangential
velocity that makes the system parabolic in the parametrization):

    dγ/dt = -2 γ''''/w^4 + 12 γ''' <γ'',γ'>/w^6 + 5 γ'' |γ''|^2/w^6
            + 8 γ'' <γ''',γ'>/w^6 - 35 γ'' <γ'',γ'>^2/w^8 + mu γ''/w^2

with w = |γ'| and ' = d/dx.  The semi-implicit stepper freezes the leading
coefficient 2/w^4 at the previous step, keeps every lower-order term
explicit, and closes the system with 4 boundary rows per endpoint:

    attachment      γ_2(y) = 0                       (linear, exact)
    second order    dx^2 γ(y) = 0                    (linear, exact)
    third order     (-2 dk/ds ν + mu τ)_1 = 0        (linearized: the
                    unknown enters through dx^3 γ against frozen ν, w)

The third-order row is re-frozen at the new iterate and the banded solve
repeated until the nonlinear residual is below bc_tol, so the discrete
boundary conditions hold after every accepted step even when the run was
started (with the admissibility override) from a curve violating them.
"""

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.linalg import LinAlgError, solve_banded

from ._stencils import diff_matrix, one_sided_row
from .admissibility import check_analytic_admissibility
from .diagnostics import interior_sup, record, signed_boundary_residuals
from .energy import normal_velocity
from .errors import (
    DegenerateBoundary,
    InadmissibleInitial,
    NonRegularCurve,
    SingularMatrix,
    StabilityViolation,
)
from .geometry import DiscreteCurve, compute_geometry
from .validation import check_positive

L_BAND = 8
U_BAND = 9

_SCHEMES = ("semi_implicit", "explicit")
_VELOCITY_MODES = ("deturck", "interpolated_lambda")


@dataclass(frozen=True)
class FlowConfig:
    mu: float = 1.0
    n_grid: int = 128
    dt: float = 1e-5
    scheme: str = "semi_implicit"
    t_max: float = 1.0
    velocity_mode: str = "deturck"
    rho_min: float = 0.05
    length_min: float = 0.05
    el_tol: float = 1e-4
    bc_tol: float = 1e-6
    c_stab: float = 0.1
    max_bc_sweeps: int = 12

    def validate(self):
        for name in ("mu", "dt", "rho_min", "length_min", "el_tol", "bc_tol"):
            check_positive(name, getattr(self, name))
        if self.t_max < 0.0:
            raise ValueError(f"t_max must be >= 0, got {self.t_max}")
        if self.n_grid < 16:
            raise ValueError(f"n_grid must be >= 16, got {self.n_grid}")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")
        if self.velocity_mode not in _VELOCITY_MODES:
            raise ValueError(
                f"velocity_mode must be one of {_VELOCITY_MODES}, got {self.velocity_mode!r}"
            )
        if not 0.0 < self.c_stab <= 0.5:
            raise ValueError(f"c_stab must lie in (0, 0.5], got {self.c_stab}")
        return self

    def explicit_dt_bound(self, initial_length):
        return self.c_stab * (initial_length / self.n_grid) ** 4 / 2.0


@dataclass(frozen=True)
class FlowState:
    time: float
    curve: DiscreteCurve
    step_index: int


class TerminationReason(Enum):
    CONVERGED = "Converged"
    SINGULAR_LENGTH = "SingularLength"
    SINGULAR_DEGENERACY = "SingularDegeneracy"
    MAX_TIME = "MaxTime"
    STEP_FAILURE = "StepFailure"


@dataclass(frozen=True)
class FlowResult:
    states: list
    records: list
    reason: TerminationReason
    detail: str
    admissibility: object = None
    overridden: bool = False

    @property
    def final_state(self):
        return self.states[-1]


def _derivatives(nodes):
    n_nodes = nodes.shape[0]
    return [diff_matrix(n_nodes, j) @ nodes for j in (1, 2, 3, 4)]


def _deturck_from_derivatives(d1, d2, d3, d4, mu):
    w = np.linalg.norm(d1, axis=1)
    if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
        raise NonRegularCurve("speed vanished while evaluating the motion field")
    d2d1 = np.einsum("ij,ij->i", d2, d1)
    d3d1 = np.einsum("ij,ij->i", d3, d1)
    d2sq = np.einsum("ij,ij->i", d2, d2)
    w2 = w * w
    w4 = w2 * w2
    w6 = w4 * w2
    w8 = w4 * w4
    return (
        -2.0 * d4 / w4[:, None]
        + 12.0 * d3 * (d2d1 / w6)[:, None]
        + 5.0 * d2 * (d2sq / w6)[:, None]
        + 8.0 * d2 * (d3d1 / w6)[:, None]
        - 35.0 * d2 * (d2d1**2 / w8)[:, None]
        + mu * d2 / w2[:, None]
    )


def deturck_velocity(curve, mu):
    """Full motion field on every node (one-sided stencils at the ends)."""
    if curve.n < 16:
        raise NonRegularCurve(f"need N >= 16 for the motion field, got N={curve.n}")
    d1, d2, d3, d4 = _derivatives(curve.nodes)
    return _deturck_from_derivatives(d1, d2, d3, d4, mu)


@dataclass
class BandedSystem:
    """Block-banded system in LAPACK banded storage (interleaved components)."""

    ab: np.ndarray
    rhs: np.ndarray
    n_nodes: int
    l: int = L_BAND
    u: int = U_BAND

    def solve(self):
        try:
            sol = solve_banded((self.l, self.u), self.ab, self.rhs, check_finite=False)
        except LinAlgError as exc:
            raise SingularMatrix(str(exc)) from exc
        if not np.all(np.isfinite(sol)):
            raise SingularMatrix("banded solve produced non-finite values")
        return sol.reshape(self.n_nodes, 2)

    def dense(self):
        size = 2 * self.n_nodes
        a = np.zeros((size, size))
        for r in range(size):
            lo = max(0, r - self.l)
            hi = min(size - 1, r + self.u)
            for c in range(lo, hi + 1):
                a[r, c] = self.ab[self.u + r - c, c]
        return a


def _band_set(ab, row, col, val):
    ab[U_BAND + row - col, col] = val


def _interior_assembly(curve_prev, dt, mu, forcing=None):
    """Banded matrix and rhs with the PDE rows filled, BC rows left empty."""
    nodes = curve_prev.nodes
    n = curve_prev.n
    h = curve_prev.h
    size = 2 * (n + 1)
    d1, d2, d3, d4 = _derivatives(nodes)
    w = np.linalg.norm(d1, axis=1)
    if np.any(w <= 0.0):
        raise NonRegularCurve("speed vanished in the implicit assembly")
    coef = 2.0 / w**4
    expl = _deturck_from_derivatives(d1, d2, d3, d4, mu) + coef[:, None] * d4
    if forcing is not None:
        expl = expl + forcing
    rhs_nodes = nodes + dt * expl

    ab = np.zeros((L_BAND + U_BAND + 1, size))
    rhs = np.zeros(size)
    w4_stencil = np.array([1.0, -4.0, 6.0, -4.0, 1.0]) / h**4
    i = np.arange(2, n - 1)
    for c in (0, 1):
        r = 2 * i + c
        for m, off in enumerate(range(-2, 3)):
            vals = dt * coef[i] * w4_stencil[m]
            if off == 0:
                vals = vals + 1.0
            ab[U_BAND - 2 * off, r + 2 * off] = vals
        rhs[r] = rhs_nodes[i, c]
    return ab, rhs


_BC_WINDOW = 8  # nodes per end feeding the third-order row (support is 4)


def _third_order_row_data(bc_curve, mu):
    """Exact Jacobian row and signed residual of the third-order condition.

    The discrete residual g = (-2 dk/ds nu + mu tau)_1 at an endpoint is a
    function of the four nearest node positions only, and is invariant
    under the grid spacing, so it and its exact derivative row can be
    evaluated on a window of nodes around the endpoint.  Using the exact
    row makes the per-step boundary sweeps a Newton iteration on g, which
    converges quadratically (the frozen leading-order row of the
    linearized system only contracts by a constant factor per solve).
    """
    from .elastica import _Pipeline  # deferred: elastica does not import flow

    nodes = bc_curve.nodes
    out = {}
    for side, left in ((0, True), (1, False)):
        window = nodes[:_BC_WINDOW] if left else nodes[-_BC_WINDOW:]
        pipe = _Pipeline(window, mu)
        i = 0 if left else _BC_WINDOW - 1
        if not np.isfinite(pipe.third[i]):
            raise SingularMatrix("third-order residual not finite at an endpoint")
        row = pipe.J_third[i]
        out[side] = {"g": float(pipe.third[i]), "row": row}
    return out


def _apply_navier_rows(ab, rhs, curve_prev, bc_curve, mu):
    n = curve_prev.n
    n_nodes = n + 1
    data = _third_order_row_data(bc_curve, mu)
    bc_nodes = bc_curve.nodes
    for side, left in ((0, True), (1, False)):
        row_vals = data[side]["row"]
        if float(np.max(np.abs(row_vals))) < 1e-12:
            raise SingularMatrix(
                "third-order boundary row is rank deficient (tau_2 ~ 0 at an endpoint)"
            )
        row_third = 2 * (0 if left else n)
        support = 5  # nodes with possibly nonzero entries (one spare)
        lin_prev = 0.0
        for local in range(_BC_WINDOW):
            node = local if left else n_nodes - _BC_WINDOW + local
            for c in (0, 1):
                val = row_vals[2 * local + c]
                if val == 0.0:
                    continue
                dist = local if left else _BC_WINDOW - 1 - local
                if dist >= support:
                    raise SingularMatrix("third-order row support exceeded the band")
                _band_set(ab, row_third, 2 * node + c, val)
                lin_prev += val * bc_nodes[node, c]
        rhs[row_third] = lin_prev - data[side]["g"]

        row_attach = 2 * (0 if left else n) + 1
        _band_set(ab, row_attach, row_attach, 1.0)
        rhs[row_attach] = 0.0

        idx2, w2 = one_sided_row(n_nodes, 2, 4, left)
        base = 2 * (1 if left else n - 1)
        for c in (0, 1):
            row = base + c
            for j, wt in zip(idx2, w2):
                _band_set(ab, row, 2 * j + c, wt)
            rhs[row] = 0.0


def _apply_prescribed_rows(ab, rhs, n, bc_data):
    """Value + second-derivative rows with manufactured data (MMS closure)."""
    n_nodes = n + 1
    for side, left in (("left", True), ("right", False)):
        value = np.asarray(bc_data[side]["value"], dtype=float)
        second = np.asarray(bc_data[side]["second"], dtype=float)
        end = 0 if left else n
        for c in (0, 1):
            row = 2 * end + c
            _band_set(ab, row, 2 * end + c, 1.0)
            rhs[row] = value[c]
        idx2, w2 = one_sided_row(n_nodes, 2, 4, left)
        base = 2 * (1 if left else n - 1)
        for c in (0, 1):
            row = base + c
            for j, wt in zip(idx2, w2):
                _band_set(ab, row, 2 * j + c, wt)
            rhs[row] = second[c]


def assemble_implicit_system(curve_prev, dt, mu, bc_curve=None, bc_mode="navier",
                             bc_data=None, forcing=None):
    """One semi-implicit step as a block-banded linear system.

    Interior rows i = 2..N-2 carry (I + dt (2/w_i^4) Dx^4); the remaining
    8 rows carry the boundary conditions (see the module docstring), with
    the third-order row linearized about ``bc_curve`` (default: the
    previous curve).  ``bc_mode='prescribed'`` replaces the physical rows
    by value/second-derivative rows with given data, which is the closure
    used by the manufactured-solution study.
    """
    check_positive("mu", mu)
    if dt < 0.0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    ab, rhs = _interior_assembly(curve_prev, dt, mu, forcing=forcing)
    if bc_mode == "navier":
        _apply_navier_rows(ab, rhs, curve_prev, bc_curve or curve_prev, mu)
    elif bc_mode == "prescribed":
        if bc_data is None:
            raise ValueError("bc_mode='prescribed' needs bc_data")
        _apply_prescribed_rows(ab, rhs, curve_prev.n, bc_data)
    else:
        raise ValueError(f"unknown bc_mode {bc_mode!r}")
    return BandedSystem(ab=ab, rhs=rhs, n_nodes=curve_prev.n + 1)


def step_semi_implicit(state, config):
    """Advance one dt with the banded solver, iterating the third-order row.

    The interior (frozen-coefficient) rows are assembled once; each sweep
    re-freezes only the third-order boundary linearization at the latest
    iterate until its nonlinear residual is <= bc_tol.  Healthy states need
    a single sweep.
    """
    curve0 = state.curve
    dt, mu = config.dt, config.mu
    ab0, rhs0 = _interior_assembly(curve0, dt, mu)
    bc_curve = curve0
    prev_nodes = None
    for sweep in range(config.max_bc_sweeps):
        ab = ab0.copy()
        rhs = rhs0.copy()
        _apply_navier_rows(ab, rhs, curve0, bc_curve, mu)
        nodes = BandedSystem(ab=ab, rhs=rhs, n_nodes=curve0.n + 1).solve()
        nodes[0, 1] = 0.0
        nodes[-1, 1] = 0.0
        cand = DiscreteCurve(nodes)
        g = np.abs(signed_boundary_residuals(cand, mu)[:, 3])
        if float(g.max()) <= config.bc_tol:
            return FlowState(state.time + dt, cand, state.step_index + 1)
        if prev_nodes is not None:
            move = float(np.max(np.abs(nodes - prev_nodes)))
            # stationary iterates mean the residual sits at the roundoff
            # floor of the banded solve scaled by the row norm
            if move <= 1e-10 * (1.0 + float(np.max(np.abs(nodes)))):
                return FlowState(state.time + dt, cand, state.step_index + 1)
        prev_nodes = nodes
        bc_curve = cand
    raise SingularMatrix(
        f"third-order boundary rows did not reach bc_tol={config.bc_tol:g} "
        f"within {config.max_bc_sweeps} sweeps"
    )


def _project_boundary(nodes, mu, tol=1e-12, max_iter=30):
    """Move the two node pairs at each end onto the discrete BC manifold.

    Best effort: damped Newton (least-squares steps) on the four scalar
    conditions per endpoint; if no step improves the residual the input
    nodes are kept.  The latter happens exactly where the manifold is out
    of reach, e.g. a straight segment, whose third-order condition cannot
    be satisfied near a horizontal boundary tangent.
    """
    nodes = nodes.copy()
    n = nodes.shape[0] - 1

    def residual(side):
        curve = DiscreteCurve(nodes)
        return signed_boundary_residuals(curve, mu)[side]

    for side, rows in ((0, (0, 1)), (1, (n - 1, n))):
        original = nodes[list(rows)].copy()
        for _ in range(max_iter):
            r = residual(side)
            best = float(np.max(np.abs(r)))
            if best <= tol:
                break
            jac = np.zeros((4, 4))
            base = nodes[list(rows)].ravel().copy()
            for c in range(4):
                eps = 1e-7 * max(1.0, abs(base[c]))
                z = base.copy()
                z[c] += eps
                nodes[list(rows)] = z.reshape(2, 2)
                jac[:, c] = (residual(side) - r) / eps
            nodes[list(rows)] = base.reshape(2, 2)
            delta, *_ = np.linalg.lstsq(jac, -r, rcond=None)
            # trust region: a post-step correction is a small fraction of a
            # cell; needing more means the manifold is out of reach here
            cap = 0.25 * float(np.linalg.norm(nodes[1 if side == 0 else n]
                                              - nodes[0 if side == 0 else n - 1]))
            if float(np.max(np.abs(delta))) > cap:
                break
            improved = False
            alpha = 1.0
            for _attempt in range(6):
                nodes[list(rows)] = (base + alpha * delta).reshape(2, 2)
                if float(np.max(np.abs(residual(side)))) < best:
                    improved = True
                    break
                alpha *= 0.5
            if not improved:
                nodes[list(rows)] = base.reshape(2, 2)
                break
        if float(np.max(np.abs(residual(side)))) > max(tol, 1e-8):
            nodes[list(rows)] = original  # manifold out of reach: keep the input
    nodes[0, 1] = 0.0
    nodes[-1, 1] = 0.0
    return nodes


def step_explicit(state, config):
    """Forward Euler on the motion field plus boundary projection."""
    curve = state.curve
    geom = compute_geometry(curve, max_ds_order=0)
    bound = config.c_stab * (curve.h * geom.length) ** 4 / 2.0
    if config.dt > bound:
        raise StabilityViolation(
            f"dt={config.dt:g} exceeds the explicit bound {bound:g} "
            f"(c_stab={config.c_stab:g}, length={geom.length:g})"
        )
    vel = deturck_velocity(curve, config.mu)
    nodes = curve.nodes + config.dt * vel
    nodes = _project_boundary(nodes, config.mu)
    return FlowState(state.time + config.dt, DiscreteCurve(nodes), state.step_index + 1)


def boundary_lambda(geom, rho_min):
    """Tangential velocity forced at the endpoints: 2 ds^2k nu_2 / tau_2.

    Endpoint ds^2 k comes from the high-order one-sided evaluator (the
    nested difference pipeline loses accuracy at the corner nodes).
    """
    from .admissibility import _endpoint_arclength_quantities, _endpoint_parameter_derivatives

    tau2 = geom.tangent[[0, -1], 1]
    if float(tau2.min()) < rho_min:
        raise DegenerateBoundary(
            f"boundary tangent y-component {tau2.min():.3g} below rho_min={rho_min:g}"
        )
    ends = _endpoint_parameter_derivatives(geom.curve)
    lam = []
    for y in (0, 1):
        q = _endpoint_arclength_quantities(ends[y], 1.0)
        lam.append(2.0 * q["ds2k"] * q["nu"][1] / q["tau"][1])
    return float(lam[0]), float(lam[1])


def interpolated_lambda(geom, lambda0, lambda1):
    """Affine-in-arclength tangential profile matching the boundary values.

    Equals the linear interpolation between the endpoint values; its
    arclength derivative is the constant (lambda1 - lambda0)/length.
    """
    return lambda0 + (lambda1 - lambda0) * geom.s / geom.length


def _collar_bump(x, c):
    t = np.clip(x / c, 0.0, 1.0)
    u = np.clip((1.0 - x) / c, 0.0, 1.0)
    q = lambda z: z**3 * (10.0 - 15.0 * z + 6.0 * z**2)
    return q(t) * q(u)


def _match_interpolated_tangent(prev_curve, new_curve, geom_prev, dt, config):
    """Resample the stepped curve so its tangential motion follows the
    affine-in-arclength profile.  Point set and endpoints are unchanged;
    the slide field is blended to zero (with two flat derivatives) in
    boundary collars so the discrete boundary rows are preserved."""
    geom_new = compute_geometry(new_curve, 2)
    lam0, lam1 = boundary_lambda(geom_new, config.rho_min)
    target = interpolated_lambda(geom_prev, lam0, lam1)
    actual = np.einsum(
        "ij,ij->i", (new_curve.nodes - prev_curve.nodes) / dt, geom_prev.tangent
    )
    delta = dt * (target - actual)
    sigma = geom_prev.s / geom_prev.length
    delta = delta - ((1.0 - sigma) * delta[0] + sigma * delta[-1])
    collar = min(max(8.0 * new_curve.h, 0.03), 0.2)
    delta *= _collar_bump(new_curve.x, collar)
    # trust region: never slide more than a fraction of a cell per step, so
    # violent transients only get partial tangential matching
    cap = 0.2 * geom_prev.length * new_curve.h
    peak = float(np.max(np.abs(delta)))
    if peak > cap:
        delta *= cap / peak
    s = np.concatenate(
        [[0.0], np.cumsum(np.linalg.norm(np.diff(new_curve.nodes, axis=0), axis=1))]
    )
    targets = s + delta
    if np.any(np.diff(targets) <= 0.0):
        return new_curve
    # C^4 interpolant: a C^1 resampler leaves curvature-level kinks that the
    # fourth-order boundary rows amplify on the next step
    nodes = make_interp_spline(s, new_curve.nodes, k=5, axis=0)(targets)
    nodes[0] = new_curve.nodes[0]
    nodes[-1] = new_curve.nodes[-1]
    nodes[0, 1] = 0.0
    nodes[-1, 1] = 0.0
    return DiscreteCurve(nodes)


def run_flow(initial, config, override_admissibility=False, record_every=1,
             with_ds6=False):
    """March the flow until convergence, singularity, t_max or failure."""
    config = dataclasses.replace(config, n_grid=initial.n).validate()
    report = check_analytic_admissibility(
        initial, config.mu, rho=config.rho_min, tol=config.bc_tol
    )
    if not report.overall and not override_admissibility:
        failing = [g for g, ok in report.passed.items() if not ok]
        raise InadmissibleInitial(
            "initial curve fails analytic admissibility ("
            + ", ".join(failing)
            + "); pass override_admissibility=True to run anyway"
        )

    step_fn = step_semi_implicit if config.scheme == "semi_implicit" else step_explicit
    state = FlowState(0.0, initial, 0)
    states = [state]
    records = [record(state, config, with_ds6)]
    geom = compute_geometry(initial, 2)
    profile0 = geom.speed / geom.speed.mean()

    n_steps = int(round(config.t_max / config.dt))
    reason = None
    detail = ""
    if n_steps == 0:
        reason = TerminationReason.MAX_TIME
        detail = "t_max reached before the first step"

    k = 0
    while reason is None:
        prev_state, prev_geom = state, geom
        try:
            state = step_fn(state, config)
            if config.velocity_mode == "interpolated_lambda":
                try:
                    curve = _match_interpolated_tangent(
                        prev_state.curve, state.curve, prev_geom, config.dt, config
                    )
                    state = FlowState(state.time, curve, state.step_index)
                except DegenerateBoundary:
                    pass
            geom = compute_geometry(state.curve, 2)
        except (SingularMatrix, NonRegularCurve, StabilityViolation) as exc:
            reason = TerminationReason.STEP_FAILURE
            detail = f"{type(exc).__name__}: {exc}"
            if states[-1].step_index != prev_state.step_index:
                states.append(prev_state)
                records.append(record(prev_state, config, with_ds6))
            break
        k += 1

        length = geom.length
        tau2_min = float(geom.tangent[[0, -1], 1].min())
        ratio = (geom.speed / geom.speed.mean()) / profile0
        v_sup = interior_sup(normal_velocity(geom, config.mu), state.curve.n)

        if length < config.length_min:
            reason = TerminationReason.SINGULAR_LENGTH
            detail = f"length {length:.6g} < length_min {config.length_min:g}"
        elif tau2_min < config.rho_min:
            reason = TerminationReason.SINGULAR_DEGENERACY
            detail = f"boundary tau_2 {tau2_min:.6g} < rho_min {config.rho_min:g}"
        elif float(ratio.min()) < 0.25 or float(ratio.max()) > 8.0:
            reason = TerminationReason.STEP_FAILURE
            detail = (
                "mesh regularity lost: normalized speed profile left [1/4, 8] x initial"
                f" (min {ratio.min():.3f}, max {ratio.max():.3f})"
            )
        elif v_sup < config.el_tol:
            reason = TerminationReason.CONVERGED
            detail = f"interior sup |V| = {v_sup:.3g} < el_tol {config.el_tol:g}"
        elif k >= n_steps:
            reason = TerminationReason.MAX_TIME
            detail = f"t_max {config.t_max:g} reached"

        if k % record_every == 0 or reason is not None:
            states.append(state)
            records.append(record(state, config, with_ds6))

    return FlowResult(
        states=states,
        records=records,
        reason=reason,
        detail=detail,
        admissibility=report,
        overridden=bool(override_admissibility and not report.overall),
    )
