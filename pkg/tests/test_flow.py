import numpy as np
import pytest

import elasticflow as ef
from elasticflow.flow import (
    FlowConfig,
    FlowState,
    TerminationReason,
    _project_boundary,
    assemble_implicit_system,
    boundary_lambda,
    deturck_velocity,
    interpolated_lambda,
    run_flow,
    step_explicit,
    step_semi_implicit,
)
from elasticflow.diagnostics import boundary_residuals
from elasticflow.errors import DegenerateBoundary, InadmissibleInitial, StabilityViolation

# symbolic endpoint values of 2 ds^2k nu_2 / tau_2 for the bumped arch
# y = 0.1 sin(2 pi x) + 0.03 x^2 (1-x)^2 (sine alone has ds^2k(y) = 0)
BUMPED_LAMBDA = (10.421275967501183, 10.151663977583649)


def bumped_arch(n):
    x = np.linspace(0.0, 1.0, n + 1)
    return ef.DiscreteCurve(
        np.stack([x, 0.1 * np.sin(2 * np.pi * x) + 0.03 * x**2 * (1 - x) ** 2], axis=1)
    )


def test_deturck_segment_zero():
    v = deturck_velocity(ef.segment(2.0, 64), 1.3)
    # one-sided fourth-difference weights amplify coordinate roundoff
    assert np.abs(v).max() < 1e-6


def test_deturck_semicircle_mu1_vanishes_second_order():
    sups = {}
    for n in (128, 256):
        v = deturck_velocity(ef.semicircle(1.0, n), 1.0)
        sups[n] = np.abs(v[2:-2]).max()
    assert sups[128] < 1e-3
    assert 3.2 < sups[128] / sups[256] < 4.8


def test_deturck_split_form_agreement():
    sups = {}
    for n in (256, 512):
        arch = ef.sine_arch(0.1, 1.0, n)
        geom = ef.compute_geometry(arch, 2)
        v_normal = ef.normal_velocity(geom, 1.0)
        field = deturck_velocity(arch, 1.0)
        v_from_field = np.einsum("ij,ij->i", field, geom.normal)
        sups[n] = np.abs(v_normal - v_from_field)[4:-4].max()
    assert sups[256] < 2.0
    assert 3.2 < sups[256] / sups[512] < 4.8


@pytest.fixture(scope="module")
def bc_consistent_drop(refined_teardrop):
    curve, _ = refined_teardrop(128)
    return ef.DiscreteCurve(_project_boundary(curve.nodes.copy(), 1.0))


def test_assemble_dt_zero_reproduces_input(bc_consistent_drop):
    system = assemble_implicit_system(bc_consistent_drop, 0.0, 1.0)
    sol = system.solve()
    assert np.abs(sol - bc_consistent_drop.nodes).max() < 1e-12


def test_interior_row_sums(bc_consistent_drop):
    system = assemble_implicit_system(bc_consistent_drop, 1e-5, 1.0)
    dense = system.dense()
    n = bc_consistent_drop.n
    rows = [2 * i + c for i in range(2, n - 1) for c in (0, 1)]
    assert np.abs(dense[rows].sum(axis=1) - 1.0).max() < 1e-9


def test_semi_implicit_decreases_energy(prepared_arch):
    arch = prepared_arch()
    config = FlowConfig(mu=1.0, n_grid=128, dt=1e-5, t_max=1.0)
    state = FlowState(0.0, arch, 0)
    e_prev = ef.elastic_energy(arch, 1.0).total
    for _ in range(5):
        state = step_semi_implicit(state, config)
        e = ef.elastic_energy(state.curve, 1.0).total
        assert e < e_prev
        e_prev = e
    bc = boundary_residuals(state.curve, 1.0)
    assert bc[:, 0].max() == 0.0          # attachment snapped exactly
    assert bc[:, 1:3].max() < 1e-6        # second-order rows are linear
    assert bc[:, 3].max() < 1e-5          # third-order within 10 bc_tol


def test_semi_implicit_first_order_in_dt():
    arch = ef.prepare_initial(ef.sine_arch(0.1, 1.0, 64), 1.0)
    horizon = 4e-4

    def march(dt):
        state = FlowState(0.0, arch, 0)
        config = FlowConfig(mu=1.0, n_grid=64, dt=dt, t_max=1.0)
        for _ in range(int(round(horizon / dt))):
            state = step_semi_implicit(state, config)
        return state.curve.nodes

    ref = march(1.25e-6)
    e_coarse = np.abs(march(2e-5) - ref).max()
    e_fine = np.abs(march(1e-5) - ref).max()
    assert 1.6 < e_coarse / e_fine < 2.4


@pytest.fixture(scope="module")
def gentle_projected():
    x = np.linspace(0.0, 1.0, 25)
    gentle = ef.DiscreteCurve(np.stack([x, 0.05 * np.sin(2 * np.pi * x)], axis=1))
    return ef.DiscreteCurve(_project_boundary(gentle.nodes.copy(), 1.0))


def test_explicit_segment_unchanged():
    seg = ef.segment(2.0, 24)
    length = ef.compute_geometry(seg, 0).length
    config = FlowConfig(
        mu=1.0, n_grid=24, dt=0.5 * 0.1 * (seg.h * length) ** 4 / 2, t_max=1.0
    )
    out = step_explicit(FlowState(0.0, seg, 0), config)
    assert np.abs(out.curve.nodes - seg.nodes).max() < 1e-10


def test_explicit_stability_violation(gentle_projected):
    config = FlowConfig(mu=1.0, n_grid=24, dt=1e-3, t_max=1.0)
    with pytest.raises(StabilityViolation):
        step_explicit(FlowState(0.0, gentle_projected, 0), config)


def test_scheme_cross_validation(gentle_projected):
    proj = gentle_projected
    length = ef.compute_geometry(proj, 0).length
    diffs = {}
    for factor in (0.9, 0.45):
        dt = factor * 0.1 * (proj.h * length) ** 4 / 2
        config = FlowConfig(mu=1.0, n_grid=24, dt=dt, t_max=1.0, bc_tol=1e-12)
        state = FlowState(0.0, proj, 0)
        one_e = step_explicit(state, config)
        one_s = step_semi_implicit(state, config)
        # away from the boundary closures the schemes agree to O(dt^2)
        diffs[factor] = np.abs(one_e.curve.nodes - one_s.curve.nodes)[5:-5].max()
        state_e = state_s = state
        for _ in range(50):
            state_e = step_explicit(state_e, config)
            state_s = step_semi_implicit(state_s, config)
        horizon = np.abs(state_e.curve.nodes - state_s.curve.nodes)[5:-5].max()
        assert horizon < 1e-4  # O(dt) over a fixed short horizon
    assert diffs[0.9] < 1e-5
    assert 3.2 < diffs[0.9] / diffs[0.45] < 5.8


def test_boundary_lambda_oracle():
    geom = ef.compute_geometry(bumped_arch(256), 2)
    lam = boundary_lambda(geom, 0.05)
    assert lam[0] == pytest.approx(BUMPED_LAMBDA[0], abs=1e-3)
    assert lam[1] == pytest.approx(BUMPED_LAMBDA[1], abs=1e-3)


def test_boundary_lambda_zero_and_degenerate(refined_teardrop):
    drop, _ = refined_teardrop(128)
    lam = boundary_lambda(ef.compute_geometry(drop, 2), 0.05)
    assert abs(lam[0]) < 5e-3 and abs(lam[1]) < 5e-3  # ds^2k(y) ~ 0 at critical point
    with pytest.raises(DegenerateBoundary):
        boundary_lambda(ef.compute_geometry(ef.semicircle(1.0, 128), 2), 0.05)


def test_interpolated_lambda_profile():
    seg = ef.compute_geometry(ef.segment(2.0, 64), 0)
    const = interpolated_lambda(seg, 0.7, 0.7)
    assert np.allclose(const, 0.7, atol=1e-14)
    field = interpolated_lambda(seg, 0.0, 1.0)
    mid = np.argmin(np.abs(seg.s - seg.length / 2))
    assert field[mid] == pytest.approx(0.5, abs=1e-12)
    assert field[0] == 0.0 and field[-1] == 1.0
    geom = ef.compute_geometry(bumped_arch(256), 2)
    lam0, lam1 = boundary_lambda(geom, 0.05)
    field = interpolated_lambda(geom, lam0, lam1)
    assert field[0] == pytest.approx(lam0, abs=1e-12)
    assert field[-1] == pytest.approx(lam1, abs=1e-12)
    ds_lambda = np.diff(field) / np.diff(geom.s)
    expected = (lam1 - lam0) / geom.length
    assert np.abs(ds_lambda - expected).max() < 1e-10


def test_run_flow_t_max_zero(refined_teardrop):
    drop, _ = refined_teardrop(128)
    config = FlowConfig(mu=1.0, n_grid=128, dt=1e-5, t_max=0.0)
    result = run_flow(drop, config, override_admissibility=True)
    assert result.reason is TerminationReason.MAX_TIME
    assert len(result.states) == 1
    assert result.states[0].curve is drop


def test_run_flow_admissibility_gate(prepared_arch):
    arch = prepared_arch()
    config = FlowConfig(mu=1.0, n_grid=128, dt=1e-5, t_max=1e-4)
    with pytest.raises(InadmissibleInitial):
        run_flow(arch, config)
    result = run_flow(arch, config, override_admissibility=True)
    assert result.overridden
    assert result.final_state.step_index == 10


def test_run_flow_records_every(refined_teardrop):
    drop, _ = refined_teardrop(128)
    config = FlowConfig(mu=1.0, n_grid=128, dt=1e-5, t_max=2e-4)
    result = run_flow(drop, config, override_admissibility=True, record_every=5)
    assert [s.step_index for s in result.states] == [0, 5, 10, 15, 20]
    assert len(result.records) == len(result.states)


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(mu=-1.0).validate()
    with pytest.raises(ValueError):
        FlowConfig(scheme="leapfrog").validate()
    with pytest.raises(ValueError):
        FlowConfig(velocity_mode="none").validate()
    with pytest.raises(ValueError):
        FlowConfig(c_stab=0.9).validate()
    with pytest.raises(ValueError):
        FlowConfig(n_grid=8).validate()


def test_velocity_modes_agree_geometrically(refined_teardrop):
    drop, _ = refined_teardrop(128)
    finals = {}
    for mode in ("deturck", "interpolated_lambda"):
        config = FlowConfig(mu=1.0, n_grid=128, dt=1e-5, t_max=2e-3,
                            velocity_mode=mode, el_tol=1e-8)
        result = run_flow(drop, config, override_admissibility=True, record_every=100)
        assert result.reason is TerminationReason.MAX_TIME
        finals[mode] = result.final_state.curve
    a = ef.reparametrize_constant_speed(finals["deturck"]).nodes
    b = ef.reparametrize_constant_speed(finals["interpolated_lambda"]).nodes
    assert ef.hausdorff_distance(a, b) < 5 * (1e-5 + 1.0 / 128**2)
