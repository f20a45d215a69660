import numpy as np
import pytest

import elasticflow as ef
from elasticflow.errors import MissingDerivativeOrder

# fine-grid (N=4096) trapezoid quadratures of the symbolic integrands for
# the arch y = 0.1 sin(2 pi x); see test_geometry for the symbolic chain
ARCH_TOTAL_MU1 = 7.44819354840973
ARCH_DISSIPATION_MU1 = 68227.23009491514
ARCH_NORM_DS2K = 142.95937230842696


def test_segment_energy_exact():
    e = ef.elastic_energy(ef.segment(2.0, 64), 0.5)
    assert e.bending == pytest.approx(0.0, abs=1e-12)
    assert e.total == pytest.approx(1.0, abs=1e-12)
    assert e.total == e.bending + e.mu * e.length


def test_semicircle_energy():
    e = ef.elastic_energy(ef.semicircle(1.0, 400), 1.0)
    assert abs(e.total - 2 * np.pi) / (2 * np.pi) < 1e-3


def test_arch_energy_fine_grid_oracle():
    e = ef.elastic_energy(ef.sine_arch(0.1, 1.0, 256), 1.0)
    assert abs(e.total - ARCH_TOTAL_MU1) / ARCH_TOTAL_MU1 < 1e-4


def test_normal_velocity_segment_zero():
    geom = ef.compute_geometry(ef.segment(2.0, 64), 2)
    assert np.abs(ef.normal_velocity(geom, 1.7)).max() < 1e-12


def test_normal_velocity_balanced_arc():
    # arc of radius 1/sqrt(mu): k = sqrt(mu) so -k^3 + mu k = 0
    mu = 4.0
    radius = 1.0 / np.sqrt(mu)
    t = np.linspace(0.2, 2.0, 129)
    nodes = radius * np.stack([np.cos(t), np.sin(t)], axis=1)
    geom = ef.compute_geometry(ef.DiscreteCurve(nodes), 2)
    v = ef.normal_velocity(geom, mu)
    assert np.abs(v[4:-4]).max() < 2e-3


def test_normal_velocity_semicircle_mu2():
    geom = ef.compute_geometry(ef.semicircle(1.0, 256), 2)
    v = ef.normal_velocity(geom, 2.0)
    assert np.abs(v[4:-4] - 1.0).max() < 1e-3


def test_missing_derivative_order():
    geom = ef.compute_geometry(ef.segment(2.0, 64), 1)
    with pytest.raises(MissingDerivativeOrder):
        ef.normal_velocity(geom, 1.0)
    with pytest.raises(MissingDerivativeOrder):
        ef.curvature_norm(geom, 2)


def test_dissipation():
    seg = ef.compute_geometry(ef.segment(2.0, 64), 2)
    assert ef.dissipation(seg, 0.7) == pytest.approx(0.0, abs=1e-20)
    geom = ef.compute_geometry(ef.sine_arch(0.1, 1.0, 512), 2)
    d = ef.dissipation(geom, 1.0)
    assert d > 0.0
    assert abs(d - ARCH_DISSIPATION_MU1) / ARCH_DISSIPATION_MU1 < 1e-3


def test_curvature_norms():
    semi = ef.compute_geometry(ef.semicircle(1.0, 256), 1)
    assert ef.curvature_norm(semi, 0) == pytest.approx(np.sqrt(np.pi), abs=1e-3)
    assert ef.curvature_norm(semi, 1) < 1e-3  # constant curvature
    arch = ef.compute_geometry(ef.sine_arch(0.1, 1.0, 512), 2)
    n2 = ef.curvature_norm(arch, 2)
    assert abs(n2 - ARCH_NORM_DS2K) / ARCH_NORM_DS2K < 1e-2


def test_scaling_law():
    # dilation by lam: bending -> bending/lam, length -> lam length
    lam = 1.7
    small = ef.elastic_energy(ef.semicircle(1.0, 400), 1.0)
    big = ef.elastic_energy(ef.semicircle(lam, 400), 1.0)
    assert big.bending == pytest.approx(small.bending / lam, rel=1e-4)
    assert big.length == pytest.approx(small.length * lam, rel=1e-6)


def test_energy_invalid_mu():
    with pytest.raises(ValueError):
        ef.elastic_energy(ef.segment(2.0, 64), -1.0)
