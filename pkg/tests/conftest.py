"""Shared fixtures: oracle curves and expensive session-scoped runs.

The teardrop is the unique nontrivial critical shape of the mu=1 energy
with the natural boundary conditions on the axis.  It is constructed here
by an independent shooting method on the critical-point ODE system (NOT
through the package's discrete operators), so it doubles as an oracle:
2 k'' + k^3 - mu k = 0 integrated from k(0) = 0 with the third-order
condition fixing k'(0) = -mu cos(theta0) / (2 sin(theta0)); matching
y(L) = 0 at the first curvature zero pins theta0 and the length.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

import elasticflow as ef


def _shoot(theta0, mu=1.0, smax=20.0):
    kp0 = -mu * np.cos(theta0) / (2.0 * np.sin(theta0))

    def rhs(s, u):
        x, y, th, k, kp = u
        return [np.cos(th), np.sin(th), k, kp, (mu * k - k**3) / 2.0]

    return solve_ivp(rhs, [0.0, smax], [0.0, 0.0, theta0, 0.0, kp0],
                     rtol=1e-12, atol=1e-14, dense_output=True)


def _first_curvature_zero(theta0):
    sol = _shoot(theta0)
    grid = np.linspace(1e-3, 20.0, 40000)
    k = sol.sol(grid)[3]
    idx = np.nonzero(np.diff(np.sign(k)) != 0)[0][0]
    zero = brentq(lambda s: sol.sol(s)[3], grid[idx], grid[idx + 1], xtol=1e-14)
    return sol, zero


@pytest.fixture(scope="session")
def teardrop_solution():
    theta0 = brentq(
        lambda t: _first_curvature_zero(t)[0].sol(_first_curvature_zero(t)[1])[1],
        0.65, 0.8, xtol=1e-13,
    )
    sol, length = _first_curvature_zero(theta0)
    return {"theta0": theta0, "length": length, "sol": sol}


@pytest.fixture(scope="session")
def teardrop_curve(teardrop_solution):
    def build(n):
        s = np.linspace(0.0, teardrop_solution["length"], n + 1)
        nodes = teardrop_solution["sol"].sol(s)[:2].T.copy()
        nodes[:, 1] -= nodes[0, 1]
        nodes[0, 1] = 0.0
        nodes[-1, 1] = 0.0
        return ef.DiscreteCurve(nodes)

    return build


@pytest.fixture(scope="session")
def refined_teardrop(teardrop_curve):
    cache = {}

    def build(n):
        if n not in cache:
            refined, report = ef.newton_refine(teardrop_curve(n), 1.0, max_iter=25, tol=1e-9)
            cache[n] = (refined, report)
        return cache[n]

    return build


@pytest.fixture(scope="session")
def prepared_arch():
    cache = {}

    def build(n=128, amplitude=0.1, mu=1.0):
        key = (n, amplitude, mu)
        if key not in cache:
            cache[key] = ef.prepare_initial(ef.sine_arch(amplitude, 1.0, n), mu)
        return cache[key]

    return build


@pytest.fixture(scope="session")
def relaxation_datum(refined_teardrop):
    """Perturbed teardrop after a short settling phase: the gentle, fully
    resolved relaxation trajectory used by the identity studies."""
    from elasticflow.flow import FlowConfig, FlowState, step_semi_implicit

    cache = {}

    def build(n):
        if n not in cache:
            base, _ = refined_teardrop(n)
            x = base.x
            psi = np.stack(
                [0.3 * np.sin(np.pi * x) * np.cos(2 * np.pi * x),
                 0.25 * np.sin(2 * np.pi * x)], axis=1,
            )
            state = FlowState(0.0, ef.DiscreteCurve(base.nodes + 0.08 * psi), 0)
            config = FlowConfig(mu=1.0, n_grid=n, dt=1e-5, t_max=1.0, rho_min=0.05)
            for _ in range(150):
                state = step_semi_implicit(state, config)
            cache[n] = ef.DiscreteCurve(state.curve.nodes)
        return cache[n]

    return build
