"""Estimator-style facade so the solver composes with the sklearn ecosystem.

The numerical core is functional; these wrappers hold configuration as
constructor parameters (get_params/set_params/clone all work) and expose
results as fitted attributes.  Curves are passed as (N+1, 2) node arrays
or DiscreteCurve instances; validation goes through check_nodes.
"""

from sklearn.base import BaseEstimator, TransformerMixin

from .admissibility import prepare_initial
from .elastica import newton_refine
from .flow import FlowConfig, run_flow
from .geometry import DiscreteCurve, reparametrize_constant_speed
from .validation import check_nodes


class ConstantSpeedReparametrizer(TransformerMixin, BaseEstimator):
    """Stateless transformer resampling curves to uniform chord speed."""

    def __init__(self, rel_tol=1e-10):
        self.rel_tol = rel_tol

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        curve = DiscreteCurve(check_nodes(X))
        return reparametrize_constant_speed(curve, rel_tol=self.rel_tol).nodes


class ElasticFlow(BaseEstimator):
    """Run the gradient flow from an initial curve.

    Fitted attributes: ``result_`` (the full FlowResult), ``termination_``,
    ``final_curve_`` (node array), ``records_`` and ``n_steps_``.
    """

    def __init__(self, mu=1.0, dt=1e-5, scheme="semi_implicit", t_max=1.0,
                 velocity_mode="deturck", rho_min=0.05, length_min=0.05,
                 el_tol=1e-4, bc_tol=1e-6, c_stab=0.1, prepare=True,
                 override_admissibility=False, record_every=1, with_ds6=False):
        self.mu = mu
        self.dt = dt
        self.scheme = scheme
        self.t_max = t_max
        self.velocity_mode = velocity_mode
        self.rho_min = rho_min
        self.length_min = length_min
        self.el_tol = el_tol
        self.bc_tol = bc_tol
        self.c_stab = c_stab
        self.prepare = prepare
        self.override_admissibility = override_admissibility
        self.record_every = record_every
        self.with_ds6 = with_ds6

    def _config(self, n_grid):
        return FlowConfig(
            mu=self.mu, n_grid=n_grid, dt=self.dt, scheme=self.scheme,
            t_max=self.t_max, velocity_mode=self.velocity_mode,
            rho_min=self.rho_min, length_min=self.length_min,
            el_tol=self.el_tol, bc_tol=self.bc_tol, c_stab=self.c_stab,
        )

    def fit(self, X, y=None):
        curve = DiscreteCurve(check_nodes(X))
        if self.prepare:
            curve = prepare_initial(curve, self.mu, rho=self.rho_min)
        result = run_flow(
            curve, self._config(curve.n),
            override_admissibility=self.override_admissibility,
            record_every=self.record_every,
            with_ds6=self.with_ds6,
        )
        self.result_ = result
        self.termination_ = result.reason
        self.final_curve_ = result.final_state.curve.nodes
        self.records_ = result.records
        self.n_steps_ = result.final_state.step_index
        return self


class ElasticaRefiner(BaseEstimator):
    """Newton refinement of a near-critical curve to a discrete elastica.

    Fitted attributes: ``curve_`` (refined node array) and ``report_``.
    """

    def __init__(self, mu=1.0, max_iter=20, tol=1e-10):
        self.mu = mu
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        curve = DiscreteCurve(check_nodes(X))
        refined, report = newton_refine(curve, self.mu, max_iter=self.max_iter, tol=self.tol)
        self.curve_ = refined.nodes
        self.report_ = report
        return self
