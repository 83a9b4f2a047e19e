"""scikit-learn estimator wrapping the selection solvers.

Data follows the usual (n_samples, n_features) orientation: one row per
snapshot, one column per candidate sensor location. ``fit`` builds a POD
basis from the snapshots, optimizes which columns to keep, and exposes the
result through the standard feature-selection interface, so the selector
drops into sklearn pipelines.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .baselines import greedy_select, random_select
from .objective import d_optimality
from .problems import center_snapshots, pod_basis
from .rng import substream
from .solvers import SolverConfig, solve

__all__ = ["SensorSelector"]

_METHODS = ("full", "rsn", "crsn", "greedy", "random")


class SensorSelector(SelectorMixin, BaseEstimator):
    """Select sensor locations (columns) that maximize D-optimality.

    Fits a truncated POD basis to the training snapshots and picks the
    ``n_sensors`` columns whose rows of the basis carry the most Fisher
    information, using one of the convex solvers or a baseline rule.

    Parameters
    ----------
    n_sensors : int, default=10
        Number of columns to keep.
    n_modes : int or None, default=None
        POD truncation rank. None uses min(n_samples, n_features, n_sensors).
    method : {"full", "rsn", "crsn", "greedy", "random"}, default="crsn"
        "full" is the dense relaxed Newton solve, "rsn" its randomized
        subspace variant, "crsn" the elite-biased variant; "greedy" and
        "random" are the reference baselines.
    kappa : float, default=1e-4
        Barrier weight of the relaxed objective.
    epsilon : float, default=1e-6
        Newton decrement tolerance.
    sketch_size : int or None, default=None
        Subspace size for rsn/crsn; None means n_features // 10.
    rho : float, default=0.5
        Elite fraction of the sketch for crsn.
    max_steps : int, default=10000
    center : bool, default=False
        Subtract the temporal mean of each sensor before the POD.
    random_state : int or None, default=None
        Root seed for all solver randomness; None behaves as 0.

    Attributes
    ----------
    basis_ : ndarray of shape (n_features, n_modes)
        POD basis, one row per candidate sensor.
    support_ : bool ndarray of shape (n_features,)
        Mask of selected columns.
    selection_ : int ndarray of shape (n_sensors,)
        Selected column indices, ascending.
    weights_ : ndarray of shape (n_features,) or None
        Relaxed solver weights (None for the baselines).
    objective_value_ : float
        d_optimality of the selected rows of ``basis_``.
    report_ : SolverReport or None
        Full solver report for the convex methods.

    Examples
    --------
    >>> import numpy as np
    >>> from sensorselect import SensorSelector
    >>> X = np.random.default_rng(0).normal(size=(40, 120))
    >>> picker = SensorSelector(n_sensors=12, method="full", random_state=0).fit(X)
    >>> X_sparse = picker.transform(X)
    >>> X_sparse.shape
    (40, 12)
    """

    def __init__(
        self,
        n_sensors=10,
        n_modes=None,
        method="crsn",
        kappa=1e-4,
        epsilon=1e-6,
        sketch_size=None,
        rho=0.5,
        max_steps=10_000,
        center=False,
        random_state=None,
    ):
        self.n_sensors = n_sensors
        self.n_modes = n_modes
        self.method = method
        self.kappa = kappa
        self.epsilon = epsilon
        self.sketch_size = sketch_size
        self.rho = rho
        self.max_steps = max_steps
        self.center = center
        self.random_state = random_state

    def fit(self, X, y=None):
        """Choose sensor columns from snapshot rows."""
        X = check_array(X, dtype=np.float64, ensure_min_samples=1, ensure_min_features=2)
        n_samples, n_features = X.shape
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        p = int(self.n_sensors)
        if not 1 <= p <= n_features:
            raise ValueError(f"n_sensors must lie in [1, {n_features}], got {p}")
        rank = self.n_modes if self.n_modes is not None else min(n_samples, n_features, p)
        snapshots = X.T  # (n_candidates, n_snapshots)
        if self.center:
            snapshots = center_snapshots(snapshots)
        self.basis_ = pod_basis(snapshots, rank)
        seed = 0 if self.random_state is None else int(self.random_state)

        self.weights_ = None
        self.report_ = None
        if self.method in ("full", "rsn", "crsn"):
            config = SolverConfig(
                kappa=self.kappa,
                epsilon=self.epsilon,
                s=self.sketch_size,
                rho=self.rho,
                max_steps=self.max_steps,
                seed=seed,
            )
            report = solve(self.basis_, p, config, mode=self.method)
            self.report_ = report
            self.weights_ = report.weights
            selection = report.selection
        elif self.method == "greedy":
            selection = greedy_select(self.basis_, p)
        else:
            selection = random_select(n_features, p, substream(seed, "random-baseline"))

        self.selection_ = selection
        self.objective_value_ = d_optimality(self.basis_, selection)
        mask = np.zeros(n_features, dtype=bool)
        mask[selection] = True
        self.support_ = mask
        self.n_features_in_ = n_features
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_

    def _more_tags(self):
        return {"requires_y": False}
