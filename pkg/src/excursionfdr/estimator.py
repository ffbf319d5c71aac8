"""Scikit-learn style front end.

``ExcursionRegions`` wraps the region constructors in a fit/predict
interface: X is an (n_samples, *lattice_dims) array of repeated noisy
observations of one image, and fitting produces inner and outer
confidence regions for the set of locations whose mean exceeds ``c``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_alpha, check_level, check_mask_array, check_stack_array
from .lattice import SampleStack
from .regions import joint_cr, lower_cr, upper_cr
from .stats import t_statistic_field, upper_p_field

__all__ = ["ExcursionRegions"]

_METHODS = ("joint", "separate-bh", "separate-adaptive")


class ExcursionRegions(BaseEstimator):
    """Simultaneous inner/outer confidence regions for an excursion set.

    Parameters
    ----------
    c : float, default=0.0
        Excursion level. The target is the set of locations where the
        true mean exceeds c.
    alpha : float, default=0.05
        Error budget. Both the upper (inner) and lower (outer) regions
        carry false-coverage control at this level.
    method : {"joint", "separate-bh", "separate-adaptive"}, default="joint"
        "joint" runs a single step-up pass over both tails at 2*alpha
        (see double_joint_alpha); the "separate-*" variants run the two
        tails independently at alpha each, with either plain or
        two-stage adaptive weighting on the lower side.
    double_joint_alpha : bool, default=True
        Only read when method="joint". When False the pooled pass runs
        at alpha itself instead of 2*alpha.
    adaptive : AdaptiveConfig or None, default=None
        Tuning for the two-stage lower procedure; only read when
        method="separate-adaptive".

    Attributes
    ----------
    upper_ : ndarray of bool
        Inner region: locations confidently above c.
    lower_ : ndarray of bool
        Outer region: superset of the excursion set, so its complement
        is confidently at-or-below c.
    point_estimate_ : ndarray of bool
        Plug-in excursion set of the sample mean.
    labels_ : ndarray of int8
        +1 inside upper_, -1 outside lower_, 0 in the uncertain band
        (and at masked-out locations).
    t_ : ndarray of float
        Per-location t statistics against c.
    dof_ : float
        Degrees of freedom (n_samples - 1).
    n_samples_ : int
        Number of observations seen by fit.
    threshold_upper_, threshold_lower_ : float
        Realized step-up p-value cutoffs for the two sides (equal when
        method="joint").
    """

    def __init__(
        self,
        c: float = 0.0,
        alpha: float = 0.05,
        method: str = "joint",
        double_joint_alpha: bool = True,
        adaptive=None,
    ):
        self.c = c
        self.alpha = alpha
        self.method = method
        self.double_joint_alpha = double_joint_alpha
        self.adaptive = adaptive

    def fit(self, X, y=None, *, mask=None):
        """Fit confidence regions to a stack of repeated observations.

        Parameters
        ----------
        X : array-like of shape (n_samples, *lattice_dims)
            Repeated observations of one image; 1 to 3 lattice axes.
        y : ignored
            Present for interface compatibility.
        mask : array-like of bool, optional
            Analysis mask over the lattice; locations outside it take
            no part in inference and get label 0.
        """
        c = check_level(self.c)
        alpha = check_alpha(self.alpha)
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")

        arr = check_stack_array(X)
        mask_arr = check_mask_array(mask, arr.shape[1:])
        stack = SampleStack.from_array(arr, mask=mask_arr)

        t_field, nu = t_statistic_field(stack, c)
        p_upper = upper_p_field(t_field, nu)

        if self.method == "joint":
            alpha_eff = 2.0 * alpha if self.double_joint_alpha else alpha
            if not alpha_eff < 1.0:
                raise ValueError(
                    f"effective joint level {alpha_eff} must be below 1; lower alpha "
                    f"or set double_joint_alpha=False"
                )
            fit = joint_cr(t_field, nu, c, alpha_eff, p_upper=p_upper)
            upper, lower = fit.upper, fit.lower
            thr_upper = thr_lower = fit.stepup.threshold
            point = fit.point_estimate
        else:
            up = upper_cr(t_field, nu, c, alpha, p_upper=p_upper)
            procedure = "adaptive" if self.method == "separate-adaptive" else "bh"
            low = lower_cr(
                t_field, nu, c, alpha, procedure, adaptive=self.adaptive, p_upper=p_upper
            )
            upper, lower = up.upper, low.lower
            thr_upper, thr_lower = up.stepup.threshold, low.stepup.threshold
            point = up.point_estimate

        labels = np.zeros(stack.shape.dims, dtype=np.int8)
        labels[upper.member] = 1
        inside = np.ones(stack.shape.dims, dtype=bool) if stack.mask is None else stack.mask.inside
        labels[inside & ~lower.member] = -1

        self.upper_ = upper.member
        self.lower_ = lower.member
        self.point_estimate_ = point.member
        self.labels_ = labels
        self.t_ = t_field.values
        self.dof_ = nu
        self.n_samples_ = stack.n
        self.threshold_upper_ = thr_upper
        self.threshold_lower_ = thr_lower
        self.mask_ = None if stack.mask is None else stack.mask.inside
        return self

    def fit_predict(self, X, y=None, *, mask=None):
        """Fit and return the per-location labels (+1 / 0 / -1)."""
        return self.fit(X, y, mask=mask).labels_

    def _more_tags(self):
        return {"requires_y": False}
