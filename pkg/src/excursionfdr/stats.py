"""Per-location t-statistics and one-sided p-values.

Given a sample stack, each location gets a one-sample t-statistic against
a level c, and from it two one-sided p-values: an upper p-value that is
small where the mean credibly exceeds c, and a lower p-value that is small
where the mean credibly falls below c.  The two are exact complements by
construction, which the joint region procedure relies on.

The Student-t CDF is evaluated through the regularized incomplete beta
function, implemented here as a continued fraction so the accuracy and
failure behavior are pinned down rather than inherited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .lattice import SampleStack, ScalarField

__all__ = [
    "ConvergenceError",
    "PValueField",
    "sample_moments",
    "t_statistic_field",
    "regularized_incomplete_beta",
    "student_t_cdf",
    "upper_p_field",
    "lower_p_field",
]

# Continued-fraction controls.  EPS is the per-step relative stopping
# criterion, FPMIN guards against division by zero in the Lentz recurrence.
_EPS = 1e-15
_FPMIN = 1e-300
_MAX_ITER = 300


class ConvergenceError(ArithmeticError):
    """Continued-fraction evaluation failed to converge within the iteration cap."""


@dataclass(frozen=True)
class PValueField:
    """A ScalarField of p-values in [0,1] tagged with its test direction."""

    field: ScalarField
    direction: Literal["upper", "lower"]

    def __post_init__(self):
        if self.direction not in ("upper", "lower"):
            raise ValueError(f"direction must be 'upper' or 'lower', got {self.direction!r}")
        values = self.field.values[self.field.inside]
        if values.size and ((values < 0.0) | (values > 1.0)).any():
            raise ValueError("p-values outside [0, 1] at in-mask locations")

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def sample_moments(stack: SampleStack) -> tuple[ScalarField, ScalarField]:
    """Per-location sample mean and unbiased (n-1 denominator) standard deviation."""
    mean = stack.samples.mean(axis=0)
    sd = stack.samples.std(axis=0, ddof=1)
    return (
        ScalarField(stack.shape, mean, stack.mask),
        ScalarField(stack.shape, sd, stack.mask),
    )


def t_statistic_field(stack: SampleStack, c: float) -> tuple[ScalarField, float]:
    """One-sample t-statistic against the level c at every location.

    Returns the t-field together with the degrees of freedom n - 1.

    Where the sample standard deviation is exactly zero the statistic is
    assigned its signed limit: +inf if the mean exceeds c, -inf if it
    falls below, and 0 on equality.  This keeps downstream p-values
    well defined for constant data.
    """
    mean_field, sd_field = sample_moments(stack)
    mean = mean_field.values
    sd = sd_field.values
    diff = mean - c
    root_n = math.sqrt(stack.n)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = diff * root_n / sd
    zero_sd = sd == 0.0
    if zero_sd.any():
        t = np.where(zero_sd & (diff > 0), np.inf, t)
        t = np.where(zero_sd & (diff < 0), -np.inf, t)
        t = np.where(zero_sd & (diff == 0), 0.0, t)
    return ScalarField(stack.shape, t, stack.mask), float(stack.n - 1)


def _beta_continued_fraction(a: float, b: float, x: np.ndarray, max_iter: int) -> np.ndarray:
    """Lentz evaluation of the continued fraction in the incomplete beta integral.

    Converges rapidly only for x below (a+1)/(a+b+2); the caller is
    responsible for routing other arguments through the symmetry relation.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0

    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    np.copyto(d, _FPMIN, where=np.abs(d) < _FPMIN)
    d = 1.0 / d
    h = d.copy()

    active = np.ones(x.shape, dtype=bool)
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d_new = 1.0 + aa * d
        np.copyto(d_new, _FPMIN, where=np.abs(d_new) < _FPMIN)
        c_new = 1.0 + aa / c
        np.copyto(c_new, _FPMIN, where=np.abs(c_new) < _FPMIN)
        d_new = 1.0 / d_new
        h_new = h * d_new * c_new
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d_new2 = 1.0 + aa * d_new
        np.copyto(d_new2, _FPMIN, where=np.abs(d_new2) < _FPMIN)
        c_new2 = 1.0 + aa / c_new
        np.copyto(c_new2, _FPMIN, where=np.abs(c_new2) < _FPMIN)
        d_new2 = 1.0 / d_new2
        delta = d_new2 * c_new2

        d = np.where(active, d_new2, d)
        c = np.where(active, c_new2, c)
        h = np.where(active, h_new * delta, h)
        active = active & (np.abs(delta - 1.0) >= _EPS)
        if not active.any():
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge within {max_iter} "
        f"iterations for a={a}, b={b}"
    )


def _beta_tail(a: float, b: float, x: np.ndarray, max_iter: int) -> np.ndarray:
    # front factor x^a (1-x)^b / (a B(a,b)), computed in log space
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * np.log(x)
        + b * np.log1p(-x)
    )
    return np.exp(log_front) * _beta_continued_fraction(a, b, x, max_iter) / a


def regularized_incomplete_beta(a: float, b: float, x, *, max_iter: int = _MAX_ITER):
    """Regularized incomplete beta function I_x(a, b).

    Parameters
    ----------
    a, b : float
        Positive shape parameters.
    x : float or ndarray
        Evaluation points in [0, 1].  NaN entries propagate to NaN.

    Notes
    -----
    Evaluated by continued fraction on whichever side of the split point
    (a+1)/(a+b+2) converges quickly, using I_x(a,b) = 1 - I_{1-x}(b,a)
    for the other side.  Raises :class:`ConvergenceError` if the fraction
    has not settled after ``max_iter`` steps; with the default cap this
    does not happen for the moderate shape parameters used here.
    """
    a = float(a)
    b = float(b)
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    x_arr = np.asarray(x, dtype=np.float64)
    scalar = x_arr.ndim == 0
    x_flat = np.atleast_1d(x_arr).copy()
    if ((x_flat < 0.0) | (x_flat > 1.0)).any():
        raise ValueError("x outside [0, 1]")

    out = np.empty_like(x_flat)
    nan = np.isnan(x_flat)
    out[nan] = np.nan
    out[x_flat == 0.0] = 0.0
    out[x_flat == 1.0] = 1.0

    interior = ~nan & (x_flat > 0.0) & (x_flat < 1.0)
    split = (a + 1.0) / (a + b + 2.0)
    direct = interior & (x_flat < split)
    swapped = interior & ~direct
    if direct.any():
        out[direct] = _beta_tail(a, b, x_flat[direct], max_iter)
    if swapped.any():
        out[swapped] = 1.0 - _beta_tail(b, a, 1.0 - x_flat[swapped], max_iter)

    if scalar:
        return float(out[0])
    return out.reshape(x_arr.shape)


def student_t_cdf(t, nu: float):
    """CDF of the Student t distribution with nu degrees of freedom.

    Accepts scalars or arrays; +inf and -inf map to 1 and 0, NaN
    propagates.  Uses I_x(nu/2, 1/2) with x = nu / (nu + t^2), split by
    the sign of t.
    """
    nu = float(nu)
    if not nu > 0.0:
        raise ValueError(f"degrees of freedom must be positive, got {nu}")
    t_arr = np.asarray(t, dtype=np.float64)
    scalar = t_arr.ndim == 0
    t_flat = np.atleast_1d(t_arr)
    with np.errstate(invalid="ignore"):
        x = nu / (nu + t_flat * t_flat)
    tail_half = regularized_incomplete_beta(nu / 2.0, 0.5, x) / 2.0
    cdf = np.where(t_flat >= 0.0, 1.0 - tail_half, tail_half)
    cdf = np.where(np.isnan(t_flat), np.nan, cdf)
    if scalar:
        return float(cdf[0])
    return cdf.reshape(t_arr.shape)


def upper_p_field(t: ScalarField, nu: float) -> PValueField:
    """One-sided p-values for evidence that the mean exceeds the level.

    p(v) = 1 - F(t(v)); small where t is large and positive.
    """
    p = 1.0 - student_t_cdf(t.values, nu)
    return PValueField(ScalarField(t.shape, p, t.mask), "upper")


def lower_p_field(t: ScalarField, nu: float) -> PValueField:
    """One-sided p-values for evidence that the mean falls below the level.

    Defined as the exact complement 1 - p_upper(v) rather than evaluated
    independently, so the pair always sums to one.
    """
    upper = upper_p_field(t, nu)
    p = 1.0 - upper.field.values
    return PValueField(ScalarField(t.shape, p, t.mask), "lower")
