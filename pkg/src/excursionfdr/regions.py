"""Confidence regions for excursion sets, with FDR-style error accounting.

Three constructions over a shared t-field:

* an upper region of locations confidently above the level, from a
  step-up over the upper one-sided p-values;
* a lower region of locations not confidently below it, the complement
  of a step-up's rejections over the lower one-sided p-values (plain or
  two-stage adaptive);
* a joint pair from a single step-up over all 2m one-sided p-values,
  which lets both directions share one error budget.

`error_proportions` turns a fitted region pair plus the true mean field
into realized false-discovery and false-non-discovery proportions, using
the max(denominator, 1) floor so empty denominators score zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .lattice import (
    RegionSet,
    ScalarField,
    SampleStack,
    excursion_set,
    set_cardinalities,
)
from .multitest import AdaptiveConfig, StepUpResult, bh_step_up, two_stage_adaptive
from .stats import PValueField, t_statistic_field, upper_p_field

__all__ = [
    "Method",
    "ConfidenceRegions",
    "ErrorProportions",
    "upper_cr",
    "lower_cr",
    "joint_cr",
    "point_estimate_set",
    "from_sample_stack",
    "error_proportions",
    "proportions_from_sets",
]


class Method(Enum):
    """The four region constructions compared in the simulation harness."""

    UPPER_BH = "upper-bh"
    LOWER_BH = "lower-bh"
    LOWER_ADAPTIVE = "lower-adaptive"
    JOINT_BH = "joint"

    @classmethod
    def from_string(cls, name: str) -> "Method":
        for method in cls:
            if method.value == name:
                return method
        known = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown method {name!r} (known: {known})")


@dataclass(frozen=True)
class ConfidenceRegions:
    """A fitted region pair at one level c.

    `upper` and `lower` are None for the side a single-direction method
    does not construct.  `stepup` is the outcome of the procedure that
    produced the fitted side(s); for the joint method it is the single
    run over both directions' p-values.
    """

    c: float
    alpha: float
    method: Method
    upper: RegionSet | None
    lower: RegionSet | None
    point_estimate: RegionSet
    stepup: StepUpResult

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.method is Method.UPPER_BH and self.upper is None:
            raise ValueError("upper-bh regions must carry an upper set")
        if self.method in (Method.LOWER_BH, Method.LOWER_ADAPTIVE) and self.lower is None:
            raise ValueError("lower regions must carry a lower set")
        if self.method is Method.JOINT_BH and (self.upper is None or self.lower is None):
            raise ValueError("joint regions must carry both sets")

    @property
    def thresholds(self) -> dict[str, float]:
        """Realized rejection threshold per fitted direction."""
        out = {}
        if self.upper is not None:
            out["upper"] = self.stepup.threshold
        if self.lower is not None:
            out["lower"] = self.stepup.threshold
        return out


@dataclass(frozen=True)
class ErrorProportions:
    """Realized error proportions with their raw counts.

    `discoveries` and `nondiscoveries` are the denominators before the
    max(., 1) floor; fdp and fndp are 0 when the respective count is 0.
    """

    fdp: float
    fndp: float
    false_discoveries: int
    discoveries: int
    false_nondiscoveries: int
    nondiscoveries: int


def _check_nested(regions: ConfidenceRegions) -> None:
    # Provable whenever the realized threshold is below 1/2 (always the
    # case at practical levels); a violation means an implementation bug.
    if regions.stepup.threshold >= 0.5:
        return
    point = regions.point_estimate
    if regions.upper is not None and not regions.upper.is_subset_of(point):
        raise RuntimeError("internal invariant violated: upper region not inside point estimate")
    if regions.lower is not None and not point.is_subset_of(regions.lower):
        raise RuntimeError("internal invariant violated: point estimate not inside lower region")


def _prepare_p_upper(
    t: ScalarField, nu: float, p_upper: PValueField | None
) -> PValueField:
    if p_upper is None:
        return upper_p_field(t, nu)
    if p_upper.direction != "upper":
        raise ValueError("p_upper must be an upper-direction p-value field")
    if p_upper.field.shape != t.shape:
        raise ValueError("p_upper and t lattices differ")
    return p_upper


def _lift(t: ScalarField, member_flat: np.ndarray, inside: np.ndarray) -> RegionSet:
    member = np.zeros(t.shape.dims, dtype=bool)
    member[inside] = member_flat
    return RegionSet(t.shape, member, t.mask)


def point_estimate_set(mean: ScalarField, c: float) -> RegionSet:
    """Locations where the sample mean exceeds c (the plug-in region)."""
    return excursion_set(mean, c, strict=True)


def upper_cr(
    t: ScalarField,
    nu: float,
    c: float,
    alpha: float,
    *,
    p_upper: PValueField | None = None,
) -> ConfidenceRegions:
    """Region of locations confidently above c, at FDR level alpha.

    Runs the linear step-up over the upper one-sided p-values; the
    region is the set of rejected locations.  `p_upper` may carry a
    precomputed p-value field for t so repeated constructions over one
    t-field share the CDF work.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    p_u = _prepare_p_upper(t, nu, p_upper)
    inside = t.inside
    result = bh_step_up(p_u.values[inside], alpha)
    regions = ConfidenceRegions(
        c=float(c),
        alpha=float(alpha),
        method=Method.UPPER_BH,
        upper=_lift(t, result.rejected, inside),
        lower=None,
        point_estimate=excursion_set(t, 0.0, strict=True),
        stepup=result,
    )
    _check_nested(regions)
    return regions


def lower_cr(
    t: ScalarField,
    nu: float,
    c: float,
    alpha: float,
    procedure: str = "bh",
    *,
    adaptive: AdaptiveConfig | None = None,
    p_upper: PValueField | None = None,
) -> ConfidenceRegions:
    """Region of locations not confidently below c, at FDR level alpha.

    The step-up (``procedure="bh"`` or ``"adaptive"`` for the two-stage
    variant) rejects locations with evidence of lying below c; the
    region is the complement of those rejections, so it shrinks as
    evidence accumulates.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if procedure not in ("bh", "adaptive"):
        raise ValueError(f"procedure must be 'bh' or 'adaptive', got {procedure!r}")
    p_u = _prepare_p_upper(t, nu, p_upper)
    inside = t.inside
    p_low = 1.0 - p_u.values[inside]
    if procedure == "bh":
        result = bh_step_up(p_low, alpha)
        method = Method.LOWER_BH
    else:
        result = two_stage_adaptive(p_low, alpha, adaptive)
        method = Method.LOWER_ADAPTIVE
    rejected = _lift(t, result.rejected, inside)
    regions = ConfidenceRegions(
        c=float(c),
        alpha=float(alpha),
        method=method,
        upper=None,
        lower=rejected.complement(),
        point_estimate=excursion_set(t, 0.0, strict=True),
        stepup=result,
    )
    _check_nested(regions)
    return regions


def joint_cr(
    t: ScalarField,
    nu: float,
    c: float,
    alpha_effective: float,
    *,
    p_upper: PValueField | None = None,
) -> ConfidenceRegions:
    """Upper and lower regions from one step-up over both directions.

    The 2m p-values (lower block first, then upper) enter a single
    linear step-up at alpha_effective, and the shared threshold cuts
    both regions.  Because each location's two p-values sum to one, at
    most one direction rejects any location at practical levels.  A
    caller targeting a nominal per-direction level alpha passes
    alpha_effective = 2 * alpha; the API keeps that doubling explicit.
    """
    if not 0.0 < alpha_effective < 1.0:
        raise ValueError(f"alpha_effective must lie in (0, 1), got {alpha_effective}")
    p_u = _prepare_p_upper(t, nu, p_upper)
    inside = t.inside
    p_up = p_u.values[inside]
    p_low = 1.0 - p_up
    combined = np.concatenate([p_low, p_up])
    result = bh_step_up(combined, alpha_effective)
    m = p_up.size
    lower_rejected = _lift(t, result.rejected[:m], inside)
    upper_region = _lift(t, result.rejected[m:], inside)
    regions = ConfidenceRegions(
        c=float(c),
        alpha=float(alpha_effective),
        method=Method.JOINT_BH,
        upper=upper_region,
        lower=lower_rejected.complement(),
        point_estimate=excursion_set(t, 0.0, strict=True),
        stepup=result,
    )
    _check_nested(regions)
    return regions


def from_sample_stack(
    stack: SampleStack,
    c: float,
    alpha: float,
    method: Method,
    *,
    adaptive: AdaptiveConfig | None = None,
    joint_doubling: bool = True,
) -> ConfidenceRegions:
    """Fit one method's regions straight from a sample stack.

    For the joint method the procedure runs at 2*alpha (the doubling
    convention) unless ``joint_doubling`` is off, in which case alpha is
    used as the effective level directly.
    """
    t, nu = t_statistic_field(stack, c)
    if method is Method.UPPER_BH:
        return upper_cr(t, nu, c, alpha)
    if method is Method.LOWER_BH:
        return lower_cr(t, nu, c, alpha, "bh")
    if method is Method.LOWER_ADAPTIVE:
        return lower_cr(t, nu, c, alpha, "adaptive", adaptive=adaptive)
    if method is Method.JOINT_BH:
        alpha_effective = 2.0 * alpha if joint_doubling else alpha
        if not alpha_effective < 1.0:
            raise ValueError(f"effective joint level {alpha_effective} must be below 1")
        return joint_cr(t, nu, c, alpha_effective)
    raise ValueError(f"unknown method {method!r}")


def proportions_from_sets(
    method: Method,
    truth_mu: ScalarField,
    c: float,
    upper: RegionSet | None,
    lower: RegionSet | None,
) -> ErrorProportions:
    """Error proportions from raw region sets (see `error_proportions`)."""
    truth_open = excursion_set(truth_mu, c, strict=True)
    truth_closed = excursion_set(truth_mu, c, strict=False)

    fd = 0
    disc = 0
    fnd = 0
    nondisc = 0
    if method in (Method.UPPER_BH, Method.JOINT_BH):
        if upper is None:
            raise ValueError(f"{method.value} scoring needs an upper region")
        cards = set_cardinalities(upper, truth_open)
        fd += cards.a_only
        disc += cards.a_total
        fnd += cards.b_only
        nondisc += upper.complement().count
    if method in (Method.LOWER_BH, Method.LOWER_ADAPTIVE, Method.JOINT_BH):
        if lower is None:
            raise ValueError(f"{method.value} scoring needs a lower region")
        lower_c = lower.complement()
        cards = set_cardinalities(truth_closed, lower_c)
        # closed truth outside the lower region = lower-side false discovery
        fd += cards.both
        disc += lower_c.count
        fnd += set_cardinalities(lower, truth_closed).a_only
        nondisc += lower.count

    return ErrorProportions(
        fdp=fd / max(disc, 1),
        fndp=fnd / max(nondisc, 1),
        false_discoveries=fd,
        discoveries=disc,
        false_nondiscoveries=fnd,
        nondiscoveries=nondisc,
    )


def error_proportions(
    method: Method, truth_mu: ScalarField, regions: ConfidenceRegions
) -> ErrorProportions:
    """Realized false-discovery and false-non-discovery proportions.

    The truth field defines the open excursion set (for the upper
    direction) and its closure (for the lower direction) at regions.c.
    Upper errors are rejections outside the open set over all
    rejections; lower errors are closed-set locations pushed out of the
    lower region over all such exclusions; the joint variant pools the
    two numerators and denominators.  Denominators take the max(., 1)
    floor, so a direction with no discoveries (or no non-discoveries)
    contributes zero.
    """
    if method is not regions.method:
        raise ValueError(
            f"method tag {method.value!r} does not match regions built as "
            f"{regions.method.value!r}"
        )
    if truth_mu.shape != regions.point_estimate.shape:
        raise ValueError("truth field and regions lattices differ")
    return proportions_from_sets(method, truth_mu, regions.c, regions.upper, regions.lower)
