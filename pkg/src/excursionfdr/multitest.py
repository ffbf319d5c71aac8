"""Step-up multiple-testing procedures over vectors of p-values.

Implements the linear (Benjamini-Hochberg) step-up, a generic step-up for
arbitrary nondecreasing threshold collections, and a two-stage adaptive
step-up whose second stage inflates thresholds by a multiplier estimated
from the first stage's rejection count.

P-value vectors are plain 1-D arrays; the array position is the stable
original index, and `rejected` in every result aligns with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "StepUpResult",
    "TwoStageResult",
    "AdaptiveConfig",
    "generic_step_up",
    "bh_step_up",
    "f_kappa",
    "two_stage_adaptive",
    "rejected_fraction_multiplier",
    "retained_fraction_multiplier",
]


@dataclass(frozen=True)
class StepUpResult:
    """Outcome of one step-up run.

    k is the largest index (1-based, over sorted p-values) whose order
    statistic sits below its threshold, or 0 when none does.  threshold
    is the k-th smallest p-value (0.0 when k = 0), and rejected flags
    every entry less than or equal to it, so ties with the threshold are
    all rejected and ``rejected.sum() >= k``.
    """

    k: int
    threshold: float
    rejected: np.ndarray

    def __post_init__(self):
        rejected = np.asarray(self.rejected, dtype=bool)
        rejected = rejected.copy()
        rejected.setflags(write=False)
        object.__setattr__(self, "rejected", rejected)

    @property
    def n_rejected(self) -> int:
        return int(self.rejected.sum())


@dataclass(frozen=True)
class TwoStageResult(StepUpResult):
    """Stage-two step-up outcome plus the stage-one diagnostics behind it."""

    stage1_rejections: int = 0
    null_estimate: int = 0
    multiplier: float = 1.0


@dataclass(frozen=True)
class AdaptiveConfig:
    """Settings for the two-stage procedure.

    alpha0 and alpha1 are the stage levels; when left as None they
    default to alpha/4 and alpha/2 at call time.  kappa parametrizes the
    multiplier function and multiplier_cap bounds it where the closed
    form diverges.  A custom multiplier hook, mapping the stage-one
    rejection count and m to the stage-two inflation factor, replaces
    the built-in estimate entirely when given.
    """

    alpha0: float | None = None
    alpha1: float | None = None
    kappa: float = 2.0
    multiplier_cap: float = 1e6
    multiplier: Callable[[int, int], float] | None = None

    def __post_init__(self):
        for name in ("alpha0", "alpha1"):
            value = getattr(self, name)
            if value is not None and not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if not self.kappa > 1.0:
            raise ValueError(f"kappa must exceed 1, got {self.kappa}")
        if not self.multiplier_cap >= 1.0:
            raise ValueError(f"multiplier_cap must be at least 1, got {self.multiplier_cap}")


def _check_pvector(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise ValueError(f"p must be a nonempty 1-D vector, got shape {p.shape}")
    if ((p < 0.0) | (p > 1.0)).any() or np.isnan(p).any():
        raise ValueError("p-values must lie in [0, 1]")
    return p


def generic_step_up(p, thresholds) -> StepUpResult:
    """Step-up procedure for an arbitrary nondecreasing threshold collection.

    Sorts p (stably, so tie order is deterministic), finds the largest k
    with p_(k) <= thresholds[k-1], and rejects every entry at or below
    the k-th smallest p-value.  k = 0 rejects nothing.
    """
    p = _check_pvector(p)
    thr = np.asarray(thresholds, dtype=np.float64)
    if thr.shape != p.shape:
        raise ValueError(f"threshold collection length {thr.size} does not match m={p.size}")
    if ((thr < 0.0) | (thr > 1.0)).any() or np.isnan(thr).any():
        raise ValueError("thresholds must lie in [0, 1]")
    if (np.diff(thr) < 0.0).any():
        raise ValueError("thresholds must be nondecreasing")

    order = np.argsort(p, kind="stable")
    p_sorted = p[order]
    hits = np.nonzero(p_sorted <= thr)[0]
    if hits.size == 0:
        return StepUpResult(k=0, threshold=0.0, rejected=np.zeros(p.size, dtype=bool))
    k = int(hits[-1]) + 1
    p_k = float(p_sorted[k - 1])
    return StepUpResult(k=k, threshold=p_k, rejected=p <= p_k)


def bh_step_up(p, alpha: float) -> StepUpResult:
    """Linear step-up with thresholds alpha * i / m."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    p = _check_pvector(p)
    m = p.size
    # i/m first, so the last threshold is exactly alpha
    thresholds = alpha * (np.arange(1, m + 1) / m)
    return generic_step_up(p, thresholds)


def f_kappa(x: float, kappa: float, *, cap: float = 1e6) -> float:
    """Threshold-inflation multiplier as a function of a rejected fraction x.

    Equal to 1 for x <= 1/kappa; beyond that it is the larger root of
    (1-x) F^2 - F + 1/kappa = 0, so (1-x) * F_kappa(x) <= 1 always.
    That product bound is what keeps the inflated stage-two level below
    alpha1 when x estimates the alternative fraction.  The closed form
    diverges as x -> 1 and is clamped to ``cap`` there.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if not kappa > 1.0:
        raise ValueError(f"kappa must exceed 1, got {kappa}")
    if x <= 1.0 / kappa:
        return 1.0
    remainder = 1.0 - x
    if remainder <= 0.0:
        return float(cap)
    # algebraically equal to (2/kappa) / (1 - sqrt(disc)), without the
    # cancellation as x -> 1
    disc = 1.0 - 4.0 * remainder / kappa
    value = (1.0 + math.sqrt(max(disc, 0.0))) / (2.0 * remainder)
    return float(min(value, cap))


def rejected_fraction_multiplier(kappa: float = 2.0, cap: float = 1e6):
    """Stage-two multiplier driven by the stage-one rejected fraction (the default)."""

    def multiplier(stage1_rejected: int, m: int) -> float:
        return f_kappa(stage1_rejected / m, kappa, cap=cap)

    return multiplier


def retained_fraction_multiplier(kappa: float = 2.0, cap: float = 1e6):
    """Stage-two multiplier driven by the retained (not rejected) fraction.

    With this variant a stage one that rejects nothing yields the capped
    multiplier, which after threshold clamping makes stage two reject
    everything; error-rate control is lost whenever most nulls are true.
    Provided as a plug-in for comparison, not as a default.
    """

    def multiplier(stage1_rejected: int, m: int) -> float:
        return f_kappa((m - stage1_rejected) / m, kappa, cap=cap)

    return multiplier


def two_stage_adaptive(p, alpha: float, config: AdaptiveConfig | None = None) -> TwoStageResult:
    """Two-stage adaptive step-up.

    Stage one runs the linear step-up at alpha0.  Its rejection count
    feeds the multiplier estimate (by default ``f_kappa`` of the rejected
    fraction, at kappa), and stage two reruns the linear step-up with
    thresholds inflated by that multiplier at level alpha1, clamped to 1.
    The result carries the stage-two decisions plus stage-one
    diagnostics.

    With the default multiplier the realized stage-two threshold stays
    at or below alpha whenever the multiplier is within kappa; a custom
    ``config.multiplier`` takes over that trade-off entirely.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    cfg = config if config is not None else AdaptiveConfig()
    alpha0 = cfg.alpha0 if cfg.alpha0 is not None else alpha / 4.0
    alpha1 = cfg.alpha1 if cfg.alpha1 is not None else alpha / 2.0

    p = _check_pvector(p)
    m = p.size
    index_fractions = np.arange(1, m + 1) / m

    stage1 = generic_step_up(p, alpha0 * index_fractions)
    r0 = stage1.n_rejected
    if cfg.multiplier is not None:
        multiplier = float(cfg.multiplier(r0, m))
        if not multiplier >= 1.0:
            raise ValueError(f"multiplier hook returned {multiplier}, expected >= 1")
    else:
        multiplier = f_kappa(r0 / m, cfg.kappa, cap=cfg.multiplier_cap)

    thresholds = np.minimum(multiplier * alpha1 * index_fractions, 1.0)
    stage2 = generic_step_up(p, thresholds)
    return TwoStageResult(
        k=stage2.k,
        threshold=stage2.threshold,
        rejected=stage2.rejected,
        stage1_rejections=r0,
        null_estimate=m - r0,
        multiplier=multiplier,
    )
