"""Synthetic signals, smoothed noise fields, and the Monte Carlo harness.

Signals are 2-D images with amplitudes in [-1, 1]: a left-to-right ramp,
a half-plane step, and a disk on a flat background, the latter two
optionally softened by Gaussian smoothing.  Noise fields are i.i.d.
normal draws, smoothed and rescaled so interior pixels keep the nominal
standard deviation.

`run_simulation` repeats the experiment: draw a sample stack around the
signal, fit each requested method's regions at every level c, score the
realized error proportions against the true signal, and average.  Reps
are seeded individually from (seed, rep), so results are bit-identical
for a given config no matter how many workers share the reps.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .lattice import LatticeShape, SampleStack, ScalarField
from .multitest import TwoStageResult
from .regions import Method, error_proportions, joint_cr, lower_cr, upper_cr
from .stats import t_statistic_field, upper_p_field

__all__ = [
    "SignalSpec",
    "NoiseSpec",
    "SimulationConfig",
    "SimulationResult",
    "fwhm_to_sigma",
    "gaussian_kernel_1d",
    "smooth_field",
    "generate_signal",
    "generate_noise_field",
    "generate_sample_stack",
    "run_simulation",
    "DEFAULT_C_GRID",
]

_FWHM_CONSTANT = 2.0 * math.sqrt(2.0 * math.log(2.0))

DEFAULT_C_GRID = tuple(round(-2.0 + 0.2 * i, 10) for i in range(21))

_DEFAULT_METHODS = (
    Method.UPPER_BH,
    Method.LOWER_BH,
    Method.LOWER_ADAPTIVE,
    Method.JOINT_BH,
)


@dataclass(frozen=True)
class SignalSpec:
    """Which test signal to draw and how much to smooth it.

    The ramp is already continuous and ignores ``signal_fwhm``; the step
    and circle are built as hard +-1 images and then smoothed.  radius
    applies to the circle only.
    """

    kind: str
    signal_fwhm: float = 0.0
    radius: float = 12.0

    def __post_init__(self):
        if self.kind not in ("ramp", "step", "circle"):
            raise ValueError(f"signal kind must be ramp, step, or circle, got {self.kind!r}")
        if self.signal_fwhm < 0:
            raise ValueError(f"signal_fwhm must be nonnegative, got {self.signal_fwhm}")
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise standard deviation and smoothing FWHM (0 for white noise)."""

    sd: float = 1.0
    fwhm: float = 0.0

    def __post_init__(self):
        if self.sd <= 0:
            raise ValueError(f"sd must be positive, got {self.sd}")
        if self.fwhm < 0:
            raise ValueError(f"fwhm must be nonnegative, got {self.fwhm}")


@dataclass(frozen=True)
class SimulationConfig:
    signal: SignalSpec
    noise: NoiseSpec
    shape: tuple[int, int] = (50, 50)
    n: int = 80
    reps: int = 1000
    alpha: float = 0.05
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    methods: tuple[Method, ...] = _DEFAULT_METHODS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")
        if self.reps < 1:
            raise ValueError(f"reps must be at least 1, got {self.reps}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if len(self.c_grid) == 0:
            raise ValueError("c_grid must be nonempty")
        if any(b <= a for a, b in zip(self.c_grid, self.c_grid[1:])):
            raise ValueError("c_grid must be strictly ascending")
        if len(self.methods) == 0:
            raise ValueError("methods must be nonempty")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must not repeat")
        if not all(isinstance(m, Method) for m in self.methods):
            raise ValueError("methods must be Method values")
        if Method.JOINT_BH in self.methods and not self.alpha < 0.5:
            raise ValueError("the joint method runs at 2*alpha, so alpha must be below 0.5")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class SimulationResult:
    """Mean error proportions and their Monte Carlo standard errors.

    Arrays are indexed [c_index, method_index] following config order.
    With a single rep the standard errors are reported as 0.
    """

    config: SimulationConfig
    fdr: np.ndarray
    fdr_se: np.ndarray
    fndr: np.ndarray
    fndr_se: np.ndarray
    dominance_checks: int = 0

    def __post_init__(self):
        for name in ("fdr", "fdr_se", "fndr", "fndr_se"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).copy()
            expected = (len(self.config.c_grid), len(self.config.methods))
            if arr.shape != expected:
                raise ValueError(f"{name} must have shape {expected}, got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def c_grid(self) -> tuple[float, ...]:
        return self.config.c_grid

    @property
    def methods(self) -> tuple[Method, ...]:
        return self.config.methods

    @property
    def reps(self) -> int:
        return self.config.reps


def fwhm_to_sigma(fwhm: float) -> float:
    """Gaussian sigma for a full width at half maximum; 0 maps to 0."""
    if fwhm < 0:
        raise ValueError(f"fwhm must be nonnegative, got {fwhm}")
    return fwhm / _FWHM_CONSTANT


def gaussian_kernel_1d(fwhm: float) -> np.ndarray:
    """Normalized discrete Gaussian truncated at ceil(3 sigma) taps each side."""
    sigma = fwhm_to_sigma(fwhm)
    if sigma == 0.0:
        return np.ones(1)
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return weights / weights.sum()


def _smooth_along_lattice_axes(values: np.ndarray, kernel: np.ndarray, first_axis: int) -> np.ndarray:
    out = values
    for axis in range(first_axis, values.ndim):
        out = convolve1d(out, kernel, axis=axis, mode="constant", cval=0.0)
    return out


def smooth_field(field: ScalarField, fwhm: float) -> ScalarField:
    """Separable Gaussian smoothing with zero padding beyond the boundary."""
    if fwhm == 0.0:
        return field
    kernel = gaussian_kernel_1d(fwhm)
    smoothed = _smooth_along_lattice_axes(field.values, kernel, 0)
    return ScalarField(field.shape, smoothed, field.mask)


def generate_signal(spec: SignalSpec, shape: LatticeShape) -> ScalarField:
    """The true mean image for a 2-D simulation.

    Ramp: rows constant, columns rising linearly from -1 to +1 inclusive.
    Step: -1 on the left half (col < W/2), +1 on the right, then smoothed.
    Circle: +1 on the disk of ``spec.radius`` around the image center,
    -1 outside, then smoothed.
    """
    if shape.ndim != 2:
        raise ValueError(f"signals are 2-D, got a {shape.ndim}-D lattice")
    height, width = shape.dims
    if spec.kind == "ramp":
        if width < 2:
            raise ValueError("ramp needs at least 2 columns")
        row = -1.0 + 2.0 * np.arange(width) / (width - 1)
        return ScalarField(shape, np.broadcast_to(row, shape.dims).copy())
    if spec.kind == "step":
        row = np.where(np.arange(width) < width / 2, -1.0, 1.0)
        base = ScalarField(shape, np.broadcast_to(row, shape.dims).copy())
        return smooth_field(base, spec.signal_fwhm)
    rows, cols = np.indices(shape.dims, dtype=np.float64)
    center_r = (height - 1) / 2.0
    center_c = (width - 1) / 2.0
    dist_sq = (rows - center_r) ** 2 + (cols - center_c) ** 2
    base = ScalarField(shape, np.where(dist_sq <= spec.radius**2, 1.0, -1.0))
    return smooth_field(base, spec.signal_fwhm)


def _noise_scale(kernel: np.ndarray, ndim: int) -> float:
    # sum of squares of the full separable kernel is the 1-D sum to the D-th power
    return math.sqrt(float(np.sum(kernel**2)) ** ndim)


def _draw_noise(shape_dims: tuple[int, ...], noise: NoiseSpec, rng, count: int | None) -> np.ndarray:
    out_shape = shape_dims if count is None else (count,) + shape_dims
    draws = rng.standard_normal(out_shape) * noise.sd
    if noise.fwhm == 0.0:
        return draws
    kernel = gaussian_kernel_1d(noise.fwhm)
    first_axis = 0 if count is None else 1
    smoothed = _smooth_along_lattice_axes(draws, kernel, first_axis)
    return smoothed / _noise_scale(kernel, len(shape_dims))


def generate_noise_field(shape: LatticeShape, noise: NoiseSpec, rng) -> ScalarField:
    """One smoothed noise field.

    White noise is smoothed and then divided by the root sum of squares
    of the full effective kernel, which restores the marginal standard
    deviation at interior pixels (boundary pixels, which the zero
    padding starves, end up below it).
    """
    return ScalarField(shape, _draw_noise(shape.dims, noise, rng, None))


def generate_sample_stack(
    signal: ScalarField, noise: NoiseSpec, n: int, rng
) -> SampleStack:
    """n independent noise fields around a shared signal."""
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    draws = _draw_noise(signal.shape.dims, noise, rng, n)
    return SampleStack(signal.shape, signal.values + draws, signal.mask)


def _rep_proportions(config: SimulationConfig, rep: int) -> tuple[np.ndarray, int]:
    """Error proportions for one rep: array (len(c_grid), len(methods), 2), plus
    the number of dominance premises that fired."""
    shape = LatticeShape(config.shape)
    signal = generate_signal(config.signal, shape)
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, rep)))
    stack = generate_sample_stack(signal, config.noise, config.n, rng)

    methods = config.methods
    want_dominance = Method.LOWER_BH in methods and Method.LOWER_ADAPTIVE in methods
    out = np.empty((len(config.c_grid), len(methods), 2))
    dominance_hits = 0
    for ci, c in enumerate(config.c_grid):
        t, nu = t_statistic_field(stack, c)
        p_u = upper_p_field(t, nu)
        fitted = {}
        for mi, method in enumerate(methods):
            if method is Method.UPPER_BH:
                regions = upper_cr(t, nu, c, config.alpha, p_upper=p_u)
            elif method is Method.LOWER_BH:
                regions = lower_cr(t, nu, c, config.alpha, "bh", p_upper=p_u)
            elif method is Method.LOWER_ADAPTIVE:
                regions = lower_cr(t, nu, c, config.alpha, "adaptive", p_upper=p_u)
            else:
                regions = joint_cr(t, nu, c, 2.0 * config.alpha, p_upper=p_u)
            fitted[method] = regions
            props = error_proportions(method, signal, regions)
            out[ci, mi, 0] = props.fdp
            out[ci, mi, 1] = props.fndp
        if want_dominance:
            adaptive = fitted[Method.LOWER_ADAPTIVE].stepup
            assert isinstance(adaptive, TwoStageResult)
            if adaptive.multiplier >= 2.0:
                dominance_hits += 1
                bh = fitted[Method.LOWER_BH].stepup
                if (bh.rejected & ~adaptive.rejected).any():
                    raise RuntimeError(
                        "internal invariant violated: adaptive rejections do not "
                        "cover the linear step-up's at multiplier >= 2"
                    )
    return out, dominance_hits


def _rep_task(args) -> tuple[np.ndarray, int]:
    return _rep_proportions(*args)


def run_simulation(config: SimulationConfig, workers: int = 1) -> SimulationResult:
    """Monte Carlo error-rate curves for every (c, method) pair.

    Reps are seeded independently from (config.seed, rep) and assembled
    in rep order before averaging, so the result is bit-identical for
    any ``workers`` count.
    """
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    tasks = [(config, rep) for rep in range(config.reps)]
    if workers == 1 or config.reps == 1:
        outcomes = [_rep_task(task) for task in tasks]
    else:
        chunk = max(1, math.ceil(config.reps / (workers * 4)))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_rep_task, tasks, chunksize=chunk))

    proportions = np.stack([arr for arr, _ in outcomes])
    dominance = sum(hits for _, hits in outcomes)
    if config.reps > 1:
        fdr_se = proportions[:, :, :, 0].std(axis=0, ddof=1) / math.sqrt(config.reps)
        fndr_se = proportions[:, :, :, 1].std(axis=0, ddof=1) / math.sqrt(config.reps)
    else:
        fdr_se = np.zeros((len(config.c_grid), len(config.methods)))
        fndr_se = np.zeros_like(fdr_se)
    return SimulationResult(
        config=config,
        fdr=proportions[:, :, :, 0].mean(axis=0),
        fdr_se=fdr_se,
        fndr=proportions[:, :, :, 1].mean(axis=0),
        fndr_se=fndr_se,
        dominance_checks=dominance,
    )
