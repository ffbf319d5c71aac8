"""Acceptance suite.

Nine gates, each printing one ``ACCEPTANCE <n> <name>: PASS|FAIL`` line.
The two Monte Carlo fixtures are session-scoped and shared across gates,
so the whole file stays well inside the fifteen-minute budget.
"""

import contextlib
import math
import time

import numpy as np
import pytest

from excursionfdr import cli
from excursionfdr.lattice import SampleStack, ScalarField
from excursionfdr.multitest import bh_step_up, generic_step_up, two_stage_adaptive
from excursionfdr.regions import (
    Method,
    error_proportions,
    from_sample_stack,
    joint_cr,
    lower_cr,
    point_estimate_set,
    upper_cr,
)
from excursionfdr.simulate import (
    NoiseSpec,
    SignalSpec,
    SimulationConfig,
    run_simulation,
)
from excursionfdr.stats import student_t_cdf, t_statistic_field

ALPHA = 0.05
REPS = 200
ALL_METHODS = (Method.UPPER_BH, Method.LOWER_BH, Method.LOWER_ADAPTIVE, Method.JOINT_BH)


# Collected by the conftest terminal-summary hook; the plain print below is
# swallowed by capture unless the gate fails or -s is given.
GATE_LINES: list[str] = []


@contextlib.contextmanager
def gate(number, name):
    ok = False
    try:
        yield
        ok = True
    finally:
        line = f"ACCEPTANCE {number} {name}: {'PASS' if ok else 'FAIL'}"
        GATE_LINES.append(line)
        print(line)


def column(result, method):
    return result.methods.index(method)


def row(result, c):
    return result.c_grid.index(c)


@pytest.fixture(scope="session")
def ramp_result():
    config = SimulationConfig(
        signal=SignalSpec("ramp"),
        noise=NoiseSpec(sd=1.0, fwhm=5.0),
        shape=(50, 50),
        n=80,
        reps=REPS,
        alpha=ALPHA,
        methods=ALL_METHODS,
        seed=20260822,
    )
    start = time.monotonic()
    result = run_simulation(config)
    return result, time.monotonic() - start


@pytest.fixture(scope="session")
def circle_result():
    config = SimulationConfig(
        signal=SignalSpec("circle", radius=12.0, signal_fwhm=5.0),
        noise=NoiseSpec(sd=1.0, fwhm=5.0),
        shape=(50, 50),
        n=80,
        reps=REPS,
        alpha=ALPHA,
        methods=(Method.LOWER_BH, Method.LOWER_ADAPTIVE, Method.JOINT_BH),
        seed=8222026,
    )
    return run_simulation(config)


def test_c1_separate_methods_control_fdr_on_ramp(ramp_result):
    result, elapsed = ramp_result
    with gate(1, "separate-method FDR control on the ramp"):
        assert elapsed < 900.0
        for method in (Method.UPPER_BH, Method.LOWER_BH, Method.LOWER_ADAPTIVE):
            j = column(result, method)
            bound = ALPHA + 3.0 * result.fdr_se[:, j]
            assert (result.fdr[:, j] <= bound).all(), (
                f"{method.value}: worst exceedance "
                f"{(result.fdr[:, j] - bound).max():.4f}"
            )


def test_c2_joint_control_with_doubling(ramp_result, circle_result):
    ramp, _ = ramp_result
    with gate(2, "joint FDR control at the doubled level"):
        j = column(ramp, Method.JOINT_BH)
        assert (ramp.fdr[:, j] <= ALPHA + 3.0 * ramp.fdr_se[:, j]).all()

        k = column(circle_result, Method.JOINT_BH)
        for i, c in enumerate(circle_result.c_grid):
            if c == -1.0:
                assert circle_result.fdr[i, k] <= 0.10
            else:
                assert circle_result.fdr[i, k] <= ALPHA + 3.0 * circle_result.fdr_se[i, k]


def test_c3_complete_null_uniformity():
    with gate(3, "complete-null FDR and rejection fraction"):
        reps = 500
        rng_master = 555
        fdp = np.empty(reps)
        any_rejection = np.empty(reps)
        for rep in range(reps):
            rng = np.random.default_rng(np.random.SeedSequence((rng_master, rep)))
            stack = SampleStack.from_array(rng.normal(size=(80, 50, 50)))
            t, nu = t_statistic_field(stack, 0.0)
            fit = upper_cr(t, nu, 0.0, ALPHA)
            truth = ScalarField.from_array(np.zeros((50, 50)))
            props = error_proportions(Method.UPPER_BH, truth, fit)
            fdp[rep] = props.fdp
            any_rejection[rep] = 1.0 if fit.upper.count > 0 else 0.0
        for values in (fdp, any_rejection):
            se = values.std(ddof=1) / math.sqrt(reps)
            assert values.mean() <= ALPHA + 3.0 * se


def test_c4_adaptive_power_ordering(circle_result):
    with gate(4, "adaptive lower method at least as powerful"):
        i = row(circle_result, 1.4)
        a = column(circle_result, Method.LOWER_ADAPTIVE)
        b = column(circle_result, Method.LOWER_BH)
        combined_se = math.hypot(circle_result.fndr_se[i, a], circle_result.fndr_se[i, b])
        assert circle_result.fndr[i, a] <= circle_result.fndr[i, b] + 2.0 * combined_se
        # the harness raises on any per-rep dominance violation, so reaching
        # this point with a positive count proves the regime was exercised
        assert circle_result.dominance_checks > 0


def test_c5_step_up_matches_brute_force():
    with gate(5, "step-up equals exhaustive search"):
        rng = np.random.default_rng(314159)
        for trial in range(10_000):
            m = int(rng.integers(1, 13))
            p = rng.uniform(size=m)
            if trial % 3 == 0:
                p = p.round(2)  # force ties
            alpha = float(rng.uniform(0.01, 0.5))
            thresholds = alpha * (np.arange(1, m + 1) / m)

            order = sorted(range(m), key=lambda idx: (p[idx], idx))
            k = 0
            for rank, idx in enumerate(order, start=1):
                if p[idx] <= thresholds[rank - 1]:
                    k = rank
            p_k = p[order[k - 1]] if k else 0.0
            expected = [k > 0 and v <= p_k for v in p]

            for result in (bh_step_up(p, alpha), generic_step_up(p, thresholds)):
                assert result.k == k
                assert result.threshold == p_k
                assert list(result.rejected) == expected


def test_c6_t_cdf_accuracy():
    with gate(6, "t CDF against closed forms and reflection"):
        t = np.arange(-8.0, 8.001, 0.25)
        cauchy = 0.5 + np.arctan(t) / np.pi
        nu2 = 0.5 + t / (2.0 * np.sqrt(t * t + 2.0))
        assert np.abs(student_t_cdf(t, 1.0) - cauchy).max() <= 1e-10
        assert np.abs(student_t_cdf(t, 2.0) - nu2).max() <= 1e-10
        grid = np.arange(-10.0, 10.001, 0.25)
        for nu in (1.0, 2.0, 5.0, 79.0):
            resid = student_t_cdf(grid, nu) + student_t_cdf(-grid, nu) - 1.0
            assert np.abs(resid).max() <= 1e-12


def test_c7_structural_invariants():
    with gate(7, "nestedness and joint complementarity"):
        rng = np.random.default_rng(271828)
        for _ in range(1000):
            m = int(rng.integers(1, 101))
            t = ScalarField.from_array(rng.normal(0.0, 2.0, size=m))
            point = point_estimate_set(t, 0.0)
            fits = [
                upper_cr(t, 79.0, 0.0, ALPHA),
                lower_cr(t, 79.0, 0.0, ALPHA, "bh"),
                lower_cr(t, 79.0, 0.0, ALPHA, "adaptive"),
                joint_cr(t, 79.0, 0.0, 2.0 * ALPHA),
            ]
            for fit in fits:
                if fit.upper is not None:
                    assert fit.upper.is_subset_of(point)
                if fit.lower is not None:
                    assert point.is_subset_of(fit.lower)
            joint = fits[-1]
            if joint.stepup.threshold < 0.5:
                assert not (joint.upper.member & ~joint.lower.member).any()


def test_c8_joint_fndr_no_worse(ramp_result):
    result, _ = ramp_result
    with gate(8, "joint FNDR at or below the separate methods"):
        j = column(result, Method.JOINT_BH)
        for c in (-0.6, 0.0, 0.6):
            i = row(result, c)
            for method in (Method.UPPER_BH, Method.LOWER_BH, Method.LOWER_ADAPTIVE):
                k = column(result, method)
                combined_se = math.hypot(result.fndr_se[i, j], result.fndr_se[i, k])
                assert result.fndr[i, j] <= result.fndr[i, k] + 2.0 * combined_se, (
                    f"c={c}, against {method.value}"
                )


def test_c9_csv_byte_determinism(tmp_path):
    with gate(9, "simulate CSV byte determinism across runs and workers"):
        base = [
            "simulate", "--signal", "ramp", "--noise-fwhm", "5",
            "--n", "20", "--reps", "6", "--seed", "97",
            "--c-min", "-1.0", "--c-max", "1.0", "--c-step", "0.5",
        ]
        outputs = []
        for name, workers in (("a", 1), ("b", 1), ("c", 4)):
            out = tmp_path / f"{name}.csv"
            code = cli.main(base + ["--workers", str(workers), "--out", str(out)])
            assert code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        assert outputs[0] == outputs[2]
