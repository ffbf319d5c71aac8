import numpy as np
import pytest
from scipy import stats as sps

from excursionfdr.lattice import RegionSet, SampleStack, ScalarField
from excursionfdr.multitest import AdaptiveConfig
from excursionfdr.regions import (
    ConfidenceRegions,
    Method,
    error_proportions,
    from_sample_stack,
    joint_cr,
    lower_cr,
    point_estimate_set,
    proportions_from_sets,
    upper_cr,
)
from excursionfdr.stats import t_statistic_field, upper_p_field


def t_field(values):
    return ScalarField.from_array(np.asarray(values, dtype=float))


def members(region):
    return set(np.flatnonzero(region.member.ravel()))


class TestUpper:
    def test_worked_example(self):
        # p-values land near (0.0018, 0.5, 0.9755); only the first clears
        # the smallest BH threshold 0.05/3
        fit = upper_cr(t_field([3.0, 0.0, -2.0]), 79.0, 0.0, 0.05)
        assert members(fit.upper) == {0}
        assert fit.stepup.k == 1
        assert fit.stepup.threshold == pytest.approx(0.0018053165237208457, rel=1e-10)

    def test_no_positive_evidence(self):
        fit = upper_cr(t_field([-5.0] * 6), 79.0, 0.0, 0.05)
        assert fit.upper.count == 0
        assert fit.stepup.threshold == 0.0

    def test_infinite_t_rejects_everywhere(self):
        fit = upper_cr(t_field([np.inf] * 4), 79.0, 0.0, 0.05)
        assert fit.upper.count == 4

    def test_region_is_threshold_cut_of_pvalues(self):
        rng = np.random.default_rng(41)
        t = t_field(rng.normal(0, 3, size=50))
        fit = upper_cr(t, 79.0, 0.0, 0.05)
        p = upper_p_field(t, 79.0).values
        if fit.stepup.k > 0:
            np.testing.assert_array_equal(fit.upper.member, p <= fit.stepup.threshold)
        else:
            assert fit.upper.count == 0


class TestLower:
    def test_worked_example(self):
        fit = lower_cr(t_field([3.0, 0.0, -9.0]), 79.0, 0.0, 0.05)
        assert members(fit.lower) == {0, 1}
        assert fit.stepup.k == 1
        assert fit.stepup.threshold == pytest.approx(4.8639161993056813e-14, rel=1e-6)

    def test_no_negative_evidence_keeps_everything(self):
        fit = lower_cr(t_field([5.0] * 6), 79.0, 0.0, 0.05)
        assert fit.lower.count == 6

    def test_negative_infinity_empties_region(self):
        fit = lower_cr(t_field([-np.inf] * 4), 79.0, 0.0, 0.05)
        assert fit.lower.count == 0

    def test_adaptive_procedure_runs(self):
        rng = np.random.default_rng(42)
        t = t_field(rng.normal(-4, 1, size=30))
        bh = lower_cr(t, 79.0, 0.0, 0.05, "bh")
        adaptive = lower_cr(t, 79.0, 0.0, 0.05, "adaptive")
        # with nearly everything rejected the adaptive pass can only keep less
        assert adaptive.lower.is_subset_of(bh.lower)

    def test_adaptive_config_plumbs_through(self):
        # p-values near 1e-3 clear the default stage levels but sit far
        # above the deliberately tiny ones
        t = t_field([-3.2, -3.2, -3.2])
        default = lower_cr(t, 79.0, 0.0, 0.05, "adaptive")
        assert default.lower.count == 0
        strict_cfg = AdaptiveConfig(alpha0=1e-12, alpha1=1e-12)
        fit = lower_cr(t, 79.0, 0.0, 0.05, "adaptive", adaptive=strict_cfg)
        assert fit.lower.count == 3

    def test_unknown_procedure(self):
        with pytest.raises(ValueError):
            lower_cr(t_field([0.0]), 79.0, 0.0, 0.05, "stepdown")


class TestJoint:
    def test_worked_example_via_quantiles(self):
        # t chosen so the upper p-values are (0.01, 0.9); the pooled pass at
        # level 0.1 over 4 p-values keeps only the strongest
        t1 = sps.t.ppf(0.99, 79)
        t2 = sps.t.ppf(0.10, 79)
        fit = joint_cr(t_field([t1, t2]), 79.0, 0.0, 0.1)
        assert members(fit.upper) == {0}
        assert members(fit.lower) == {0, 1}
        assert fit.stepup.k == 1
        assert fit.stepup.threshold == pytest.approx(0.01, rel=1e-9)

    def test_flat_zero_t(self):
        fit = joint_cr(t_field([0.0] * 5), 79.0, 0.0, 0.1)
        assert fit.upper.count == 0
        assert fit.lower.count == 5

    def test_no_double_rejection_in_practice(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            t = t_field(rng.normal(0, 2, size=40))
            fit = joint_cr(t, 79.0, 0.0, 0.1)
            if fit.stepup.threshold < 0.5:
                # upper-rejected and lower-rejected location sets are disjoint
                lower_rejected = ~fit.lower.member
                assert not (fit.upper.member & lower_rejected).any()


class TestNestedness:
    def test_random_instances_all_methods(self):
        rng = np.random.default_rng(44)
        for _ in range(100):
            t = t_field(rng.normal(0, 2, size=int(rng.integers(1, 60))))
            point = point_estimate_set(t, 0.0)
            fits = [
                upper_cr(t, 79.0, 0.0, 0.05),
                lower_cr(t, 79.0, 0.0, 0.05, "bh"),
                lower_cr(t, 79.0, 0.0, 0.05, "adaptive"),
                joint_cr(t, 79.0, 0.0, 0.1),
            ]
            for fit in fits:
                if fit.upper is not None:
                    assert fit.upper.is_subset_of(point)
                if fit.lower is not None:
                    assert point.is_subset_of(fit.lower)

    def test_point_estimate_uses_t_sign(self):
        # tiny but positive t must stay in the point estimate even though
        # its p-value rounds to exactly 0.5
        t = t_field([1e-9, -1e-9, 0.0])
        point = point_estimate_set(t, 0.0)
        assert members(point) == {0}


class TestMonotonicity:
    def test_upper_grows_with_alpha(self):
        rng = np.random.default_rng(45)
        t = t_field(rng.normal(1, 1.5, size=80))
        small = upper_cr(t, 79.0, 0.0, 0.01)
        large = upper_cr(t, 79.0, 0.0, 0.2)
        assert small.upper.is_subset_of(large.upper)

    def test_lower_shrinks_with_alpha(self):
        rng = np.random.default_rng(46)
        t = t_field(rng.normal(-1, 1.5, size=80))
        small = lower_cr(t, 79.0, 0.0, 0.01, "bh")
        large = lower_cr(t, 79.0, 0.0, 0.2, "bh")
        assert large.lower.is_subset_of(small.lower)


def oracle_proportions(method, truth, c, upper, lower, inside):
    """Set-arithmetic reference for the error-proportion formulas."""
    every = set(np.flatnonzero(inside.ravel()))
    a_strict = {v for v in every if truth.ravel()[v] > c}
    a_closed = {v for v in every if truth.ravel()[v] >= c}

    up = set(np.flatnonzero(upper.ravel())) if upper is not None else None
    low = set(np.flatnonzero(lower.ravel())) if lower is not None else None

    fd = fdd = fnd = fndd = 0
    if method in (Method.UPPER_BH, Method.JOINT_BH):
        fd += len(up - a_strict)
        fdd += len(up)
        fnd += len(a_strict - up)
        fndd += len(every - up)
    if method in (Method.LOWER_BH, Method.LOWER_ADAPTIVE, Method.JOINT_BH):
        low_c = every - low
        fd += len(a_closed & low_c)
        fdd += len(low_c)
        fnd += len(low - a_closed)
        fndd += len(low)
    return fd / max(fdd, 1), fnd / max(fndd, 1)


class TestErrorProportions:
    def test_upper_worked_example(self):
        truth = ScalarField.from_array(np.array([1.0, 1.0, 0.0, 0.0]))
        upper = RegionSet.from_array(np.array([False, True, True, False]))
        props = proportions_from_sets(Method.UPPER_BH, truth, 0.5, upper, None)
        assert props.fdp == 0.5
        assert props.fndp == 0.5
        assert props.false_discoveries == 1 and props.discoveries == 2

    def test_lower_perfect_recovery(self):
        truth = ScalarField.from_array(np.array([1.0, 0.0, -1.0]))
        lower = RegionSet.from_array(np.array([True, True, False]))
        props = proportions_from_sets(Method.LOWER_BH, truth, 0.0, None, lower)
        assert props.fdp == 0.0 and props.fndp == 0.0

    def test_joint_no_rejection_floor(self):
        truth = ScalarField.from_array(np.array([1.0, -1.0]))
        upper = RegionSet.from_array(np.array([False, False]))
        lower = RegionSet.from_array(np.array([True, True]))
        props = proportions_from_sets(Method.JOINT_BH, truth, 0.0, upper, lower)
        assert props.fdp == 0.0

    def test_matches_set_arithmetic_oracle(self):
        rng = np.random.default_rng(47)
        for _ in range(300):
            m = int(rng.integers(1, 21))
            truth_arr = rng.choice([-1.0, 0.0, 1.0], size=m)
            truth = ScalarField.from_array(truth_arr)
            up = RegionSet.from_array(rng.random(m) < 0.4)
            low = RegionSet.from_array(rng.random(m) < 0.6)
            method = rng.choice(list(Method))
            wants_up = method in (Method.UPPER_BH, Method.JOINT_BH)
            wants_low = method in (Method.LOWER_BH, Method.LOWER_ADAPTIVE, Method.JOINT_BH)
            props = proportions_from_sets(
                method, truth, 0.0, up if wants_up else None, low if wants_low else None
            )
            ref_fdp, ref_fndp = oracle_proportions(
                method,
                truth_arr,
                0.0,
                up.member if wants_up else None,
                low.member if wants_low else None,
                np.ones(m, dtype=bool),
            )
            assert props.fdp == pytest.approx(ref_fdp, abs=1e-15)
            assert props.fndp == pytest.approx(ref_fndp, abs=1e-15)

    def test_no_true_null_means_zero_fdp(self):
        rng = np.random.default_rng(48)
        truth = ScalarField.from_array(np.full(30, 2.0))  # everything above c
        for _ in range(20):
            up = RegionSet.from_array(rng.random(30) < 0.5)
            props = proportions_from_sets(Method.UPPER_BH, truth, 0.0, up, None)
            assert props.fdp == 0.0

    def test_full_fit_delegation(self):
        rng = np.random.default_rng(49)
        stack = SampleStack.from_array(rng.normal(0.5, 1, size=(40, 9)))
        fit = from_sample_stack(stack, 0.0, 0.05, Method.JOINT_BH)
        truth = ScalarField.from_array(np.full(9, 0.5))
        props = error_proportions(Method.JOINT_BH, truth, fit)
        assert 0.0 <= props.fdp <= 1.0 and 0.0 <= props.fndp <= 1.0

    def test_method_tag_mismatch(self):
        rng = np.random.default_rng(50)
        stack = SampleStack.from_array(rng.normal(size=(10, 5)))
        fit = from_sample_stack(stack, 0.0, 0.05, Method.UPPER_BH)
        truth = ScalarField.from_array(np.zeros(5))
        with pytest.raises(ValueError):
            error_proportions(Method.LOWER_BH, truth, fit)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(51)
        stack = SampleStack.from_array(rng.normal(size=(10, 5)))
        fit = from_sample_stack(stack, 0.0, 0.05, Method.UPPER_BH)
        with pytest.raises(ValueError):
            error_proportions(Method.UPPER_BH, ScalarField.from_array(np.zeros(6)), fit)


class TestFromSampleStack:
    def test_joint_runs_at_doubled_level(self):
        rng = np.random.default_rng(52)
        stack = SampleStack.from_array(rng.normal(0, 1, size=(30, 25)))
        t, nu = t_statistic_field(stack, 0.0)
        via_stack = from_sample_stack(stack, 0.0, 0.05, Method.JOINT_BH)
        direct = joint_cr(t, nu, 0.0, 0.1)
        np.testing.assert_array_equal(via_stack.upper.member, direct.upper.member)
        np.testing.assert_array_equal(via_stack.lower.member, direct.lower.member)

    def test_joint_doubling_off(self):
        rng = np.random.default_rng(53)
        stack = SampleStack.from_array(rng.normal(0, 1, size=(30, 25)))
        t, nu = t_statistic_field(stack, 0.0)
        via_stack = from_sample_stack(stack, 0.0, 0.05, Method.JOINT_BH, joint_doubling=False)
        direct = joint_cr(t, nu, 0.0, 0.05)
        np.testing.assert_array_equal(via_stack.upper.member, direct.upper.member)

    def test_separate_methods_match_direct_calls(self):
        rng = np.random.default_rng(54)
        stack = SampleStack.from_array(rng.normal(0.2, 1, size=(20, 16)))
        t, nu = t_statistic_field(stack, 0.1)
        for method, direct in [
            (Method.UPPER_BH, upper_cr(t, nu, 0.1, 0.05)),
            (Method.LOWER_BH, lower_cr(t, nu, 0.1, 0.05, "bh")),
            (Method.LOWER_ADAPTIVE, lower_cr(t, nu, 0.1, 0.05, "adaptive")),
        ]:
            via = from_sample_stack(stack, 0.1, 0.05, method)
            if direct.upper is not None:
                np.testing.assert_array_equal(via.upper.member, direct.upper.member)
            if direct.lower is not None:
                np.testing.assert_array_equal(via.lower.member, direct.lower.member)

    def test_doubled_alpha_must_stay_below_one(self):
        rng = np.random.default_rng(55)
        stack = SampleStack.from_array(rng.normal(size=(5, 4)))
        with pytest.raises(ValueError):
            from_sample_stack(stack, 0.0, 0.6, Method.JOINT_BH)


class TestConstruction:
    def test_alpha_range_validated(self):
        with pytest.raises(ValueError):
            upper_cr(t_field([1.0]), 79.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            upper_cr(t_field([1.0]), 79.0, 0.0, 1.0)

    def test_method_from_string(self):
        assert Method.from_string("upper-bh") is Method.UPPER_BH
        assert Method.from_string("joint") is Method.JOINT_BH
        with pytest.raises(ValueError):
            Method.from_string("fwer")

    def test_thresholds_property(self):
        fit = upper_cr(t_field([3.0, -1.0]), 79.0, 0.0, 0.05)
        assert set(fit.thresholds) == {"upper"}

    def test_required_sides_validated(self):
        shape = RegionSet.from_array(np.array([True])).shape
        with pytest.raises(ValueError):
            ConfidenceRegions(
                c=0.0,
                alpha=0.05,
                method=Method.JOINT_BH,
                upper=None,
                lower=None,
                point_estimate=RegionSet.empty(shape),
                stepup=upper_cr(t_field([1.0]), 9.0, 0.0, 0.05).stepup,
            )
