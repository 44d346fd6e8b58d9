"""
Tests for the hyperconvex ℓ∞^m target: envelopes, midpoint and clamped
operators, ball intersections and greedy constructions
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipext.config import ExperimentConfig
from lipext.exceptions import InfeasibleError, LipschitzError, PreconditionError
from lipext.instances import generate_instance
from lipext.metric_core import (
    ExtensionResult,
    FiniteMetricSpace,
    PartialMap,
    SupNormSpace,
    lip_constant,
    sup_distance,
)
from lipext.supnorm_hyperconvex import (
    Box,
    admissible_hull,
    ball_intersection,
    clamped_operator,
    envelopes,
    external_intersection,
    lower_extension,
    midpoint_operator,
    pairwise_radius_test,
    transport_extension,
    upper_extension,
)


def line_space(*xs):
    return FiniteMetricSpace.from_points(np.array(xs, dtype=float).reshape(-1, 1))


def two_point_map():
    return PartialMap(line_space(0, 1, 2), [0, 2], [[0.0], [2.0]], SupNormSpace(1))


def random_supnorm(trial, **overrides):
    params = dict(n_points=6, n_domain=3, source_dim=2, target_dim=2, seed=3)
    params.update(overrides)
    config = ExperimentConfig.for_experiment("transport_supnorm", **params)
    return generate_instance(config, "supnorm", trial, lip_target=1.0)


def perturb(f, rng, size):
    """Random perturbation of f of sup size at most `size`, halved until nonexpansive"""
    shifts = rng.uniform(-1, 1, size=f.values.shape)
    for _ in range(60):
        g = PartialMap(f.source, f.domain, f.values + size * shifts, f.target)
        if lip_constant(g) <= 1.0 + 1e-9:
            return g
        size /= 2
    return f


class TestEnvelopes:
    def test_pinch_on_domain(self):
        f = two_point_map()
        lower, upper = envelopes(f, 1.0, 2)
        assert lower.tolist() == [2.0] and upper.tolist() == [2.0]

    def test_tight_constant_forces_value(self):
        lower, upper = envelopes(two_point_map(), 1.0, 1)
        assert lower.tolist() == [1.0] and upper.tolist() == [1.0]

    def test_loose_constant(self):
        lower, upper = envelopes(two_point_map(), 2.0, 1)
        assert lower.tolist() == [0.0] and upper.tolist() == [2.0]

    def test_rejects_small_constant(self):
        with pytest.raises(LipschitzError):
            envelopes(two_point_map(), 0.5, 1)

    def test_lower_and_upper_extensions_bracket_midpoint(self):
        f = random_supnorm(0).f
        lo, mid, hi = lower_extension(f, 1.0), midpoint_operator(f, 1.0), upper_extension(f, 1.0)
        assert np.all(lo.values <= mid.values + 1e-12) and np.all(mid.values <= hi.values + 1e-12)
        for ext in (lo, mid, hi):
            assert ext.lip_achieved <= 1.0 + 1e-12
            np.testing.assert_array_equal(ext.values[f.domain], f.values)


class TestMidpointOperator:
    def test_constant_map(self):
        f = PartialMap(line_space(0, 1, 2, 5), [1, 3], [[0.5, -1.0], [0.5, -1.0]], SupNormSpace(2))
        out = midpoint_operator(f, 1.0)
        np.testing.assert_array_equal(out.values, np.tile([0.5, -1.0], (4, 1)))

    def test_midpoint_of_envelopes(self):
        out = midpoint_operator(two_point_map(), 2.0)
        assert out.values[1, 0] == 1.0
        assert out.lip_achieved <= 2.0

    def test_nonexpansive_in_the_input(self):
        rng = np.random.default_rng(1)
        for trial in range(20):
            f = random_supnorm(trial, n_points=8, n_domain=4, target_dim=3).f
            g = perturb(f, rng, 0.2)
            out_f, out_g = midpoint_operator(f, 1.0), midpoint_operator(g, 1.0)
            assert sup_distance(out_f, out_g) <= sup_distance(f, g) + 1e-12
            assert max(out_f.lip_achieved, out_g.lip_achieved) <= 1.0 + 1e-12


class TestAdmissibleHull:
    def test_single_point(self):
        box = admissible_hull([[1.0, 2.0]])
        assert box.lower.tolist() == [1.0, 2.0] and box.upper.tolist() == [1.0, 2.0]

    def test_two_points(self):
        box = admissible_hull([[0.0, 0.0], [2.0, 1.0]])
        assert box.lower.tolist() == [0.0, 0.0] and box.upper.tolist() == [2.0, 1.0]

    def test_matches_sampled_cube_intersection(self):
        """Intersection of 10^4 cubes containing both points equals the box"""
        P = np.array([[0.0, 0.0], [2.0, 1.0]])
        rng = np.random.default_rng(2)
        centers = rng.uniform(-5, 7, size=(10_000, 2))
        radii = np.max(np.abs(centers[:, None, :] - P[None, :, :]), axis=(1, 2))
        lower = np.max(centers - radii[:, None], axis=0)
        upper = np.min(centers + radii[:, None], axis=0)
        box = admissible_hull(P)
        np.testing.assert_allclose(lower, box.lower, atol=1e-12)
        np.testing.assert_allclose(upper, box.upper, atol=1e-12)


class TestClampedOperator:
    def test_midpoint_inside_box_is_unchanged(self):
        f = two_point_map()
        np.testing.assert_array_equal(clamped_operator(f, 2.0).values, midpoint_operator(f, 2.0).values)

    def test_constant_map(self):
        f = PartialMap(line_space(0, 1, 3), [0], [[4.0, 4.0]], SupNormSpace(2))
        np.testing.assert_array_equal(clamped_operator(f, 1.0).values, np.full((3, 2), 4.0))

    def test_random_containment(self):
        for trial in range(20):
            f = random_supnorm(trial, n_points=8, n_domain=4, target_dim=3).f
            out = clamped_operator(f, 1.0)
            box = out.details["hull"]
            assert np.all(out.values >= box.lower) and np.all(out.values <= box.upper)
            assert out.lip_achieved <= 1.0 + 1e-12
            np.testing.assert_array_equal(out.values[f.domain], f.values)


class TestBallIntersection:
    def test_single_ball(self):
        box = ball_intersection([[1.0, 2.0]], [0.5])
        assert box.lower.tolist() == [0.5, 1.5] and box.upper.tolist() == [1.5, 2.5]

    def test_touching_cubes(self):
        box = ball_intersection([[0.0, 0.0], [2.0, 0.0]], [1.0, 1.0])
        assert box.lower.tolist() == [1.0, -1.0] and box.upper.tolist() == [1.0, 1.0]

    def test_disjoint_cubes_agree_with_pairwise_test(self):
        centers, radii = [[0.0, 0.0], [3.0, 0.0]], [1.0, 1.0]
        assert ball_intersection(centers, radii).is_empty
        assert pairwise_radius_test(centers, radii) == (0, 1)

    @settings(max_examples=300, deadline=None)
    @given(
        st.integers(min_value=1, max_value=6).flatmap(
            lambda k: st.tuples(
                st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6), st.integers(-6, 6)), min_size=k, max_size=k),
                st.lists(st.integers(0, 4), min_size=k, max_size=k),
            )
        )
    )
    def test_nonempty_exactly_when_pairwise_test_passes(self, family):
        centers, radii = family
        box = ball_intersection(centers, radii)
        assert box.is_empty == (pairwise_radius_test(centers, radii) is not None)
        if not box.is_empty:
            gaps = np.max(np.abs(np.array(centers, dtype=float) - box.lower), axis=1)
            assert np.all(gaps <= np.array(radii, dtype=float))

    def test_negative_radius(self):
        with pytest.raises(ValueError):
            ball_intersection([[0.0]], [-1.0])

    def test_empty_box_operations(self):
        empty = Box.empty(2)
        assert empty.is_empty
        assert not empty.contains([0.0, 0.0])
        assert Box([0, 0], [1, 1]).intersect(empty).is_empty
        with pytest.raises(InfeasibleError):
            empty.clamp([0.0, 0.0])


class TestTransportExtension:
    def test_identity_when_g_equals_f(self):
        for trial in range(10):
            f = random_supnorm(trial).f
            f_ext = midpoint_operator(f, 1.0)
            out = transport_extension(f, f_ext, f)
            np.testing.assert_array_equal(out.values, f_ext.values)

    def test_distance_bound(self):
        rng = np.random.default_rng(4)
        for trial in range(20):
            f = random_supnorm(trial).f
            f_ext = midpoint_operator(f, 1.0)
            g = perturb(f, rng, 0.3)
            out = transport_extension(f, f_ext, g)
            assert sup_distance(f_ext, out) <= sup_distance(f, g) + 1e-12
            assert out.lip_achieved <= 1.0 + 1e-9
            np.testing.assert_array_equal(out.values[g.domain], g.values)

    def test_hull_constrained_variant(self):
        rng = np.random.default_rng(6)
        for trial in range(20):
            f = random_supnorm(trial).f
            f_ext = clamped_operator(f, 1.0)
            g = perturb(f, rng, 0.3)
            out = transport_extension(f, f_ext, g, hull_constrained=True)
            box = admissible_hull(g.values)
            assert np.all(out.values >= box.lower) and np.all(out.values <= box.upper)
            assert sup_distance(f_ext, out) <= sup_distance(f, g) + 1e-12

    def test_descending_order(self):
        f = random_supnorm(0).f
        f_ext = midpoint_operator(f, 1.0)
        free = np.setdiff1d(np.arange(f.source.n), f.domain)
        out = transport_extension(f, f_ext, f, free[::-1])
        np.testing.assert_array_equal(out.values, f_ext.values)

    def test_rejects_non_extension(self):
        f = random_supnorm(1).f
        f_ext = midpoint_operator(f, 1.0)
        shifted = ExtensionResult.build(f.source, f.target, f_ext.values + 0.1)
        with pytest.raises(PreconditionError):
            transport_extension(f, shifted, f)


class TestExternalIntersection:
    def test_zero_radius_pins_output(self):
        f = random_supnorm(0).f
        f1 = midpoint_operator(f, 1.0)
        out = external_intersection(f, [(f1, 0.0)], [f1])
        np.testing.assert_array_equal(out.values, f1.values)

    def test_two_copies(self):
        f = random_supnorm(1).f
        f1 = lower_extension(f, 1.0)
        out = external_intersection(f, [(f1, 0.5), (f1, 0.5)], [f1, f1])
        assert sup_distance(out, f1) <= 0.5 + 1e-12

    def test_random_three_member_families(self):
        rng = np.random.default_rng(8)
        for trial in range(20):
            f = random_supnorm(trial).f
            witnesses = [midpoint_operator(f, 1.0), lower_extension(f, 1.0), upper_extension(f, 1.0)]
            spread = max(sup_distance(a, b) for a in witnesses for b in witnesses)
            family = []
            for w in witnesses:
                shift = rng.uniform(-0.3, 0.3, size=f.target.dim)
                member = ExtensionResult.build(f.source, f.target, w.values + shift)
                family.append((member, float(np.max(np.abs(shift))) + spread / 2))
            out = external_intersection(f, family, witnesses)
            for member, r in family:
                assert sup_distance(out, member) <= r + 1e-9
            assert out.lip_achieved <= 1.0 + 1e-9
            np.testing.assert_array_equal(out.values[f.domain], f.values)

    def test_preconditions(self):
        f = random_supnorm(2).f
        w = midpoint_operator(f, 1.0)
        far = ExtensionResult.build(f.source, f.target, w.values + 10.0)
        with pytest.raises(PreconditionError):
            external_intersection(f, [], [])
        with pytest.raises(PreconditionError):
            external_intersection(f, [(w, 0.1)], [w, w])
        with pytest.raises(PreconditionError):
            external_intersection(f, [(far, 1.0)], [w])
