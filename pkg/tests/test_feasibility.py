"""Membership LP, certificates, global joints, gap/separation/negativity LPs.

Every LP result is cross-checked against an independent scipy formulation
(tests/oracles.py) on top of the frozen regression values computed with
that oracle before the solver here was written.
"""

import itertools
import math

import numpy as np
import pytest

from bellkit import (
    Behavior,
    ChshPermutation,
    JointInvarianceError,
    NoSignalingError,
    Scenario,
    VertexCapError,
    all_permutations,
    build_compatible_joint,
    build_global_joint,
    canonical_permutation,
    chsh_S,
    dice_behavior,
    enumerate_vertices,
    from_equality_probabilities,
    lhv_behavior,
    lhv_compatible_joints,
    local_membership,
    min_invariance_gap,
    min_tv_separation,
    noisy_pr_box,
    pr_box,
    signed_invariant_joint,
    tsirelson_behavior,
    weights_to_global_joint,
)
from conftest import (
    random_lhv_model,
    random_ns_behavior,
    random_violating_behavior,
    signaling_behavior,
)
from oracles import (
    oracle_membership_inside,
    oracle_min_invariance_gap,
    oracle_min_negativity,
    oracle_min_tv_separation,
)

RNG = np.random.default_rng(60221023)
CANON = canonical_permutation()
SQRT2 = math.sqrt(2.0)

# regression values computed with the scipy oracle before this module existed
PR_MIN_GAP = 1.0
PR_MIN_TV = 1.0
PR_NEGATIVITY = 0.5
TSIRELSON_MIN_GAP = 0.4142135623730951      # coincides with sqrt(2) - 1
TSIRELSON_NEGATIVITY = 0.20710678118654746  # (sqrt(2) - 1) / 2


class TestEnumerateVertices:
    def test_binary_2x2_has_16(self):
        assert len(enumerate_vertices(Scenario.binary())) == 16

    def test_dice_has_1296(self):
        assert len(enumerate_vertices(Scenario.dice())) == 36 * 36

    def test_3x2_binary_has_32(self):
        assert len(enumerate_vertices(Scenario.binary(3, 2))) == 8 * 4

    def test_cap(self):
        with pytest.raises(VertexCapError):
            enumerate_vertices(Scenario.dice(), cap=1000)

    def test_vertices_are_deterministic_behaviors(self):
        sc = Scenario.binary()
        v = enumerate_vertices(sc)[5]
        b = v.behavior(sc)
        assert b.prob(0, 0, v.alice[0], v.bob[0]) == 1.0


class TestLocalMembership:
    def test_lhv_inside_with_exact_weights(self):
        for _ in range(30):
            b = lhv_behavior(random_lhv_model(RNG))
            res = local_membership(b)
            assert res.inside
            assert res.residual <= 1e-9
            w = np.array(list(res.weights.values()))
            assert np.all(w >= 0.0)
            assert w.sum() == pytest.approx(1.0, abs=1e-9)
            # the weights reconstruct the behavior entrywise
            joint = weights_to_global_joint(b.scenario, res.weights)
            assert joint.max_marginal_deviation(b) <= 1e-9

    def test_pr_box_outside_with_verified_certificate(self):
        res = local_membership(pr_box())
        assert res.status == "outside"
        cert = res.certificate
        values = [cert.evaluate_vertex(v) for v in enumerate_vertices(pr_box().scenario)]
        assert max(values) == pytest.approx(cert.classical_bound, abs=1e-12)
        assert cert.value > cert.classical_bound + 1e-9
        assert cert.evaluate(pr_box()) == pytest.approx(cert.value, abs=1e-9)

    def test_tsirelson_outside(self):
        assert local_membership(tsirelson_behavior()).status == "outside"

    def test_boundary_flag(self):
        assert local_membership(dice_behavior("common-roll")).boundary
        assert not local_membership(pr_box()).boundary
        assert not local_membership(dice_behavior("independent")).boundary

    def test_agrees_with_scipy_oracle(self):
        for _ in range(40):
            b = random_ns_behavior(RNG)
            assert local_membership(b).inside == oracle_membership_inside(b)

    def test_duality_soundness_on_violating_behaviors(self):
        vertices = enumerate_vertices(Scenario.binary())
        for _ in range(20):
            b = random_violating_behavior(RNG)
            res = local_membership(b)
            assert res.status == "outside"
            cert = res.certificate
            for v in vertices:
                assert cert.evaluate_vertex(v) <= cert.classical_bound + 1e-12
            assert cert.evaluate(b) > cert.classical_bound + 1e-9

    def test_dice_membership(self):
        assert local_membership(dice_behavior("paper-demo")).inside


class TestGlobalJoint:
    def test_from_lhv_joints(self):
        model = random_lhv_model(RNG)
        b = lhv_behavior(model)
        joints, shared = lhv_compatible_joints(model)
        joint = build_global_joint(joints, b)
        assert joint.total() == pytest.approx(1.0, abs=1e-12)
        assert joint.max_marginal_deviation(b) <= 1e-9
        assert joint.bob_marginal() == pytest.approx(shared, abs=1e-12)

    def test_product_behavior_gives_full_product(self):
        pa, pb0, pb1 = np.array([0.3, 0.7]), np.array([0.6, 0.4]), np.array([0.2, 0.8])
        sc = Scenario.binary()
        tables = [[np.outer(pa, pb0), np.outer(pa, pb1)]] * 2
        b = Behavior.from_tables(sc, tables)
        joints = [build_compatible_joint(b, j) for j in range(2)]
        joint = build_global_joint(joints, b)
        expected = np.einsum("a,c,s,t->acst", pa, pa, pb0, pb1)
        assert joint.table == pytest.approx(expected, abs=1e-12)

    def test_tsirelson_joints_violate_invariance(self):
        b = tsirelson_behavior()
        joints = [build_compatible_joint(b, j) for j in range(2)]
        with pytest.raises(JointInvarianceError) as err:
            build_global_joint(joints, b)
        assert err.value.deviation > 0.1
        # the equality-event gap between the Bob-marginals obeys the bound
        marg0, marg1 = joints[0].bob_marginal(), joints[1].bob_marginal()
        gap = float(np.trace(marg0) - np.trace(marg1))
        assert gap >= SQRT2 - 1.0 - 1e-9

    def test_wrong_joint_count(self):
        b = pr_box()
        from bellkit import ScenarioMismatchError
        with pytest.raises(ScenarioMismatchError):
            build_global_joint([build_compatible_joint(b, 0)], b)


class TestMinInvarianceGap:
    def test_pr_box_forced_to_one(self):
        assert min_invariance_gap(pr_box()) == pytest.approx(PR_MIN_GAP, abs=1e-7)

    def test_tsirelson_regression_and_bound(self):
        value = min_invariance_gap(tsirelson_behavior())
        assert value == pytest.approx(TSIRELSON_MIN_GAP, abs=1e-7)
        assert value >= SQRT2 - 1.0 - 1e-7
        assert value <= 1.0

    def test_lhv_behaviors_reach_zero(self):
        for _ in range(15):
            b = lhv_behavior(random_lhv_model(RNG))
            value = min_invariance_gap(b)
            assert value <= 1e-9                      # invariant pair exists
            assert value >= (chsh_S(b, CANON) - 2.0) / 2.0 - 1e-7

    def test_matches_scipy_oracle(self):
        for _ in range(25):
            b = random_ns_behavior(RNG)
            assert min_invariance_gap(b) == pytest.approx(
                oracle_min_invariance_gap(b), abs=1e-7)

    def test_dominates_gap_lower_bound_and_construction(self):
        for _ in range(25):
            b = random_ns_behavior(RNG)
            value = min_invariance_gap(b)
            assert value >= (chsh_S(b, CANON) - 2.0) / 2.0 - 1e-7
            # the product construction attains some feasible gap
            joints = [build_compatible_joint(b, j) for j in range(2)]
            attained = float(np.trace(joints[0].bob_marginal())
                             - np.trace(joints[1].bob_marginal()))
            assert value <= attained + 1e-9

    def test_signaling_rejected(self):
        b, _ = signaling_behavior(RNG)
        with pytest.raises(NoSignalingError):
            min_invariance_gap(b)

    def test_permutation_orientation(self):
        # swapping A and A' negates the achievable-gap question
        b = tsirelson_behavior()
        flipped = min_invariance_gap(b, ChshPermutation(1, 0, 0, 1))
        assert flipped >= (chsh_S(b, ChshPermutation(1, 0, 0, 1)) - 2.0) / 2.0 - 1e-7


class TestMinTvSeparation:
    def test_pr_box(self):
        assert min_tv_separation(pr_box()) == pytest.approx(PR_MIN_TV, abs=1e-7)

    def test_lhv_is_zero(self):
        b = lhv_behavior(random_lhv_model(RNG))
        assert min_tv_separation(b) == pytest.approx(0.0, abs=1e-9)

    def test_tsirelson_bound(self):
        assert min_tv_separation(tsirelson_behavior()) >= SQRT2 - 1.0 - 1e-7

    def test_matches_scipy_oracle_and_dominates_gap(self):
        for _ in range(20):
            b = random_ns_behavior(RNG)
            tv = min_tv_separation(b)
            assert tv == pytest.approx(oracle_min_tv_separation(b), abs=1e-7)
            assert tv >= (chsh_S(b, CANON) - 2.0) / 2.0 - 1e-7
            assert tv >= min_invariance_gap(b) - 1e-7


class TestSignedInvariantJoint:
    def test_lhv_negativity_zero(self):
        for _ in range(15):
            b = lhv_behavior(random_lhv_model(RNG))
            res = signed_invariant_joint(b)
            assert res.negativity <= 1e-9
            assert res.table.min() >= -1e-9

    def test_pr_box_regression(self):
        res = signed_invariant_joint(pr_box())
        assert res.negativity == pytest.approx(PR_NEGATIVITY, abs=1e-9)
        assert res.negativity == pytest.approx(oracle_min_negativity(pr_box()), abs=1e-9)

    def test_tsirelson_regression(self):
        res = signed_invariant_joint(tsirelson_behavior())
        assert res.negativity == pytest.approx(TSIRELSON_NEGATIVITY, abs=1e-9)
        assert res.negativity > 0.0

    def test_marginals_reproduced_even_when_signed(self):
        for b in (pr_box(), tsirelson_behavior(), noisy_pr_box(0.9)):
            res = signed_invariant_joint(b)
            table = res.table
            for j, k in itertools.product(range(2), repeat=2):
                axes = tuple(i for i in range(4) if i not in (j, 2 + k))
                marg = table.sum(axis=axes)
                assert marg == pytest.approx(np.asarray(b.tables[j][k]), abs=1e-9)

    def test_negativity_matches_membership(self):
        for _ in range(25):
            b = random_ns_behavior(RNG)
            negativity = signed_invariant_joint(b).negativity
            inside = local_membership(b).inside
            assert (negativity <= 1e-9) == inside
            assert negativity == pytest.approx(oracle_min_negativity(b), abs=1e-7)

    def test_signaling_rejected(self):
        b, _ = signaling_behavior(RNG)
        with pytest.raises(NoSignalingError):
            signed_invariant_joint(b)


class TestFineEquivalence:
    """inside <=> a global joint exists <=> zero negativity (sampled)."""

    def test_three_way_equivalence(self):
        for _ in range(20):
            model = random_lhv_model(RNG)
            b = lhv_behavior(model)
            res = local_membership(b)
            assert res.inside
            joints, _ = lhv_compatible_joints(model)
            joint = build_global_joint(joints, b)
            assert joint.max_marginal_deviation(b) <= 1e-9
            assert signed_invariant_joint(b).negativity <= 1e-9

    def test_violating_behaviors_fail_all_three(self):
        for _ in range(10):
            b = random_violating_behavior(RNG)
            assert local_membership(b).status == "outside"
            joints = [build_compatible_joint(b, j) for j in range(2)]
            with pytest.raises(JointInvarianceError):
                build_global_joint(joints, b)
            assert signed_invariant_joint(b).negativity > 1e-9

    def test_inside_weights_are_a_global_joint(self):
        b = lhv_behavior(random_lhv_model(RNG))
        res = local_membership(b)
        joint = weights_to_global_joint(b.scenario, res.weights)
        assert joint.total() == pytest.approx(1.0, abs=1e-9)
        assert joint.table.min() >= 0.0
        # and its per-setting compatible joints share a Bob-marginal exactly
        c0 = joint.compatible_joint(0)
        c1 = joint.compatible_joint(1)
        assert c0.bob_marginal() == pytest.approx(c1.bob_marginal(), abs=1e-12)
