"""CHSH forms, permutation scans, conundrum bounds and their identities."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellkit import (
    ChshPermutation,
    all_permutations,
    canonical_permutation,
    chsh_S,
    chsh_probability_form,
    conundrum_report,
    dice_behavior,
    from_equality_probabilities,
    gap_lower_bound,
    lhv_behavior,
    max_report,
    mix,
    noisy_pr_box,
    pr_box,
    SettingIndexError,
    tsirelson_behavior,
)
from conftest import random_lhv_model, random_ns_behavior

RNG = np.random.default_rng(271828)
CANON = canonical_permutation()

SQRT2 = math.sqrt(2.0)


class TestProbabilityForm:
    def test_pr_box_reaches_four(self):
        assert chsh_probability_form(pr_box(), CANON) == 4.0

    def test_paper_numeric_example(self):
        b = from_equality_probabilities(0.8, 0.8, 0.8, 0.3)  # p(A'!=B') = 0.7
        assert chsh_probability_form(b, CANON) == pytest.approx(3.1, abs=1e-12)
        assert chsh_S(b, CANON) == pytest.approx(2.2, abs=1e-12)

    def test_tsirelson_point(self):
        b = tsirelson_behavior()
        assert chsh_probability_form(b, CANON) == pytest.approx(2.0 + SQRT2, abs=1e-9)
        assert chsh_S(b, CANON) == pytest.approx(2.0 * SQRT2, abs=1e-9)

    def test_uniform_is_zero_s(self):
        b = from_equality_probabilities(0.5, 0.5, 0.5, 0.5)
        assert chsh_S(b, CANON) == pytest.approx(0.0, abs=1e-15)

    def test_bad_permutation(self):
        with pytest.raises(SettingIndexError):
            chsh_S(pr_box(), ChshPermutation(0, 0, 0, 1))
        with pytest.raises(SettingIndexError):
            chsh_S(pr_box(), ChshPermutation(0, 2, 0, 1))


class TestPermutationScan:
    def test_binary_scan_has_eight_entries(self):
        reports = all_permutations(pr_box())
        assert len(reports) == 8
        assert sum(r.is_max for r in reports) == 1

    def test_pr_box_max_at_canonical(self):
        best = max_report(pr_box())
        assert best.correlator_s == 4.0
        assert best.permutation == ChshPermutation(0, 1, 0, 1)
        # enumerate all placements: no |S| beyond the algebraic maximum
        for r in all_permutations(pr_box()):
            assert abs(r.correlator_s) <= 4.0 + 1e-12

    def test_scan_covers_all_sign_patterns(self):
        # the eight reports realize the eight odd-minus-count sign vectors
        b = from_equality_probabilities(0.9, 0.8, 0.7, 0.4)
        e = 2.0 * np.array([0.9, 0.8, 0.7, 0.4]) - 1.0  # E(x,y) row-major
        seen = set()
        for r in all_permutations(b):
            # recover the sign vector by comparing against the correlators
            for pattern in _odd_sign_patterns():
                if np.isclose(np.dot(pattern, e), r.correlator_s, atol=1e-12):
                    seen.add(tuple(pattern))
        assert len(seen) == 8

    def test_dice_scan_skips_outcome_swaps(self):
        reports = all_permutations(dice_behavior("common-roll"))
        assert len(reports) == 4
        for r in reports:
            assert r.correlator_s == pytest.approx(2.0, abs=1e-12)

    def test_noisy_pr_at_half_visibility_hits_classical_bound(self):
        reports = all_permutations(noisy_pr_box(0.5))
        assert max(r.correlator_s for r in reports) == pytest.approx(2.0, abs=1e-12)

    def test_lhv_soundness_sample(self):
        for _ in range(50):
            b = lhv_behavior(random_lhv_model(RNG))
            for r in all_permutations(b):
                assert r.correlator_s <= 2.0 + 1e-9


def _odd_sign_patterns():
    out = []
    for bits in range(16):
        pattern = [1 - 2 * ((bits >> k) & 1) for k in range(4)]
        if pattern.count(-1) % 2 == 1:
            out.append(pattern)
    return out


class TestConundrum:
    def test_tsirelson_values(self):
        e = 0.5 * (1.0 + 1.0 / SQRT2)
        rep = conundrum_report(from_equality_probabilities(e, e, e, 1.0 - e), CANON)
        assert rep.q_equal_lower == pytest.approx(1.0 / SQRT2, abs=1e-12)
        assert rep.q_prime_unequal_lower == pytest.approx(1.0 / SQRT2, abs=1e-12)
        assert rep.generalized_rhs == pytest.approx(SQRT2 - 1.0, abs=1e-12)
        assert rep.basic_conundrum  # all four above 75%

    def test_boundary_75_percent(self):
        rep = conundrum_report(from_equality_probabilities(0.75, 0.75, 0.75, 0.25), CANON)
        assert rep.q_equal_lower == pytest.approx(0.5, abs=1e-12)
        assert rep.q_prime_unequal_lower == pytest.approx(0.5, abs=1e-12)
        assert rep.generalized_rhs == pytest.approx(0.0, abs=1e-12)
        assert not rep.basic_conundrum  # strictly-greater threshold

    def test_pr_box_extreme(self):
        rep = conundrum_report(pr_box(), CANON)
        assert rep.q_equal_lower == 1.0
        assert rep.q_prime_unequal_lower == 1.0
        assert rep.generalized_rhs == 1.0
        assert rep.basic_conundrum


class TestGapLowerBound:
    def test_tsirelson(self):
        assert gap_lower_bound(tsirelson_behavior(), CANON) == pytest.approx(
            SQRT2 - 1.0, abs=1e-9)

    def test_classical_boundary(self):
        assert gap_lower_bound(dice_behavior("common-roll"), CANON) == pytest.approx(
            0.0, abs=1e-12)

    def test_pr_box(self):
        assert gap_lower_bound(pr_box(), CANON) == 1.0


class TestIdentities:
    def test_linear_relation_on_corpus(self, behavior_corpus):
        for name, b in behavior_corpus:
            for r in all_permutations(b):
                lhs = r.probability_form_lhs - 3.0
                rhs = (r.correlator_s - 2.0) / 2.0
                assert lhs == pytest.approx(rhs, abs=1e-12), name
                assert -4.0 - 1e-12 <= r.correlator_s <= 4.0 + 1e-12, name
                assert r.probability_form_lhs == pytest.approx(
                    (r.correlator_s + 4.0) / 2.0, abs=1e-12), name

    @given(st.floats(0.0, 1.0), st.tuples(*(st.floats(0.0, 1.0) for _ in range(8))))
    def test_mixing_affinity(self, lam, eq_probs):
        b1 = from_equality_probabilities(*eq_probs[:4])
        b2 = from_equality_probabilities(*eq_probs[4:])
        mixed = mix(b1, b2, lam)
        expected = lam * chsh_S(b1, CANON) + (1.0 - lam) * chsh_S(b2, CANON)
        assert chsh_S(mixed, CANON) == pytest.approx(expected, abs=1e-9)

    def test_mixing_affinity_random_ns(self):
        for _ in range(20):
            b1, b2 = random_ns_behavior(RNG), random_ns_behavior(RNG)
            lam = RNG.random()
            mixed = mix(b1, b2, lam)
            for perm in (CANON, ChshPermutation(1, 0, 0, 1, bob_swap=True)):
                expected = lam * chsh_S(b1, perm) + (1 - lam) * chsh_S(b2, perm)
                assert chsh_S(mixed, perm) == pytest.approx(expected, abs=1e-9)
