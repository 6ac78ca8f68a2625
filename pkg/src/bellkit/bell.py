"""CHSH quantities, the correlation conundrum bounds, and permutation scans.

Two equivalent forms are computed for every setting placement: the
probability form p(A=B)+p(A=B')+p(A'=B)+p(A'!=B') with classical bound 3,
and the correlator form S = E(A,B)+E(A,B')+E(A',B)-E(A',B') with classical
bound 2, E being p(equal)-p(unequal).  A violation lower-bounds how much any
compatible joint distribution of Bob's two quantities must depend on Alice's
setting choice: q(B=B') - q'(B=B') >= (S-2)/2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .core import Behavior, SettingIndexError


@dataclass(frozen=True)
class ChshPermutation:
    """Which settings play A, A', B, B' and how Bob's outcomes pair up.

    ``bob_swap`` swaps the two outcome labels at both chosen Bob settings
    before testing equality; it is only meaningful (and only enumerated)
    when those outcome sets are binary.  Together with the four setting
    placements this reaches all eight CHSH sign patterns.
    """

    alice: int
    alice_prime: int
    bob: int
    bob_prime: int
    bob_swap: bool = False

    def validate(self, behavior: Behavior) -> None:
        sc = behavior.scenario
        for x in (self.alice, self.alice_prime):
            if not 0 <= x < sc.alice_setting_count:
                raise SettingIndexError(f"alice setting {x} out of range")
        for y in (self.bob, self.bob_prime):
            if not 0 <= y < sc.bob_setting_count:
                raise SettingIndexError(f"bob setting {y} out of range")
        if self.alice == self.alice_prime or self.bob == self.bob_prime:
            raise SettingIndexError("A/A' and B/B' must be distinct settings")
        if self.bob_swap:
            for y in (self.bob, self.bob_prime):
                if len(sc.bob_outcomes[y]) != 2:
                    raise SettingIndexError(
                        f"outcome swap needs a binary outcome set at bob setting {y}")

    def bob_label_map(self, behavior: Behavior, y: int) -> dict[int, int]:
        """Outcome label -> label used for equality tests at Bob setting y."""
        labels = behavior.scenario.bob_outcomes[y]
        if self.bob_swap and y in (self.bob, self.bob_prime):
            return {labels[0]: labels[1], labels[1]: labels[0]}
        return {lab: lab for lab in labels}

    @property
    def label(self) -> str:
        tag = "swapped" if self.bob_swap else "identity"
        return (f"A=x{self.alice},A'=x{self.alice_prime},"
                f"B=y{self.bob},B'=y{self.bob_prime},pairing={tag}")


def canonical_permutation() -> ChshPermutation:
    return ChshPermutation(0, 1, 0, 1)


def _equality(behavior: Behavior, perm: ChshPermutation, x: int, y: int) -> float:
    """p(A_x = B_y) under the permutation's outcome pairing."""
    sc = behavior.scenario
    t = behavior.tables[x][y]
    bmap = perm.bob_label_map(behavior, y)
    total = 0.0
    for i, a in enumerate(sc.alice_outcomes[x]):
        for j, b in enumerate(sc.bob_outcomes[y]):
            if a == bmap[b]:
                total += t[i, j]
    return float(total)


def _four_probabilities(behavior: Behavior,
                        perm: ChshPermutation) -> tuple[float, float, float, float]:
    """(p(A=B), p(A=B'), p(A'=B), p(A'!=B')) for the placement."""
    perm.validate(behavior)
    p_ab = _equality(behavior, perm, perm.alice, perm.bob)
    p_abp = _equality(behavior, perm, perm.alice, perm.bob_prime)
    p_apb = _equality(behavior, perm, perm.alice_prime, perm.bob)
    p_apbp_neq = 1.0 - _equality(behavior, perm, perm.alice_prime, perm.bob_prime)
    return p_ab, p_abp, p_apb, p_apbp_neq


def chsh_probability_form(behavior: Behavior, perm: ChshPermutation) -> float:
    """p(A=B)+p(A=B')+p(A'=B)+p(A'!=B'); at most 3 for any joint distribution."""
    return float(sum(_four_probabilities(behavior, perm)))


def chsh_S(behavior: Behavior, perm: ChshPermutation) -> float:
    """E(A,B)+E(A,B')+E(A',B)-E(A',B'); classical bound 2.

    Computed through the same equality probabilities as the probability
    form, so S = 2*(probability form) - 4 holds identically.
    """
    return 2.0 * chsh_probability_form(behavior, perm) - 4.0


def gap_lower_bound(behavior: Behavior, perm: ChshPermutation) -> float:
    """(S-2)/2: floor on q(B=B') - q'(B=B') over all compatible joint pairs."""
    return (chsh_S(behavior, perm) - 2.0) / 2.0


@dataclass(frozen=True)
class ConundrumReport:
    """Implied bounds on the (unmeasured) relation between Bob's quantities.

    ``q_equal_lower`` bounds q(B=B') when Alice measures A;
    ``q_prime_unequal_lower`` bounds q'(B!=B') when she measures A';
    ``generalized_rhs`` is the floor on q(B=B') - q'(B=B').  The basic flag
    is set when all four measured probabilities exceed 75%, in which case
    both bounds exceed one half.
    """

    q_equal_lower: float
    q_prime_unequal_lower: float
    generalized_rhs: float
    basic_conundrum: bool

    def to_dict(self) -> dict:
        return {"q_equal_lower": float(self.q_equal_lower),
                "q_prime_unequal_lower": float(self.q_prime_unequal_lower),
                "generalized_rhs": float(self.generalized_rhs),
                "basic_conundrum": self.basic_conundrum}


def conundrum_report(behavior: Behavior, perm: ChshPermutation) -> ConundrumReport:
    p_ab, p_abp, p_apb, p_apbp_neq = _four_probabilities(behavior, perm)
    return ConundrumReport(
        q_equal_lower=p_ab + p_abp - 1.0,
        q_prime_unequal_lower=p_apb + p_apbp_neq - 1.0,
        generalized_rhs=(p_ab + p_abp + p_apb + p_apbp_neq) - 3.0,
        basic_conundrum=all(p > 0.75 for p in (p_ab, p_abp, p_apb, p_apbp_neq)),
    )


@dataclass(frozen=True)
class ChshReport:
    """Both CHSH forms plus the conundrum bounds for one permutation.

    ``probabilities`` are the four measured quantities in the probability
    form, in order p(A=B), p(A=B'), p(A'=B), p(A'!=B').
    """

    permutation: ChshPermutation
    probabilities: tuple[float, float, float, float]
    probability_form_lhs: float
    correlator_s: float
    violation: float          # max(0, S - 2)
    gap_lower_bound: float    # (S - 2) / 2
    q_equal_lower: float
    q_prime_unequal_lower: float
    is_max: bool = False

    def to_dict(self) -> dict:
        return {
            "permutation": self.permutation.label,
            "probabilities": [float(p) for p in self.probabilities],
            "probability_form_lhs": float(self.probability_form_lhs),
            "correlator_s": float(self.correlator_s),
            "violation": float(self.violation),
            "gap_lower_bound": float(self.gap_lower_bound),
            "q_equal_lower": float(self.q_equal_lower),
            "q_prime_unequal_lower": float(self.q_prime_unequal_lower),
            "is_max": self.is_max,
        }


def make_report(behavior: Behavior, perm: ChshPermutation, is_max: bool = False) -> ChshReport:
    probs = _four_probabilities(behavior, perm)
    p_ab, p_abp, p_apb, p_apbp_neq = probs
    lhs = p_ab + p_abp + p_apb + p_apbp_neq
    s = 2.0 * lhs - 4.0
    return ChshReport(
        permutation=perm,
        probabilities=probs,
        probability_form_lhs=lhs,
        correlator_s=s,
        violation=max(0.0, s - 2.0),
        gap_lower_bound=(s - 2.0) / 2.0,
        q_equal_lower=p_ab + p_abp - 1.0,
        q_prime_unequal_lower=p_apb + p_apbp_neq - 1.0,
        is_max=is_max,
    )


def enumerate_permutations(behavior: Behavior) -> list[ChshPermutation]:
    """All ordered 2+2 setting placements, with the binary outcome swap.

    A 2x2 scenario with binary outcomes yields the eight CHSH sign
    placements.  The swap variant is skipped at non-binary Bob settings
    (where it would not correspond to an outcome relabeling, and the
    resulting inequality would not be classically valid).
    """
    sc = behavior.scenario
    perms = []
    for xa, xap in itertools.permutations(range(sc.alice_setting_count), 2):
        for yb, ybp in itertools.permutations(range(sc.bob_setting_count), 2):
            perms.append(ChshPermutation(xa, xap, yb, ybp))
            if len(sc.bob_outcomes[yb]) == 2 and len(sc.bob_outcomes[ybp]) == 2:
                perms.append(ChshPermutation(xa, xap, yb, ybp, bob_swap=True))
    return perms


def all_permutations(behavior: Behavior) -> list[ChshReport]:
    """One ChshReport per inequivalent permutation; the max-S one is flagged."""
    perms = enumerate_permutations(behavior)
    values = [chsh_S(behavior, p) for p in perms]
    best = max(range(len(perms)), key=lambda i: values[i])
    return [make_report(behavior, p, is_max=(i == best)) for i, p in enumerate(perms)]


def max_report(behavior: Behavior) -> ChshReport:
    """The flagged max-S report from the permutation scan."""
    return next(r for r in all_permutations(behavior) if r.is_max)
