"""Shared fixtures and seeded random samplers for the test suite."""

import itertools

import numpy as np
import pytest

from bellkit import (
    Behavior,
    LHVModel,
    Scenario,
    dice_behavior,
    from_equality_probabilities,
    lhv_behavior,
    mix,
    noisy_pr_box,
    pr_box,
    quantum_behavior,
    tsirelson_behavior,
    QuantumSetup,
    maximally_correlated_state,
)


def random_lhv_model(rng: np.random.Generator, scenario: Scenario | None = None,
                     max_lambdas: int = 5) -> LHVModel:
    """A random hidden-variable model with Dirichlet weights and responses."""
    sc = scenario or Scenario.binary()
    lam = int(rng.integers(2, max_lambdas + 1))
    weights = rng.dirichlet(np.ones(lam))
    alice = tuple(rng.dirichlet(np.ones(len(sc.alice_outcomes[x])), size=lam)
                  for x in range(sc.alice_setting_count))
    bob = tuple(rng.dirichlet(np.ones(len(sc.bob_outcomes[y])), size=lam)
                for y in range(sc.bob_setting_count))
    return LHVModel(sc, weights, alice, bob)


def _ns_vertex_tables(alpha: int, beta: int, gamma: int) -> list:
    """The eight extremal nonlocal boxes: a xor b = xy xor ax xor by xor g."""
    tables = []
    for x in range(2):
        row = []
        for y in range(2):
            t = np.zeros((2, 2))
            rhs = (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma
            for a, b in itertools.product(range(2), repeat=2):
                if (a ^ b) == rhs:
                    t[a, b] = 0.5
            row.append(t)
        tables.append(row)
    return tables


def ns_polytope_vertices() -> list[Behavior]:
    """All 24 vertices of the binary 2x2 no-signaling polytope."""
    sc = Scenario.binary()
    vertices = []
    for aa in itertools.product(range(2), repeat=2):
        for bb in itertools.product(range(2), repeat=2):
            tables = []
            for x in range(2):
                row = []
                for y in range(2):
                    t = np.zeros((2, 2))
                    t[aa[x], bb[y]] = 1.0
                    row.append(t)
                tables.append(row)
            vertices.append(Behavior.from_tables(sc, tables))
    for alpha, beta, gamma in itertools.product(range(2), repeat=3):
        vertices.append(Behavior.from_tables(sc, _ns_vertex_tables(alpha, beta, gamma)))
    return vertices


_NS_VERTICES = ns_polytope_vertices()


def random_ns_behavior(rng: np.random.Generator) -> Behavior:
    """Uniformly-weighted random point of the binary 2x2 no-signaling polytope,
    alternated with random hidden-variable behaviors."""
    if rng.random() < 0.5:
        return lhv_behavior(random_lhv_model(rng))
    w = rng.dirichlet(np.ones(len(_NS_VERTICES)))
    tables = [[sum(wi * v.tables[x][y] for wi, v in zip(w, _NS_VERTICES))
               for y in range(2)] for x in range(2)]
    return Behavior.from_tables(Scenario.binary(), tables)


def random_violating_behavior(rng: np.random.Generator) -> Behavior:
    """PR box mixed with a random local behavior at visibility >= 0.85,
    which forces the canonical-permutation S to at least 3.1."""
    v = 0.85 + 0.15 * rng.random()
    return mix(pr_box(), lhv_behavior(random_lhv_model(rng)), v)


def signaling_behavior(rng: np.random.Generator) -> tuple[Behavior, float]:
    """Product behavior whose Alice marginal at x=0 shifts by a planted delta
    between Bob's settings; returns (behavior, delta)."""
    sc = Scenario.binary()
    r = 0.1 + 0.3 * rng.random()
    delta = 0.05 + 0.45 * rng.random()
    pb = rng.dirichlet(np.ones(2))
    pa0 = np.array([r, 1.0 - r])
    pa1 = np.array([r + delta, 1.0 - r - delta])
    pa_other = rng.dirichlet(np.ones(2))
    tables = [[np.outer(pa0, pb), np.outer(pa1, pb)],
              [np.outer(pa_other, pb), np.outer(pa_other, pb)]]
    behavior = Behavior.from_tables(sc, tables)
    planted = float(np.max(np.abs(pa1 - pa0)))
    return behavior, planted


def random_quantum_behavior(rng: np.random.Generator) -> Behavior:
    angles = rng.uniform(0.0, np.pi, size=4)
    return quantum_behavior(QuantumSetup(maximally_correlated_state(),
                                         (angles[0], angles[1]),
                                         (angles[2], angles[3])))


@pytest.fixture(scope="session")
def behavior_corpus() -> list[tuple[str, Behavior]]:
    """Named behaviors exercised by the cross-cutting identity checks."""
    rng = np.random.default_rng(7041776)
    corpus = [
        ("pr-box", pr_box()),
        ("noisy-pr-0.5", noisy_pr_box(0.5)),
        ("tsirelson", tsirelson_behavior()),
        ("dice-independent", dice_behavior("independent")),
        ("dice-common-roll", dice_behavior("common-roll")),
        ("dice-paper-demo", dice_behavior("paper-demo")),
        ("uniform", from_equality_probabilities(0.5, 0.5, 0.5, 0.5)),
        ("paper-80-80-80-70", from_equality_probabilities(0.8, 0.8, 0.8, 0.3)),
    ]
    corpus += [(f"lhv-{i}", lhv_behavior(random_lhv_model(rng))) for i in range(10)]
    corpus += [(f"ns-{i}", random_ns_behavior(rng)) for i in range(10)]
    corpus += [(f"quantum-{i}", random_quantum_behavior(rng)) for i in range(5)]
    return corpus
