"""Reference correlation sources: hidden-variable models, the extreme
no-signaling box, dice tables, and two-qubit polarization measurements.

All generators return validated no-signaling behaviors; they are the test
bed for the analysis modules and the payload of the CLI ``generate``
subcommand.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import Behavior, BellkitError, SchemaError, Scenario, _require_keys
from .nosignal import CompatibleJoint


class ModelDimensionError(BellkitError):
    """A model's arrays do not match the scenario it is paired with."""


@dataclass(frozen=True)
class LHVModel:
    """Hidden variable lambda with local response distributions.

    ``weights[l]`` is the prior of hidden value l; ``alice_responses[x]``
    has shape (lambda_count, |A_x|) giving p(a|x, l), and likewise
    ``bob_responses[y]``.  The induced behavior is
    p(a,b|x,y) = sum_l w_l p(a|x,l) p(b|y,l).
    """

    scenario: Scenario
    weights: np.ndarray
    alice_responses: tuple[np.ndarray, ...]
    bob_responses: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        w = np.ascontiguousarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alice_responses",
                           tuple(np.ascontiguousarray(r, dtype=float)
                                 for r in self.alice_responses))
        object.__setattr__(self, "bob_responses",
                           tuple(np.ascontiguousarray(r, dtype=float)
                                 for r in self.bob_responses))
        sc = self.scenario
        L = len(w)
        if L == 0:
            raise ModelDimensionError("model needs at least one hidden value")
        if w.min() < 0 or abs(w.sum() - 1.0) > 1e-9:
            raise ModelDimensionError("hidden-variable weights must be a distribution")
        if len(self.alice_responses) != sc.alice_setting_count:
            raise ModelDimensionError("need one alice response table per setting")
        if len(self.bob_responses) != sc.bob_setting_count:
            raise ModelDimensionError("need one bob response table per setting")
        for lab, tables, outcomes in (("alice", self.alice_responses, sc.alice_outcomes),
                                      ("bob", self.bob_responses, sc.bob_outcomes)):
            for s, r in enumerate(tables):
                if r.shape != (L, len(outcomes[s])):
                    raise ModelDimensionError(
                        f"{lab} responses at setting {s} have shape {r.shape}, "
                        f"expected ({L}, {len(outcomes[s])})")
                if r.min() < 0 or np.max(np.abs(r.sum(axis=1) - 1.0)) > 1e-9:
                    raise ModelDimensionError(
                        f"{lab} responses at setting {s} are not distributions")

    @property
    def lambda_count(self) -> int:
        return len(self.weights)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(),
                "weights": [float(v) for v in self.weights],
                "alice_responses": [r.tolist() for r in self.alice_responses],
                "bob_responses": [r.tolist() for r in self.bob_responses]}

    @classmethod
    def from_dict(cls, data: dict) -> "LHVModel":
        _require_keys(data, {"scenario", "weights", "alice_responses", "bob_responses"},
                      where="model file")
        sc = Scenario.from_dict(data["scenario"])
        try:
            weights = np.asarray(data["weights"], dtype=float)
            # responses arrive as [setting][lambda][outcome]
            alice = tuple(np.asarray(r, dtype=float) for r in data["alice_responses"])
            bob = tuple(np.asarray(r, dtype=float) for r in data["bob_responses"])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"model file arrays malformed: {exc}") from exc
        return cls(sc, weights, alice, bob)


def load_lhv_model(text: str) -> LHVModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return LHVModel.from_dict(data)


def lhv_behavior(model: LHVModel, scenario: Scenario | None = None) -> Behavior:
    """p(a,b|x,y) = sum_l w_l p(a|x,l) p(b|y,l); no-signaling by construction."""
    if scenario is not None and scenario != model.scenario:
        raise ModelDimensionError("model was built for a different scenario")
    sc = model.scenario
    tables = []
    for x in range(sc.alice_setting_count):
        row = []
        for y in range(sc.bob_setting_count):
            ra, rb = model.alice_responses[x], model.bob_responses[y]
            row.append(np.einsum("l,la,lb->ab", model.weights, ra, rb))
        tables.append(row)
    return Behavior.from_tables(sc, tables)


def lhv_compatible_joints(model: LHVModel) -> tuple[list[CompatibleJoint], np.ndarray]:
    """Per-setting joints q_j(a, b_1..b_n) = sum_l w_l p(a|j,l) prod_y p(b_y|y,l).

    Their Bob-marginal is the same sum without the Alice factor, hence
    identical across settings: joint invariance holds for every such model.
    """
    sc = model.scenario
    n = sc.bob_setting_count
    bob_letters = [chr(ord("s") + y) for y in range(n)]
    if n > 7:
        raise ModelDimensionError("einsum spelling supports at most 7 bob settings")
    bob_ops = [model.bob_responses[y] for y in range(n)]
    bob_spec = ",".join(f"l{ch}" for ch in bob_letters)
    joints = []
    for j in range(sc.alice_setting_count):
        spec = f"l,la,{bob_spec}->a{''.join(bob_letters)}"
        table = np.einsum(spec, model.weights, model.alice_responses[j], *bob_ops)
        joints.append(CompatibleJoint(sc, j, table))
    shared = np.einsum(f"l,{bob_spec}->{''.join(bob_letters)}", model.weights, *bob_ops)
    return joints, shared


def deterministic_model(scenario: Scenario, alice_outcomes: list[int],
                        bob_outcomes: list[int]) -> LHVModel:
    """Single hidden value, fixed outcome per setting."""
    alice = []
    for x, a in enumerate(alice_outcomes):
        r = np.zeros((1, len(scenario.alice_outcomes[x])))
        r[0, scenario.alice_index(x, a)] = 1.0
        alice.append(r)
    bob = []
    for y, b in enumerate(bob_outcomes):
        r = np.zeros((1, len(scenario.bob_outcomes[y])))
        r[0, scenario.bob_index(y, b)] = 1.0
        bob.append(r)
    return LHVModel(scenario, np.array([1.0]), tuple(alice), tuple(bob))


# ----------------------------------------------------------------------
# standard boxes
# ----------------------------------------------------------------------

def from_equality_probabilities(e00: float, e01: float, e10: float,
                                e11: float) -> Behavior:
    """Binary 2x2 behavior with prescribed equality probability per pair.

    Each table puts e/2 on the diagonal and (1-e)/2 off it, so all marginals
    are uniform and the behavior is no-signaling for any choice of e's.
    """
    tables = []
    for e in ((e00, e01), (e10, e11)):
        row = []
        for v in e:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"equality probability {v} outside [0, 1]")
            row.append(np.array([[v / 2, (1 - v) / 2], [(1 - v) / 2, v / 2]]))
        tables.append(row)
    return Behavior.from_tables(Scenario.binary(), tables)


def pr_box() -> Behavior:
    """The extreme no-signaling box: equal outcomes except when both labs
    use their second setting, where the outcomes always differ.  All four
    CHSH probabilities are 1 and S = 4."""
    return from_equality_probabilities(1.0, 1.0, 1.0, 0.0)


def noisy_pr_box(visibility: float) -> Behavior:
    """Isotropic mixture v * PR + (1 - v) * uniform noise."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility {visibility} outside [0, 1]")
    v = visibility
    return from_equality_probabilities(*(v * e + (1 - v) * 0.5 for e in (1, 1, 1, 0)))


def dice_behavior(kind: str = "common-roll") -> Behavior:
    """Six-sided dice tables for the two-lab narrative.

    independent: both labs roll independent fair dice.
    common-roll: both labs always see the same fair value.
    paper-demo:  a hidden common value l; Alice reports l at either setting,
                 Bob reports l at his first setting and 7-l at his second.
                 Perfect correlation plus perfect anticorrelation, sitting
                 exactly on the classical boundary S = 2.  The concrete
                 tables are this package's own demo choice.
    """
    sc = Scenario.dice()
    if kind == "independent":
        t = np.full((6, 6), 1.0 / 36.0)
        return Behavior.from_tables(sc, [[t, t], [t, t]])
    if kind == "common-roll":
        t = np.eye(6) / 6.0
        return Behavior.from_tables(sc, [[t, t], [t, t]])
    if kind == "paper-demo":
        same = np.eye(6) / 6.0
        flipped = np.fliplr(np.eye(6)) / 6.0     # b = 7 - a for faces 1..6
        return Behavior.from_tables(sc, [[same, flipped], [same, flipped]])
    raise ValueError(f"unknown dice behavior kind {kind!r}")


def dice_demo_model() -> LHVModel:
    """The hidden-variable model that generates dice_behavior('paper-demo')."""
    sc = Scenario.dice()
    L = 6
    point = np.eye(L)                             # p(outcome index|l) for "report l"
    flipped = np.fliplr(np.eye(L))                # "report 7 - l"
    return LHVModel(sc, np.full(L, 1.0 / L),
                    (point, point), (point, flipped))


# ----------------------------------------------------------------------
# two-qubit polarization measurements
# ----------------------------------------------------------------------

def maximally_correlated_state() -> np.ndarray:
    """(|00> + |11>)/sqrt(2): aligned polarizers give equal outcomes."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1.0 / math.sqrt(2.0)
    return psi


def singlet_state() -> np.ndarray:
    """(|01> - |10>)/sqrt(2): the anticorrelated variant."""
    psi = np.zeros(4, dtype=complex)
    psi[1] = 1.0 / math.sqrt(2.0)
    psi[2] = -1.0 / math.sqrt(2.0)
    return psi


@dataclass(frozen=True)
class QuantumSetup:
    """A pure two-qubit state plus one polarizer angle per setting.

    Outcome 1 projects onto (cos t, sin t) on the local qubit, outcome 0
    onto the orthogonal complement.  Angles are radians.
    """

    state: np.ndarray
    alice_angles: tuple[float, ...]
    bob_angles: tuple[float, ...]

    def __post_init__(self) -> None:
        psi = np.ascontiguousarray(self.state, dtype=complex)
        psi.flags.writeable = False
        object.__setattr__(self, "state", psi)
        object.__setattr__(self, "alice_angles", tuple(float(t) for t in self.alice_angles))
        object.__setattr__(self, "bob_angles", tuple(float(t) for t in self.bob_angles))
        if psi.shape != (4,):
            raise ValueError(f"state must be a length-4 amplitude vector, got shape {psi.shape}")
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm!r} differs from 1 by more than 1e-12")
        if not self.alice_angles or not self.bob_angles:
            raise ValueError("need at least one measurement angle per lab")
        for t in self.alice_angles + self.bob_angles:
            if not math.isfinite(t):
                raise ValueError("angles must be finite")

    def scenario(self) -> Scenario:
        return Scenario.binary(len(self.alice_angles), len(self.bob_angles))


def _outcome_vector(theta: float, outcome: int) -> np.ndarray:
    if outcome == 1:
        return np.array([math.cos(theta), math.sin(theta)], dtype=complex)
    return np.array([-math.sin(theta), math.cos(theta)], dtype=complex)


def quantum_behavior(setup: QuantumSetup) -> Behavior:
    """Born-rule tables p(a,b|x,y) = |<v_a(x) (x) v_b(y), psi>|^2.

    For the maximally correlated state the equality probability is
    cos^2(alpha_x - beta_y).
    """
    sc = setup.scenario()
    tables = []
    for alpha in setup.alice_angles:
        row = []
        for beta in setup.bob_angles:
            t = np.zeros((2, 2))
            for a in range(2):
                va = _outcome_vector(alpha, a)
                for b in range(2):
                    vb = _outcome_vector(beta, b)
                    amp = np.vdot(np.kron(va, vb), setup.state)
                    t[a, b] = (amp * amp.conjugate()).real
            row.append(t)
        tables.append(row)
    return Behavior.from_tables(sc, tables, tol=1e-12)


def tsirelson_setup(singlet: bool = False) -> QuantumSetup:
    """Angles 0, 45 and 22.5, -22.5 degrees on the correlated state.

    This standard choice attains the quantum maximum S = 2 sqrt(2) (all four
    CHSH probabilities equal (1 + 1/sqrt(2))/2); the angles are verified
    numerically in the test suite, including local optimality.
    """
    state = singlet_state() if singlet else maximally_correlated_state()
    return QuantumSetup(state,
                        (0.0, math.radians(45.0)),
                        (math.radians(22.5), math.radians(-22.5)))


def tsirelson_behavior() -> Behavior:
    return quantum_behavior(tsirelson_setup())


def polarizer_lhv_model(alice_angles: tuple[float, ...],
                        bob_angles: tuple[float, ...],
                        grid: int = 180) -> LHVModel:
    """Classical polarizer model: a shared hidden polarization angle.

    The hidden value is an angle on a uniform grid; a photon passes a
    polarizer at angle t exactly when the axes are within 45 degrees
    (cos(2(t - l)) > 0).  Deterministic responses, so every behavior it
    generates respects the classical bound S <= 2.
    """
    sc = Scenario.binary(len(alice_angles), len(bob_angles))
    lambdas = np.arange(grid) * (math.pi / grid)

    def responses(angles):
        out = []
        for t in angles:
            passes = (np.cos(2.0 * (t - lambdas)) > 0.0).astype(float)
            r = np.zeros((grid, 2))
            r[:, 1] = passes
            r[:, 0] = 1.0 - passes
            out.append(r)
        return tuple(out)

    return LHVModel(sc, np.full(grid, 1.0 / grid),
                    responses(alice_angles), responses(bob_angles))
