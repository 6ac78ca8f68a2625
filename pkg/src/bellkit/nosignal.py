"""No-signaling checks and compatible joint distributions.

No-signaling from Bob to Alice (her marginals do not depend on his setting
choice) is equivalent to the existence, for each Alice setting j, of a joint
distribution q_j over Alice's setting-j outcome and ALL of Bob's outcomes
that reproduces the measured pairwise tables as marginals.  This module
checks the former and constructs the canonical product witness for the
latter.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .core import (
    TOL_NORM,
    Behavior,
    BellkitError,
    EmpiricalBehavior,
    Scenario,
    ScenarioMismatchError,
    ValidationReport,
)


class NoSignalingError(BellkitError):
    """A construction requiring no-signaling was given a signaling behavior."""

    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


@dataclass(frozen=True)
class CompatibleJoint:
    """Distribution q_j(a_j, b_1, ..., b_n) for one Alice setting j.

    ``table`` has shape (|A_j|, |B_1|, ..., |B_n|) in declared label order.
    Marginalizing out all Bob axes but the k-th must reproduce the measured
    p(a_j, b_k | j, k).
    """

    scenario: Scenario
    j: int
    table: np.ndarray

    def __post_init__(self) -> None:
        t = np.ascontiguousarray(self.table, dtype=float)
        t.flags.writeable = False
        object.__setattr__(self, "table", t)
        expected = (len(self.scenario.alice_outcomes[self.j]),) + tuple(
            len(s) for s in self.scenario.bob_outcomes)
        if self.table.shape != expected:
            raise ScenarioMismatchError(
                f"joint table shape {self.table.shape} does not match scenario shape {expected}")

    def bob_marginal(self) -> np.ndarray:
        """q_j(b_1, ..., b_n), the Alice outcome summed out."""
        return self.table.sum(axis=0)

    def pair_marginal(self, k: int) -> np.ndarray:
        """q_j(a_j, b_k): all Bob axes but the k-th summed out."""
        axes = tuple(1 + i for i in range(self.scenario.bob_setting_count) if i != k)
        return self.table.sum(axis=axes) if axes else self.table

    def to_dict(self) -> dict:
        entries = []
        it = np.nditer(self.table, flags=["multi_index"])
        for v in it:
            if v != 0.0:
                idx = it.multi_index
                entries.append({
                    "a": self.scenario.alice_outcomes[self.j][idx[0]],
                    "bs": [self.scenario.bob_outcomes[k][idx[1 + k]]
                           for k in range(self.scenario.bob_setting_count)],
                    "q": float(v),
                })
        return {"j": self.j, "entries": entries}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def alice_marginal(behavior: Behavior, x: int, y: int) -> np.ndarray:
    """p(a|x) computed from the (x,y) table: sum over Bob's outcomes."""
    return behavior.table(x, y).sum(axis=1)


def bob_marginal(behavior: Behavior, x: int, y: int) -> np.ndarray:
    """p(b|y) computed from the (x,y) table: sum over Alice's outcomes."""
    return behavior.table(x, y).sum(axis=0)


def _direction_deviation(behavior: Behavior, bob_to_alice: bool) -> float:
    """Max |marginal under one remote setting - marginal under another|."""
    sc = behavior.scenario
    worst = 0.0
    if bob_to_alice:
        for x in range(sc.alice_setting_count):
            margs = [alice_marginal(behavior, x, y) for y in range(sc.bob_setting_count)]
            for m1, m2 in itertools.combinations(margs, 2):
                worst = max(worst, float(np.max(np.abs(m1 - m2))))
    else:
        for y in range(sc.bob_setting_count):
            margs = [bob_marginal(behavior, x, y) for x in range(sc.alice_setting_count)]
            for m1, m2 in itertools.combinations(margs, 2):
                worst = max(worst, float(np.max(np.abs(m1 - m2))))
    return worst


def check_no_signaling(behavior: Behavior, tol: float = TOL_NORM) -> ValidationReport:
    """Check marginal invariance in both directions.

    Reports, per direction, the maximum over settings and outcomes of the
    difference between the lab's marginal computed under different remote
    settings; a direction passes iff that maximum is at most ``tol``.
    """
    dev_ba = _direction_deviation(behavior, bob_to_alice=True)
    dev_ab = _direction_deviation(behavior, bob_to_alice=False)
    return ValidationReport(
        normalized=True,  # Behavior construction enforces normalization
        no_signaling_bob_to_alice=dev_ba <= tol,
        bob_to_alice_deviation=dev_ba,
        no_signaling_alice_to_bob=dev_ab <= tol,
        alice_to_bob_deviation=dev_ab,
        tolerance=tol,
    )


@dataclass(frozen=True)
class EmpiricalNoSignalingReport:
    """z-score no-signaling check for finite-run data."""

    max_z_bob_to_alice: float
    max_z_alice_to_bob: float
    threshold: float

    @property
    def passed(self) -> bool:
        return (self.max_z_bob_to_alice <= self.threshold
                and self.max_z_alice_to_bob <= self.threshold)

    def to_dict(self) -> dict:
        return {"max_z_bob_to_alice": float(self.max_z_bob_to_alice),
                "max_z_alice_to_bob": float(self.max_z_alice_to_bob),
                "threshold": float(self.threshold),
                "passed": self.passed}


def check_no_signaling_empirical(emp: EmpiricalBehavior,
                                 threshold: float = 5.0) -> EmpiricalNoSignalingReport:
    """Compare marginal frequencies across remote settings in z-score units.

    The statistic per (setting, outcome, remote pair) is
    |f1 - f2| / sqrt(se1^2 + se2^2) with binomial standard errors; pairs
    with no runs are skipped.  An exact mismatch at zero standard error
    counts as an infinite z.
    """
    sc = emp.scenario

    def z_for(margs: list[tuple[np.ndarray, int]]) -> float:
        worst = 0.0
        for (f1, n1), (f2, n2) in itertools.combinations(margs, 2):
            var = f1 * (1 - f1) / n1 + f2 * (1 - f2) / n2
            diff = np.abs(f1 - f2)
            with np.errstate(divide="ignore", invalid="ignore"):
                z = np.where(diff == 0, 0.0, diff / np.sqrt(var))
            worst = max(worst, float(np.max(z)))
        return worst

    worst_ba = 0.0
    for x in range(sc.alice_setting_count):
        margs = [(emp.frequency(x, y).sum(axis=1), emp.total(x, y))
                 for y in range(sc.bob_setting_count) if emp.total(x, y) > 0]
        worst_ba = max(worst_ba, z_for(margs))
    worst_ab = 0.0
    for y in range(sc.bob_setting_count):
        margs = [(emp.frequency(x, y).sum(axis=0), emp.total(x, y))
                 for x in range(sc.alice_setting_count) if emp.total(x, y) > 0]
        worst_ab = max(worst_ab, z_for(margs))
    return EmpiricalNoSignalingReport(worst_ba, worst_ab, threshold)


def build_compatible_joint(behavior: Behavior, j: int,
                           tol_ns: float = TOL_NORM) -> CompatibleJoint:
    """Product construction q(a, b_1..b_n) = prod_k p(a, b_k|j,k) / p(a)^(n-1).

    Requires no-signaling from Bob to Alice (otherwise p(a) is ambiguous and
    the construction cannot reproduce the measured marginals).  Outcomes
    with p(a) = 0 carry no mass.
    """
    sc = behavior.scenario
    sc.check_settings(j, 0)
    dev = _direction_deviation(behavior, bob_to_alice=True)
    if dev > tol_ns:
        raise NoSignalingError(
            f"behavior signals from Bob to Alice (deviation {dev:.3e} > {tol_ns:g})", dev)

    n = sc.bob_setting_count
    margs = np.stack([alice_marginal(behavior, j, y) for y in range(n)])
    p_a = margs.mean(axis=0)

    shape = (len(sc.alice_outcomes[j]),) + tuple(len(s) for s in sc.bob_outcomes)
    table = np.zeros(shape)
    for i, pa in enumerate(p_a):
        if pa <= 0.0:
            continue
        slab = np.ones(shape[1:])
        for k in range(n):
            bshape = [1] * n
            bshape[k] = shape[1 + k]
            slab = slab * behavior.tables[j][k][i].reshape(bshape)
        table[i] = slab / pa ** (n - 1)
    return CompatibleJoint(sc, j, table)


def verify_compatibility(joint: CompatibleJoint, behavior: Behavior,
                         tol: float = TOL_NORM) -> tuple[bool, float]:
    """Do the joint's pair marginals reproduce the measured tables?

    Returns (ok, max deviation) where the deviation is taken entrywise over
    every Bob setting's reconstructed table, plus the normalization defect.
    """
    if joint.scenario != behavior.scenario:
        raise ScenarioMismatchError("joint and behavior use different scenarios")
    worst = abs(float(joint.table.sum()) - 1.0)
    if joint.table.min(initial=0.0) < -tol:
        worst = max(worst, -float(joint.table.min()))
    for k in range(behavior.scenario.bob_setting_count):
        dev = np.max(np.abs(joint.pair_marginal(k) - behavior.tables[joint.j][k]))
        worst = max(worst, float(dev))
    return worst <= tol, worst


def behavior_from_joints(joints: list[CompatibleJoint], scenario: Scenario) -> Behavior:
    """Reassemble p(a,b|x,y) from one compatible joint per Alice setting."""
    if len(joints) != scenario.alice_setting_count:
        raise ScenarioMismatchError("need exactly one compatible joint per alice setting")
    tables = []
    for j, joint in enumerate(joints):
        if joint.scenario != scenario or joint.j != j:
            raise ScenarioMismatchError(f"joint {j} does not belong to this scenario slot")
        tables.append([joint.pair_marginal(k) for k in range(scenario.bob_setting_count)])
    return Behavior.from_tables(scenario, tables)
