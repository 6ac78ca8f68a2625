"""Local-polytope membership and joint-distribution linear programs.

A behavior admits a local model exactly when it is a convex combination of
deterministic assignment strategies, which in turn is equivalent to the
existence of a global joint distribution over all m + n quantities that
reproduces every measured pairwise table.  This module decides membership
by LP feasibility (with a separating Bell functional from duality on the
outside), builds global joints from compatible per-setting joints, and
minimizes the invariance gap, the total-variation separation, and the
negativity of signed global joints.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .bell import ChshPermutation, all_permutations
from .core import (
    TOL_NORM,
    Behavior,
    BellkitError,
    Scenario,
    ScenarioMismatchError,
)
from .nosignal import CompatibleJoint, NoSignalingError, check_no_signaling
from .simplex import LPFailureError, solve_lp

VERTEX_CAP = 10 ** 6
TOL_LP = 1e-9
BOUNDARY_MARGIN = 1e-7


class VertexCapError(BellkitError):
    """The scenario has more deterministic strategies than the cap allows."""


class JointInvarianceError(BellkitError):
    """Compatible joints whose Bob-marginals disagree cannot be combined."""

    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


@dataclass(frozen=True)
class DeterministicVertex:
    """One deterministic local strategy: an outcome label per setting."""

    alice: tuple[int, ...]
    bob: tuple[int, ...]

    def behavior(self, scenario: Scenario) -> Behavior:
        """The (deterministic) behavior this strategy produces."""
        tables = []
        for x in range(scenario.alice_setting_count):
            i = scenario.alice_index(x, self.alice[x])
            row = []
            for y in range(scenario.bob_setting_count):
                j = scenario.bob_index(y, self.bob[y])
                t = np.zeros((len(scenario.alice_outcomes[x]), len(scenario.bob_outcomes[y])))
                t[i, j] = 1.0
                row.append(t)
            tables.append(row)
        return Behavior.from_tables(scenario, tables)


def enumerate_vertices(scenario: Scenario,
                       cap: int = VERTEX_CAP) -> list[DeterministicVertex]:
    """Every deterministic strategy; count is the product of outcome-set sizes."""
    count = 1
    for s in scenario.alice_outcomes + scenario.bob_outcomes:
        count *= len(s)
    if count > cap:
        raise VertexCapError(f"{count} deterministic strategies exceed the cap {cap}")
    return [DeterministicVertex(a, b)
            for a in itertools.product(*scenario.alice_outcomes)
            for b in itertools.product(*scenario.bob_outcomes)]


# ----------------------------------------------------------------------
# row indexing shared by the LPs: one row per measured (x, y, a, b) entry
# ----------------------------------------------------------------------

def _row_layout(scenario: Scenario) -> tuple[list[tuple[int, int, int]], int]:
    """(offset, |A_x|, |B_y|) per setting pair, plus the total row count."""
    layout = []
    offset = 0
    for x in range(scenario.alice_setting_count):
        for y in range(scenario.bob_setting_count):
            na = len(scenario.alice_outcomes[x])
            nb = len(scenario.bob_outcomes[y])
            layout.append((offset, na, nb))
            offset += na * nb
    return layout, offset


def _behavior_vector(behavior: Behavior) -> np.ndarray:
    return np.concatenate([behavior.tables[x][y].ravel()
                           for x in range(behavior.scenario.alice_setting_count)
                           for y in range(behavior.scenario.bob_setting_count)])


def _vertex_matrix(scenario: Scenario,
                   vertices: list[DeterministicVertex]) -> np.ndarray:
    """0/1 matrix whose column v is the behavior of vertex v, flattened."""
    layout, rows = _row_layout(scenario)
    n = scenario.bob_setting_count
    mat = np.zeros((rows, len(vertices)))
    a_idx = [[scenario.alice_index(x, v.alice[x]) for x in range(scenario.alice_setting_count)]
             for v in vertices]
    b_idx = [[scenario.bob_index(y, v.bob[y]) for y in range(n)] for v in vertices]
    for col, v in enumerate(vertices):
        for x in range(scenario.alice_setting_count):
            for y in range(n):
                offset, na, nb = layout[x * n + y]
                mat[offset + a_idx[col][x] * nb + b_idx[col][y], col] = 1.0
    return mat


@dataclass(frozen=True)
class BellCertificate:
    """Separating functional: coefficient per (x, y, a, b) behavior entry.

    Every deterministic strategy evaluates to at most ``classical_bound``;
    the certified behavior evaluates to ``value`` > bound.
    """

    scenario: Scenario
    coefficients: tuple[tuple[np.ndarray, ...], ...]
    classical_bound: float
    value: float

    def evaluate(self, behavior: Behavior) -> float:
        if behavior.scenario != self.scenario:
            raise ScenarioMismatchError("certificate and behavior use different scenarios")
        return float(sum(np.sum(self.coefficients[x][y] * behavior.tables[x][y])
                         for x in range(self.scenario.alice_setting_count)
                         for y in range(self.scenario.bob_setting_count)))

    def evaluate_vertex(self, vertex: DeterministicVertex) -> float:
        sc = self.scenario
        total = 0.0
        for x in range(sc.alice_setting_count):
            i = sc.alice_index(x, vertex.alice[x])
            for y in range(sc.bob_setting_count):
                j = sc.bob_index(y, vertex.bob[y])
                total += self.coefficients[x][y][i, j]
        return float(total)

    def to_dict(self) -> dict:
        sc = self.scenario
        coeffs = []
        for x in range(sc.alice_setting_count):
            for y in range(sc.bob_setting_count):
                t = self.coefficients[x][y]
                for i, a in enumerate(sc.alice_outcomes[x]):
                    for j, b in enumerate(sc.bob_outcomes[y]):
                        if t[i, j] != 0.0:
                            coeffs.append({"x": x, "y": y, "a": a, "b": b,
                                           "c": float(t[i, j])})
        return {"coefficients": coeffs,
                "classical_bound": float(self.classical_bound),
                "value": float(self.value)}


@dataclass(frozen=True)
class MembershipResult:
    """Outcome of the local-polytope membership LP."""

    status: str                                            # "inside" | "outside"
    residual: float
    boundary: bool
    weights: dict[DeterministicVertex, float] | None       # inside only
    certificate: BellCertificate | None                    # outside only

    @property
    def inside(self) -> bool:
        return self.status == "inside"

    def to_dict(self) -> dict:
        out = {"status": self.status, "residual": float(self.residual),
               "boundary": self.boundary,
               "weights": None, "certificate": None}
        if self.weights is not None:
            out["weights"] = [{"alice": list(v.alice), "bob": list(v.bob), "w": float(w)}
                              for v, w in sorted(self.weights.items(),
                                                 key=lambda kv: (kv[0].alice, kv[0].bob))]
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _near_boundary(behavior: Behavior) -> bool:
    """Max-permutation S within the margin of the classical bound 2."""
    sc = behavior.scenario
    if sc.alice_setting_count < 2 or sc.bob_setting_count < 2:
        return False
    max_s = max(r.correlator_s for r in all_permutations(behavior))
    return abs(max_s - 2.0) <= BOUNDARY_MARGIN


def local_membership(behavior: Behavior, tol_lp: float = TOL_LP,
                     cap: int = VERTEX_CAP) -> MembershipResult:
    """Decide by LP whether the behavior mixes deterministic strategies.

    Inside: returns the mixing weights (a global joint distribution over
    deterministic assignments) with reconstruction residual <= tol_lp.
    Outside: returns a separating Bell functional obtained from the Farkas
    dual, with its classical bound recomputed exactly over all vertices.
    """
    sc = behavior.scenario
    vertices = enumerate_vertices(sc, cap=cap)
    mat = _vertex_matrix(sc, vertices)
    target = _behavior_vector(behavior)
    sol = solve_lp(np.zeros(len(vertices)), a_eq=mat, b_eq=target, feas_tol=tol_lp)
    boundary = _near_boundary(behavior)

    if sol.status == "optimal":
        w = np.clip(sol.x, 0.0, None)
        residual = float(np.max(np.abs(mat @ w - target)))
        weights = {v: float(w[i]) for i, v in enumerate(vertices) if w[i] > 0.0}
        return MembershipResult("inside", residual, boundary, weights, None)

    if sol.status != "infeasible":
        raise LPFailureError(f"membership LP ended with status {sol.status}", sol.residual)

    dual = sol.dual_eq
    layout, _ = _row_layout(sc)
    n = sc.bob_setting_count
    coeffs = []
    for x in range(sc.alice_setting_count):
        row = []
        for y in range(n):
            offset, na, nb = layout[x * n + y]
            row.append(dual[offset:offset + na * nb].reshape(na, nb).copy())
        coeffs.append(tuple(row))
    vertex_values = dual @ mat
    cert = BellCertificate(sc, tuple(coeffs), float(vertex_values.max()),
                           float(dual @ target))
    return MembershipResult("outside", sol.residual, boundary, None, cert)


# ----------------------------------------------------------------------
# global joints
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class GlobalJoint:
    """Distribution q(a_1..a_m, b_1..b_n) over all quantities at once.

    ``table`` has one axis per Alice setting then one per Bob setting, in
    declared label order.
    """

    scenario: Scenario
    table: np.ndarray

    def __post_init__(self) -> None:
        t = np.ascontiguousarray(self.table, dtype=float)
        t.flags.writeable = False
        object.__setattr__(self, "table", t)
        expected = tuple(len(s) for s in self.scenario.alice_outcomes) + tuple(
            len(s) for s in self.scenario.bob_outcomes)
        if self.table.shape != expected:
            raise ScenarioMismatchError(
                f"global joint shape {self.table.shape} does not match scenario {expected}")

    def total(self) -> float:
        return float(self.table.sum())

    def pair_marginal(self, j: int, k: int) -> np.ndarray:
        """q(a_j, b_k): everything else summed out."""
        m = self.scenario.alice_setting_count
        n = self.scenario.bob_setting_count
        axes = tuple(i for i in range(m + n) if i not in (j, m + k))
        return self.table.sum(axis=axes)

    def bob_marginal(self) -> np.ndarray:
        return self.table.sum(axis=tuple(range(self.scenario.alice_setting_count)))

    def compatible_joint(self, j: int) -> CompatibleJoint:
        """Marginalize down to q_j(a_j, b_1..b_n)."""
        m = self.scenario.alice_setting_count
        axes = tuple(i for i in range(m) if i != j)
        table = self.table.sum(axis=axes) if axes else self.table
        return CompatibleJoint(self.scenario, j, table)

    def max_marginal_deviation(self, behavior: Behavior) -> float:
        """Worst entrywise gap between pair marginals and measured tables."""
        if behavior.scenario != self.scenario:
            raise ScenarioMismatchError("joint and behavior use different scenarios")
        worst = abs(self.total() - 1.0)
        for j in range(self.scenario.alice_setting_count):
            for k in range(self.scenario.bob_setting_count):
                dev = np.max(np.abs(self.pair_marginal(j, k) - behavior.tables[j][k]))
                worst = max(worst, float(dev))
        return worst


def weights_to_global_joint(scenario: Scenario,
                            weights: dict[DeterministicVertex, float]) -> GlobalJoint:
    """Membership weights are literally a distribution over assignments."""
    shape = tuple(len(s) for s in scenario.alice_outcomes) + tuple(
        len(s) for s in scenario.bob_outcomes)
    table = np.zeros(shape)
    for v, w in weights.items():
        idx = tuple(scenario.alice_index(x, v.alice[x])
                    for x in range(scenario.alice_setting_count)) + tuple(
            scenario.bob_index(y, v.bob[y]) for y in range(scenario.bob_setting_count))
        table[idx] += w
    return GlobalJoint(scenario, table)


def build_global_joint(joints: list[CompatibleJoint], behavior: Behavior,
                       tol_inv: float = TOL_LP) -> GlobalJoint:
    """Product construction from one compatible joint per Alice setting.

    Requires the joints' Bob-marginals to agree pairwise within ``tol_inv``
    (joint invariance); their failure to do so is exactly what a Bell
    violation certifies, and raises JointInvarianceError with the observed
    deviation.
    """
    sc = behavior.scenario
    m, n = sc.alice_setting_count, sc.bob_setting_count
    if sorted(jt.j for jt in joints) != list(range(m)):
        raise ScenarioMismatchError("need exactly one compatible joint per alice setting")
    for jt in joints:
        if jt.scenario != sc:
            raise ScenarioMismatchError("joint and behavior use different scenarios")
    by_setting = sorted(joints, key=lambda jt: jt.j)

    marginals = [jt.bob_marginal() for jt in by_setting]
    deviation = 0.0
    for m1, m2 in itertools.combinations(marginals, 2):
        deviation = max(deviation, float(np.max(np.abs(m1 - m2))))
    if deviation > tol_inv:
        raise JointInvarianceError(
            f"Bob-marginals of the compatible joints differ by {deviation:.6g} "
            f"(> {tol_inv:g}): joint invariance fails for this behavior", deviation)

    shared = np.mean(marginals, axis=0)
    bob_shape = shared.shape
    alice_shape = tuple(len(s) for s in sc.alice_outcomes)
    product = np.ones(alice_shape + bob_shape)
    for j, jt in enumerate(by_setting):
        ax_shape = [1] * m + list(bob_shape)
        ax_shape[j] = alice_shape[j]
        product = product * jt.table.reshape(tuple(ax_shape))
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = np.where(shared > 0.0, shared ** (m - 1), 1.0)
    table = np.where(shared > 0.0, product / denom, 0.0)

    joint = GlobalJoint(sc, table)
    if abs(joint.total() - 1.0) > max(TOL_NORM, 1e3 * tol_inv):
        raise JointInvarianceError(
            f"constructed joint has total mass {joint.total()!r}", deviation)
    return joint


# ----------------------------------------------------------------------
# invariance-gap and separation LPs
# ----------------------------------------------------------------------

def _pair_constraints(behavior: Behavior, x: int, yb: int, ybp: int,
                      n_vars: int, var_offset: int) -> tuple[list, list]:
    """Marginal rows tying q(a, b, b') to the two measured tables at x."""
    sc = behavior.scenario
    na = len(sc.alice_outcomes[x])
    nb = len(sc.bob_outcomes[yb])
    nbp = len(sc.bob_outcomes[ybp])
    idx = lambda i, j, k: var_offset + (i * nb + j) * nbp + k
    rows, rhs = [], []
    for i in range(na):
        for j in range(nb):
            row = np.zeros(n_vars)
            for k in range(nbp):
                row[idx(i, j, k)] = 1.0
            rows.append(row)
            rhs.append(behavior.tables[x][yb][i, j])
    for i in range(na):
        for k in range(nbp):
            row = np.zeros(n_vars)
            for j in range(nb):
                row[idx(i, j, k)] = 1.0
            rows.append(row)
            rhs.append(behavior.tables[x][ybp][i, k])
    return rows, rhs


def _equality_mask(behavior: Behavior, perm: ChshPermutation) -> np.ndarray:
    """mask[j, k]: do Bob outcomes j (at B) and k (at B') count as equal?"""
    sc = behavior.scenario
    map_b = perm.bob_label_map(behavior, perm.bob)
    map_bp = perm.bob_label_map(behavior, perm.bob_prime)
    labels_b = sc.bob_outcomes[perm.bob]
    labels_bp = sc.bob_outcomes[perm.bob_prime]
    return np.array([[map_b[lb] == map_bp[lbp] for lbp in labels_bp] for lb in labels_b])


def _gap_lp_pieces(behavior: Behavior, perm: ChshPermutation, tol_ns: float):
    perm.validate(behavior)
    report = check_no_signaling(behavior, tol=tol_ns)
    if not report.no_signaling_bob_to_alice:
        raise NoSignalingError(
            "invariance-gap LP needs no-signaling from Bob to Alice "
            f"(deviation {report.bob_to_alice_deviation:.3e})",
            report.bob_to_alice_deviation)
    sc = behavior.scenario
    na = len(sc.alice_outcomes[perm.alice])
    nap = len(sc.alice_outcomes[perm.alice_prime])
    nb = len(sc.bob_outcomes[perm.bob])
    nbp = len(sc.bob_outcomes[perm.bob_prime])
    d_q, d_qp = na * nb * nbp, nap * nb * nbp
    return sc, na, nap, nb, nbp, d_q, d_qp


def min_invariance_gap(behavior: Behavior, perm: ChshPermutation | None = None,
                       tol_ns: float = TOL_NORM, tol_lp: float = TOL_LP) -> float:
    """Minimize q(B=B') - q'(B=B') over all compatible joint pairs.

    Always at least (S-2)/2 for the same permutation; nonpositive values
    are reachable exactly when an invariant pair exists.
    """
    if perm is None:
        perm = ChshPermutation(0, 1, 0, 1)
    sc, na, nap, nb, nbp, d_q, d_qp = _gap_lp_pieces(behavior, perm, tol_ns)
    n_vars = d_q + d_qp
    rows_q, rhs_q = _pair_constraints(behavior, perm.alice, perm.bob, perm.bob_prime,
                                      n_vars, 0)
    rows_qp, rhs_qp = _pair_constraints(behavior, perm.alice_prime, perm.bob,
                                        perm.bob_prime, n_vars, d_q)
    eq = _equality_mask(behavior, perm)
    c = np.zeros(n_vars)
    for j in range(nb):
        for k in range(nbp):
            if eq[j, k]:
                for i in range(na):
                    c[(i * nb + j) * nbp + k] += 1.0
                for i in range(nap):
                    c[d_q + (i * nb + j) * nbp + k] -= 1.0
    sol = solve_lp(c, a_eq=np.array(rows_q + rows_qp),
                   b_eq=np.array(rhs_q + rhs_qp), feas_tol=tol_lp)
    if sol.status != "optimal":
        raise LPFailureError(f"invariance-gap LP ended with status {sol.status}",
                             sol.residual)
    return float(sol.objective)


def min_tv_separation(behavior: Behavior, perm: ChshPermutation | None = None,
                      tol_ns: float = TOL_NORM, tol_lp: float = TOL_LP) -> float:
    """Minimize the total variation between q(b,b') and q'(b,b').

    Also lower-bounded by (S-2)/2: the equality-event gap never exceeds the
    total variation distance.
    """
    if perm is None:
        perm = ChshPermutation(0, 1, 0, 1)
    sc, na, nap, nb, nbp, d_q, d_qp = _gap_lp_pieces(behavior, perm, tol_ns)
    n_pairs = nb * nbp
    n_vars = d_q + d_qp + n_pairs
    rows_q, rhs_q = _pair_constraints(behavior, perm.alice, perm.bob, perm.bob_prime,
                                      n_vars, 0)
    rows_qp, rhs_qp = _pair_constraints(behavior, perm.alice_prime, perm.bob,
                                        perm.bob_prime, n_vars, d_q)
    a_ub, b_ub = [], []
    for j in range(nb):
        for k in range(nbp):
            diff = np.zeros(n_vars)
            for i in range(na):
                diff[(i * nb + j) * nbp + k] = 1.0
            for i in range(nap):
                diff[d_q + (i * nb + j) * nbp + k] = -1.0
            for sign in (1.0, -1.0):
                row = sign * diff
                row[d_q + d_qp + j * nbp + k] = -1.0
                a_ub.append(row)
                b_ub.append(0.0)
    c = np.zeros(n_vars)
    c[d_q + d_qp:] = 0.5
    sol = solve_lp(c, a_eq=np.array(rows_q + rows_qp), b_eq=np.array(rhs_q + rhs_qp),
                   a_ub=np.array(a_ub), b_ub=np.array(b_ub), feas_tol=tol_lp)
    if sol.status != "optimal":
        raise LPFailureError(f"separation LP ended with status {sol.status}", sol.residual)
    return float(sol.objective)


# ----------------------------------------------------------------------
# signed global joints
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SignedJointResult:
    """Minimum-negativity signed joint reproducing all pairwise tables."""

    scenario: Scenario
    table: np.ndarray          # same layout as GlobalJoint, entries may be < 0
    negativity: float          # sum of max(0, -q) at the optimum

    def to_dict(self) -> dict:
        return {"negativity": float(self.negativity),
                "entries": int(self.table.size)}


def signed_invariant_joint(behavior: Behavior, tol_ns: float = TOL_NORM,
                           tol_lp: float = TOL_LP,
                           cap: int = VERTEX_CAP) -> SignedJointResult:
    """Find a signed q(a_1..a_m, b_1..b_n) with minimum total negativity.

    The joint is constrained to reproduce every measured p(a_j, b_k); its
    Bob-marginal is automatically independent of any Alice setting, so the
    negativity is a marker of how far the behavior is from admitting such a
    joint with ordinary (nonnegative) probabilities: it is zero exactly on
    the local polytope.
    """
    sc = behavior.scenario
    report = check_no_signaling(behavior, tol=tol_ns)
    if not report.passed:
        raise NoSignalingError(
            "signed joints require a no-signaling behavior "
            f"(deviations {report.bob_to_alice_deviation:.3e}, "
            f"{report.alice_to_bob_deviation:.3e})",
            max(report.bob_to_alice_deviation, report.alice_to_bob_deviation))

    vertices = enumerate_vertices(sc, cap=cap)  # assignments = joint support points
    mat = _vertex_matrix(sc, vertices)
    target = _behavior_vector(behavior)
    n_points = len(vertices)
    # q = u - v with u, v >= 0; minimizing sum(v) yields sum of negative parts
    a_eq = np.hstack([mat, -mat])
    c = np.concatenate([np.zeros(n_points), np.ones(n_points)])
    sol = solve_lp(c, a_eq=a_eq, b_eq=target, feas_tol=tol_lp)
    if sol.status != "optimal":
        raise LPFailureError(f"signed-joint LP ended with status {sol.status}", sol.residual)

    q = sol.x[:n_points] - sol.x[n_points:]
    shape = tuple(len(s) for s in sc.alice_outcomes) + tuple(len(s) for s in sc.bob_outcomes)
    table = np.zeros(shape)
    for value, v in zip(q, vertices):
        idx = tuple(sc.alice_index(x, v.alice[x]) for x in range(sc.alice_setting_count)) \
            + tuple(sc.bob_index(y, v.bob[y]) for y in range(sc.bob_setting_count))
        table[idx] = value
    negativity = float(np.sum(np.clip(-q, 0.0, None)))
    return SignedJointResult(sc, table, negativity)
