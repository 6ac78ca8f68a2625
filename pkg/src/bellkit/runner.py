"""Seeded experiment simulation, frequency estimation and report assembly.

The random stream is counter-based so results never depend on how work
might be sharded: run i consumes exactly the two 64-bit words 2i and 2i+1
of a Philox-4x64-10 stream keyed by the user seed (word one selects the
settings under the uniform-random policy, word two selects the outcome).
Doubles are formed from words as (w >> 11) / 2^53.  The rule is recorded in
every dataset and report header.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .bell import (
    ChshPermutation,
    all_permutations,
    canonical_permutation,
    conundrum_report,
    make_report,
)
from .core import (
    Behavior,
    EmpiricalBehavior,
    SchemaError,
    Scenario,
    _require_keys,
)
from .feasibility import local_membership, min_invariance_gap, min_tv_separation
from .generators import (
    lhv_behavior,
    polarizer_lhv_model,
    quantum_behavior,
    tsirelson_setup,
    QuantumSetup,
)
from .nosignal import check_no_signaling, check_no_signaling_empirical

POLICIES = ("uniform-random", "round-robin")  # plus "fixed:x,y"

_RNG_HEADER = {
    "bit_generator": "philox4x64-10",
    "words_per_run": 2,
    "stream_rule": "run i consumes raw words 2i (settings) and 2i+1 (outcome); "
                   "double = (word >> 11) / 2**53",
}


@dataclass(frozen=True)
class Dataset:
    """Per-run records of settings and outcomes from a simulated experiment."""

    scenario: Scenario
    seed: int
    policy: str
    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def n_runs(self) -> int:
        return len(self.x)

    def rng_header(self) -> dict:
        return dict(_RNG_HEADER, key=int(self.seed))

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "seed": int(self.seed),
            "policy": self.policy,
            "rng": self.rng_header(),
            "runs": [[int(x), int(y), int(a), int(b)]
                     for x, y, a, b in zip(self.x, self.y, self.a, self.b)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=None, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Dataset":
        _require_keys(data, {"scenario", "seed", "policy", "rng", "runs"},
                      where="dataset file")
        sc = Scenario.from_dict(data["scenario"])
        runs = np.asarray(data["runs"], dtype=np.int64)
        if runs.ndim != 2 or runs.shape[1] != 4:
            raise SchemaError("dataset runs must be [x, y, a, b] rows")
        return cls(sc, int(data["seed"]), str(data["policy"]),
                   runs[:, 0], runs[:, 1], runs[:, 2], runs[:, 3])


def parse_policy(policy: str, scenario: Scenario) -> tuple[str, int, int]:
    """Validate a policy string; returns (kind, fixed_x, fixed_y)."""
    if policy in POLICIES:
        return policy, -1, -1
    if policy.startswith("fixed:"):
        try:
            x_str, y_str = policy[len("fixed:"):].split(",")
            x, y = int(x_str), int(y_str)
        except ValueError:
            raise ValueError(f"fixed policy must look like 'fixed:x,y', got {policy!r}")
        scenario.check_settings(x, y)
        return "fixed", x, y
    raise ValueError(f"unknown policy {policy!r}; use uniform-random, round-robin or fixed:x,y")


def _raw_uniforms(seed: int, n_runs: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in 64 bits")
    raw = np.random.Philox(key=seed).random_raw(2 * n_runs)
    doubles = (raw >> np.uint64(11)) * (1.0 / (1 << 53))
    return doubles[0::2], doubles[1::2]


def simulate_runs(behavior: Behavior, n_runs: int, policy: str = "uniform-random",
                  seed: int = 0) -> Dataset:
    """Draw n_runs seeded (setting, outcome) records from the behavior.

    Bitwise-reproducible for fixed (seed, policy, n_runs); see the module
    docstring for the stream-splitting rule.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    sc = behavior.scenario
    kind, fx, fy = parse_policy(policy, sc)
    m, n = sc.alice_setting_count, sc.bob_setting_count
    u_set, u_out = _raw_uniforms(seed, n_runs)

    if kind == "uniform-random":
        pair = np.minimum((u_set * (m * n)).astype(np.int64), m * n - 1)
        xs, ys = pair // n, pair % n
    elif kind == "round-robin":
        idx = np.arange(n_runs, dtype=np.int64) % (m * n)
        xs, ys = idx // n, idx % n
    else:
        xs = np.full(n_runs, fx, dtype=np.int64)
        ys = np.full(n_runs, fy, dtype=np.int64)

    a_out = np.zeros(n_runs, dtype=np.int64)
    b_out = np.zeros(n_runs, dtype=np.int64)
    for x in range(m):
        alice_labels = np.asarray(sc.alice_outcomes[x], dtype=np.int64)
        for y in range(n):
            mask = (xs == x) & (ys == y)
            if not mask.any():
                continue
            bob_labels = np.asarray(sc.bob_outcomes[y], dtype=np.int64)
            cells = behavior.tables[x][y].ravel()
            cum = np.cumsum(cells)
            cell = np.minimum(np.searchsorted(cum, u_out[mask], side="right"),
                              len(cells) - 1)
            a_out[mask] = alice_labels[cell // len(bob_labels)]
            b_out[mask] = bob_labels[cell % len(bob_labels)]
    return Dataset(sc, seed, policy, xs, ys, a_out, b_out)


def estimate_behavior(dataset: Dataset) -> EmpiricalBehavior:
    """Per-pair outcome counts; frequencies and binomial errors derive from them."""
    sc = dataset.scenario
    counts = [[np.zeros((len(sc.alice_outcomes[x]), len(sc.bob_outcomes[y])),
                        dtype=np.int64)
               for y in range(sc.bob_setting_count)]
              for x in range(sc.alice_setting_count)]
    for x in range(sc.alice_setting_count):
        a_index = {lab: i for i, lab in enumerate(sc.alice_outcomes[x])}
        for y in range(sc.bob_setting_count):
            b_index = {lab: j for j, lab in enumerate(sc.bob_outcomes[y])}
            mask = (dataset.x == x) & (dataset.y == y)
            if not mask.any():
                continue
            na, nb = len(a_index), len(b_index)
            ai = np.array([a_index[int(v)] for v in dataset.a[mask]])
            bi = np.array([b_index[int(v)] for v in dataset.b[mask]])
            flat = np.bincount(ai * nb + bi, minlength=na * nb)
            counts[x][y] = flat.reshape(na, nb)
    return EmpiricalBehavior.from_counts(sc, counts)


# ----------------------------------------------------------------------
# composite analysis report
# ----------------------------------------------------------------------

def analyze(source: Behavior | EmpiricalBehavior, *, tol: float = 1e-9,
            z_threshold: float = 5.0, include_lp: bool = True) -> dict:
    """Full report: no-signaling, CHSH scan, conundrum, membership, gaps.

    LP-based sections (membership, invariance gap, separation) require the
    exact no-signaling check to pass at ``tol``; otherwise they are marked
    not applicable.  Finite-run inputs are analyzed through their relative
    frequencies and additionally z-score checked.
    """
    report: dict = {"tolerance": float(tol)}
    empirical = None
    if isinstance(source, EmpiricalBehavior):
        empirical = source
        report["input_kind"] = "empirical"
        report["total_runs"] = sum(source.total(x, y)
                                   for x in range(source.scenario.alice_setting_count)
                                   for y in range(source.scenario.bob_setting_count))
        report["empty_pairs"] = [list(p) for p in source.empty_pairs]
        behavior = source.to_behavior()
    else:
        report["input_kind"] = "behavior"
        behavior = source
    sc = behavior.scenario
    report["scenario"] = sc.to_dict()

    ns = check_no_signaling(behavior, tol=tol)
    report["no_signaling"] = ns.to_dict()
    if empirical is not None:
        report["no_signaling_z"] = check_no_signaling_empirical(
            empirical, threshold=z_threshold).to_dict()

    if sc.alice_setting_count >= 2 and sc.bob_setting_count >= 2:
        chsh_reports = all_permutations(behavior)
        best = next(r for r in chsh_reports if r.is_max)
        report["chsh"] = {
            "permutations": [r.to_dict() for r in chsh_reports],
            "max": best.to_dict(),
            "violated": bool(best.correlator_s > 2.0),
        }
        report["conundrum"] = conundrum_report(behavior, best.permutation).to_dict()
        report["gap_lower_bound"] = float(best.gap_lower_bound)
    else:
        report["chsh"] = None
        report["conundrum"] = None
        report["gap_lower_bound"] = None

    lp_ready = include_lp and ns.passed
    if not include_lp:
        reason = "disabled"
    elif not ns.passed:
        reason = "requires an exactly no-signaling behavior"
    else:
        reason = None
    if lp_ready:
        membership = local_membership(behavior)
        report["membership"] = membership.to_dict()
        if report["chsh"] is not None:
            perm = best.permutation
            report["invariance_gap"] = {
                "permutation": perm.label,
                "min": float(min_invariance_gap(behavior, perm, tol_ns=tol)),
            }
            report["tv_separation"] = {
                "permutation": perm.label,
                "min": float(min_tv_separation(behavior, perm, tol_ns=tol)),
            }
        else:
            report["invariance_gap"] = None
            report["tv_separation"] = None
    else:
        report["membership"] = {"status": "not-applicable", "reason": reason}
        report["invariance_gap"] = {"status": "not-applicable", "reason": reason}
        report["tv_separation"] = {"status": "not-applicable", "reason": reason}
    return report


def report_to_json(report: dict) -> str:
    """Canonical byte-stable rendering: sorted keys, repr floats."""
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def report_to_text(report: dict) -> str:
    """Fixed-precision human-readable rendering of an analyze() report."""
    lines = []
    out = lines.append
    sc = report["scenario"]
    out(f"scenario: {len(sc['alice_outcomes'])} alice x {len(sc['bob_outcomes'])} bob settings")
    out(f"input: {report['input_kind']}")
    if report["input_kind"] == "empirical":
        out(f"total runs: {report['total_runs']}")
    ns = report["no_signaling"]
    out("no-signaling (tolerance {:g}):".format(report["tolerance"]))
    out(f"  bob->alice: {_fmt(ns['no_signaling_bob_to_alice'])}"
        f" (max deviation {_fmt(ns['bob_to_alice_deviation'])})")
    out(f"  alice->bob: {_fmt(ns['no_signaling_alice_to_bob'])}"
        f" (max deviation {_fmt(ns['alice_to_bob_deviation'])})")
    if "no_signaling_z" in report:
        z = report["no_signaling_z"]
        out(f"  z-scores: bob->alice {_fmt(z['max_z_bob_to_alice'])},"
            f" alice->bob {_fmt(z['max_z_alice_to_bob'])}"
            f" (threshold {_fmt(z['threshold'])}, pass: {_fmt(z['passed'])})")
    if report["chsh"] is not None:
        best = report["chsh"]["max"]
        out("chsh (max over permutations):")
        out(f"  permutation: {best['permutation']}")
        out("  p(A=B), p(A=B'), p(A'=B), p(A'!=B'): "
            + ", ".join(_fmt(p) for p in best["probabilities"]))
        out(f"  probability form: {_fmt(best['probability_form_lhs'])} (classical bound 3)")
        out(f"  S: {_fmt(best['correlator_s'])} (classical bound 2)")
        out(f"  violation: {_fmt(best['violation'])}")
        out(f"  gap lower bound (S-2)/2: {_fmt(best['gap_lower_bound'])}")
        con = report["conundrum"]
        out("conundrum bounds:")
        out(f"  q(B=B') >= {_fmt(con['q_equal_lower'])}")
        out(f"  q'(B!=B') >= {_fmt(con['q_prime_unequal_lower'])}")
        out(f"  q(B=B') - q'(B=B') >= {_fmt(con['generalized_rhs'])}")
        out(f"  basic (all four > 75%): {_fmt(con['basic_conundrum'])}")
    mem = report["membership"]
    if mem.get("status") == "not-applicable":
        out(f"membership: not applicable ({mem['reason']})")
    else:
        out(f"membership: {mem['status']}"
            f" (residual {_fmt(mem['residual'])}, boundary: {_fmt(mem['boundary'])})")
        if mem["certificate"] is not None:
            cert = mem["certificate"]
            out(f"  certificate value {_fmt(cert['value'])}"
                f" > classical bound {_fmt(cert['classical_bound'])}")
    for key, label in (("invariance_gap", "min invariance gap"),
                       ("tv_separation", "min tv separation")):
        section = report[key]
        if section is None:
            out(f"{label}: n/a")
        elif section.get("status") == "not-applicable":
            out(f"{label}: not applicable ({section['reason']})")
        else:
            out(f"{label}: {_fmt(section['min'])}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# parameter sweeps
# ----------------------------------------------------------------------

SWEEP_ANGLES = ("alice0", "alice1", "bob0", "bob1")


def sweep(family: str = "quantum", angle: str = "bob0", start_deg: float = 0.0,
          stop_deg: float = 45.0, steps: int = 91) -> list[dict]:
    """S, probability form and gap bound along a one-angle family.

    family 'quantum': the Tsirelson setup with one angle swept.
    family 'lhv':     the shared-hidden-polarization model at the same
                      angles; every row respects S <= 2.
    Values use the canonical permutation (A=x0, A'=x1, B=y0, B'=y1).
    """
    if steps < 2:
        raise ValueError("a sweep needs at least 2 steps")
    if angle not in SWEEP_ANGLES:
        raise ValueError(f"angle must be one of {SWEEP_ANGLES}")
    if family not in ("quantum", "lhv"):
        raise ValueError(f"unknown sweep family {family!r}")
    base = tsirelson_setup()
    values = np.linspace(start_deg, stop_deg, steps)
    perm = canonical_permutation()
    rows = []
    for value in values:
        alice = list(base.alice_angles)
        bob = list(base.bob_angles)
        target = {"alice0": (alice, 0), "alice1": (alice, 1),
                  "bob0": (bob, 0), "bob1": (bob, 1)}[angle]
        target[0][target[1]] = math.radians(float(value))
        if family == "quantum":
            behavior = quantum_behavior(QuantumSetup(base.state, tuple(alice), tuple(bob)))
        else:
            behavior = lhv_behavior(polarizer_lhv_model(tuple(alice), tuple(bob)))
        rep = make_report(behavior, perm)
        rows.append({"parameter": float(value),
                     "S": float(rep.correlator_s),
                     "probability_form": float(rep.probability_form_lhs),
                     "gap_bound": float(rep.gap_lower_bound)})
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["parameter", "S", "probability_form",
                                             "gap_bound"], lineterminator="\r\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) for k, v in row.items()})
    return buf.getvalue()
