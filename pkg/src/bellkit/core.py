"""Scenarios, behaviors and the on-disk probability-table format.

A *behavior* is the full collection of measured joint outcome distributions
p(a,b|x,y), one table per pair of measurement settings (x for Alice, y for
Bob).  Everything else in the package consumes the types defined here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TOL_NORM = 1e-9


class BellkitError(Exception):
    """Base class for all package errors."""


class SchemaError(BellkitError):
    """A behavior/model file does not conform to the documented schema."""


class NormalizationError(BellkitError):
    """A probability table does not sum to 1 within tolerance."""


class OutcomeLabelError(BellkitError):
    """An outcome label is not declared in the scenario."""


class SettingIndexError(BellkitError, IndexError):
    """A setting index is out of range for the scenario."""


class ScenarioMismatchError(BellkitError):
    """Two objects that must share a scenario do not."""


@dataclass(frozen=True)
class Scenario:
    """Setting counts and ordered outcome-label sets for the two labs.

    ``alice_outcomes[x]`` lists the integer labels Alice can observe at
    setting x, in declared order; likewise ``bob_outcomes[y]`` for Bob.
    """

    alice_outcomes: tuple[tuple[int, ...], ...]
    bob_outcomes: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alice_outcomes",
                           tuple(tuple(int(v) for v in s) for s in self.alice_outcomes))
        object.__setattr__(self, "bob_outcomes",
                           tuple(tuple(int(v) for v in s) for s in self.bob_outcomes))
        if not self.alice_outcomes or not self.bob_outcomes:
            raise SchemaError("scenario needs at least one setting per lab")
        for lab, sets in (("alice", self.alice_outcomes), ("bob", self.bob_outcomes)):
            for i, labels in enumerate(sets):
                if len(labels) == 0:
                    raise SchemaError(f"{lab} setting {i} has an empty outcome set")
                if len(set(labels)) != len(labels):
                    raise SchemaError(f"{lab} setting {i} repeats an outcome label")

    @property
    def alice_setting_count(self) -> int:
        return len(self.alice_outcomes)

    @property
    def bob_setting_count(self) -> int:
        return len(self.bob_outcomes)

    def check_settings(self, x: int, y: int) -> None:
        if not 0 <= x < self.alice_setting_count:
            raise SettingIndexError(f"alice setting {x} out of range [0, {self.alice_setting_count})")
        if not 0 <= y < self.bob_setting_count:
            raise SettingIndexError(f"bob setting {y} out of range [0, {self.bob_setting_count})")

    def alice_index(self, x: int, label: int) -> int:
        try:
            return self.alice_outcomes[x].index(label)
        except ValueError:
            raise OutcomeLabelError(f"label {label} not declared for alice setting {x}") from None

    def bob_index(self, y: int, label: int) -> int:
        try:
            return self.bob_outcomes[y].index(label)
        except ValueError:
            raise OutcomeLabelError(f"label {label} not declared for bob setting {y}") from None

    def to_dict(self) -> dict:
        return {"alice_outcomes": [list(s) for s in self.alice_outcomes],
                "bob_outcomes": [list(s) for s in self.bob_outcomes]}

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        _require_keys(data, {"alice_outcomes", "bob_outcomes"}, where="scenario")
        for key in ("alice_outcomes", "bob_outcomes"):
            sets = data[key]
            if not isinstance(sets, list) or not all(isinstance(s, list) for s in sets):
                raise SchemaError(f"scenario.{key} must be a list of lists of integers")
            for s in sets:
                for v in s:
                    if not isinstance(v, int) or isinstance(v, bool):
                        raise SchemaError(f"scenario.{key} labels must be integers, got {v!r}")
        return cls(tuple(tuple(s) for s in data["alice_outcomes"]),
                   tuple(tuple(s) for s in data["bob_outcomes"]))

    # convenience constructors used all over the tests and generators
    @classmethod
    def binary(cls, m: int = 2, n: int = 2) -> "Scenario":
        """m x n scenario with outcomes {0, 1} at every setting."""
        return cls(((0, 1),) * m, ((0, 1),) * n)

    @classmethod
    def dice(cls) -> "Scenario":
        """Two settings per lab, die faces 1..6 everywhere."""
        faces = tuple(range(1, 7))
        return cls((faces, faces), (faces, faces))


def _require_keys(data: dict, expected: set, where: str) -> None:
    if not isinstance(data, dict):
        raise SchemaError(f"{where} must be a JSON object")
    missing = expected - set(data)
    if missing:
        raise SchemaError(f"{where} missing field(s): {', '.join(sorted(missing))}")
    unknown = set(data) - expected
    if unknown:
        raise SchemaError(f"{where} has unknown field(s): {', '.join(sorted(unknown))}")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Behavior:
    """Joint outcome distributions p(a,b|x,y) for every setting pair.

    ``tables[x][y]`` is a read-only array of shape
    (len(alice_outcomes[x]), len(bob_outcomes[y])) indexed by outcome
    *position* in the declared label order.  Instances are immutable and
    safe to share across threads.
    """

    scenario: Scenario
    tables: tuple[tuple[np.ndarray, ...], ...]

    @classmethod
    def from_tables(cls, scenario: Scenario, tables: Sequence[Sequence[np.ndarray]],
                    tol: float = TOL_NORM) -> "Behavior":
        """Validate, clamp tiny negatives, renormalize each (x,y) table.

        Rejects a table whose total differs from 1 by more than ``tol`` or
        that has an entry below ``-tol``.
        """
        m, n = scenario.alice_setting_count, scenario.bob_setting_count
        if len(tables) != m or any(len(row) != n for row in tables):
            raise SchemaError(f"tables must be indexed [x][y] with shape {m} x {n}")
        out = []
        for x in range(m):
            row = []
            for y in range(n):
                t = np.asarray(tables[x][y], dtype=float)
                shape = (len(scenario.alice_outcomes[x]), len(scenario.bob_outcomes[y]))
                if t.shape != shape:
                    raise SchemaError(f"table ({x},{y}) has shape {t.shape}, expected {shape}")
                if t.min(initial=0.0) < -tol:
                    raise NormalizationError(
                        f"table ({x},{y}) has negative entry {t.min():.3e} below -{tol:g}")
                t = np.clip(t, 0.0, None)
                total = t.sum()
                if abs(total - 1.0) > tol:
                    raise NormalizationError(
                        f"table ({x},{y}) sums to {total!r}, outside 1 +/- {tol:g}")
                row.append(_freeze(t / total))
            out.append(tuple(row))
        return cls(scenario, tuple(out))

    def table(self, x: int, y: int) -> np.ndarray:
        self.scenario.check_settings(x, y)
        return self.tables[x][y]

    def prob(self, x: int, y: int, a: int, b: int) -> float:
        """p(a,b|x,y) looked up by outcome label."""
        t = self.table(x, y)
        return float(t[self.scenario.alice_index(x, a), self.scenario.bob_index(y, b)])

    def to_dict(self) -> dict:
        tables = []
        for x in range(self.scenario.alice_setting_count):
            row = []
            for y in range(self.scenario.bob_setting_count):
                cells = []
                t = self.tables[x][y]
                for i, a in enumerate(self.scenario.alice_outcomes[x]):
                    for j, b in enumerate(self.scenario.bob_outcomes[y]):
                        if t[i, j] != 0.0:
                            cells.append({"a": a, "b": b, "p": float(t[i, j])})
                row.append(cells)
            tables.append(row)
        return {"scenario": self.scenario.to_dict(), "tables": tables}


@dataclass(frozen=True)
class EmpiricalBehavior:
    """Observed outcome counts per setting pair, with binomial errors."""

    scenario: Scenario
    counts: tuple[tuple[np.ndarray, ...], ...]

    @classmethod
    def from_counts(cls, scenario: Scenario,
                    counts: Sequence[Sequence[np.ndarray]]) -> "EmpiricalBehavior":
        m, n = scenario.alice_setting_count, scenario.bob_setting_count
        if len(counts) != m or any(len(row) != n for row in counts):
            raise SchemaError(f"counts must be indexed [x][y] with shape {m} x {n}")
        out = []
        for x in range(m):
            row = []
            for y in range(n):
                t = np.asarray(counts[x][y])
                shape = (len(scenario.alice_outcomes[x]), len(scenario.bob_outcomes[y]))
                if t.shape != shape:
                    raise SchemaError(f"counts ({x},{y}) have shape {t.shape}, expected {shape}")
                if np.any(t < 0) or not np.issubdtype(t.dtype, np.integer):
                    raise SchemaError(f"counts ({x},{y}) must be nonnegative integers")
                c = np.ascontiguousarray(t, dtype=np.int64)
                c.flags.writeable = False
                row.append(c)
            out.append(tuple(row))
        return cls(scenario, tuple(out))

    def total(self, x: int, y: int) -> int:
        """N_xy, the number of runs recorded at setting pair (x,y)."""
        self.scenario.check_settings(x, y)
        return int(self.counts[x][y].sum())

    @property
    def empty_pairs(self) -> tuple[tuple[int, int], ...]:
        """Setting pairs with no runs; they carry no frequency estimate."""
        return tuple((x, y)
                     for x in range(self.scenario.alice_setting_count)
                     for y in range(self.scenario.bob_setting_count)
                     if self.total(x, y) == 0)

    def frequency(self, x: int, y: int) -> np.ndarray:
        n = self.total(x, y)
        if n == 0:
            raise NormalizationError(f"setting pair ({x},{y}) has no runs")
        return self.counts[x][y] / n

    def standard_error(self, x: int, y: int) -> np.ndarray:
        """Binomial standard error sqrt(p(1-p)/N) per cell."""
        f = self.frequency(x, y)
        return np.sqrt(f * (1.0 - f) / self.total(x, y))

    def to_behavior(self) -> Behavior:
        """Relative frequencies as a Behavior; rejects empty setting pairs."""
        if self.empty_pairs:
            raise NormalizationError(f"no runs for setting pair(s) {list(self.empty_pairs)}")
        tables = [[self.frequency(x, y)
                   for y in range(self.scenario.bob_setting_count)]
                  for x in range(self.scenario.alice_setting_count)]
        return Behavior.from_tables(self.scenario, tables)

    def to_dict(self) -> dict:
        tables = []
        for x in range(self.scenario.alice_setting_count):
            row = []
            for y in range(self.scenario.bob_setting_count):
                cells = []
                c = self.counts[x][y]
                for i, a in enumerate(self.scenario.alice_outcomes[x]):
                    for j, b in enumerate(self.scenario.bob_outcomes[y]):
                        if c[i, j] != 0:
                            cells.append({"a": a, "b": b, "count": int(c[i, j])})
                row.append(cells)
            tables.append(row)
        return {"scenario": self.scenario.to_dict(), "tables": tables}


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of normalization and no-signaling checks on a behavior."""

    normalized: bool
    no_signaling_bob_to_alice: bool
    bob_to_alice_deviation: float
    no_signaling_alice_to_bob: bool
    alice_to_bob_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return (self.normalized and self.no_signaling_bob_to_alice
                and self.no_signaling_alice_to_bob)

    def to_dict(self) -> dict:
        return {
            "normalized": self.normalized,
            "no_signaling_bob_to_alice": self.no_signaling_bob_to_alice,
            "bob_to_alice_deviation": float(self.bob_to_alice_deviation),
            "no_signaling_alice_to_bob": self.no_signaling_alice_to_bob,
            "alice_to_bob_deviation": float(self.alice_to_bob_deviation),
            "tolerance": float(self.tolerance),
            "passed": self.passed,
        }


# ----------------------------------------------------------------------
# file format
# ----------------------------------------------------------------------
# A behavior file is a JSON object with exactly two top-level fields:
#   scenario: {alice_outcomes: [[int,...],...], bob_outcomes: [[int,...],...]}
#   tables:   [x][y] -> list of {a: int, b: int, p: number} records
# Omitted (a,b) pairs mean probability zero.  Empirical files carry
# {a, b, count} records (nonnegative integer counts) instead.


def _parse_tables(data: dict, scenario: Scenario, value_key: str) -> list:
    tables = data["tables"]
    m, n = scenario.alice_setting_count, scenario.bob_setting_count
    if not isinstance(tables, list) or len(tables) != m:
        raise SchemaError(f"tables must be a list of {m} rows (one per alice setting)")
    parsed = []
    for x, row in enumerate(tables):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"tables[{x}] must be a list of {n} tables (one per bob setting)")
        prow = []
        for y, cells in enumerate(row):
            if not isinstance(cells, list):
                raise SchemaError(f"tables[{x}][{y}] must be a list of records")
            shape = (len(scenario.alice_outcomes[x]), len(scenario.bob_outcomes[y]))
            t = np.zeros(shape)
            seen = set()
            for rec in cells:
                _require_keys(rec, {"a", "b", value_key}, where=f"tables[{x}][{y}] record")
                a, b, v = rec["a"], rec["b"], rec[value_key]
                if not isinstance(a, int) or not isinstance(b, int) or isinstance(a, bool) or isinstance(b, bool):
                    raise SchemaError(f"tables[{x}][{y}]: outcome labels must be integers")
                if value_key == "count":
                    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                        raise SchemaError(f"tables[{x}][{y}]: count must be a nonnegative integer")
                elif not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise SchemaError(f"tables[{x}][{y}]: p must be a number")
                i = scenario.alice_index(x, a)
                j = scenario.bob_index(y, b)
                if (i, j) in seen:
                    raise SchemaError(f"tables[{x}][{y}]: duplicate record for (a={a}, b={b})")
                seen.add((i, j))
                t[i, j] = v
            prow.append(t)
        parsed.append(prow)
    return parsed


def load_behavior(text: str, tol: float = TOL_NORM) -> Behavior:
    """Parse and validate a behavior file (see module docs for the schema)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    _require_keys(data, {"scenario", "tables"}, where="behavior file")
    scenario = Scenario.from_dict(data["scenario"])
    tables = _parse_tables(data, scenario, "p")
    return Behavior.from_tables(scenario, tables, tol=tol)


def load_empirical(text: str) -> EmpiricalBehavior:
    """Parse an empirical behavior file ({a,b,count} records)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    _require_keys(data, {"scenario", "tables"}, where="behavior file")
    scenario = Scenario.from_dict(data["scenario"])
    counts = _parse_tables(data, scenario, "count")
    counts = [[np.asarray(t, dtype=np.int64) for t in row] for row in counts]
    return EmpiricalBehavior.from_counts(scenario, counts)


def behavior_file_kind(text: str) -> str:
    """'behavior' for p-records, 'empirical' for count-records.

    Decided from the first record found; files mixing the two kinds fail
    later schema checks.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "tables" not in data:
        raise SchemaError("behavior file missing 'tables'")
    for row in data["tables"] if isinstance(data["tables"], list) else []:
        for cells in row if isinstance(row, list) else []:
            for rec in cells if isinstance(cells, list) else []:
                if isinstance(rec, dict) and "count" in rec:
                    return "empirical"
                return "behavior"
    return "behavior"


def dump_behavior(behavior: Behavior | EmpiricalBehavior) -> str:
    return json.dumps(behavior.to_dict(), indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------
# elementary correlation measures
# ----------------------------------------------------------------------

def equality_probability(behavior: Behavior, x: int, y: int) -> float:
    """p(A_x = B_y): total probability that the two labs see equal labels.

    Zero when the two outcome-label sets are disjoint.
    """
    t = behavior.table(x, y)
    sc = behavior.scenario
    total = 0.0
    for i, a in enumerate(sc.alice_outcomes[x]):
        for j, b in enumerate(sc.bob_outcomes[y]):
            if a == b:
                total += t[i, j]
    return float(total)


def correlation_E(behavior: Behavior, x: int, y: int) -> float:
    """E(A_x, B_y) = p(equal) - p(unequal) = 2 p(equal) - 1."""
    return 2.0 * equality_probability(behavior, x, y) - 1.0


def mix(b1: Behavior, b2: Behavior, weight: float) -> Behavior:
    """Convex mixture weight*b1 + (1-weight)*b2 of two same-scenario behaviors."""
    if b1.scenario != b2.scenario:
        raise ScenarioMismatchError("cannot mix behaviors with different scenarios")
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"mixture weight {weight} outside [0, 1]")
    tables = [[weight * b1.tables[x][y] + (1.0 - weight) * b2.tables[x][y]
               for y in range(b1.scenario.bob_setting_count)]
              for x in range(b1.scenario.alice_setting_count)]
    return Behavior.from_tables(b1.scenario, tables)
