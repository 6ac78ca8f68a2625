"""Dense two-phase simplex for the small linear programs used here.

Solves   min c.x   s.t.   a_eq x = b_eq,   a_ub x <= b_ub,   x >= 0.

Bland's smallest-index rule is used for both the entering and the leaving
variable, so the method terminates on every input (no cycling).  Problem
sizes in this package stay in the low thousands of variables, where a dense
tableau is simpler and fast enough.  Phase one also produces a Farkas
certificate when the constraints are infeasible: a row vector y with
y.a_col <= 0 for every column and y.b > 0, which downstream code turns into
Bell-type separating functionals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BellkitError

_PIVOT_TOL = 1e-11
_COST_TOL = 1e-11


class LPFailureError(BellkitError):
    """The simplex hit its iteration cap or lost feasibility numerically."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class LPSolution:
    """Solver output.  ``status`` is 'optimal', 'infeasible' or 'unbounded'.

    For 'optimal': x, objective and duals are set and ``residual`` is the
    worst constraint violation at x.  For 'infeasible': ``dual_eq``/
    ``dual_ub`` hold the Farkas certificate and ``residual`` the minimum
    total (1-norm) infeasibility found by phase one.
    """

    status: str
    x: np.ndarray | None
    objective: float | None
    dual_eq: np.ndarray | None
    dual_ub: np.ndarray | None
    residual: float
    iterations: int


def _as_matrix(a, b, n_vars: int, name: str) -> tuple[np.ndarray, np.ndarray]:
    if a is None:
        return np.zeros((0, n_vars)), np.zeros(0)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != (len(b), n_vars):
        raise ValueError(f"{name} has shape {a.shape}, expected ({len(b)}, {n_vars})")
    return a, b


class _Tableau:
    """Simplex tableau with columns [x | ub slacks | artificials | rhs]."""

    def __init__(self, c, a_eq, b_eq, a_ub, b_ub):
        self.n = len(c)
        self.c = np.asarray(c, dtype=float)
        a_eq, b_eq = _as_matrix(a_eq, b_eq, self.n, "a_eq")
        a_ub, b_ub = _as_matrix(a_ub, b_ub, self.n, "a_ub")
        self.me, self.mu = len(b_eq), len(b_ub)
        m = self.me + self.mu

        body = np.vstack([a_eq, a_ub]) if m else np.zeros((0, self.n))
        slack = np.vstack([np.zeros((self.me, self.mu)), np.eye(self.mu)]) if m else np.zeros((0, 0))
        rhs = np.concatenate([b_eq, b_ub])

        # orient every row so its rhs is nonnegative; remember the flips so
        # duals can be reported for the original row orientation
        self.flip = np.where(rhs < 0, -1.0, 1.0)
        body *= self.flip[:, None]
        slack *= self.flip[:, None]
        rhs = rhs * self.flip

        self.n_slack = self.mu
        self.art0 = self.n + self.n_slack           # first artificial column
        self.t = np.hstack([body, slack, np.eye(m), rhs[:, None]])
        self.rows = m
        self.cols = self.art0 + m                   # columns excluding rhs
        self.basis = list(range(self.art0, self.art0 + m))
        self.kept_rows = np.arange(m)               # original row index per tableau row
        self.obj = np.zeros(self.cols + 1)
        self.iterations = 0

    # -- pivoting ------------------------------------------------------

    def _pivot(self, row: int, col: int) -> None:
        t = self.t
        t[row] /= t[row, col]
        factors = t[:, col].copy()
        factors[row] = 0.0
        t -= np.outer(factors, t[row])
        self.obj -= self.obj[col] * t[row]
        self.basis[row] = col

    def _run(self, allowed: np.ndarray, max_iterations: int) -> str:
        """Bland iterations until optimal/unbounded on the allowed columns."""
        t = self.t
        while True:
            reduced = self.obj[:self.cols]
            candidates = np.nonzero(allowed & (reduced < -_COST_TOL))[0]
            if candidates.size == 0:
                return "optimal"
            if self.iterations >= max_iterations:
                return "iteration_limit"
            j = int(candidates[0])                      # Bland: smallest index
            col = t[:, j]
            rows = np.nonzero(col > _PIVOT_TOL)[0]
            if rows.size == 0:
                return "unbounded"
            ratios = t[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12]
            i = int(min(ties, key=lambda r: self.basis[r]))  # Bland tie-break
            self._pivot(i, j)
            self.iterations += 1

    # -- objective row setup -------------------------------------------

    def set_costs(self, costs: np.ndarray) -> None:
        obj = np.zeros(self.cols + 1)
        obj[:len(costs)] = costs
        for i, bcol in enumerate(self.basis):
            cb = costs[bcol] if bcol < len(costs) else 0.0
            if cb != 0.0:
                obj -= cb * self.t[i]
        obj[self.basis] = 0.0
        self.obj = obj

    def duals(self, costs_art: float) -> np.ndarray:
        """c_B B^{-1} for every original row via artificial reduced costs."""
        y = np.zeros(self.rows)
        for art_offset in range(self.rows):
            y[art_offset] = costs_art - self.obj[self.art0 + art_offset]
        return y

    def solution(self) -> np.ndarray:
        x = np.zeros(self.cols)
        for i, bcol in enumerate(self.basis):
            x[bcol] = self.t[i, -1]
        return x[:self.n]


def solve_lp(c, a_eq=None, b_eq=None, a_ub=None, b_ub=None, *,
             feas_tol: float = 1e-9, max_iterations: int | None = None) -> LPSolution:
    """Two-phase simplex; see module docstring for the problem form."""
    tab = _Tableau(c, a_eq, b_eq, a_ub, b_ub)
    if max_iterations is None:
        max_iterations = 1000 + 50 * (tab.rows + tab.cols)

    if tab.rows == 0:
        if np.all(tab.c >= -_COST_TOL):
            return LPSolution("optimal", np.zeros(tab.n), 0.0, np.zeros(0), np.zeros(0), 0.0, 0)
        return LPSolution("unbounded", None, None, None, None, 0.0, 0)

    # phase one: minimize total artificial mass
    phase1_costs = np.zeros(tab.cols)
    phase1_costs[tab.art0:] = 1.0
    tab.set_costs(phase1_costs)
    allowed = np.ones(tab.cols, dtype=bool)
    allowed[tab.art0:] = False                      # artificials never re-enter
    status = tab._run(allowed, max_iterations)
    if status == "iteration_limit":
        raise LPFailureError("simplex iteration cap reached in phase one", float(tab.obj[-1]))
    infeasibility = -float(tab.obj[-1])             # obj row rhs tracks -objective
    if infeasibility > feas_tol:
        y = tab.duals(costs_art=1.0) * tab.flip
        return LPSolution("infeasible", None, None,
                          y[:tab.me], y[tab.me:], infeasibility, tab.iterations)

    # drive artificials out of the basis; rows that cannot pivot are redundant
    keep = np.ones(tab.rows, dtype=bool)
    for i in range(tab.rows):
        if tab.basis[i] >= tab.art0:
            pivots = np.nonzero(allowed & (np.abs(tab.t[i, :tab.cols]) > _PIVOT_TOL))[0]
            if pivots.size:
                tab._pivot(i, int(pivots[0]))
            else:
                keep[i] = False
    if not keep.all():
        kept = np.nonzero(keep)[0]
        tab.t = tab.t[kept]
        tab.basis = [tab.basis[i] for i in kept]
        tab.kept_rows = tab.kept_rows[kept]
        tab.rows = len(kept)

    # phase two on the real objective
    phase2_costs = np.zeros(tab.cols)
    phase2_costs[:tab.n] = tab.c
    tab.set_costs(phase2_costs)
    status = tab._run(allowed, max_iterations)
    if status == "iteration_limit":
        raise LPFailureError("simplex iteration cap reached in phase two", 0.0)
    if status == "unbounded":
        return LPSolution("unbounded", None, None, None, None, 0.0, tab.iterations)

    x = tab.solution()
    objective = float(tab.c @ x)
    y_kept = np.array([-tab.obj[tab.art0 + int(orig)] for orig in tab.kept_rows])
    y = np.zeros(tab.me + tab.mu)
    y[tab.kept_rows] = y_kept
    y *= tab.flip

    residual = 0.0
    if a_eq is not None and tab.me:
        residual = max(residual, float(np.max(np.abs(np.asarray(a_eq) @ x - np.asarray(b_eq)))))
    if a_ub is not None and tab.mu:
        residual = max(residual, float(np.max(np.asarray(a_ub) @ x - np.asarray(b_ub), initial=0.0)))
    return LPSolution("optimal", x, objective, y[:tab.me], y[tab.me:], residual, tab.iterations)
