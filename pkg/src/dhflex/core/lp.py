"""A dense two-phase simplex solver for small linear programs.

Programs are stated as

    minimize    c·x
    subject to  a_k·x (<=, ==, >=) b_k   for every constraint k
                lower <= x <= upper

Variable bounds are handled implicitly (bounded-variable simplex), so a box
constraint does not cost a tableau row. Pricing is Dantzig's rule; after a run
of iterations without objective progress the solver falls back to Bland's
rule, which cannot cycle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9
STALL_LIMIT = 100


class LPError(Exception):
    pass


class BadProgram(LPError):
    pass


class NoConvergence(LPError):
    pass


class Relation(str, Enum):
    LE = "<="
    EQ = "=="
    GE = ">="


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(kw_only=True)
class Constraint:
    coefficients: np.ndarray
    relation: Relation
    rhs: float


@dataclass(kw_only=True)
class LinearProgram:
    objective: np.ndarray
    constraints: list[Constraint] = field(default_factory=list)
    lowerBounds: np.ndarray | None = None  # defaults to 0
    upperBounds: np.ndarray | None = None  # defaults to +inf

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=np.float64)
        numVariables = len(self.objective)
        if self.lowerBounds is None:
            self.lowerBounds = np.zeros(numVariables)
        if self.upperBounds is None:
            self.upperBounds = np.full(numVariables, np.inf)
        self.lowerBounds = np.asarray(self.lowerBounds, dtype=np.float64)
        self.upperBounds = np.asarray(self.upperBounds, dtype=np.float64)

    @property
    def numVariables(self) -> int:
        return len(self.objective)

    def addConstraint(self, coefficients, relation, rhs) -> None:
        self.constraints.append(
            Constraint(
                coefficients=np.asarray(coefficients, dtype=np.float64),
                relation=Relation(relation),
                rhs=float(rhs),
            )
        )

    def check(self) -> None:
        n = self.numVariables
        if self.objective.ndim != 1:
            raise BadProgram("objective must be a vector")
        if self.lowerBounds.shape != (n,) or self.upperBounds.shape != (n,):
            raise BadProgram(
                f"bounds must have {n} entries, got {self.lowerBounds.shape} "
                f"and {self.upperBounds.shape}"
            )
        if np.any(self.lowerBounds > self.upperBounds):
            raise BadProgram("lower bound exceeds upper bound")
        if np.any(np.isnan(self.lowerBounds)) or np.any(np.isnan(self.upperBounds)):
            raise BadProgram("bounds must not be NaN")
        if not np.all(np.isfinite(self.objective)):
            raise BadProgram("objective coefficients must be finite")
        for index, constraint in enumerate(self.constraints):
            if constraint.coefficients.shape != (n,):
                raise BadProgram(
                    f"constraint {index} has {constraint.coefficients.shape} "
                    f"coefficients, expected {n}"
                )
            if not np.all(np.isfinite(constraint.coefficients)) or not np.isfinite(
                constraint.rhs
            ):
                raise BadProgram(f"constraint {index} is not finite")


@dataclass(kw_only=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objectiveValue: float = np.nan
    iterations: int = 0

    @property
    def isOptimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL


def solve(
    lp: LinearProgram, tol: float = DEFAULT_TOLERANCE, maxIterations=None
) -> LpSolution:
    lp.check()
    if maxIterations is None:
        maxIterations = 50 * (lp.numVariables + len(lp.constraints))

    form = _StandardForm.fromProgram(lp)
    tableau = _Tableau(form, tol=tol, maxIterations=maxIterations)

    if form.numArtificial:
        tableau.optimize(form.phaseOneCost)
        infeasibility = tableau.objective(form.phaseOneCost)
        if infeasibility > tol * max(1.0, form.rhsScale):
            logger.debug(f"phase 1 ended with infeasibility {infeasibility:g}")
            return LpSolution(
                status=LpStatus.INFEASIBLE, iterations=tableau.iterations
            )
        # Artificials are pinned at zero from here on; any that remain basic
        # leave on the first pivot touching their row
        tableau.upper[form.artificialSlice] = 0.0

    if not tableau.optimize(form.phaseTwoCost):
        return LpSolution(status=LpStatus.UNBOUNDED, iterations=tableau.iterations)

    x = form.recover(tableau.values())
    x = np.clip(x, lp.lowerBounds, lp.upperBounds)
    return LpSolution(
        status=LpStatus.OPTIMAL,
        x=x,
        objectiveValue=float(lp.objective @ x),
        iterations=tableau.iterations,
    )


@dataclass(kw_only=True)
class _StandardForm:
    # columns: structural | slack/surplus | artificial
    matrix: np.ndarray
    rhs: np.ndarray
    upper: np.ndarray
    basis: list[int]
    phaseOneCost: np.ndarray
    phaseTwoCost: np.ndarray
    numArtificial: int
    artificialSlice: slice
    # recovery of the original variables
    columnOrigin: np.ndarray
    columnSign: np.ndarray
    offsets: np.ndarray
    numStructural: int

    @property
    def rhsScale(self) -> float:
        return float(np.max(np.abs(self.rhs))) if len(self.rhs) else 0.0

    @classmethod
    def fromProgram(cls, lp: LinearProgram) -> _StandardForm:
        n = lp.numVariables
        lower, upper = lp.lowerBounds, lp.upperBounds
        if lp.constraints:
            rows = np.array([c.coefficients for c in lp.constraints])
        else:
            rows = np.zeros((0, n))
        rhs = np.array([c.rhs for c in lp.constraints], dtype=np.float64)
        relations = [c.relation for c in lp.constraints]

        offsets = np.zeros(n)
        columns = []
        columnOrigin = []
        columnSign = []
        columnUpper = []
        for j in range(n):
            if np.isfinite(lower[j]):
                offsets[j] = lower[j]
                signs = [1.0]
                columnUpper.append(upper[j] - lower[j])
            elif np.isfinite(upper[j]):
                offsets[j] = upper[j]
                signs = [-1.0]
                columnUpper.append(np.inf)
            else:
                signs = [1.0, -1.0]
                columnUpper.extend([np.inf, np.inf])
            for sign in signs:
                columns.append(sign * rows[:, j])
                columnOrigin.append(j)
                columnSign.append(sign)

        numRows = len(relations)
        structural = np.array(columns).T if columns else np.zeros((numRows, 0))
        structural = structural.reshape(numRows, len(columnOrigin))
        rhs = rhs - rows @ offsets

        for i in range(numRows):
            if rhs[i] < 0:
                structural[i] = -structural[i]
                rhs[i] = -rhs[i]
                relations[i] = {
                    Relation.LE: Relation.GE,
                    Relation.GE: Relation.LE,
                    Relation.EQ: Relation.EQ,
                }[relations[i]]

        numStructural = structural.shape[1]
        slackRows = [i for i, r in enumerate(relations) if r != Relation.EQ]
        artificialRows = [i for i, r in enumerate(relations) if r != Relation.LE]
        numSlack = len(slackRows)
        numArtificial = len(artificialRows)
        total = numStructural + numSlack + numArtificial

        matrix = np.zeros((numRows, total))
        matrix[:, :numStructural] = structural
        basis = [-1] * numRows
        for k, i in enumerate(slackRows):
            column = numStructural + k
            if relations[i] == Relation.LE:
                matrix[i, column] = 1.0
                basis[i] = column
            else:
                matrix[i, column] = -1.0
        for k, i in enumerate(artificialRows):
            column = numStructural + numSlack + k
            matrix[i, column] = 1.0
            basis[i] = column

        artificialSlice = slice(numStructural + numSlack, total)
        phaseOneCost = np.zeros(total)
        phaseOneCost[artificialSlice] = 1.0
        phaseTwoCost = np.zeros(total)
        phaseTwoCost[:numStructural] = [
            sign * lp.objective[j] for j, sign in zip(columnOrigin, columnSign)
        ]

        return cls(
            matrix=matrix,
            rhs=rhs,
            upper=np.concatenate(
                [
                    np.array(columnUpper, dtype=np.float64),
                    np.full(total - numStructural, np.inf),
                ]
            ),
            basis=basis,
            phaseOneCost=phaseOneCost,
            phaseTwoCost=phaseTwoCost,
            numArtificial=numArtificial,
            artificialSlice=artificialSlice,
            columnOrigin=np.array(columnOrigin, dtype=int),
            columnSign=np.array(columnSign),
            offsets=offsets,
            numStructural=numStructural,
        )

    def recover(self, values: np.ndarray) -> np.ndarray:
        x = self.offsets.copy()
        np.add.at(
            x, self.columnOrigin, self.columnSign * values[: self.numStructural]
        )
        return x


class _Tableau:
    def __init__(self, form: _StandardForm, *, tol: float, maxIterations: int):
        self.table = form.matrix.copy()
        self.basicValues = form.rhs.copy()
        self.basis = list(form.basis)
        self.upper = form.upper.copy()
        self.atUpper = np.zeros(self.table.shape[1], dtype=bool)
        self.tol = tol
        self.maxIterations = maxIterations
        self.iterations = 0

    def values(self) -> np.ndarray:
        values = np.where(self.atUpper, self.upper, 0.0)
        values[self.basis] = self.basicValues
        return values

    def objective(self, cost: np.ndarray) -> float:
        return float(cost @ self.values())

    def optimize(self, cost: np.ndarray) -> bool:
        """Run simplex iterations for `cost`; False means unbounded."""
        tol = self.tol
        useBland = False
        bestObjective = self.objective(cost)
        stalled = 0
        isBasic = np.zeros(self.table.shape[1], dtype=bool)

        while True:
            if self.iterations >= self.maxIterations:
                raise NoConvergence(
                    f"simplex did not converge within {self.maxIterations} iterations"
                )

            isBasic[:] = False
            isBasic[self.basis] = True
            reduced = cost - cost[self.basis] @ self.table
            movable = ~isBasic & (self.upper > tol)
            eligible = movable & (
                (~self.atUpper & (reduced < -tol)) | (self.atUpper & (reduced > tol))
            )
            candidates = np.flatnonzero(eligible)
            if not len(candidates):
                return True

            if useBland:
                entering = int(candidates[0])
            else:
                entering = int(candidates[np.argmax(np.abs(reduced[candidates]))])

            direction = -1.0 if self.atUpper[entering] else 1.0
            rate = direction * self.table[:, entering]
            leavingRow, step, leavesAtUpper = self._ratioTest(rate, useBland)
            boundStep = self.upper[entering]

            if leavingRow is None and not np.isfinite(boundStep):
                return False

            self.iterations += 1
            if leavingRow is None or boundStep <= step:
                self.basicValues -= rate * boundStep
                self.atUpper[entering] = not self.atUpper[entering]
            else:
                enteringValue = (
                    self.upper[entering] if self.atUpper[entering] else 0.0
                ) + direction * step
                self.basicValues -= rate * step
                self.basicValues[leavingRow] = enteringValue
                self._pivot(leavingRow, entering)
                leaving = self.basis[leavingRow]
                self.atUpper[leaving] = leavesAtUpper
                self.atUpper[entering] = False
                self.basis[leavingRow] = entering

            currentObjective = self.objective(cost)
            if currentObjective < bestObjective - tol:
                bestObjective = currentObjective
                stalled = 0
            else:
                stalled += 1
                if stalled >= STALL_LIMIT and not useBland:
                    logger.debug("simplex stalled, switching to Bland's rule")
                    useBland = True

    def _ratioTest(self, rate: np.ndarray, useBland: bool):
        tol = self.tol
        basicValues = self.basicValues
        basicUpper = self.upper[self.basis]
        steps = np.full(len(rate), np.inf)
        towardsLower = rate > tol
        towardsUpper = (rate < -tol) & np.isfinite(basicUpper)
        steps[towardsLower] = (
            np.maximum(basicValues[towardsLower], 0.0) / rate[towardsLower]
        )
        steps[towardsUpper] = np.maximum(
            basicUpper[towardsUpper] - basicValues[towardsUpper], 0.0
        ) / (-rate[towardsUpper])

        if not len(steps) or not np.isfinite(steps.min()):
            return None, np.inf, False

        minStep = steps.min()
        ties = np.flatnonzero(steps <= minStep + tol)
        if useBland:
            row = int(min(ties, key=lambda i: self.basis[i]))
        else:
            row = int(ties[np.argmax(np.abs(rate[ties]))])
        return row, float(steps[row]), bool(rate[row] < 0)

    def _pivot(self, row: int, column: int) -> None:
        table = self.table
        pivotRow = table[row] / table[row, column]
        table -= np.outer(table[:, column], pivotRow)
        table[row] = pivotRow
