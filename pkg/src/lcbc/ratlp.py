"""Exact linear programming over the rationals.

A small dense two-phase simplex with Bland's rule.  Every variable is
nonnegative.  Numbers are :class:`fractions.Fraction` throughout, so results
are exact and runs are reproducible.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

LE, EQ, GE = "<=", "=", ">="
OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


class MalformedModel(ValueError):
    pass


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


def fmt(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[str, Fraction], ...]
    rel: str
    rhs: Fraction
    tag: str

    def lhs(self, values: Mapping[str, Fraction]) -> Fraction:
        return sum((c * values[v] for v, c in self.coeffs), Fraction(0))

    def slack(self, values: Mapping[str, Fraction]) -> Fraction:
        """Nonnegative iff satisfied (for '=' the absolute gap is negated)."""
        lhs = self.lhs(values)
        if self.rel == LE:
            return self.rhs - lhs
        if self.rel == GE:
            return lhs - self.rhs
        return -abs(lhs - self.rhs)


@dataclass
class LpModel:
    sense: str = "min"
    variables: list[str] = field(default_factory=list)
    objective: dict[str, Fraction] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)

    def add_variable(self, name: str, cost=0) -> str:
        if name in self._index():
            raise MalformedModel(f"duplicate variable {name}")
        self.variables.append(name)
        self._idx = None
        if cost:
            self.objective[name] = as_fraction(cost)
        return name

    def _index(self) -> dict[str, int]:
        idx = getattr(self, "_idx", None)
        if idx is None or len(idx) != len(self.variables):
            idx = {v: i for i, v in enumerate(self.variables)}
            self._idx = idx
        return idx

    def add_constraint(self, coeffs: Mapping[str, object] | Iterable, rel: str, rhs, tag: str):
        if rel not in (LE, EQ, GE):
            raise MalformedModel(f"unknown relation {rel!r}")
        if not tag:
            raise MalformedModel("constraints need a provenance tag")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: dict[str, Fraction] = {}
        idx = self._index()
        for v, c in items:
            if v not in idx:
                raise MalformedModel(f"constraint {tag} uses undeclared variable {v}")
            merged[v] = merged.get(v, Fraction(0)) + as_fraction(c)
        terms = tuple((v, c) for v, c in sorted(merged.items(), key=lambda t: idx[t[0]]) if c)
        self.constraints.append(Constraint(terms, rel, as_fraction(rhs), tag))

    def objective_value(self, values: Mapping[str, Fraction]) -> Fraction:
        return sum((c * values[v] for v, c in self.objective.items()), Fraction(0))

    def to_json(self) -> dict:
        return {
            "sense": self.sense,
            "variables": list(self.variables),
            "objective": {v: fmt(c) for v, c in self.objective.items()},
            "constraints": [
                {"tag": c.tag, "coeffs": {v: fmt(x) for v, x in c.coeffs}, "rel": c.rel,
                 "rhs": fmt(c.rhs)}
                for c in self.constraints
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LpModel":
        m = cls(obj.get("sense", "min"))
        for v in obj["variables"]:
            m.add_variable(v, obj.get("objective", {}).get(v, 0))
        for c in obj["constraints"]:
            m.add_constraint(c["coeffs"], c["rel"], c["rhs"], c["tag"])
        return m


@dataclass
class LpSolution:
    status: str
    objective: Fraction | None = None
    values: dict[str, Fraction] = field(default_factory=dict)
    tight: list[str] = field(default_factory=list)
    pivots: int = 0

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "objective": None if self.objective is None else fmt(self.objective),
            "values": {v: fmt(x) for v, x in self.values.items()},
            "tight": list(self.tight),
        }


@dataclass
class Evaluation:
    feasible: bool
    objective: Fraction
    slacks: list[tuple[str, Fraction]]


def evaluate(model: LpModel, values: Mapping[str, object]) -> Evaluation:
    missing = [v for v in model.variables if v not in values]
    if missing:
        raise MalformedModel(f"assignment misses {missing}")
    vals = {v: as_fraction(values[v]) for v in model.variables}
    slacks = [(c.tag, c.slack(vals)) for c in model.constraints]
    feasible = all(s >= 0 for _, s in slacks) and all(x >= 0 for x in vals.values())
    return Evaluation(feasible, model.objective_value(vals), slacks)


def solve(model: LpModel) -> LpSolution:
    if model.sense not in ("min", "max"):
        raise MalformedModel(f"unknown sense {model.sense!r}")
    n = len(model.variables)
    idx = model._index()
    sign = 1 if model.sense == "min" else -1

    # normalize: rhs >= 0, identical rows merged (tightest rhs wins)
    rows: dict[tuple, list] = {}
    for c in model.constraints:
        dense = [Fraction(0)] * n
        for v, x in c.coeffs:
            dense[idx[v]] = x
        rel, rhs = c.rel, c.rhs
        if rhs < 0:
            dense = [-x for x in dense]
            rhs = -rhs
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        if not any(dense):
            if (rel == LE and rhs < 0) or (rel == GE and rhs > 0) or (rel == EQ and rhs != 0):
                return LpSolution(INFEASIBLE)
            continue
        key = (tuple(dense), rel)
        if rel == EQ:
            key = (tuple(dense), EQ, rhs)
        prev = rows.get(key)
        if prev is None:
            rows[key] = [dense, rel, rhs]
        elif rel == LE:
            prev[2] = min(prev[2], rhs)
        elif rel == GE:
            prev[2] = max(prev[2], rhs)

    cons = list(rows.values())
    m = len(cons)
    # column layout: originals | slack/surplus | artificials
    n_slack = sum(1 for _, rel, _ in cons if rel != EQ)
    n_art = sum(1 for _, rel, _ in cons if rel != LE)
    width = n + n_slack + n_art
    T: list[list[Fraction]] = []
    basis: list[int] = []
    s_col, a_col = n, n + n_slack
    artificial = set()
    for dense, rel, rhs in cons:
        row = dense + [Fraction(0)] * (n_slack + n_art) + [rhs]
        if rel == LE:
            row[s_col] = Fraction(1)
            basis.append(s_col)
            s_col += 1
        else:
            if rel == GE:
                row[s_col] = Fraction(-1)
                s_col += 1
            row[a_col] = Fraction(1)
            basis.append(a_col)
            artificial.add(a_col)
            a_col += 1
        T.append(row)

    pivots = 0

    def run(cost: list[Fraction], allowed: int) -> str:
        """Minimize cost over columns < allowed; tableau and basis updated in place."""
        nonlocal pivots
        # reduced costs: z_j = c_j - c_B B^-1 A_j
        z = list(cost) + [Fraction(0)]
        for i, b in enumerate(basis):
            cb = cost[b]
            if cb:
                row = T[i]
                for j in range(width + 1):
                    if row[j]:
                        z[j] -= cb * row[j]
        while True:
            enter = next((j for j in range(allowed) if z[j] < 0), None)
            if enter is None:
                return OPTIMAL
            best, leave = None, None
            for i in range(m):
                a = T[i][enter]
                if a > 0:
                    ratio = T[i][-1] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                return UNBOUNDED
            _pivot(T, leave, enter, z)
            basis[leave] = enter
            pivots += 1

    if artificial:
        cost1 = [Fraction(0)] * width
        for j in artificial:
            cost1[j] = Fraction(1)
        run(cost1, width)
        phase1 = sum((T[i][-1] for i, b in enumerate(basis) if b in artificial), Fraction(0))
        if phase1 > 0:
            return LpSolution(INFEASIBLE, pivots=pivots)
        # drive remaining (zero-valued) artificials out of the basis
        keep = []
        for i, b in enumerate(basis):
            if b in artificial:
                j = next((j for j in range(n + n_slack) if T[i][j] != 0), None)
                if j is None:
                    continue  # redundant row
                _pivot(T, i, j, None)
                basis[i] = j
            keep.append(i)
        T[:] = [T[i] for i in keep]
        basis[:] = [basis[i] for i in keep]
        m = len(T)

    cost2 = [Fraction(0)] * width
    for v, c in model.objective.items():
        cost2[idx[v]] = sign * c
    status = run(cost2, n + n_slack)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, pivots=pivots)
    x = [Fraction(0)] * width
    for i, b in enumerate(basis):
        x[b] = T[i][-1]
    values = {v: x[i] for i, v in enumerate(model.variables)}
    obj = model.objective_value(values)
    ev = evaluate(model, values)
    if not ev.feasible:  # pragma: no cover - guards the exact arithmetic
        raise AssertionError("simplex returned an infeasible point")
    tight = [tag for tag, s in ev.slacks if s == 0]
    return LpSolution(OPTIMAL, obj, values, tight, pivots)


def _pivot(T, r: int, c: int, z):
    prow = T[r]
    pv = prow[c]
    if pv != 1:
        prow = [x / pv for x in prow]
        T[r] = prow
    nz = [j for j, x in enumerate(prow) if x]
    for i, row in enumerate(T):
        if i != r:
            f = row[c]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
    if z is not None:
        f = z[c]
        if f:
            for j in nz:
                z[j] -= f * prow[j]


def dumps_model(model: LpModel) -> str:
    return json.dumps(model.to_json(), indent=1)
