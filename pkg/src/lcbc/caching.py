"""Coded caching through the broadcast LP: N files, K users, memory M per user.

Placement is summarized by normalized ranks r[i, j] and q[i, j]; delivery by
symmetric multicast widths beta_t and family widths gamma_t.  Only the
three-file three-user program is written out in full.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .ratlp import LE, EQ, OPTIMAL, LpModel, as_fraction, fmt, solve


class CachingError(ValueError):
    pass


@dataclass(frozen=True)
class CachingConfig:
    N: int
    K: int
    M: Fraction

    def __post_init__(self):
        if not 0 <= self.M <= self.N:
            raise CachingError(f"memory M={self.M} outside [0, {self.N}]")
        if self.K > self.N:
            raise CachingError("distinct-demand reduction needs K <= N")


def r_name(i: int, j: int) -> str:
    return f"r_{i},{j}"


def q_name(i: int, j: int) -> str:
    return f"q_{i},{j}"


def budget_constraints(N: int, K: int, M=None):
    """Cache and file budgets for general (N, K) as (coeffs, rhs, tag) triples.

    Cache: sum_i C(N,i) [sum_j C(K-1,j-1) r_ij + sum_{j>=3} C(K-1,j-1) q_ij] <= M
    File:  sum_i C(N-1,i-1) [sum_j C(K,j) r_ij + sum_{j>=3} C(K,j)(j-1) q_ij] <= 1
    """
    if N < 1 or K < 1:
        raise CachingError("N and K must be positive")
    cache: dict[str, Fraction] = {}
    file: dict[str, Fraction] = {}
    for i in range(1, N + 1):
        for j in range(1, K + 1):
            cache[r_name(i, j)] = Fraction(comb(N, i) * comb(K - 1, j - 1))
            file[r_name(i, j)] = Fraction(comb(N - 1, i - 1) * comb(K, j))
        for j in range(3, K + 1):
            cache[q_name(i, j)] = Fraction(comb(N, i) * comb(K - 1, j - 1))
            file[q_name(i, j)] = Fraction(comb(N - 1, i - 1) * comb(K, j) * (j - 1))
    m = None if M is None else as_fraction(M)
    return [(cache, m, "cache-budget"), (file, Fraction(1), "file-budget")]


# three files, three users ------------------------------------------------------

Q33 = (q_name(3, 1), q_name(3, 2), q_name(3, 3))
BETAS = ("beta_1", "beta_2", "beta_3")
GAMMA3 = "gamma_3"


def printed_budgets_33(M) -> list[tuple[dict[str, Fraction], Fraction, str]]:
    """The two budget rows used by the three-user program, as written there."""
    cache, file = {}, {}
    for j in (1, 2, 3):
        for name, w in ((r_name(1, j), 1), (r_name(2, j), 2), (r_name(3, j), 1),
                        (q_name(3, j), 1)):
            cache[name] = cache.get(name, 0) + comb(3, j) * w
        for name, w in ((r_name(1, j), 3), (r_name(2, j), 3), (r_name(3, j), 1),
                        (q_name(3, j), 2)):
            file[name] = file.get(name, 0) + comb(2, j - 1) * w
    return [({k: Fraction(v) for k, v in cache.items()}, as_fraction(M), "cache-budget"),
            ({k: Fraction(v) for k, v in file.items()}, Fraction(1), "file-budget")]


def build_caching_lp_33(M) -> LpModel:
    M = as_fraction(M)
    CachingConfig(3, 3, M)
    model = LpModel("min")
    for name, cost in zip(BETAS + (GAMMA3,), (3, 3, 1, 2)):
        model.add_variable(name, cost)
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            model.add_variable(r_name(i, j))
    for name in Q33:
        model.add_variable(name)

    r = lambda i, j: r_name(i, j)
    q = lambda j: q_name(3, j)

    def le(lhs: dict, rhs: dict, tag: str):
        coeffs = dict(lhs)
        for v, c in rhs.items():
            coeffs[v] = coeffs.get(v, 0) - c
        model.add_constraint(coeffs, LE, 0, tag)

    le({"beta_3": 1}, {r(2, 1): 1}, "delivery-a")
    le({"beta_2": 1, "beta_3": 1},
       {q(1): 1, q(2): 2, r(1, 1): 1, r(1, 2): 2, r(2, 1): 1, r(2, 2): 3, r(3, 2): 1},
       "delivery-b")
    le({"beta_2": 2, "beta_3": 1},
       {q(1): 1, q(2): 4, r(1, 1): 2, r(1, 2): 4, r(2, 1): 1, r(2, 2): 6, r(3, 2): 2},
       "delivery-c")
    # the lone "q_3" term of this row is taken to be q_{3,3}
    le({GAMMA3: 1, "beta_2": 2, "beta_3": 1},
       {q(1): 1, q(2): 4, q(3): 2, r(1, 1): 2, r(1, 2): 6, r(1, 3): 3, r(2, 1): 1,
        r(2, 2): 6, r(2, 3): 3, r(3, 2): 2, r(3, 3): 1},
       "delivery-d")
    model.add_constraint({"beta_1": 1, GAMMA3: 1, "beta_2": 2, "beta_3": 1, q(1): 1,
                          r(1, 1): 1, r(2, 1): 2, r(3, 1): 1}, EQ, 1, "delivery-eq")
    for coeffs, rhs, tag in printed_budgets_33(M):
        model.add_constraint(coeffs, LE, rhs, tag)
    return model


def solve_load_33(M) -> Fraction:
    sol = solve(build_caching_lp_33(M))
    if sol.status != OPTIMAL:
        raise CachingError(f"caching LP at M={M} is {sol.status}")
    return sol.objective


# reference polylines ------------------------------------------------------------

F = Fraction
REF_ENVELOPE = [(F(0), F(3)), (F(1, 3), F(2)), (F(1, 2), F(5, 3)), (F(1), F(1)),
                (F(2), F(1, 2)), (F(3), F(0))]
REF_EXACT = [(F(0), F(3)), (F(1, 3), F(2)), (F(3, 5), F(3, 2)), (F(1), F(1)),
             (F(2), F(1, 2)), (F(3), F(0))]


def interpolate(points, M) -> Fraction:
    M = as_fraction(M)
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if x0 <= M <= x1:
            return y0 + (y1 - y0) * (M - x0) / (x1 - x0)
    raise CachingError(f"M={M} outside the reference range")


@dataclass(frozen=True)
class SweepPoint:
    M: Fraction
    R: Fraction
    ref_envelope: Fraction
    ref_exact: Fraction


def make_grid(step, upper=3) -> list[Fraction]:
    step = as_fraction(step)
    if step <= 0:
        raise CachingError("grid step must be positive")
    n = int(as_fraction(upper) / step)
    pts = [step * i for i in range(n + 1)]
    if pts[-1] != upper:
        pts.append(as_fraction(upper))
    return pts


def tradeoff_sweep(grid, jobs: int = 1) -> list[SweepPoint]:
    grid = [as_fraction(m) for m in grid]
    for m in grid:
        if not 0 <= m <= 3:
            raise CachingError(f"grid point {m} outside [0, 3]")
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            loads = list(ex.map(solve_load_33, grid))
    else:
        loads = [solve_load_33(m) for m in grid]
    return [SweepPoint(m, R, interpolate(REF_ENVELOPE, m), interpolate(REF_EXACT, m))
            for m, R in zip(grid, loads)]


def sweep_csv(points: list[SweepPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M", "R_num", "R_den", "R_decimal", "ref_envelope", "ref_exact"])
    for p in points:
        w.writerow([fmt(p.M), p.R.numerator, p.R.denominator, f"{float(p.R):.6f}",
                    fmt(p.ref_envelope), fmt(p.ref_exact)])
    return buf.getvalue()
