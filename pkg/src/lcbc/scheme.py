"""Load LP over the decomposition atlas and synthesis of the broadcast scheme.

Pipeline: :func:`solve_instance` builds the atlas and the LP and solves it
exactly; :func:`construct_messages` turns an integral profile into message
matrices over an extension field GF(q^z); :func:`verify_decodability` checks
every user's decoding matrix and resamples the random mixing on failure.
:func:`plan_instance` runs all three, block-scaling the instance when the
optimum is fractional.
"""
from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .decomp import COMPOSE, INTERSECT, DecompositionAtlas, Label, build_atlas, cover
from .field import FieldSpec, embedding, make_field
from .instance import LcbcInstance
from .matrix import (
    MatrixGF, InfeasibleSelection, complement_columns, conditional_rank, determinant,
    extend_basis, hstack, span_union,
)
from .ratlp import EQ, LE, OPTIMAL, LpModel, LpSolution, fmt
from .ratlp import solve as lp_solve

log = logging.getLogger(__name__)

RETRY_BUDGET = 8
FIELD_MARGIN = 16


class LpInfeasible(RuntimeError):
    pass


class NonIntegralProfile(ValueError):
    pass


class FamilySumError(AssertionError):
    pass


# --- naming -------------------------------------------------------------------

def _set_name(S: Iterable[int]) -> str:
    S = sorted(S)
    sep = "," if S and S[-1] >= 10 else ""
    return sep.join(map(str, S))


def var_name(S: Iterable[int], paren: bool = False) -> str:
    return f"lambda_({_set_name(S)})" if paren else f"lambda_{_set_name(S)}"


def label_var(V: Label) -> str:
    if V.family == COMPOSE:
        return var_name(V.team, paren=True)
    return var_name(V.users)


# --- profile ------------------------------------------------------------------

@dataclass(frozen=True)
class LambdaProfile:
    lam: dict[frozenset, Fraction]
    lam_paren: dict[frozenset, Fraction]

    def get(self, S, paren: bool = False) -> Fraction:
        return (self.lam_paren if paren else self.lam).get(frozenset(S), Fraction(0))

    def of_label(self, V: Label) -> Fraction:
        return self.get(V.team, paren=V.family == COMPOSE)

    def values(self):
        return list(self.lam.values()) + list(self.lam_paren.values())

    @property
    def denominator(self) -> int:
        return math.lcm(*(x.denominator for x in self.values())) if self.values() else 1

    def is_integral(self) -> bool:
        return self.denominator == 1

    def scaled(self, L: int) -> "LambdaProfile":
        return LambdaProfile({S: x * L for S, x in self.lam.items()},
                             {S: x * L for S, x in self.lam_paren.items()})

    def load(self) -> Fraction:
        return (sum(self.lam.values(), Fraction(0))
                + sum(((len(S) - 1) * x for S, x in self.lam_paren.items()), Fraction(0)))

    def to_json(self) -> dict:
        key = lambda S: _set_name(S)
        order = lambda S: (len(S), sorted(S))
        return {
            "lambda": {key(S): fmt(self.lam[S]) for S in sorted(self.lam, key=order)},
            "lambda_paren": {key(S): fmt(self.lam_paren[S])
                             for S in sorted(self.lam_paren, key=order)},
        }


# --- LP -------------------------------------------------------------------------

def build_lp(instance: LcbcInstance, atlas: DecompositionAtlas | None = None,
             subset_cap: int | None = None) -> LpModel:
    """Minimize total transmitted width subject to the per-user rank budgets.

    `subset_cap` limits the size of neighbour subsets that get their own
    constraint (None: all nonempty subsets).
    """
    if atlas is None:
        atlas = build_atlas([instance.U(k) for k in range(1, instance.K + 1)])
    if atlas.K != instance.K or atlas.d != instance.d or atlas.spec != instance.spec:
        raise ValueError("atlas does not belong to this instance")
    K = instance.K
    model = LpModel("min")
    for t in range(1, K + 1):
        for S in combinations(range(1, K + 1), t):
            model.add_variable(var_name(S), 1)
    for t in range(3, K + 1):
        for S in combinations(range(1, K + 1), t):
            model.add_variable(var_name(S, paren=True), t - 1)

    caches = {k: instance.caches[k - 1] for k in range(1, K + 1)}
    memo: dict = {}

    def crk(labels: tuple[Label, ...], k: int) -> int:
        key = (labels, k)
        if key not in memo:
            joint = span_union([atlas.subspace[W] for W in labels], d=atlas.d, spec=atlas.spec)
            memo[key] = conditional_rank(joint, caches[k])
        return memo[key]

    def lhs(labels: Iterable[Label]) -> dict[str, int]:
        names = sorted({label_var(W) for V in labels for W in cover(V, K)})
        return {v: 1 for v in names}

    def add_block(V: Label, k: int, main: str, sub: str):
        model.add_constraint(lhs([V]), LE, crk((V,), k), f"{main}|{V}|k={k}")
        nbrs = atlas.ls[V]
        top = len(nbrs) if subset_cap is None else min(subset_cap, len(nbrs))
        for size in range(1, top + 1):
            for L in combinations(nbrs, size):
                tag = f"{sub}|{V}|k={k}|{{{','.join(map(str, L))}}}"
                model.add_constraint(lhs(L), LE, crk(L, k), tag)

    for V in atlas.labels:
        if V.family == INTERSECT:
            for k in V.users:
                add_block(V, k, "intersect", "intersect-subset")
    for V in atlas.labels:
        if V.family == COMPOSE:
            add_block(V, V.k, "compose", "compose-subset")
    for k in range(1, K + 1):
        V = Label.single(k)
        model.add_constraint(lhs([V]), EQ, crk((V,), k), f"single|{V}|k={k}")
    return model


@dataclass
class Solved:
    profile: LambdaProfile
    load: Fraction
    model: LpModel
    solution: LpSolution
    atlas: DecompositionAtlas

    def __iter__(self):
        return iter((self.profile, self.load))

    def to_json(self) -> dict:
        return {"load": fmt(self.load), **self.profile.to_json(), "tight": self.solution.tight}


def profile_from_values(values: dict[str, Fraction], K: int) -> LambdaProfile:
    lam, paren = {}, {}
    for t in range(1, K + 1):
        for S in combinations(range(1, K + 1), t):
            lam[frozenset(S)] = values.get(var_name(S), Fraction(0))
            if t >= 3:
                paren[frozenset(S)] = values.get(var_name(S, paren=True), Fraction(0))
    return LambdaProfile(lam, paren)


def gain_form_objective(instance: LcbcInstance, profile: LambdaProfile) -> Fraction:
    """Uncoded load minus the multicast savings; equals the load whenever the
    per-user equalities hold."""
    uncoded = sum(conditional_rank(instance.U(k), instance.caches[k - 1])
                  for k in range(1, instance.K + 1))
    gain = sum(((len(S) - 1) * x for S, x in profile.lam.items() if len(S) >= 2), Fraction(0))
    gain += sum(profile.lam_paren.values(), Fraction(0))
    return uncoded - gain


def solve_instance(instance: LcbcInstance, subset_cap: int | None = None) -> Solved:
    atlas = build_atlas([instance.U(k) for k in range(1, instance.K + 1)])
    model = build_lp(instance, atlas, subset_cap)
    sol = lp_solve(model)
    if sol.status != OPTIMAL:
        raise LpInfeasible(f"load LP is {sol.status}")
    profile = profile_from_values(sol.values, instance.K)
    alt = gain_form_objective(instance, profile)
    if alt != sol.objective:
        raise AssertionError(f"objective forms disagree: {sol.objective} vs {alt}")
    log.debug("solved K=%d d=%d load=%s pivots=%d", instance.K, instance.d, sol.objective,
              sol.pivots)
    return Solved(profile, sol.objective, model, sol, atlas)


# --- messages -------------------------------------------------------------------

def extension_degree(q: int, K: int, d: int) -> int:
    """Smallest z with q**z >= 16 K d."""
    z = 1
    while q**z < FIELD_MARGIN * K * d:
        z += 1
    return z


@dataclass(frozen=True)
class Message:
    kind: str  # "multicast", "family" or "unicast"
    users: tuple[int, ...]
    member: int | None
    matrix: MatrixGF
    transmitted: bool

    @property
    def width(self) -> int:
        return self.matrix.cols

    def to_json(self) -> dict:
        out = {"kind": self.kind, "users": list(self.users), "width": self.width,
               "transmitted": self.transmitted, "matrix": self.matrix.to_json()}
        if self.member is not None:
            out["member"] = self.member
        return out


@dataclass
class SchemePlan:
    instance: LcbcInstance  # block-scaled instance the messages act on
    profile: LambdaProfile  # integral, for the scaled instance
    messages: list[Message]
    z: int
    field: FieldSpec
    seed: int
    block_length: int = 1
    mixing: str = "random"

    @property
    def transmitted(self) -> list[Message]:
        return [m for m in self.messages if m.transmitted and m.width]

    @property
    def width(self) -> int:
        return sum(m.width for m in self.transmitted)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.width, self.block_length)

    def relevant(self, k: int) -> list[Message]:
        """Messages user k decodes from: multicasts to sets containing k, its own
        member of every family containing k (reconstructed if withheld), and its
        unicast."""
        out = []
        for m in self.messages:
            if not m.width:
                continue
            if m.kind == "multicast" and k in m.users:
                out.append(m)
            elif m.kind == "family" and m.member == k:
                out.append(m)
            elif m.kind == "unicast" and m.users == (k,):
                out.append(m)
        return out

    def transmitted_matrix(self) -> MatrixGF:
        return hstack([m.matrix for m in self.transmitted], d=self.instance.d, spec=self.field)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "z": self.z,
            "field": {"p": self.field.p, "n": self.field.n},
            "block_length": self.block_length,
            "mixing": self.mixing,
            "width": self.width,
            "rate": fmt(self.rate),
            "profile": self.profile.to_json(),
            "messages": [m.to_json() for m in self.messages],
        }


def _mixer(mode: str, work: FieldSpec, rng: random.Random):
    def mix(rows: int, cols: int) -> MatrixGF:
        if mode == "random":
            data = [[work.random(rng) for _ in range(cols)] for _ in range(rows)]
        elif mode == "canonical":
            data = [[int(i == j) for j in range(cols)] for i in range(rows)]
        elif mode == "zero":
            data = [[0] * cols for _ in range(rows)]
        else:
            raise ValueError(f"unknown mixing mode {mode!r}")
        return MatrixGF.from_rows(work, data, ncols=cols)
    return mix


def _int_width(x: Fraction, what: str) -> int:
    if x.denominator != 1:
        raise NonIntegralProfile(f"{what} = {x} is not an integer; block-scale the instance")
    return int(x)


def construct_messages(instance: LcbcInstance, atlas: DecompositionAtlas,
                       profile: LambdaProfile, seed: int, mixing: str = "random",
                       z: int | None = None, block_length: int = 1) -> SchemePlan:
    K, d = instance.K, instance.d
    base = instance.spec
    if z is None:
        z = extension_degree(base.order, K, d)
    work = make_field(base.p, base.n * z)
    emb = embedding(base, work)
    lift = lambda M: M.map(emb, work)
    rng = random.Random(seed)
    mix = _mixer(mixing, work, rng)
    sub = {V: lift(atlas.subspace[V].basis) for V in atlas.labels}
    messages: list[Message] = []

    # multicasts from the intersections, largest user sets first
    inter = sorted((V for V in atlas.labels if V.family == INTERSECT),
                   key=lambda V: (-len(V.users), V.users))
    for V in inter:
        w = _int_width(profile.get(V.users), f"lambda_{set(V.users)}")
        U = sub[V]
        if w and U.cols == 0:
            raise InfeasibleSelection(V.users, w, 0)
        messages.append(Message("multicast", V.users, None, U @ mix(U.cols, w), True))

    # dependent families: every pairwise term enters two members with opposite
    # signs and the coherent family bases sum to zero, so the members do too
    for t in range(3, K + 1):
        for T in combinations(range(1, K + 1), t):
            w = _int_width(profile.get(T, paren=True), f"lambda_({set(T)})")
            if not w:
                continue
            N = {}
            for i, j in combinations(T, 2):
                U = sub[Label.intersect((i, j))]
                N[(i, j)] = U @ mix(U.cols, w)
            Mp = {}
            for s in range(3, t + 1):
                for P in combinations(T, s):
                    dim = atlas.base[atlas.family(P)[0]].cols
                    Mp[P] = mix(dim, w)
            members = []
            for k in T:
                x = MatrixGF.zeros(work, d, w)
                for j in T:
                    if j == k:
                        continue
                    term = N[(min(k, j), max(k, j))]
                    x = x + term if k < j else x - term
                for P, M in Mp.items():
                    if k in P:
                        V = Label.compose(k, [u for u in P if u != k])
                        x = x + lift(atlas.base[V]) @ M
                members.append(x)
            total = MatrixGF.zeros(work, d, w)
            for x in members:
                total = total + x
            if not total.is_zero():
                raise FamilySumError(f"family {T} does not sum to zero")
            for pos, (k, x) in enumerate(zip(T, members)):
                messages.append(Message("family", T, k, x, pos < t - 1))

    # unicasts complete each user's decoding basis from its demand columns
    plan = SchemePlan(instance, profile, messages, z, work, seed, block_length, mixing)
    for k in range(1, K + 1):
        w = _int_width(profile.get((k,)), f"lambda_{k}")
        anchor = hstack([lift(instance.caches[k - 1])] + [m.matrix for m in plan.relevant(k)],
                        d=d, spec=work)
        demand = lift(instance.demands[k - 1])
        try:
            pick = extend_basis(anchor, [demand], [w])[0] if w else MatrixGF.zeros(work, d, 0)
        except InfeasibleSelection:
            # the random mixing wasted dimensions; send something of the right
            # width and let verification reject the attempt
            pick = demand.select(range(min(w, demand.cols)))
            pick = pick.hstack(MatrixGF.zeros(work, d, w - pick.cols))
        messages.append(Message("unicast", (k,), None, pick, True))
    return plan


# --- verification -------------------------------------------------------------

@dataclass
class VerifyReport:
    ok: bool
    failed_users: list[int]
    z: int
    attempts: int
    plan: SchemePlan | None = None
    history: list[list[int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "failed_users": self.failed_users, "z": self.z,
                "attempts": self.attempts, "history": self.history}


def decoding_matrix(plan: SchemePlan, k: int) -> MatrixGF:
    """[V'_k | messages relevant to k | Z_k] over the working field, where Z_k
    fills the non-pivot rows of U_k's canonical basis with unit vectors."""
    inst = plan.instance
    emb = embedding(inst.spec, plan.field)
    cache = inst.caches[k - 1].map(emb, plan.field)
    Z = complement_columns(inst.U(k)).map(emb, plan.field)
    return hstack([cache] + [m.matrix for m in plan.relevant(k)] + [Z],
                  d=inst.d, spec=plan.field)


def failed_users(plan: SchemePlan) -> list[int]:
    bad = []
    for k in range(1, plan.instance.K + 1):
        D = decoding_matrix(plan, k)
        if D.rows != D.cols or determinant(D) == 0:
            bad.append(k)
    return bad


def verify_decodability(instance: LcbcInstance, plan: SchemePlan,
                        atlas: DecompositionAtlas | None = None,
                        retries: int = RETRY_BUDGET) -> VerifyReport:
    """Check every user's decoding determinant; on failure rebuild the plan with
    fresh uniform mixing, up to `retries` attempts in total."""
    if plan.instance is not instance and plan.instance != instance.block(plan.block_length):
        raise ValueError("plan was built for a different instance")
    history = []
    current = plan
    for attempt in range(1, retries + 1):
        bad = failed_users(current)
        history.append(bad)
        if not bad:
            return VerifyReport(True, [], current.z, attempt, current, history)
        log.info("attempt %d: users %s cannot decode; resampling", attempt, bad)
        if attempt == retries:
            break
        if atlas is None:
            inst = current.instance
            atlas = build_atlas([inst.U(k) for k in range(1, inst.K + 1)])
        current = construct_messages(current.instance, atlas, current.profile,
                                     _reseed(plan.seed, attempt), "random", plan.z,
                                     plan.block_length)
    return VerifyReport(False, history[-1], current.z, retries, current, history)


def _reseed(seed: int, attempt: int) -> int:
    return random.Random(f"{seed}/{attempt}").getrandbits(63)


@dataclass
class PlanResult:
    solved: Solved
    plan: SchemePlan
    report: VerifyReport


def plan_instance(instance: LcbcInstance, seed: int = 0, mixing: str = "random",
                  retries: int = RETRY_BUDGET, subset_cap: int | None = None,
                  solved: Solved | None = None) -> PlanResult:
    """Solve, block-scale to integral widths, build and verify.

    Pass `solved` to reuse an LP solution across seeds.
    """
    if solved is None:
        solved = solve_instance(instance, subset_cap)
    L = solved.profile.denominator
    if L == 1:
        scaled, atlas, profile = instance, solved.atlas, solved.profile
    else:
        scaled = instance.block(L)
        atlas = build_atlas([scaled.U(k) for k in range(1, scaled.K + 1)])
        profile = solved.profile.scaled(L)
    plan = construct_messages(scaled, atlas, profile, seed, mixing, block_length=L)
    report = verify_decodability(scaled, plan, atlas, retries)
    return PlanResult(solved, report.plan, report)


def uncoded_profile(instance: LcbcInstance) -> LambdaProfile:
    K = instance.K
    values = {var_name((k,)): Fraction(conditional_rank(instance.U(k), instance.caches[k - 1]))
              for k in range(1, K + 1)}
    return profile_from_values(values, K)


__all__ = [
    "build_lp", "solve_instance", "construct_messages", "verify_decodability", "plan_instance",
    "LambdaProfile", "SchemePlan", "Message", "VerifyReport", "Solved", "extension_degree",
    "LpInfeasible", "NonIntegralProfile", "FamilySumError", "uncoded_profile",
    "gain_form_objective", "decoding_matrix", "label_var", "var_name",
]
