"""End-to-end simulation: random data, caches, broadcast, per-user decoding."""
from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .field import embedding
from .instance import LcbcInstance
from .matrix import MatrixGF, hstack, solve_matrix
from .ratlp import fmt
from .scheme import SchemePlan, plan_instance, solve_instance


@dataclass
class RunResult:
    success: dict[int, bool]
    rate: Fraction
    symbols: int
    L: int
    transcript: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.success.values())


def _row_times(f: list[int], M: MatrixGF) -> list[int]:
    spec = M.spec
    out = []
    for c in M.columns():
        acc = 0
        for x, y in zip(f, c):
            if x and y:
                acc = spec.add(acc, spec.mul(x, y))
        out.append(acc)
    return out


def run(instance: LcbcInstance, plan: SchemePlan, L: int | None = None, seed: int = 0,
        transcript: bool = False) -> RunResult:
    """Broadcast L data instances through `plan` and decode at every user.

    Data rows are grouped into blocks of ``plan.block_length`` instances; each
    block is one use of the (block-scaled) scheme.
    """
    Lb = plan.block_length
    if plan.instance != instance.block(Lb):
        raise ValueError("plan does not belong to this instance")
    L = Lb if L is None else L
    if L < 1 or L % Lb:
        raise ValueError(f"L={L} must be a positive multiple of the block length {Lb}")
    work = plan.field
    emb = embedding(instance.spec, work)
    scaled = plan.instance
    rng = random.Random(seed)
    F = [[work.random(rng) for _ in range(instance.d)] for _ in range(L)]

    sent = plan.transmitted
    T = plan.transmitted_matrix()
    lift = lambda M: M.map(emb, work)

    # per-user decoding recipe: express demand columns in [V'_k | relevant]
    recipes = {}
    for k in range(1, instance.K + 1):
        rel = plan.relevant(k)
        A = hstack([lift(scaled.caches[k - 1])] + [m.matrix for m in rel], d=scaled.d, spec=work)
        recipes[k] = (rel, solve_matrix(A, lift(scaled.demands[k - 1])))

    X_rows, decoded_log = [], []
    success = {k: True for k in range(1, instance.K + 1)}
    for b in range(L // Lb):
        f = [x for row in F[b * Lb:(b + 1) * Lb] for x in row]
        X = _row_times(f, T)
        X_rows.append(X)
        # received symbols, split per transmitted message
        got, pos = {}, 0
        for m in sent:
            got[id(m)] = X[pos:pos + m.width]
            pos += m.width
        for k, (rel, C) in recipes.items():
            want = _row_times(f, lift(scaled.demands[k - 1]))
            if C is None:
                success[k] = False
                decoded_log.append({"block": b, "user": k, "solvable": False})
                continue
            y = _row_times(f, lift(scaled.caches[k - 1]))
            for m in rel:
                y += _recover(plan, m, got, work)
            out = _row_times(y, C)
            success[k] &= out == want
            decoded_log.append({"block": b, "user": k, "decoded": out, "expected": want,
                                "ok": out == want})
    symbols = sum(m.width for m in sent) * (L // Lb)
    tr = {}
    if transcript:
        tr = {
            "seed": seed,
            "L": L,
            "block_length": Lb,
            "field": {"p": work.p, "n": work.n},
            "F": F,
            "X": X_rows,
            "decoders": decoded_log,
        }
    return RunResult(success, Fraction(symbols, L), symbols, L, tr)


def _recover(plan: SchemePlan, m, got, work) -> list[int]:
    """F·m for a relevant message, rebuilding a withheld family member as minus
    the sum of its transmitted siblings."""
    if m.transmitted:
        return got[id(m)]
    acc = [0] * m.width
    for s in plan.messages:
        if s.kind == "family" and s.users == m.users and s.transmitted:
            acc = [work.sub(a, b) for a, b in zip(acc, got[id(s)])]
    return acc


def _trial(args):
    instance, solved, seed, mixing, L = args
    res = plan_instance(instance, seed=seed, mixing=mixing, solved=solved)
    out = {"seed": seed, "decodable": res.report.ok, "attempts": res.report.attempts,
           "z": res.report.z, "load": fmt(res.solved.load)}
    r = run(instance, res.plan, L, seed)
    out.update(success=r.ok, rate=fmt(r.rate))
    return out


def measure_rate_distribution(instance: LcbcInstance, trials: int, seeds=None,
                              mixing: str = "random", L: int | None = None,
                              jobs: int = 1) -> dict:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seeds = list(range(trials)) if seeds is None else list(seeds)[:trials]
    solved = solve_instance(instance)
    work = [(instance, solved, s, mixing, L) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            runs = list(ex.map(_trial, work))
    else:
        runs = [_trial(w) for w in work]
    ok = sum(r["success"] and r["decodable"] for r in runs)
    return {"trials": len(runs), "successes": ok, "success_fraction": fmt(Fraction(ok, len(runs))),
            "rates": sorted({r["rate"] for r in runs}), "runs": runs}
