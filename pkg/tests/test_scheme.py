import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from lcbc.decomp import Label, build_atlas
from lcbc.field import embedding, make_field
from lcbc.instance import (
    LcbcInstance, matrix_from_vectors, random_instance, random_subspace_instance,
)
from lcbc.matrix import MatrixGF, conditional_rank, hstack, rank, span, span_union
from lcbc.ratlp import EQ, evaluate
from lcbc.scheme import (
    RETRY_BUDGET, build_lp, construct_messages, extension_degree, failed_users,
    gain_form_objective, plan_instance, profile_from_values, solve_instance, uncoded_profile,
    var_name, verify_decodability,
)


def atlas_of(inst):
    return build_atlas([inst.U(k) for k in range(1, inst.K + 1)])


def constraint(model, tag):
    (c,) = [c for c in model.constraints if c.tag == tag]
    return c


def random_instances(n, seed, Ks=(2, 3, 4), dmax=6, ps=(2, 3)):
    rng = random.Random(seed)
    for i in range(n):
        K, d, p = rng.choice(Ks), rng.randint(2, dmax), rng.choice(ps)
        yield (random_instance if i % 2 else random_subspace_instance)(rng, K, d, p), rng


def lift(M, work):
    return M.map(embedding(M.spec, work), work)


# --- LP structure ---------------------------------------------------------------

def test_k4_user1_stage1_slice():
    rng = random.Random(8)
    inst = random_instance(rng, 4, 6, 2, pool_extra=0)
    a = atlas_of(inst)
    m = build_lp(inst, a)
    cache = inst.caches[0]
    crk = lambda *labels: conditional_rank(
        span_union([a.subspace[V] for V in labels], d=inst.d, spec=inst.spec), cache)
    I = Label.intersect
    c = constraint(m, "intersect|U1234|k=1")
    assert dict(c.coeffs) == {"lambda_1234": 1} and c.rhs == crk(I({1, 2, 3, 4}))
    c = constraint(m, "intersect|U123|k=1")
    assert dict(c.coeffs) == {"lambda_1234": 1, "lambda_123": 1}
    assert c.rhs == crk(I({1, 2, 3}))
    c = constraint(m, "intersect-subset|U12|k=1|{U123,U124}")
    assert dict(c.coeffs) == {"lambda_1234": 1, "lambda_123": 1, "lambda_124": 1}
    assert c.rhs == crk(I({1, 2, 3}), I({1, 2, 4}))
    c = constraint(m, "intersect|U12|k=1")
    assert set(dict(c.coeffs)) == {"lambda_12", "lambda_123", "lambda_124", "lambda_1234"}


def test_k4_compose_slice():
    inst = random_instance(random.Random(2), 4, 5, 2)
    m = build_lp(inst)
    c = constraint(m, "compose|U1(234)|k=1")
    assert set(dict(c.coeffs)) >= {"lambda_(1234)", "lambda_(123)", "lambda_(124)",
                                  "lambda_(134)", "lambda_12", "lambda_1234"}
    assert "lambda_(234)" not in dict(c.coeffs)
    c = constraint(m, "single|U1|k=1")
    assert c.rel == EQ and c.rhs == conditional_rank(inst.U(1), inst.caches[0])
    assert len([c for c in m.constraints if c.tag.startswith("compose-subset|U1(234)|k=1|")]) == 7


def test_objective_costs():
    m = build_lp(random_instance(random.Random(1), 4, 4))
    assert len(m.variables) == 15 + 5
    assert m.objective["lambda_1"] == 1 and m.objective["lambda_1234"] == 1
    assert m.objective["lambda_(123)"] == 2 and m.objective["lambda_(1234)"] == 3


def test_toy_bounds(toy):
    m = build_lp(toy)
    assert constraint(m, "intersect|U12|k=1").rhs == 1
    assert constraint(m, "intersect|U12|k=2").rhs == 0


def test_single_user():
    f = make_field(3)
    inst = LcbcInstance(f, 3, (matrix_from_vectors(f, 3, [(1, 0, 0)]),),
                        (matrix_from_vectors(f, 3, [(0, 1, 0), (0, 1, 1)]),))
    m = build_lp(inst)
    assert m.variables == ["lambda_1"]
    (c,) = m.constraints
    assert c.rel == EQ and c.rhs == 2 and dict(c.coeffs) == {"lambda_1": 1}
    assert solve_instance(inst).load == 2


def test_subset_cap_drops_rows():
    inst = random_instance(random.Random(4), 4, 5)
    full, capped = build_lp(inst), build_lp(inst, subset_cap=1)
    assert len(capped.constraints) < len(full.constraints)
    assert {c.tag for c in capped.constraints} <= {c.tag for c in full.constraints}


def test_atlas_mismatch(toy, mds):
    with pytest.raises(ValueError):
        build_lp(toy, atlas_of(mds))


# --- solving ----------------------------------------------------------------------

def test_two_user_example(two_user):
    profile, load = solve_instance(two_user)
    assert load == 2
    assert profile.get({1, 2}) == 2 and profile.get({1}) == profile.get({2}) == 0


def test_toy(toy):
    profile, load = solve_instance(toy)
    assert load == 3 and profile.get({1, 2, 3, 4}, paren=True) == 1


def test_mds(mds):
    profile, load = solve_instance(mds)
    assert load == 2 and profile.get({1, 2, 3}, paren=True) == 1


def test_zero_demand():
    f = make_field(2)
    e = lambda i: tuple(int(j == i) for j in range(3))
    caches = tuple(matrix_from_vectors(f, 3, [e(i)]) for i in range(3))
    demands = tuple(MatrixGF.zeros(f, 3, 0) for _ in range(3))
    inst = LcbcInstance(f, 3, caches, demands)
    assert solve_instance(inst).load == 0
    res = plan_instance(inst)
    assert res.report.ok and res.plan.width == 0


def test_uncoded_point_feasible_and_bounds_optimum():
    for inst, _ in random_instances(100, 20):
        m = build_lp(inst)
        u = uncoded_profile(inst)
        vals = {v: F(0) for v in m.variables}
        vals.update({var_name((k,)): u.get((k,)) for k in range(1, inst.K + 1)})
        ev = evaluate(m, vals)
        assert ev.feasible
        assert solve_instance(inst).load <= ev.objective == inst.uncoded_load()


def test_objective_identity_random_feasible_points():
    checked = 0
    for inst, rng in random_instances(50, 21):
        s = solve_instance(inst)
        assert gain_form_objective(inst, s.profile) == s.load
        u = uncoded_profile(inst)
        t = F(rng.randint(0, 20), 20)
        mix = {v: t * s.solution.values[v] for v in s.model.variables}
        for k in range(1, inst.K + 1):
            mix[var_name((k,))] += (1 - t) * u.get((k,))
        assert evaluate(s.model, mix).feasible
        p = profile_from_values(mix, inst.K)
        assert gain_form_objective(inst, p) == s.model.objective_value(mix) == p.load()
        checked += 1
    assert checked == 50


def _grow_cache(inst, k, rng):
    U = inst.U(k)
    d = inst.d
    while True:
        v = tuple(inst.spec.random(rng) for _ in range(d))
        if rank(hstack([U, matrix_from_vectors(inst.spec, d, [v])])) == U.cols + 1:
            break
    return inst.with_cache(k, hstack([inst.caches[k - 1], matrix_from_vectors(inst.spec, d, [v])]))


def test_cache_monotonicity():
    pairs = 0
    for inst, rng in random_instances(140, 22):
        k = rng.randint(1, inst.K)
        if inst.U(k).cols == inst.d:
            continue
        bigger = _grow_cache(inst, k, rng)
        assert solve_instance(bigger).load <= solve_instance(inst).load
        pairs += 1
        if pairs == 100:
            break
    assert pairs == 100


def _random_invertible(rng, f, n):
    while True:
        M = MatrixGF.from_rows(f, [[f.random(rng) for _ in range(n)] for _ in range(n)], ncols=n)
        if rank(M) == n:
            return M


@pytest.mark.parametrize("K", [2, 3])
def test_relabel_and_recombination_invariance(K):
    for inst, rng in random_instances(100, 30 + K, Ks=(K,)):
        load = solve_instance(inst).load
        perm = list(range(K))
        rng.shuffle(perm)
        relabeled = LcbcInstance(inst.spec, inst.d, tuple(inst.caches[j] for j in perm),
                                 tuple(inst.demands[j] for j in perm))
        assert solve_instance(relabeled).load == load
        mixed = tuple(c @ _random_invertible(rng, inst.spec, c.cols) if c.cols else c
                      for c in inst.caches)
        recombined = LcbcInstance(inst.spec, inst.d, mixed, inst.demands)
        assert solve_instance(recombined).load == load


# --- messages -----------------------------------------------------------------------

def test_extension_degree():
    assert extension_degree(2, 4, 4) == 8
    assert extension_degree(3, 2, 4) == 5
    assert 2 ** extension_degree(2, 3, 7) >= 16 * 3 * 7


def test_toy_canonical_messages(toy):
    s = solve_instance(toy)
    plan = construct_messages(toy, s.atlas, s.profile, seed=0, mixing="canonical")
    assert plan.z == 8 and plan.field.order == 256
    sent = plan.transmitted
    assert [m.kind for m in sent] == ["family"] * 3 and plan.width == 3
    f = toy.spec
    ref = matrix_from_vectors(f, 4, [(1, 1, 0, 0), (0, 1, 1, 0), (0, 0, 1, 1)])
    X = plan.transmitted_matrix()
    assert span(X) == span(lift(ref, plan.field))
    fam = [m for m in plan.messages if m.kind == "family"]
    withheld = [m for m in fam if not m.transmitted]
    assert len(withheld) == 1
    total = sent[0].matrix + sent[1].matrix + sent[2].matrix
    assert withheld[0].matrix == total  # characteristic 2: minus the sum is the sum


def test_toy_decodes(toy):
    res = plan_instance(toy, seed=5)
    assert res.report.ok and res.report.z == 8 and res.report.attempts == 1
    assert res.plan.rate == 3


def test_pure_unicast():
    for inst, _ in random_instances(20, 40):
        plan = construct_messages(inst, atlas_of(inst), uncoded_profile(inst), seed=1)
        assert all(m.kind == "unicast" for m in plan.transmitted)
        assert plan.width == sum(conditional_rank(inst.U(k), inst.caches[k - 1])
                                 for k in range(1, inst.K + 1))
        rep = verify_decodability(inst, plan)
        assert rep.ok and rep.attempts == 1


def test_mds_family(mds):
    a = atlas_of(mds)
    profile = profile_from_values({"lambda_(123)": F(1)}, 3)
    plan = construct_messages(mds, a, profile, seed=3)
    fam = [m for m in plan.messages if m.kind == "family"]
    assert [m.width for m in fam] == [1, 1, 1]
    assert [m.transmitted for m in fam] == [True, True, False]
    assert (fam[0].matrix + fam[1].matrix + fam[2].matrix).is_zero()
    assert verify_decodability(mds, plan).ok


def test_zero_mixing_triggers_resample(toy):
    s = solve_instance(toy)
    plan = construct_messages(toy, s.atlas, s.profile, seed=0, mixing="zero")
    assert failed_users(plan) == [1, 2, 3, 4]
    rep = verify_decodability(toy, plan, s.atlas)
    assert rep.history[0] == [1, 2, 3, 4]
    assert rep.ok and rep.attempts >= 2
    assert rep.plan.mixing == "random"


def test_zero_mixing_budget_exhausted(toy):
    s = solve_instance(toy)
    plan = construct_messages(toy, s.atlas, s.profile, seed=0, mixing="zero")
    rep = verify_decodability(toy, plan, s.atlas, retries=1)
    assert not rep.ok and rep.failed_users == [1, 2, 3, 4] and rep.attempts == 1


def test_verify_rejects_foreign_plan(toy, mds):
    plan = plan_instance(mds).plan
    with pytest.raises(ValueError):
        verify_decodability(toy, plan)


def test_unknown_mixing(toy):
    s = solve_instance(toy)
    with pytest.raises(ValueError):
        construct_messages(toy, s.atlas, s.profile, seed=0, mixing="bogus")


def test_family_soundness_random():
    families = 0
    for inst, _ in random_instances(80, 50, Ks=(3, 4), dmax=6):
        res = plan_instance(inst, seed=0)
        plan = res.plan
        a = atlas_of(plan.instance)
        by_team = {}
        for m in plan.messages:
            if m.kind == "family":
                by_team.setdefault(m.users, []).append(m)
        for T, members in by_team.items():
            total = members[0].matrix
            for m in members[1:]:
                total = total + m.matrix
            assert total.is_zero()
            assert sum(m.transmitted for m in members) == len(T) - 1
            for m in members:
                V = Label.compose(m.member, [u for u in T if u != m.member])
                assert conditional_rank(m.matrix, lift(a.subspace[V].basis, plan.field)) == 0
            families += 1
        assert plan.width == res.solved.load * plan.block_length
    assert families > 5


def test_plan_json(toy):
    out = plan_instance(toy, seed=2).plan.to_json()
    assert out["z"] == 8 and out["rate"] == "3/1" and out["width"] == 3
    assert sum(m["transmitted"] for m in out["messages"] if m["kind"] == "family") == 3


def test_retry_budget_constant():
    assert RETRY_BUDGET == 8


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.sampled_from([2, 3]))
def test_optimum_never_exceeds_uncoded(seed, K):
    rng = random.Random(seed)
    inst = random_instance(rng, K, rng.randint(2, 5), rng.choice([2, 3]))
    s = solve_instance(inst)
    assert 0 <= s.load <= inst.uncoded_load()
    assert all(x >= 0 for x in s.profile.values())
    for k in range(1, inst.K + 1):
        cov = [v for v in s.model.constraints if v.tag == f"single|U{k}|k={k}"][0]
        assert cov.lhs(s.solution.values) == conditional_rank(inst.U(k), inst.caches[k - 1])
