import random
from collections import Counter
from itertools import product

import pytest

from lcbc.field import (
    FieldElement, FieldError, add, embed, embedding, inv, is_irreducible, make_field, mul,
    sample_uniform, sub,
)


def _brute_irreducible(poly, p):
    """No monic factor of degree 1..n/2, by trial division over all candidates."""
    n = len(poly) - 1
    for deg in range(1, n // 2 + 1):
        for low in product(range(p), repeat=deg):
            f = list(low) + [1]
            r = list(poly)
            for i in range(len(r) - 1, deg - 1, -1):
                c = r[i]
                if c:
                    for j in range(deg + 1):
                        r[i - deg + j] = (r[i - deg + j] - c * f[j]) % p
            if not any(r[:deg]):
                return False
    return True


def test_gf2_is_trivial_modulus():
    f = make_field(2, 1)
    assert f.order == 2 and f.is_prime_field and f.modulus == (0, 1)


def test_gf4_modulus_is_x2_x_1():
    assert make_field(2, 2).modulus == (1, 1, 1)


def test_gf5():
    assert make_field(5).order == 5


@pytest.mark.parametrize("p,n", [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (5, 2), (2, 5)])
def test_modulus_is_smallest_irreducible(p, n):
    f = make_field(p, n)
    assert _brute_irreducible(f.modulus, p)
    # every smaller candidate in the same order is reducible
    for low in range(p**n):
        cand = tuple((low // p**j) % p for j in range(n)) + (1,)
        if cand == f.modulus:
            break
        assert not _brute_irreducible(cand, p)


@pytest.mark.parametrize("p,n", [(2, 2), (2, 3), (3, 2), (2, 4), (5, 2), (3, 3)])
def test_rabin_matches_trial_division(p, n):
    for low in range(p**n):
        poly = tuple((low // p**j) % p for j in range(n)) + (1,)
        assert is_irreducible(poly, p) == _brute_irreducible(poly, p)


def test_make_field_deterministic():
    make_field.cache_clear()
    a = make_field(3, 3)
    make_field.cache_clear()
    assert make_field(3, 3) == a


@pytest.mark.parametrize("p,n", [(4, 1), (1, 1), (0, 2), (2, 0), (3, -1)])
def test_make_field_rejects(p, n):
    with pytest.raises(FieldError):
        make_field(p, n)


def test_make_field_rejects_oversize():
    with pytest.raises(FieldError):
        make_field(2, 64)


def test_worked_products():
    assert make_field(2).add(1, 1) == 0
    gf4 = make_field(2, 2)
    x = FieldElement((0, 1))
    assert mul(x, x, gf4) == FieldElement((1, 1))
    gf5 = make_field(5)
    assert gf5.mul(3, 4) == 2


def test_element_api_roundtrip():
    f = make_field(3, 2)
    for i in range(f.order):
        e = f.element(i)
        assert f.encode(e) == i == e.to_int(3)
        assert add(e, f.element(0), f) == e
        assert sub(e, e, f) == f.element(0)
    with pytest.raises(FieldError):
        f.element(9)


@pytest.mark.parametrize("p,n", [(2, 1), (3, 1), (5, 1), (2, 2), (2, 3), (3, 2), (2, 4)])
def test_field_axioms_exhaustive(p, n):
    f = make_field(p, n)
    q = f.order
    els = range(q)
    for a in els:
        assert f.add(a, f.neg(a)) == 0
        if a:
            assert f.mul(a, f.inv(a)) == 1
        for b in els:
            assert f.add(a, b) == f.add(b, a)
            assert f.mul(a, b) == f.mul(b, a)
            for c in els:
                assert f.add(f.add(a, b), c) == f.add(a, f.add(b, c))
                assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))
                assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))


@pytest.mark.parametrize("p,n", [(5, 2), (2, 6), (7, 2)])
def test_inverse_and_associativity_up_to_64(p, n):
    f = make_field(p, n)
    rng = random.Random(1)
    for a in range(1, f.order):
        assert f.mul(a, f.inv(a)) == 1
    for _ in range(2000):
        a, b, c = (rng.randrange(f.order) for _ in range(3))
        assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        make_field(2, 3).inv(0)
    with pytest.raises(ZeroDivisionError):
        inv(FieldElement((0,)), make_field(7))


@pytest.mark.parametrize("p,n", [(2, 3), (3, 2), (2, 4), (5, 2)])
def test_frobenius_is_additive(p, n):
    f = make_field(p, n)
    frob = lambda a: f.pow(a, p)
    for a in range(f.order):
        for b in range(f.order):
            assert frob(f.add(a, b)) == f.add(frob(a), frob(b))
    # fixed points of Frobenius are exactly the prime subfield
    assert sorted(a for a in range(f.order) if frob(a) == a) == list(range(p))


def test_multiplicative_group_is_cyclic_of_order_q_minus_1():
    f = make_field(2, 4)
    for a in range(1, 16):
        assert f.pow(a, 15) == 1


def test_sample_uniform_support_and_determinism():
    f = make_field(2)
    assert sample_uniform(f, random.Random(3)).to_int(2) in (0, 1)
    g = make_field(3, 2)
    r1, r2 = random.Random(9), random.Random(9)
    assert [g.random(r1) for _ in range(100)] == [g.random(r2) for _ in range(100)]
    assert sample_uniform(g, random.Random(42)) == sample_uniform(g, random.Random(42))


def test_sample_uniform_frequencies_gf5():
    f = make_field(5)
    rng = random.Random(2024)
    counts = Counter(f.random(rng) for _ in range(10_000))
    sigma = (10_000 * 0.2 * 0.8) ** 0.5
    for r in range(5):
        assert abs(counts[r] - 2000) <= 5 * sigma


def test_embed_constants():
    gf16 = make_field(2, 4)
    gf2 = make_field(2)
    assert embed(FieldElement((0,)), gf16).to_int(2) == 0
    assert embed(FieldElement((1,)), gf16).to_int(2) == 1
    e = embedding(gf2, gf16)
    for a in range(2):
        for b in range(2):
            assert e(gf2.add(a, b)) == gf16.add(e(a), e(b))
            assert e(gf2.mul(a, b)) == gf16.mul(e(a), e(b))


@pytest.mark.parametrize("src,dst", [((2, 2), (2, 4)), ((2, 2), (2, 6)), ((3, 2), (3, 4)),
                                     ((2, 3), (2, 6)), ((2, 1), (2, 8))])
def test_embedding_is_homomorphism(src, dst):
    s, t = make_field(*src), make_field(*dst)
    e = embedding(s, t)
    for a in range(s.order):
        for b in range(s.order):
            assert e(s.add(a, b)) == t.add(e(a), e(b))
            assert e(s.mul(a, b)) == t.mul(e(a), e(b))
    assert len({e(a) for a in range(s.order)}) == s.order


def test_embedding_element_api():
    s, t = make_field(2, 2), make_field(2, 4)
    x = s.element(2)
    assert embed(x, t) == embed(x, t, source=s)


def test_embedding_incompatible():
    with pytest.raises(FieldError):
        embedding(make_field(2, 2), make_field(2, 3))
    with pytest.raises(FieldError):
        embedding(make_field(2), make_field(3, 2))
