"""Arithmetic in GF(p) and GF(p^n).

Elements are stored as the integer ``sum(c[j] * p**j)`` of their coefficient
vector (little-endian polynomial basis), which is also the JSON encoding used
throughout the package.  :class:`FieldElement` is the explicit coefficient-vector
view of the same value.

Supported sizes: ``p**n <= 2**63``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache

MAX_ORDER = 2**63


class FieldError(ValueError):
    pass


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    i = 3
    while i * i <= p:
        if p % i == 0:
            return False
        i += 2
    return True


# --- dense polynomials over GF(p), little-endian coefficient lists ---------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mulmod(a, b, mod, p):
    """(a*b) mod `mod`; `mod` is monic."""
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _poly_mod(out, mod, p)


def _poly_mod(a, mod, p):
    a = list(a)
    n = len(mod) - 1
    for i in range(len(a) - 1, n - 1, -1):
        c = a[i]
        if c:
            for j in range(n + 1):
                a[i - n + j] = (a[i - n + j] - c * mod[j]) % p
    return _trim(a[:n] if len(a) > n else a)


def _poly_sub(a, b, p):
    out = [0] * max(len(a), len(b))
    for i, x in enumerate(a):
        out[i] = x
    for i, y in enumerate(b):
        out[i] = (out[i] - y) % p
    return _trim(out)


def _poly_gcd(a, b, p):
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        inv = pow(b[-1], p - 2, p)
        monic = [c * inv % p for c in b]
        a, b = b, _poly_mod(a, monic, p)
    return a


def _poly_powmod(base, e, mod, p):
    result = [1]
    base = _poly_mod(base, mod, p)
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, mod, p)
        base = _poly_mulmod(base, base, mod, p)
        e >>= 1
    return result


def _prime_factors(n: int) -> list[int]:
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(poly: tuple[int, ...], p: int) -> bool:
    """Rabin's test for a monic polynomial (little-endian coefficients)."""
    n = len(poly) - 1
    if n < 1 or poly[-1] != 1:
        return False
    if n == 1:
        return True
    mod = list(poly)
    x = [0, 1]
    for r in _prime_factors(n):
        h = _poly_sub(_poly_powmod(x, p ** (n // r), mod, p), x, p)
        g = _poly_gcd(mod, h, p)
        if len(g) > 1:
            return False
    return not _poly_sub(_poly_powmod(x, p**n, mod, p), x, p)


def _digits(i: int, p: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        i, r = divmod(i, p)
        out.append(r)
    return out


def _undigits(c, p: int) -> int:
    v = 0
    for x in reversed(c):
        v = v * p + x
    return v


# --- field spec -----------------------------------------------------------

@dataclass(frozen=True)
class FieldSpec:
    """GF(p**n) with a fixed monic irreducible `modulus` (little-endian).

    Arithmetic helpers work on the integer encoding of elements.
    """

    p: int
    n: int
    modulus: tuple[int, ...]
    _memo: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def order(self) -> int:
        return self.p**self.n

    @property
    def is_prime_field(self) -> bool:
        return self.n == 1

    def __str__(self) -> str:
        return f"GF({self.p})" if self.n == 1 else f"GF({self.p}^{self.n})"

    def add(self, a: int, b: int) -> int:
        p = self.p
        if self.n == 1:
            return (a + b) % p
        if p == 2:
            return a ^ b
        out, place = 0, 1
        while a or b:
            a, x = divmod(a, p)
            b, y = divmod(b, p)
            out += ((x + y) % p) * place
            place *= p
        return out

    def neg(self, a: int) -> int:
        p = self.p
        if self.n == 1:
            return -a % p
        if p == 2:
            return a
        out, place = 0, 1
        while a:
            a, x = divmod(a, p)
            out += (-x % p) * place
            place *= p
        return out

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.n == 1:
            return a * b % self.p
        if not a or not b:
            return 0
        if a == 1:
            return b
        if b == 1:
            return a
        key = (a, b) if a <= b else (b, a)
        memo = self._memo
        r = memo.get(key)
        if r is None:
            r = self._mul_slow(*key)
            memo[key] = r
        return r

    def _mul_slow(self, a: int, b: int) -> int:
        p, n = self.p, self.n
        if p == 2:
            # carry-less product reduced by the modulus bit mask
            mod = _undigits(self.modulus, 2)
            out = 0
            while b:
                if b & 1:
                    out ^= a
                b >>= 1
                a <<= 1
                if a >> n & 1:
                    a ^= mod
            return out
        prod = _poly_mulmod(_digits(a, p, n), _digits(b, p, n), list(self.modulus), p)
        return _undigits(prod, p)

    def pow(self, a: int, e: int) -> int:
        result = 1
        while e:
            if e & 1:
                result = self.mul(result, a)
            a = self.mul(a, a)
            e >>= 1
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError(f"inverse of zero in {self}")
        if self.n == 1:
            return pow(a, self.p - 2, self.p)
        key = ("inv", a)
        r = self._memo.get(key)
        if r is None:
            r = self.pow(a, self.order - 2)
            self._memo[key] = r
        return r

    def random(self, rng: random.Random) -> int:
        return rng.randrange(self.order)

    def element(self, i: int) -> "FieldElement":
        if not 0 <= i < self.order:
            raise FieldError(f"{i} is not an element encoding of {self}")
        return FieldElement(tuple(_digits(i, self.p, self.n)))

    def encode(self, a: "FieldElement") -> int:
        if len(a.coeffs) != self.n or any(not 0 <= c < self.p for c in a.coeffs):
            raise FieldError(f"{a} is not reduced in {self}")
        return _undigits(a.coeffs, self.p)


@dataclass(frozen=True)
class FieldElement:
    coeffs: tuple[int, ...]

    def to_int(self, p: int) -> int:
        return _undigits(self.coeffs, p)


@lru_cache(maxsize=None)
def make_field(p: int, n: int = 1) -> FieldSpec:
    """Field GF(p**n) whose modulus is the smallest monic irreducible of degree n.

    "Smallest" orders candidate moduli by the integer value of their low
    coefficients, which is the same as lexicographic order on
    (c[n-1], ..., c[0]).  For n == 1 the modulus is x, i.e. plain mod-p.
    """
    if not isinstance(p, int) or not is_prime(p):
        raise FieldError(f"characteristic {p!r} is not prime")
    if not isinstance(n, int) or n < 1:
        raise FieldError(f"extension degree {n!r} must be a positive integer")
    if p**n > MAX_ORDER:
        raise FieldError(f"GF({p}^{n}) exceeds the supported order 2**63")
    if n == 1:
        return FieldSpec(p, 1, (0, 1))
    for low in range(p**n):
        poly = tuple(_digits(low, p, n)) + (1,)
        if poly[0] != 0 and is_irreducible(poly, p):
            return FieldSpec(p, n, poly)
    raise AssertionError("no irreducible polynomial found")  # unreachable


# --- FieldElement-level API ----------------------------------------------

def add(a: FieldElement, b: FieldElement, spec: FieldSpec) -> FieldElement:
    return spec.element(spec.add(spec.encode(a), spec.encode(b)))


def sub(a: FieldElement, b: FieldElement, spec: FieldSpec) -> FieldElement:
    return spec.element(spec.sub(spec.encode(a), spec.encode(b)))


def mul(a: FieldElement, b: FieldElement, spec: FieldSpec) -> FieldElement:
    return spec.element(spec.mul(spec.encode(a), spec.encode(b)))


def inv(a: FieldElement, spec: FieldSpec) -> FieldElement:
    return spec.element(spec.inv(spec.encode(a)))


def sample_uniform(spec: FieldSpec, rng: random.Random) -> FieldElement:
    return spec.element(spec.random(rng))


class Embedding:
    """Field homomorphism GF(p^n) -> GF(p^(n*z)).

    The source generator x is sent to the smallest (by integer encoding) root of
    the source modulus inside the target field.
    """

    def __init__(self, source: FieldSpec, target: FieldSpec):
        if source.p != target.p or target.n % source.n:
            raise FieldError(f"cannot embed {source} into {target}")
        self.source, self.target = source, target
        if source.n == 1:
            self.root = 0
        else:
            self.root = next(r for r in range(target.order) if self._is_root(r))
        powers = [1]
        for _ in range(source.n - 1):
            powers.append(target.mul(powers[-1], self.root))
        self._powers = powers
        self._cache: dict[int, int] = {}

    def _is_root(self, r: int) -> bool:
        t = self.target
        acc = 0
        for c in reversed(self.source.modulus):
            acc = t.add(t.mul(acc, r), c)
        return acc == 0

    def __call__(self, a: int) -> int:
        if self.source.n == 1:
            return a
        out = self._cache.get(a)
        if out is None:
            t = self.target
            out = 0
            for c, pw in zip(_digits(a, self.source.p, self.source.n), self._powers):
                if c:
                    out = t.add(out, t.mul(c, pw))
            self._cache[a] = out
        return out


@lru_cache(maxsize=None)
def embedding(source: FieldSpec, target: FieldSpec) -> Embedding:
    return Embedding(source, target)


def embed(a: FieldElement, target: FieldSpec, source: FieldSpec | None = None) -> FieldElement:
    """Image of `a` under the deterministic embedding into `target`.

    `source` defaults to ``make_field(target.p, len(a.coeffs))``.
    """
    if source is None:
        if target.n % len(a.coeffs):
            raise FieldError(f"degree {len(a.coeffs)} does not divide {target.n}")
        source = make_field(target.p, len(a.coeffs))
    return target.element(embedding(source, target)(source.encode(a)))
