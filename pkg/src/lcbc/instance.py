"""Problem instances: K users, each with a cache matrix V'_k and a demand matrix V_k."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .field import FieldError, FieldSpec, make_field
from .matrix import MatrixGF, hstack, rank


class InvalidInstance(ValueError):
    pass


@dataclass(frozen=True)
class LcbcInstance:
    spec: FieldSpec
    d: int
    caches: tuple[MatrixGF, ...]
    demands: tuple[MatrixGF, ...]

    def __post_init__(self):
        if self.d < 1:
            raise InvalidInstance("d must be positive")
        if len(self.caches) != len(self.demands):
            raise InvalidInstance("one cache and one demand matrix per user")
        for k, (c, v) in enumerate(zip(self.caches, self.demands), start=1):
            for name, m in (("cache", c), ("demand", v)):
                if m.rows != self.d:
                    raise InvalidInstance(f"users[{k - 1}].{name}: {m.rows} rows, expected d={self.d}")
                if m.spec != self.spec:
                    raise InvalidInstance(f"users[{k - 1}].{name}: field {m.spec} != {self.spec}")
            if rank(hstack([c, v])) != c.cols + v.cols:
                raise InvalidInstance(
                    f"users[{k - 1}]: columns of [cache, demand] are linearly dependent")

    @property
    def K(self) -> int:
        return len(self.caches)

    @property
    def q(self) -> int:
        return self.spec.order

    def U(self, k: int) -> MatrixGF:
        """[V'_k, V_k] for 1-based user k."""
        return hstack([self.caches[k - 1], self.demands[k - 1]])

    def uncoded_load(self) -> int:
        return sum(v.cols for v in self.demands)

    def with_cache(self, k: int, cache: MatrixGF) -> "LcbcInstance":
        caches = list(self.caches)
        caches[k - 1] = cache
        return LcbcInstance(self.spec, self.d, tuple(caches), self.demands)

    def block(self, L: int) -> "LcbcInstance":
        """L stacked copies of the instance: every matrix becomes I_L ⊗ M."""
        if L < 1:
            raise ValueError("block length must be positive")
        if L == 1:
            return self
        return LcbcInstance(self.spec, self.d * L,
                            tuple(_kron_identity(m, L) for m in self.caches),
                            tuple(_kron_identity(m, L) for m in self.demands))

    # JSON -------------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "p": self.spec.p,
            "n": self.spec.n,
            "d": self.d,
            "users": [{"cache": c.to_json(), "demand": v.to_json()}
                      for c, v in zip(self.caches, self.demands)],
        }

    @classmethod
    def from_json(cls, obj) -> "LcbcInstance":
        if not isinstance(obj, dict):
            raise InvalidInstance("top level must be an object")
        for key in ("p", "d", "users"):
            if key not in obj:
                raise InvalidInstance(f"missing field '{key}'")
        try:
            spec = make_field(obj["p"], obj.get("n", 1))
        except FieldError as e:
            raise InvalidInstance(f"field: {e}") from e
        d = obj["d"]
        if not isinstance(d, int) or d < 1:
            raise InvalidInstance("field 'd' must be a positive integer")
        users = obj["users"]
        if not isinstance(users, list):
            raise InvalidInstance("field 'users' must be a list")
        caches, demands = [], []
        for i, u in enumerate(users):
            for name, out in (("cache", caches), ("demand", demands)):
                where = f"users[{i}].{name}"
                if not isinstance(u, dict) or name not in u:
                    raise InvalidInstance(f"{where}: missing")
                m = u[name]
                try:
                    mat = MatrixGF.from_json(m, spec)
                    if mat.rows != d:
                        raise InvalidInstance(f"{where}: {mat.rows} rows, expected d={d}")
                except (KeyError, TypeError, ValueError) as e:
                    if isinstance(e, InvalidInstance):
                        raise
                    raise InvalidInstance(f"{where}: {e}") from e
                out.append(mat)
        return cls(spec, d, tuple(caches), tuple(demands))

    @classmethod
    def load(cls, path) -> "LcbcInstance":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise InvalidInstance(f"{path}: line {e.lineno}: {e.msg}") from e
        return cls.from_json(obj)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")


def _kron_identity(m: MatrixGF, L: int) -> MatrixGF:
    rows = []
    for b in range(L):
        for r in m.data:
            row = [0] * (m.cols * L)
            row[b * m.cols:(b + 1) * m.cols] = r
            rows.append(tuple(row))
    return MatrixGF(m.spec, m.rows * L, m.cols * L, tuple(rows))


def matrix_from_vectors(spec: FieldSpec, d: int, vectors) -> MatrixGF:
    return MatrixGF.from_columns(spec, d, [tuple(v) for v in vectors])


def random_instance(rng: random.Random, K: int, d: int, p: int = 2, n: int = 1,
                    pool_extra: int = 2, max_cache: int | None = None,
                    max_demand: int | None = None) -> LcbcInstance:
    """Random instance whose users draw columns from a shared vector pool.

    Sharing a small pool makes the user spaces overlap, so that the
    intersection and composition subspaces are usually nontrivial.
    """
    spec = make_field(p, n)
    pool = [tuple(spec.random(rng) for _ in range(d)) for _ in range(d + pool_extra)]
    pool += [tuple(int(i == j) for i in range(d)) for j in range(d)]
    caches, demands = [], []
    for _ in range(K):
        total = rng.randint(1, d)
        picks: list[tuple[int, ...]] = []
        for v in rng.sample(pool, len(pool)):
            if len(picks) == total:
                break
            if rng.random() < 0.3:
                v = tuple(spec.add(a, spec.mul(spec.random(rng), b))
                          for a, b in zip(v, rng.choice(pool)))
            if rank(matrix_from_vectors(spec, d, picks + [v])) == len(picks) + 1:
                picks.append(v)
        m_cache = rng.randint(0, len(picks) - 1) if picks else 0
        if max_cache is not None:
            m_cache = min(m_cache, max_cache)
        m_dem = len(picks) - m_cache
        if max_demand is not None:
            m_dem = min(m_dem, max_demand)
        caches.append(matrix_from_vectors(spec, d, picks[:m_cache]))
        demands.append(matrix_from_vectors(spec, d, picks[m_cache:m_cache + m_dem]))
    return LcbcInstance(spec, d, tuple(caches), tuple(demands))


def random_subspace_instance(rng: random.Random, K: int, d: int, p: int = 2,
                             n: int = 1) -> LcbcInstance:
    """Random instance where each U_k is a uniformly drawn subspace of
    dimension between d/3 and 2d/3, split at random into cache and demand."""
    spec = make_field(p, n)
    lo, hi = max(1, d // 3), max(1, (2 * d) // 3)
    caches, demands = [], []
    for _ in range(K):
        m = rng.randint(lo, hi)
        while True:
            vs = [tuple(spec.random(rng) for _ in range(d)) for _ in range(m)]
            if rank(matrix_from_vectors(spec, d, vs)) == m:
                break
        c = rng.randint(0, m - 1)
        caches.append(matrix_from_vectors(spec, d, vs[:c]))
        demands.append(matrix_from_vectors(spec, d, vs[c:]))
    return LcbcInstance(spec, d, tuple(caches), tuple(demands))
