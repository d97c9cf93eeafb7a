"""Subspace decomposition of the user spaces U_1, ..., U_K.

Three kinds of labelled subspaces are tracked:

* ``Intersect(S)``, |S| >= 2: the common part of the U_k, k in S;
* ``Compose(k, S)``, k not in S, |S| + 1 >= 3: U_k ∩ span(U_l : l in S);
* ``Single(k)``: U_k itself.

Each label V gets a neighbour list LS(V), a base B(V) complementing the span
of its neighbours inside V, and a cover set (V together with the covers of
its neighbours).  Bases of one composition family
{Compose(k, T - k) : k in T} are built jointly so that they sum to zero.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Sequence

from .field import FieldSpec, make_field
from .matrix import (
    DimensionMismatch, MatrixGF, SubspaceBasis, complement_in, hstack, rank, solve_matrix,
    span, span_intersect, span_union, zero_space,
)

INTERSECT, COMPOSE, SINGLE = 1, 2, 3
_KIND_NAMES = {INTERSECT: "intersect", COMPOSE: "compose", SINGLE: "single"}


@dataclass(frozen=True)
class Label:
    """Subspace label; ordered by family, then set size, then set, then user."""

    family: int
    users: tuple[int, ...]
    k: int = 0

    @classmethod
    def intersect(cls, S) -> "Label":
        S = tuple(sorted(S))
        if len(S) < 2:
            raise ValueError("intersection labels need at least two users")
        return cls(INTERSECT, S)

    @classmethod
    def compose(cls, k: int, S) -> "Label":
        S = tuple(sorted(S))
        if k in S or len(S) < 2:
            raise ValueError(f"bad composition label ({k}, {S})")
        return cls(COMPOSE, S, k)

    @classmethod
    def single(cls, k: int) -> "Label":
        return cls(SINGLE, (k,), k)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def sort_key(self):
        return (self.family, len(self.users), self.users, self.k)

    @property
    def kind(self) -> str:
        return _KIND_NAMES[self.family]

    @property
    def team(self) -> frozenset[int]:
        """The users the label's LP coefficient is attached to."""
        if self.family == COMPOSE:
            return frozenset(self.users + (self.k,))
        return frozenset(self.users)

    def __str__(self) -> str:
        sep = "," if max(self.users + (self.k,)) >= 10 else ""
        s = sep.join(map(str, self.users))
        if self.family == COMPOSE:
            return f"U{self.k}({s})"
        return f"U{s}"


def enumerate_labels(K: int) -> list[Label]:
    if K < 1:
        raise ValueError("K must be at least 1")
    users = range(1, K + 1)
    out = [Label.intersect(S) for t in range(2, K + 1) for S in combinations(users, t)]
    for t in range(3, K + 1):
        for T in combinations(users, t):
            for k in T:
                out.append(Label.compose(k, [u for u in T if u != k]))
    out += [Label.single(k) for k in users]
    return sorted(out)


def label_count(K: int) -> int:
    from math import comb
    return (2**K - K - 1) + sum(t * comb(K, t) for t in range(3, K + 1)) + K


def ls_of(V: Label, K: int) -> list[Label]:
    users = set(range(1, K + 1))
    if any(u not in users for u in V.users) or (V.family == COMPOSE and V.k not in users):
        raise ValueError(f"label {V} is not defined for K={K}")
    if V.family == INTERSECT:
        S = set(V.users)
        return sorted(Label.intersect(S | {l}) for l in users - S)
    if V.family == COMPOSE:
        S = set(V.users)
        if len(S) >= 3:
            return sorted(Label.compose(V.k, S - {l}) for l in S)
        return sorted(Label.intersect({V.k, l}) for l in S)
    k = V.k
    if K >= 3:
        return [Label.compose(k, users - {k})]
    if K == 2:
        return [Label.intersect(users)]
    return []


@lru_cache(maxsize=None)
def _cover(V: Label, K: int) -> tuple[Label, ...]:
    out = {V}
    for W in ls_of(V, K):
        out.update(_cover(W, K))
    return tuple(sorted(out))


def cover(V: Label, atlas_or_K) -> list[Label]:
    K = atlas_or_K if isinstance(atlas_or_K, int) else atlas_or_K.K
    return list(_cover(V, K))


@dataclass
class DecompositionAtlas:
    K: int
    d: int
    spec: FieldSpec
    subspace: dict[Label, SubspaceBasis]
    base: dict[Label, MatrixGF]
    ls: dict[Label, list[Label]]
    incoherent: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def labels(self) -> list[Label]:
        return sorted(self.subspace)

    def base_space(self, V: Label) -> SubspaceBasis:
        return span(self.base[V])

    def ls_span(self, V: Label) -> SubspaceBasis:
        return span_union([self.subspace[W] for W in self.ls[V]], d=self.d, spec=self.spec)

    def user_space(self, k: int) -> SubspaceBasis:
        return self.subspace[Label.single(k)]

    def family(self, T) -> list[Label]:
        T = sorted(T)
        return [Label.compose(k, [u for u in T if u != k]) for k in T]

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "d": self.d,
            "p": self.spec.p,
            "n": self.spec.n,
            "labels": [
                {
                    "label": str(V),
                    "kind": V.kind,
                    "dim": self.subspace[V].dim,
                    "base_dim": self.base[V].cols,
                    "basis": self.subspace[V].basis.to_json(),
                    "base": self.base[V].to_json(),
                    "ls": [str(W) for W in self.ls[V]],
                }
                for V in self.labels
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def build_atlas(U: Sequence[MatrixGF]) -> DecompositionAtlas:
    if not U:
        raise ValueError("at least one user space is required")
    d, spec = U[0].rows, U[0].spec
    for M in U:
        if M.rows != d or M.spec != spec:
            raise DimensionMismatch("user spaces must share ambient dimension and field")
    K = len(U)
    users = range(1, K + 1)
    user_span = {k: span(U[k - 1]) for k in users}

    sub: dict[Label, SubspaceBasis] = {}
    inter: dict[tuple[int, ...], SubspaceBasis] = {(k,): user_span[k] for k in users}
    for t in range(2, K + 1):
        for S in combinations(users, t):
            inter[S] = span_intersect(inter[S[:-1]], user_span[S[-1]])
            sub[Label.intersect(S)] = inter[S]
    for t in range(3, K + 1):
        for T in combinations(users, t):
            for k in T:
                rest = [u for u in T if u != k]
                others = span_union([user_span[l] for l in rest])
                sub[Label.compose(k, rest)] = span_intersect(user_span[k], others)
    for k in users:
        sub[Label.single(k)] = user_span[k]

    ls = {V: ls_of(V, K) for V in sub}
    atlas = DecompositionAtlas(K, d, spec, sub, {}, ls)

    for V in sub:
        if V.family != COMPOSE:
            atlas.base[V] = complement_in(atlas.ls_span(V), sub[V])
    for t in range(3, K + 1):
        for T in combinations(users, t):
            bases = _coherent_family(atlas, T, user_span)
            if bases is None:
                atlas.incoherent.append(T)
                for V in atlas.family(T):
                    atlas.base[V] = complement_in(atlas.ls_span(V), sub[V])
            else:
                atlas.base.update(bases)
    return atlas


def _coherent_family(atlas: DecompositionAtlas, T: tuple[int, ...], user_span):
    """Bases for the family of T whose members sum to zero column by column.

    The first member's base is its canonical complement b.  Each column of b
    lies in the span of the other users' spaces, so writing -b = sum_j U_j y_j
    gives the other members' columns U_j y_j.
    """
    labels = atlas.family(T)
    V0 = labels[0]
    b = complement_in(atlas.ls_span(V0), atlas.subspace[V0])
    if b.cols == 0:
        return {V: MatrixGF.zeros(atlas.spec, atlas.d, 0) for V in labels}
    rest = T[1:]
    blocks = [user_span[j].basis for j in rest]
    y = solve_matrix(hstack(blocks), -b)
    if y is None:  # pragma: no cover - b lies in the span by construction
        return None
    out = {V0: b}
    row = 0
    for j, Bj, V in zip(rest, blocks, labels[1:]):
        part = MatrixGF(atlas.spec, Bj.cols, y.cols, y.data[row:row + Bj.cols])
        row += Bj.cols
        xj = Bj @ part
        # each member must again be a complement of its neighbours
        if rank(hstack([xj, atlas.ls_span(V)])) != atlas.ls_span(V).dim + b.cols:
            return None
        out[V] = xj
    return out


# --- family checks -----------------------------------------------------------

@dataclass
class FamilyReport:
    T: tuple[int, ...]
    dims: dict[int, int]
    common_dim: int | None
    subsets_independent: dict[tuple[int, ...], bool]
    omitted_in_span: dict[int, bool]
    sums_to_zero: bool

    @property
    def ok(self) -> bool:
        return (self.common_dim is not None and all(self.subsets_independent.values())
                and all(self.omitted_in_span.values()))


def verify_family_independence(atlas: DecompositionAtlas, T) -> FamilyReport:
    T = tuple(sorted(T))
    if len(T) < 3:
        raise ValueError("families need at least three users")
    labels = atlas.family(T)
    B = {k: atlas.base[V] for k, V in zip(T, labels)}
    dims = {k: B[k].cols for k in T}
    common = dims[T[0]] if len(set(dims.values())) == 1 else None
    indep, inside = {}, {}
    for omit in T:
        keep = tuple(k for k in T if k != omit)
        joint = hstack([B[k] for k in keep], d=atlas.d, spec=atlas.spec)
        indep[keep] = rank(joint) == joint.cols
        inside[omit] = rank(hstack([joint, B[omit]])) == rank(joint)
    total = MatrixGF.zeros(atlas.spec, atlas.d, dims[T[0]])
    sums_zero = common is not None
    if sums_zero:
        for k in T:
            total = total + B[k]
        sums_zero = total.is_zero()
    return FamilyReport(T, dims, common, indep, inside, sums_zero)


# --- three-subspace extreme rays over GF(2)^3 ---------------------------------

EXTREME_RAYS_K3 = [
    (("e1", "0", "0"), (1, 0, 0, 1, 1, 0, 1)),
    (("0", "e1", "0"), (0, 1, 0, 1, 0, 1, 1)),
    (("0", "0", "e1"), (0, 0, 1, 0, 1, 1, 1)),
    (("e1", "e1", "0"), (1, 1, 0, 1, 1, 1, 1)),
    (("e1", "0", "e1"), (1, 0, 1, 1, 1, 1, 1)),
    (("0", "e1", "e1"), (0, 1, 1, 1, 1, 1, 1)),
    (("e1", "e1", "e1"), (1, 1, 1, 1, 1, 1, 1)),
    (("e1", "e2", "e3"), (1, 1, 1, 2, 2, 2, 2)),
]


@dataclass
class RayCheck:
    row: int
    spaces: tuple[str, str, str]
    expected: tuple[int, ...]
    computed: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return self.expected == self.computed


def rank_vector(A: MatrixGF, B: MatrixGF, C: MatrixGF) -> tuple[int, ...]:
    """rk of A, B, C, AB, AC, BC, ABC."""
    return (rank(A), rank(B), rank(C), rank(hstack([A, B])), rank(hstack([A, C])),
            rank(hstack([B, C])), rank(hstack([A, B, C])))


# e1, e2, e3 are pairwise independent but span only a plane, so the last row
# has joint rank 2
_RAY_VECTORS = {"e1": (1, 0, 0), "e2": (0, 1, 0), "e3": (1, 1, 0)}


def validate_extreme_rays_k3() -> list[RayCheck]:
    f = make_field(2)
    d = 3

    def build(name: str) -> MatrixGF:
        if name == "0":
            return MatrixGF.zeros(f, d, 0)
        return MatrixGF.from_columns(f, d, [_RAY_VECTORS[name]])

    out = []
    for i, (names, ray) in enumerate(EXTREME_RAYS_K3, start=1):
        A, B, C = (build(n) for n in names)
        out.append(RayCheck(i, names, ray, rank_vector(A, B, C)))
    return out


__all__ = [
    "Label", "enumerate_labels", "label_count", "ls_of", "cover", "DecompositionAtlas",
    "build_atlas", "FamilyReport", "verify_family_independence", "validate_extreme_rays_k3",
    "zero_space",
]
