"""Dense matrices and column spaces over a finite field.

Entries are kept as integer encodings (see :mod:`lcbc.field`).  A
:class:`SubspaceBasis` is always in reduced column-echelon form, so two bases
of the same space compare equal entry by entry.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .field import FieldSpec


class DimensionMismatch(ValueError):
    pass


class InfeasibleSelection(ValueError):
    """Raised by :func:`extend_basis` when the rank condition fails."""

    def __init__(self, subset, demanded, available):
        self.subset, self.demanded, self.available = tuple(subset), demanded, available
        super().__init__(
            f"candidates {self.subset} need {demanded} new dimensions "
            f"but only {available} are available"
        )


@dataclass(frozen=True)
class MatrixGF:
    spec: FieldSpec
    rows: int
    cols: int
    data: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.data) != self.rows or any(len(r) != self.cols for r in self.data):
            raise DimensionMismatch(f"data does not match shape {self.rows}x{self.cols}")

    # construction -------------------------------------------------------
    @classmethod
    def from_rows(cls, spec: FieldSpec, rows: Sequence[Sequence[int]], ncols: int | None = None):
        rows = tuple(tuple(int(x) for x in r) for r in rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        q = spec.order
        for r in rows:
            for x in r:
                if not 0 <= x < q:
                    raise ValueError(f"entry {x} is not an element of {spec}")
        return cls(spec, len(rows), ncols, rows)

    @classmethod
    def from_columns(cls, spec: FieldSpec, d: int, columns: Sequence[Sequence[int]]):
        columns = [tuple(c) for c in columns]
        if any(len(c) != d for c in columns):
            raise DimensionMismatch(f"column length differs from ambient dimension {d}")
        data = tuple(tuple(c[i] for c in columns) for i in range(d))
        return cls(spec, d, len(columns), data)

    @classmethod
    def zeros(cls, spec: FieldSpec, rows: int, cols: int):
        return cls(spec, rows, cols, tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, spec: FieldSpec, n: int):
        return cls(spec, n, n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    # views -------------------------------------------------------------
    def column(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self.data)

    def columns(self) -> list[tuple[int, ...]]:
        return [tuple(c) for c in zip(*self.data)] if self.rows else [()] * self.cols

    def select(self, idx: Iterable[int]) -> "MatrixGF":
        return MatrixGF.from_columns(self.spec, self.rows, [self.column(j) for j in idx])

    def transpose(self) -> "MatrixGF":
        return MatrixGF(self.spec, self.cols, self.rows, tuple(self.columns()))

    # algebra -----------------------------------------------------------
    def hstack(self, *others: "MatrixGF") -> "MatrixGF":
        return hstack([self, *others], d=self.rows, spec=self.spec)

    def __matmul__(self, other: "MatrixGF") -> "MatrixGF":
        if self.cols != other.rows:
            raise DimensionMismatch(f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        _check_spec(self, other)
        f = self.spec
        add, mul = f.add, f.mul
        ocols = other.columns()
        out = []
        for r in self.data:
            row = []
            for c in ocols:
                acc = 0
                for x, y in zip(r, c):
                    if x and y:
                        acc = add(acc, mul(x, y))
                row.append(acc)
            out.append(tuple(row))
        return MatrixGF(f, self.rows, other.cols, tuple(out))

    def __add__(self, other: "MatrixGF") -> "MatrixGF":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("shape mismatch in addition")
        _check_spec(self, other)
        add = self.spec.add
        return MatrixGF(self.spec, self.rows, self.cols, tuple(
            tuple(add(x, y) for x, y in zip(r, s)) for r, s in zip(self.data, other.data)))

    def __neg__(self) -> "MatrixGF":
        neg = self.spec.neg
        return MatrixGF(self.spec, self.rows, self.cols,
                        tuple(tuple(neg(x) for x in r) for r in self.data))

    def __sub__(self, other: "MatrixGF") -> "MatrixGF":
        return self + (-other)

    def is_zero(self) -> bool:
        return not any(any(r) for r in self.data)

    def map(self, fn, spec: FieldSpec) -> "MatrixGF":
        """Apply an element map (e.g. a field embedding) entrywise."""
        return MatrixGF(spec, self.rows, self.cols, tuple(tuple(fn(x) for x in r) for r in self.data))

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "data": [list(r) for r in self.data]}

    @classmethod
    def from_json(cls, obj: dict, spec: FieldSpec) -> "MatrixGF":
        rows, cols, data = obj["rows"], obj["cols"], obj["data"]
        m = cls.from_rows(spec, data, ncols=cols)
        if m.rows != rows:
            raise DimensionMismatch(f"declared {rows} rows, found {m.rows}")
        return m


@dataclass(frozen=True)
class SubspaceBasis:
    """Column space in reduced column-echelon form."""

    ambient: int
    basis: MatrixGF

    @property
    def dim(self) -> int:
        return self.basis.cols

    @property
    def spec(self) -> FieldSpec:
        return self.basis.spec

    def columns(self):
        return self.basis.columns()

    def contains(self, M: "MatrixGF | SubspaceBasis") -> bool:
        return conditional_rank(M, self) == 0


Matrixish = "MatrixGF | SubspaceBasis"


def _mat(x) -> MatrixGF:
    return x.basis if isinstance(x, SubspaceBasis) else x


def _check_spec(a: MatrixGF, b: MatrixGF):
    if a.spec != b.spec:
        raise DimensionMismatch(f"field mismatch: {a.spec} vs {b.spec}")


def hstack(parts: Sequence, d: int | None = None, spec: FieldSpec | None = None) -> MatrixGF:
    parts = [_mat(p) for p in parts]
    if not parts:
        if d is None or spec is None:
            raise ValueError("empty hstack needs explicit d and spec")
        return MatrixGF.zeros(spec, d, 0)
    d = parts[0].rows if d is None else d
    spec = parts[0].spec if spec is None else spec
    for p in parts:
        if p.rows != d:
            raise DimensionMismatch(f"ambient {p.rows} != {d}")
        if p.spec != spec:
            raise DimensionMismatch(f"field mismatch: {p.spec} vs {spec}")
    data = tuple(sum((p.data[i] for p in parts), ()) for i in range(d))
    return MatrixGF(spec, d, sum(p.cols for p in parts), data)


# --- elimination ---------------------------------------------------------

def _rref(rows: list[list[int]], spec: FieldSpec, ncols: int | None = None):
    """Reduced row echelon form in place; pivots only searched in the first
    `ncols` columns.  Returns the pivot column list."""
    if not rows:
        return []
    width = len(rows[0]) if ncols is None else ncols
    sub, mul, inv = spec.sub, spec.mul, spec.inv
    pivots: list[int] = []
    r = 0
    nrows = len(rows)
    for c in range(width):
        pr = next((i for i in range(r, nrows) if rows[i][c]), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        prow = rows[r]
        if prow[c] != 1:
            s = inv(prow[c])
            prow = [mul(s, x) if x else 0 for x in prow]
            rows[r] = prow
        nz = [j for j in range(c, len(prow)) if prow[j]]
        for i in range(nrows):
            if i != r:
                f = rows[i][c]
                if f:
                    row = rows[i]
                    for j in nz:
                        row[j] = sub(row[j], mul(f, prow[j]))
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return pivots


def rank(M) -> int:
    M = _mat(M)
    if M.rows == 0 or M.cols == 0:
        return 0
    # eliminate along the shorter side
    rows = [list(r) for r in (M.data if M.rows <= M.cols else M.columns())]
    return len(_rref(rows, M.spec))


def conditional_rank(M1, M2) -> int:
    """rank([M1, M2]) - rank(M2)."""
    M1, M2 = _mat(M1), _mat(M2)
    if M1.rows != M2.rows:
        raise DimensionMismatch(f"ambient {M1.rows} != {M2.rows}")
    _check_spec(M1, M2)
    return rank(hstack([M1, M2])) - rank(M2)


def span(M) -> SubspaceBasis:
    """Canonical basis of the column space of M."""
    M = _mat(M)
    rows = [list(c) for c in M.columns()]
    piv = _rref(rows, M.spec)
    vecs = rows[: len(piv)]
    return SubspaceBasis(M.rows, MatrixGF.from_columns(M.spec, M.rows, vecs))


def zero_space(spec: FieldSpec, d: int) -> SubspaceBasis:
    return SubspaceBasis(d, MatrixGF.zeros(spec, d, 0))


def full_space(spec: FieldSpec, d: int) -> SubspaceBasis:
    return SubspaceBasis(d, MatrixGF.identity(spec, d))


def kernel(M) -> SubspaceBasis:
    """Right null space of M, canonical."""
    M = _mat(M)
    f = M.spec
    n = M.cols
    rows = [list(r) for r in M.data]
    piv = _rref(rows, f)
    free = [c for c in range(n) if c not in set(piv)]
    vecs = []
    for c in free:
        x = [0] * n
        x[c] = 1
        for i, pc in enumerate(piv):
            x[pc] = f.neg(rows[i][c])
        vecs.append(x)
    return span(MatrixGF.from_columns(f, n, vecs))


def span_union(parts: Sequence, d: int | None = None, spec: FieldSpec | None = None) -> SubspaceBasis:
    return span(hstack(parts, d=d, spec=spec))


def span_intersect(A, B) -> SubspaceBasis:
    """<A> ∩ <B> via the kernel of [A | -B]."""
    A, B = _mat(A), _mat(B)
    if A.rows != B.rows:
        raise DimensionMismatch(f"ambient {A.rows} != {B.rows}")
    _check_spec(A, B)
    A, B = span(A).basis, span(B).basis
    if A.cols == 0 or B.cols == 0:
        return zero_space(A.spec, A.rows)
    K = kernel(hstack([A, -B]))
    if K.dim == 0:
        return zero_space(A.spec, A.rows)
    xs = MatrixGF(A.spec, A.cols, K.dim, K.basis.data[: A.cols])
    return span(A @ xs)


def solve(A, b: Sequence[int]) -> tuple[int, ...] | None:
    """Some x with A x = b (free variables zero), or None."""
    A = _mat(A)
    f = A.spec
    if len(b) != A.rows:
        raise DimensionMismatch(f"rhs length {len(b)} != {A.rows}")
    rows = [list(r) + [int(v)] for r, v in zip(A.data, b)]
    piv = _rref(rows, f, ncols=A.cols)
    for i in range(len(piv), A.rows):
        if rows[i][A.cols]:
            return None
    x = [0] * A.cols
    for i, pc in enumerate(piv):
        x[pc] = rows[i][A.cols]
    return tuple(x)


def solve_matrix(A, B) -> MatrixGF | None:
    """X with A X = B column by column, or None if some column is unreachable."""
    A, B = _mat(A), _mat(B)
    cols = []
    for c in B.columns():
        x = solve(A, c)
        if x is None:
            return None
        cols.append(x)
    return MatrixGF.from_columns(A.spec, A.cols, cols)


def determinant(M) -> int:
    M = _mat(M)
    if M.rows != M.cols:
        raise DimensionMismatch("determinant of a non-square matrix")
    f = M.spec
    rows = [list(r) for r in M.data]
    n = M.rows
    det = 1
    for c in range(n):
        pr = next((i for i in range(c, n) if rows[i][c]), None)
        if pr is None:
            return 0
        if pr != c:
            rows[c], rows[pr] = rows[pr], rows[c]
            det = f.neg(det)
        pv = rows[c][c]
        det = f.mul(det, pv)
        s = f.inv(pv)
        for i in range(c + 1, n):
            g = rows[i][c]
            if g:
                g = f.mul(g, s)
                rows[i] = [f.sub(x, f.mul(g, y)) for x, y in zip(rows[i], rows[c])]
    return det


def complement_columns(space, d: int | None = None) -> MatrixGF:
    """Standard basis columns e_i for the non-pivot rows of `space`'s canonical
    basis; together with `space` they form a basis of the ambient space."""
    S = span(space)
    f = S.spec
    d = S.ambient if d is None else d
    pivots = set()
    for c in S.columns():
        pivots.add(next(i for i, x in enumerate(c) if x))
    cols = [tuple(int(i == r) for i in range(d)) for r in range(d) if r not in pivots]
    return MatrixGF.from_columns(f, d, cols)


def complement_in(space, inside) -> MatrixGF:
    """First canonical columns of `inside` that extend `space`, in order.

    The result spans a complement of <space> ∩ <inside> within <inside>.
    """
    inside = span(inside)
    cur = span(space)
    chosen = []
    base_rank = cur.dim
    acc = [cur.basis]
    for c in inside.columns():
        col = MatrixGF.from_columns(inside.spec, inside.ambient, [c])
        if rank(hstack(acc + [col])) > base_rank + len(chosen):
            chosen.append(c)
            acc.append(col)
    return MatrixGF.from_columns(inside.spec, inside.ambient, chosen)


# --- basis extension (rank-condition selection) --------------------------

def extend_basis(anchor, candidates: Sequence, targets: Sequence[int]) -> list[MatrixGF]:
    """Pick targets[k] columns from the span of candidates[k] so that the anchor
    and all picks together have full column rank.

    Feasible exactly when every subset L of candidates satisfies
    ``sum(targets[L]) <= conditional_rank(candidates[L], anchor)``; a violation
    raises :class:`InfeasibleSelection` naming the subset.  Columns come from
    each candidate's canonical basis: greedy in index order first, then
    augmenting paths (matroid intersection against the per-candidate
    capacities) to repair what greedy missed.
    """
    anchor = _mat(anchor)
    if len(candidates) != len(targets):
        raise ValueError("one target per candidate")
    if any(t < 0 for t in targets):
        raise ValueError("targets must be nonnegative")
    cands = [span(c) for c in candidates]
    f, d = anchor.spec, anchor.rows
    for c in cands:
        if c.ambient != d:
            raise DimensionMismatch(f"candidate ambient {c.ambient} != {d}")
    active = [k for k, t in enumerate(targets) if t > 0]
    for size in range(1, len(active) + 1):
        for L in combinations(active, size):
            need = sum(targets[k] for k in L)
            have = conditional_rank(hstack([cands[k] for k in L], d=d, spec=f), anchor)
            if need > have:
                raise InfeasibleSelection(L, need, have)

    ground = [(k, c) for k in active for c in cands[k].columns()]
    base = rank(anchor)
    anchor_cols = anchor.columns()

    def independent(sel) -> bool:
        cols = anchor_cols + [ground[e][1] for e in sel]
        return rank(MatrixGF.from_columns(f, d, cols)) == base + len(sel)

    def fits(sel) -> bool:
        counts = [0] * len(targets)
        for e in sel:
            counts[ground[e][0]] += 1
        return all(counts[k] <= targets[k] for k in range(len(targets)))

    chosen: list[int] = []
    for e in range(len(ground)):
        if fits(chosen + [e]) and independent(chosen + [e]):
            chosen.append(e)

    total = sum(targets)
    while len(chosen) < total:
        path = _augmenting_path(chosen, len(ground), independent, fits)
        if path is None:  # pragma: no cover - excluded by the rank condition
            raise InfeasibleSelection(tuple(active), total, len(chosen))
        cs = set(chosen)
        for e in path:
            cs ^= {e}
        chosen = sorted(cs)

    out = []
    for k in range(len(targets)):
        cols = [ground[e][1] for e in sorted(chosen) if ground[e][0] == k]
        out.append(MatrixGF.from_columns(f, d, cols))
    return out


def _augmenting_path(I, n, indep1, indep2):
    """Shortest augmenting path in the matroid-intersection exchange graph."""
    inside = set(I)
    outside = [x for x in range(n) if x not in inside]
    sources = {x for x in outside if indep1(I + [x])}
    sinks = {x for x in outside if indep2(I + [x])}
    edges: dict[int, list[int]] = {v: [] for v in range(n)}
    for y in I:
        rest = [e for e in I if e != y]
        for x in outside:
            if indep1(rest + [x]):
                edges[y].append(x)
            if indep2(rest + [x]):
                edges[x].append(y)
    prev = {s: None for s in sources}
    queue = deque(sorted(sources))
    while queue:
        v = queue.popleft()
        if v in sinks:
            path = []
            while v is not None:
                path.append(v)
                v = prev[v]
            return path[::-1]
        for w in edges[v]:
            if w not in prev:
                prev[w] = v
                queue.append(w)
    return None
