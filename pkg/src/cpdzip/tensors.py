"""Exact dense tensors, factor matrices, and rational linear algebra.

All arithmetic is exact: entries are ints or Fractions, equality is entrywise,
and ranks are computed by fraction-free (Bareiss) elimination with no
tolerances.  Matrices passed to the linear-algebra helpers are plain sequences
of row sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

from .model import Alphabet, CpdzipError
from .rational import (
    Scalar,
    compact,
    pack_scalars,
    rational_str,
    read_scalar,
    to_fraction,
    write_scalar,
)

Matrix = Sequence[Sequence[Scalar]]


class ShapeError(CpdzipError):
    """Operands have inconsistent shapes."""


@dataclass(frozen=True)
class ExactTensor:
    """Dense order-N tensor with equal mode sizes, row-major entries.

    Row-major means the flat index of (i_1, ..., i_N) is sum_j i_j * n^(N-j),
    i.e. the last index varies fastest.
    """

    order: int
    dim: int
    entries: tuple[Scalar, ...]

    def __post_init__(self):
        if len(self.entries) != self.dim**self.order:
            raise ShapeError(
                f"order-{self.order} tensor of dim {self.dim} needs "
                f"{self.dim ** self.order} entries, got {len(self.entries)}"
            )
        object.__setattr__(self, "entries", tuple(compact(e) for e in self.entries))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.dim,) * self.order

    def at(self, index: Sequence[int]) -> Scalar:
        flat = 0
        for i in index:
            flat = flat * self.dim + i
        return self.entries[flat]

    def is_zero(self) -> bool:
        return all(e == 0 for e in self.entries)

    def key(self) -> bytes:
        """Injective byte key for hashing/grouping of exact tensors."""
        return pack_scalars(self.entries)


def zero_tensor(order: int, dim: int) -> ExactTensor:
    return ExactTensor(order, dim, (0,) * dim**order)


@dataclass(frozen=True)
class FactorMatrix:
    """n x R matrix of mode ``mode`` (1-based); columns are component vectors."""

    mode: int
    rows: tuple[tuple[Scalar, ...], ...]
    alphabet: Alphabet | None = field(default=None, compare=False)

    def __post_init__(self):
        rows = tuple(tuple(compact(v) for v in row) for row in self.rows)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise ShapeError("ragged factor matrix")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def r(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def column(self, r: int) -> tuple[Scalar, ...]:
        return tuple(row[r] for row in self.rows)

    def columns(self) -> list[tuple[Scalar, ...]]:
        return [self.column(r) for r in range(self.r)]

    def conforms(self, alphabet: Alphabet) -> bool:
        return all(v in alphabet for row in self.rows for v in row)


@dataclass(frozen=True)
class FactorTuple:
    """Ordered N-tuple of factor matrices with consistent n and R."""

    matrices: tuple[FactorMatrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "matrices", tuple(self.matrices))
        mats = self.matrices
        if not mats:
            raise ShapeError("empty factor tuple")
        n, r = mats[0].n, mats[0].r
        if any(x.n != n or x.r != r for x in mats):
            raise ShapeError("factor matrices disagree on n or R")

    @property
    def order(self) -> int:
        return len(self.matrices)

    @property
    def dim(self) -> int:
        return self.matrices[0].n

    @property
    def components(self) -> int:
        return self.matrices[0].r


def _outer_flat(vectors: Sequence[Sequence[Scalar]]) -> list[Scalar]:
    # Row-major outer product: the last vector's index varies fastest.
    out: list[Scalar] = [1]
    for v in vectors:
        out = [x * y for x in out for y in v]
    return out


def outer_product(vectors: Sequence[Sequence[Scalar]]) -> ExactTensor:
    """Outer product of N equal-length vectors, T[i_1..i_N] = prod_j v_j[i_j]."""
    if not vectors:
        raise ShapeError("need at least one vector")
    n = len(vectors[0])
    if any(len(v) != n for v in vectors):
        raise ShapeError("outer product requires equal-length vectors")
    return ExactTensor(len(vectors), n, tuple(_outer_flat(vectors)))


def compose_entries(matrices: Sequence[FactorMatrix]) -> list[Scalar]:
    """Flat row-major entries of sum_r (outer product of the r-th columns)."""
    r_count = matrices[0].r
    cols = [[m.column(r) for m in matrices] for r in range(r_count)]
    acc = _outer_flat(cols[0])
    for r in range(1, r_count):
        term = _outer_flat(cols[r])
        acc = [a + b for a, b in zip(acc, term)]
    return acc


def cpd_compose(t: FactorTuple | Sequence[FactorMatrix]) -> ExactTensor:
    """Compose a factor tuple into its dense tensor, exactly."""
    mats = t.matrices if isinstance(t, FactorTuple) else tuple(t)
    if isinstance(t, Sequence):
        FactorTuple(tuple(mats))  # shape check
    return ExactTensor(len(mats), mats[0].n, tuple(compose_entries(mats)))


def composes_to(matrices: Sequence[FactorMatrix], target: ExactTensor) -> bool:
    """Entrywise comparison with early exit; cheaper than composing fully."""
    n = matrices[0].n
    order = len(matrices)
    if target.order != order or target.dim != n:
        return False
    r_count = matrices[0].r
    cols = [[m.column(r) for m in matrices] for r in range(r_count)]
    entries = target.entries
    flat = 0
    for idx in product(range(n), repeat=order):
        total = 0
        for col in cols:
            p = col[0][idx[0]]
            for j in range(1, order):
                p = p * col[j][idx[j]]
            total += p
        if total != entries[flat]:
            return False
        flat += 1
    return True


def unfold(t: ExactTensor, mode: int) -> list[list[Scalar]]:
    """Mode-``mode`` unfolding into an n x n^(N-1) matrix.

    Row i holds every entry with i_mode = i.  Columns enumerate the remaining
    indices with the smallest remaining mode varying fastest, so that
    unfold(T, 1)^T = (X_N (*) ... (*) X_2) X_1^T when T composes from
    (X_1, ..., X_N), with (*) the Khatri-Rao product.  The analogous identity
    holds for every mode with the chain running over the other modes in
    descending order.
    """
    if not 1 <= mode <= t.order:
        raise ShapeError(f"mode {mode} out of range for order {t.order}")
    n, order = t.dim, t.order
    rest = [j for j in range(1, order + 1) if j != mode]
    # flat strides: index i_j contributes i_j * n^(order - j)
    strides = {j: n ** (order - j) for j in range(1, order + 1)}
    cols = n ** (order - 1)
    out = []
    for i in range(n):
        base = i * strides[mode]
        row = []
        for col in range(cols):
            flat = base
            rem = col
            for j in rest:  # rest ascending; first remaining mode varies fastest
                flat += (rem % n) * strides[j]
                rem //= n
            row.append(t.entries[flat])
        out.append(row)
    return out


def khatri_rao(a: Matrix, b: Matrix) -> list[list[Scalar]]:
    """Column-wise Kronecker product; column r is kron(a[:, r], b[:, r])."""
    if not a or not b:
        raise ShapeError("empty operand")
    r = len(a[0])
    if len(b[0]) != r:
        raise ShapeError(f"column counts differ: {r} vs {len(b[0])}")
    out = []
    for arow in a:
        for brow in b:
            out.append([arow[c] * brow[c] for c in range(r)])
    return out


def khatri_rao_chain(mats: Sequence[Matrix]) -> list[list[Scalar]]:
    """Left-fold Khatri-Rao product of a sequence of matrices."""
    if not mats:
        raise ShapeError("empty chain")
    acc = [list(row) for row in mats[0]]
    for m in mats[1:]:
        acc = khatri_rao(acc, m)
    return acc


def transpose(m: Matrix) -> list[list[Scalar]]:
    return [list(col) for col in zip(*m)]


def mat_mul(a: Matrix, b: Matrix) -> list[list[Scalar]]:
    if a and b and len(a[0]) != len(b):
        raise ShapeError("inner dimensions disagree")
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def _integer_rows(m: Matrix) -> list[list[int]]:
    # Row scaling by the denominator lcm preserves rank.
    out = []
    for row in m:
        lcm = 1
        for v in row:
            if isinstance(v, Fraction):
                d = v.denominator
                g = _gcd(lcm, d)
                lcm = lcm // g * d
        if lcm == 1:
            out.append([int(v) if isinstance(v, Fraction) else v for v in row])
        else:
            out.append([int(v * lcm) for v in row])
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def rank_exact(m: Matrix) -> int:
    """Exact matrix rank by fraction-free Bareiss elimination with pivoting."""
    rows = _integer_rows(m)
    if not rows or not rows[0]:
        return 0
    n_rows, n_cols = len(rows), len(rows[0])
    rank = 0
    prev = 1
    for col in range(n_cols):
        pivot_row = None
        for i in range(rank, n_rows):
            if rows[i][col]:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        pivot = rows[rank][col]
        top = rows[rank]
        for i in range(rank + 1, n_rows):
            row = rows[i]
            f = row[col]
            for j in range(col + 1, n_cols):
                num = pivot * row[j] - f * top[j]
                q, rem = divmod(num, prev)
                if rem:
                    raise ArithmeticError("Bareiss exact division failed")
                row[j] = q
            row[col] = 0
        prev = pivot
        rank += 1
        if rank == n_rows:
            break
    return rank


def kruskal_rank(m: Matrix) -> int:
    """Largest t such that every subset of t columns is linearly independent.

    A matrix containing a zero column has k-rank 0 by convention (the t = 1
    quantifier already fails).
    """
    if not m or not m[0]:
        return 0
    cols = transpose(m)
    if any(all(v == 0 for v in col) for col in cols):
        return 0
    upper = rank_exact(m)
    r = len(cols)
    for t in range(min(upper, r), 0, -1):
        if all(
            rank_exact(transpose([cols[i] for i in subset])) == t
            for subset in combinations(range(r), t)
        ):
            return t
    return 0


def kruskal_condition(t: FactorTuple) -> bool:
    """Essential-uniqueness sufficient condition: sum of k-ranks >= 2R + (N-1)."""
    if t.order < 3:
        raise CpdzipError(
            f"the k-rank condition applies to order >= 3, got order {t.order}"
        )
    total = sum(kruskal_rank(x.rows) for x in t.matrices)
    return total >= 2 * t.components + (t.order - 1)


def solve_exact(a: Matrix, b: Matrix) -> list[list[Scalar]] | None:
    """Solve A X = B exactly for A with full column rank.

    Returns None when the system is inconsistent.  Gaussian elimination over
    Fractions on the augmented matrix; pivots always exist by the rank
    assumption.
    """
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    width = len(b[0]) if b else 0
    aug = [
        [Fraction(a[i][j]) for j in range(n_cols)] + [Fraction(b[i][k]) for k in range(width)]
        for i in range(n_rows)
    ]
    pivots = []
    rank = 0
    for col in range(n_cols):
        pivot_row = None
        for i in range(rank, n_rows):
            if aug[i][col]:
                pivot_row = i
                break
        if pivot_row is None:
            return None  # not full column rank
        aug[rank], aug[pivot_row] = aug[pivot_row], aug[rank]
        piv = aug[rank][col]
        aug[rank] = [v / piv for v in aug[rank]]
        for i in range(n_rows):
            if i != rank and aug[i][col]:
                f = aug[i][col]
                aug[i] = [v - f * w for v, w in zip(aug[i], aug[rank])]
        pivots.append(col)
        rank += 1
    # consistency: rows beyond the rank must be entirely zero
    for i in range(rank, n_rows):
        if any(aug[i][n_cols + k] for k in range(width)):
            return None
    return [[compact(aug[r][n_cols + k]) for k in range(width)] for r in range(rank)]


# --- JSON and binary dumps ----------------------------------------------------

_DUMP_MAGIC = b"CPDD"
_DUMP_VERSION = 1
_KIND_TENSOR = 0
_KIND_MATRIX = 1


def tensor_to_dict(t: ExactTensor) -> dict:
    return {
        "kind": "tensor",
        "order": t.order,
        "dim": t.dim,
        "entries": [rational_str(e) for e in t.entries],
    }


def tensor_from_dict(data: dict) -> ExactTensor:
    return ExactTensor(
        int(data["order"]),
        int(data["dim"]),
        tuple(compact(to_fraction(e)) for e in data["entries"]),
    )


def matrix_to_dict(x: FactorMatrix) -> dict:
    return {
        "kind": "factor_matrix",
        "mode": x.mode,
        "rows": x.n,
        "cols": x.r,
        "entries": [[rational_str(v) for v in row] for row in x.rows],
    }


def matrix_from_dict(data: dict) -> FactorMatrix:
    rows = tuple(tuple(compact(to_fraction(v)) for v in row) for row in data["entries"])
    return FactorMatrix(int(data["mode"]), rows)


def tensor_dump_bytes(t: ExactTensor) -> bytes:
    out = bytearray()
    out += _DUMP_MAGIC
    out.append(_DUMP_VERSION)
    out.append(_KIND_TENSOR)
    out.append(t.order)
    out += t.dim.to_bytes(2, "big")
    for e in t.entries:
        write_scalar(out, e)
    return bytes(out)


def matrix_dump_bytes(x: FactorMatrix) -> bytes:
    out = bytearray()
    out += _DUMP_MAGIC
    out.append(_DUMP_VERSION)
    out.append(_KIND_MATRIX)
    out.append(x.mode)
    out += x.n.to_bytes(2, "big")
    out.append(x.r)
    for row in x.rows:  # row-major
        for v in row:
            write_scalar(out, v)
    return bytes(out)


def _check_dump_header(buf: bytes, kind: int) -> int:
    if buf[:4] != _DUMP_MAGIC:
        raise ValueError("bad dump magic")
    if buf[4] != _DUMP_VERSION:
        raise ValueError(f"unsupported dump version {buf[4]}")
    if buf[5] != kind:
        raise ValueError("dump kind mismatch")
    return 6


def tensor_from_dump(buf: bytes, pos: int = 0) -> tuple[ExactTensor, int]:
    pos = pos + _check_dump_header(buf[pos:], _KIND_TENSOR)
    order = buf[pos]
    dim = int.from_bytes(buf[pos + 1 : pos + 3], "big")
    pos += 3
    entries = []
    for _ in range(dim**order):
        v, pos = read_scalar(buf, pos)
        entries.append(v)
    return ExactTensor(order, dim, tuple(entries)), pos


def matrix_from_dump(buf: bytes, pos: int = 0) -> tuple[FactorMatrix, int]:
    pos = pos + _check_dump_header(buf[pos:], _KIND_MATRIX)
    mode = buf[pos]
    n = int.from_bytes(buf[pos + 1 : pos + 3], "big")
    r = buf[pos + 3]
    pos += 4
    rows = []
    for _ in range(n):
        row = []
        for _ in range(r):
            v, pos = read_scalar(buf, pos)
            row.append(v)
        rows.append(tuple(row))
    return FactorMatrix(mode, tuple(rows)), pos
