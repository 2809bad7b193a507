"""Fixed-length index codec realizing the compression/reconstruction mappings.

The codebook enumerates every typical factor tuple (product of per-mode
typical enumerations, lexicographic, mode 1 most significant) and assigns each
distinct composable tensor the index of its lexicographically smallest
generating tuple.  One extra index is reserved as the fallback for everything
else; decoding the fallback yields a fixed tensor (the composition of the
smallest typical tuple, or the zero tensor when no tuple is typical).

Codeword wire format (bit-exact, big-endian):

    magic "TCPD" | version 0x01 | N u8 | R u8 | n u16 | gamma_num u32 |
    gamma_den u32 | model hash (32 bytes, SHA-256 of canonical model JSON) |
    flag u8 (0 typical, 1 fallback) | L u8 | index (L bytes)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .model import (
    BudgetExceededError,
    CpdzipError,
    DEFAULT_BUDGET,
    ModelSpec,
    model_hash,
    theoretical_threshold,
)
from .rational import pack_scalars
from .tensors import (
    ExactTensor,
    FactorMatrix,
    FactorTuple,
    ShapeError,
    compose_entries,
    cpd_compose,
    zero_tensor,
)
from .typicality import (
    TypicalityParams,
    TypicalEnumeration,
    enumerate_typical,
    iter_mode_matrices,
    matrix_probability,
    mode_space_size,
)

MAGIC = b"TCPD"
VERSION = 1
FLAG_TYPICAL = 0
FLAG_FALLBACK = 1


class DecodeError(CpdzipError):
    """Codeword cannot be decoded against this codebook."""


@dataclass(frozen=True)
class Codeword:
    """Self-describing compressed index."""

    order: int
    components: int
    n: int
    gamma: Fraction
    model_digest: bytes
    flag: int
    index: int


@dataclass
class Codebook:
    """Immutable after construction; safe for concurrent encode/decode."""

    model: ModelSpec
    params: TypicalityParams
    enums: tuple[TypicalEnumeration, ...]
    tuple_count: int
    tensor_to_index: dict[bytes, int]
    fallback_tensor: ExactTensor

    @property
    def fallback_index(self) -> int:
        return self.tuple_count

    @property
    def size(self) -> int:
        """|M|: one index per typical tuple plus the fallback slot."""
        return self.tuple_count + 1

    @property
    def log_size_nats(self) -> float:
        return math.log(self.size)

    def tuple_at(self, index: int) -> FactorTuple:
        """Typical tuple at a lexicographic index (mode 1 most significant)."""
        if not 0 <= index < self.tuple_count:
            raise DecodeError(f"tuple index {index} out of range [0, {self.tuple_count})")
        positions = []
        rem = index
        for enum in reversed(self.enums):
            rem, pos = divmod(rem, enum.count)
            positions.append(pos)
        positions.reverse()
        mats = [enum.matrices[pos] for enum, pos in zip(self.enums, positions)]
        if self.model.supersymmetric:
            x = mats[0]
            mats = [
                FactorMatrix(i, x.rows, x.alphabet)
                for i in range(1, self.model.order + 1)
            ]
        return FactorTuple(tuple(mats))


# --- shared composition tables ------------------------------------------------
#
# Exhaustive sweeps (codebook construction, exact error probability) reuse a
# per-model-structure index mapping every tuple of the full space to a compact
# tensor id.  The table depends only on (alphabets, n, N, R, supersymmetric),
# so uniform and skewed variants of one alphabet share it.


@dataclass
class _SpaceIndex:
    sizes: tuple[int, ...]  # full space size per independent mode
    tuple_count: int
    tuple_ids: list[int]  # lex tuple index -> tensor id
    id_keys: list[bytes]
    key_to_id: dict[bytes, int]


_SPACE_CACHE: dict[tuple, _SpaceIndex] = {}
_PROB_CACHE: dict[tuple, list[Fraction]] = {}
_CACHE_CAP = 4


def _structure_key(m: ModelSpec) -> tuple:
    return (
        m.order,
        m.dim,
        m.components,
        m.supersymmetric,
        tuple(a.symbols for a in m.alphabets),
    )


def _evict(cache: dict) -> None:
    while len(cache) > _CACHE_CAP:
        cache.pop(next(iter(cache)))


def _space_index(m: ModelSpec, budget: int) -> _SpaceIndex:
    key = _structure_key(m)
    cached = _SPACE_CACHE.get(key)
    if cached is not None:
        return cached
    modes = m.independent_matrices
    sizes = tuple(mode_space_size(m, i) for i in range(1, modes + 1))
    total = math.prod(sizes)
    if total > budget:
        raise BudgetExceededError(total, budget, "full tuple-space sweep")
    mode_columns = [
        [[x.column(r) for r in range(m.components)] for x in iter_mode_matrices(m, i)]
        for i in range(1, modes + 1)
    ]
    order = m.order
    key_to_id: dict[bytes, int] = {}
    id_keys: list[bytes] = []
    tuple_ids: list[int] = []
    append_id = tuple_ids.append

    def intern(entries) -> None:
        k = pack_scalars(entries)
        tid = key_to_id.get(k)
        if tid is None:
            tid = len(id_keys)
            key_to_id[k] = tid
            id_keys.append(k)
        append_id(tid)

    if m.supersymmetric:
        for cols in mode_columns[0]:
            intern(_compose_columns([cols] * order))
    else:
        # Depth-first over modes, sharing Khatri-Rao prefixes of the flat
        # rank-one expansions; at the last level the R columns are summed.
        def descend(level: int, prefix: list[list]):
            mats = mode_columns[level]
            if level == modes - 1:
                if m.components == 1:
                    pre = prefix[0]
                    for cols in mats:
                        col = cols[0]
                        intern([x * y for x in pre for y in col])
                else:
                    for cols in mats:
                        acc = None
                        for pre, col in zip(prefix, cols):
                            term = [x * y for x in pre for y in col]
                            acc = term if acc is None else [a + b for a, b in zip(acc, term)]
                        intern(acc)
                return
            for cols in mats:
                nxt = [
                    [x * y for x in pre for y in col]
                    for pre, col in zip(prefix, cols)
                ]
                descend(level + 1, nxt)

        descend(0, [[1]] * m.components)

    index = _SpaceIndex(sizes, total, tuple_ids, id_keys, key_to_id)
    _SPACE_CACHE[key] = index
    _evict(_SPACE_CACHE)
    return index


def _compose_columns(per_mode_cols) -> list:
    # per_mode_cols[i][r]: column r of mode i; returns flat row-major entries.
    r_count = len(per_mode_cols[0])
    acc = None
    for r in range(r_count):
        term = [1]
        for cols in per_mode_cols:
            col = cols[r]
            term = [x * y for x in term for y in col]
        acc = term if acc is None else [a + b for a, b in zip(acc, term)]
    return acc


def _tensor_probabilities(m: ModelSpec, space: _SpaceIndex) -> list[Fraction]:
    """Total model probability per tensor id, summed over generating tuples."""
    key = (_structure_key(m), model_hash(m))
    cached = _PROB_CACHE.get(key)
    if cached is not None:
        return cached
    modes = m.independent_matrices
    mode_probs = [
        [matrix_probability(x, m) for x in iter_mode_matrices(m, i)]
        for i in range(1, modes + 1)
    ]
    totals = [Fraction(0)] * len(space.id_keys)
    tuple_ids = space.tuple_ids
    inner = mode_probs[-1]
    idx = 0
    for outer in product(*mode_probs[:-1]):
        base = math.prod(outer, start=Fraction(1))
        for p in inner:
            totals[tuple_ids[idx]] += base * p
            idx += 1
    _PROB_CACHE[key] = totals
    _evict(_PROB_CACHE)
    return totals


def _full_tuple_index(space: _SpaceIndex, positions) -> int:
    idx = 0
    for size, pos in zip(space.sizes, positions):
        idx = idx * size + pos
    return idx


def _typical_id_map(
    space: _SpaceIndex, enums: tuple[TypicalEnumeration, ...]
) -> dict[int, int]:
    """tensor id -> codebook index of its smallest generating typical tuple."""
    id_map: dict[int, int] = {}
    tuple_ids = space.tuple_ids
    code_index = 0
    positions = [e.positions for e in enums]
    strides = [math.prod(space.sizes[level + 1 :]) for level in range(len(positions))]

    def walk(level: int, base: int):
        nonlocal code_index
        if level == len(positions) - 1:
            for pos in positions[level]:
                tid = tuple_ids[base + pos]
                if tid not in id_map:
                    id_map[tid] = code_index
                code_index += 1
            return
        stride = strides[level]
        for pos in positions[level]:
            walk(level + 1, base + pos * stride)

    walk(0, 0)
    return id_map


def build_codebook(
    m: ModelSpec, p: TypicalityParams, budget: int = DEFAULT_BUDGET
) -> Codebook:
    """Deterministically build the typical-tuple codebook."""
    if p.n != m.dim:
        raise ShapeError(f"params n={p.n} but model dim={m.dim}")
    modes = m.independent_matrices
    enums = tuple(enumerate_typical(m, p, i, budget) for i in range(1, modes + 1))
    tuple_count = math.prod(e.count for e in enums)
    if tuple_count > budget:
        raise BudgetExceededError(tuple_count, budget, "codebook tuple space")

    full_total = math.prod(e.space_size for e in enums)
    tensor_to_index: dict[bytes, int] = {}
    if tuple_count and full_total <= budget:
        space = _space_index(m, budget)
        for tid, code_index in _typical_id_map(space, enums).items():
            tensor_to_index[space.id_keys[tid]] = code_index
    elif tuple_count:
        code_index = 0
        for mats in product(*(e.matrices for e in enums)):
            if m.supersymmetric:
                mats = [
                    FactorMatrix(i, mats[0].rows, mats[0].alphabet)
                    for i in range(1, m.order + 1)
                ]
            key = pack_scalars(compose_entries(list(mats)))
            tensor_to_index.setdefault(key, code_index)
            code_index += 1

    cb = Codebook(m, p, enums, tuple_count, tensor_to_index, zero_tensor(m.order, m.dim))
    if tuple_count:
        cb.fallback_tensor = cpd_compose(cb.tuple_at(0))
    return cb


def encode(t: ExactTensor, cb: Codebook) -> Codeword:
    """Map a tensor to its codeword; unindexed tensors get the fallback index."""
    m = cb.model
    if t.order != m.order or t.dim != m.dim:
        raise ShapeError(
            f"tensor shape {t.shape} does not match model ({m.order}, dim {m.dim})"
        )
    index = cb.tensor_to_index.get(t.key())
    if index is None:
        return _codeword(cb, FLAG_FALLBACK, cb.fallback_index)
    return _codeword(cb, FLAG_TYPICAL, index)


def _codeword(cb: Codebook, flag: int, index: int) -> Codeword:
    return Codeword(
        order=cb.model.order,
        components=cb.model.components,
        n=cb.model.dim,
        gamma=cb.params.gamma,
        model_digest=model_hash(cb.model),
        flag=flag,
        index=index,
    )


def decode(c: Codeword, cb: Codebook) -> ExactTensor:
    """Reconstruct the tensor for a codeword produced against this codebook."""
    m = cb.model
    if c.model_digest != model_hash(m):
        raise DecodeError("codeword model hash does not match the codebook's model")
    if (c.order, c.components, c.n) != (m.order, m.components, m.dim):
        raise DecodeError("codeword shape header does not match the codebook")
    if c.gamma != cb.params.gamma:
        raise DecodeError("codeword gamma does not match the codebook")
    if c.flag == FLAG_FALLBACK:
        if c.index != cb.fallback_index:
            raise DecodeError(
                f"fallback codeword carries index {c.index}, expected {cb.fallback_index}"
            )
        return cb.fallback_tensor
    if c.flag != FLAG_TYPICAL:
        raise DecodeError(f"unknown flag byte {c.flag}")
    if c.index >= cb.tuple_count:
        raise DecodeError(f"index {c.index} out of range for |M| = {cb.size}")
    return cpd_compose(cb.tuple_at(c.index))


def codeword_to_bytes(c: Codeword) -> bytes:
    if not (0 < c.gamma.numerator < 1 << 32 and 0 < c.gamma.denominator < 1 << 32):
        raise ValueError("gamma numerator/denominator must fit in u32")
    out = bytearray()
    out += MAGIC
    out.append(VERSION)
    out.append(c.order)
    out.append(c.components)
    out += c.n.to_bytes(2, "big")
    out += c.gamma.numerator.to_bytes(4, "big")
    out += c.gamma.denominator.to_bytes(4, "big")
    out += c.model_digest
    out.append(c.flag)
    length = max(1, (c.index.bit_length() + 7) // 8)
    out.append(length)
    out += c.index.to_bytes(length, "big")
    return bytes(out)


def codeword_from_bytes(buf: bytes) -> Codeword:
    if len(buf) < 4 + 1 + 2 + 2 + 8 + 32 + 2 + 1:
        raise DecodeError("codeword truncated")
    if buf[:4] != MAGIC:
        raise DecodeError("bad magic")
    if buf[4] != VERSION:
        raise DecodeError(f"unsupported codeword version {buf[4]}")
    order = buf[5]
    components = buf[6]
    n = int.from_bytes(buf[7:9], "big")
    gamma = Fraction(int.from_bytes(buf[9:13], "big"), int.from_bytes(buf[13:17], "big"))
    digest = buf[17:49]
    flag = buf[49]
    length = buf[50]
    if len(buf) != 51 + length:
        raise DecodeError("codeword payload length mismatch")
    index = int.from_bytes(buf[51 : 51 + length], "big")
    return Codeword(order, components, n, gamma, digest, flag, index)


@dataclass(frozen=True)
class SchemeReport:
    """Exact accounting of one (model, gamma) scheme instance."""

    codebook_size: int
    log_M_nats: float
    threshold_per_n: float
    exact_error_prob: Fraction
    error_prob_bound: Fraction
    length_bound_nats: float
    masses: tuple[Fraction, ...]


def length_bound_nats(m: ModelSpec, p: TypicalityParams) -> float:
    """n * (sum of entropies + (#matrices) R gamma) + ln 2, the fallback slot."""
    matrices = m.independent_matrices
    return m.dim * (
        theoretical_threshold(m) + matrices * m.components * float(p.gamma)
    ) + math.log(2)


def measure_scheme(
    m: ModelSpec, p: TypicalityParams, budget: int = DEFAULT_BUDGET
) -> SchemeReport:
    """Exact error probability and storage accounting for one scheme.

    The error probability sums the model probability of every tuple in the
    full space whose composed tensor is not decoded back to itself, so the
    full space must fit the budget.
    """
    space = _space_index(m, budget)
    probs = _tensor_probabilities(m, space)
    modes = m.independent_matrices
    enums = tuple(enumerate_typical(m, p, i, budget) for i in range(1, modes + 1))
    tuple_count = math.prod(e.count for e in enums)
    if tuple_count > budget:
        raise BudgetExceededError(tuple_count, budget, "codebook tuple space")
    id_map = _typical_id_map(space, enums)

    decodable = sum((probs[tid] for tid in id_map), Fraction(0))
    if not id_map:
        # empty codebook: only the zero fallback tensor decodes correctly
        zero_id = space.key_to_id.get(zero_tensor(m.order, m.dim).key())
        if zero_id is not None:
            decodable += probs[zero_id]
    error = 1 - decodable

    masses = tuple(
        sum((matrix_probability(x, m) for x in e.matrices), Fraction(0)) for e in enums
    )
    mass_bound = 1 - math.prod(masses, start=Fraction(1))
    size = tuple_count + 1
    return SchemeReport(
        codebook_size=size,
        log_M_nats=math.log(size),
        threshold_per_n=math.log(size) / m.dim,
        exact_error_prob=error,
        error_prob_bound=mass_bound,
        length_bound_nats=length_bound_nats(m, p),
        masses=masses,
    )
