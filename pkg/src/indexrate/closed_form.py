"""Exact rates for instance classes where CAPM meets the chained lower bound."""

from __future__ import annotations

import operator
from dataclasses import dataclass
from functools import reduce

from ._bits import iter_ids
from .bounds import chain_value
from .capm import step1, step2
from .instance import Instance, classify


class PreconditionError(ValueError):
    """The instance is outside the class a closed form applies to."""


def staircase_xor(vectors) -> list[list]:
    """Segment-wise XOR of length-sorted vectors.

    Segment ``p`` covers positions ``l_{p-1}+1 .. l_p`` and XORs vectors ``p``
    onward at those positions. Elements must support ``^`` (ints for bit
    values, frozensets for symbolic bits).
    """
    vectors = [list(v) for v in vectors]
    lengths = [len(v) for v in vectors]
    if lengths != sorted(lengths):
        raise ValueError(f"vectors must be sorted by length, got lengths {lengths}")
    segments = []
    prev = 0
    for p, hi in enumerate(lengths):
        seg = [reduce(operator.xor, (v[pos] for v in vectors[p:])) for pos in range(prev, hi)]
        segments.append(seg)
        prev = hi
    return segments


@dataclass(frozen=True)
class DemandMatrixA:
    """``rows[a-1]``: the blocks f_{b{a,b}} for b != a, as bit masks, sorted by size then b."""

    rows: tuple[tuple[tuple[int, int], ...], ...]


def exclusive_pair_block(inst: Instance, j: int, i: int) -> int:
    """Bits demanded by decoder ``j`` alone and missing at exactly decoders ``i`` and ``j``."""
    want_has = inst.everyone & ~(1 << (i - 1)) & ~(1 << (j - 1))
    need = 1 << (j - 1)
    out = 0
    for k, b in enumerate(inst.bits):
        if b.need == need and b.has == want_has:
            out |= 1 << k
    return out


def demand_matrix(inst: Instance) -> DemandMatrixA:
    rows = []
    for a in range(1, inst.m + 1):
        blocks = [(b, exclusive_pair_block(inst, b, a)) for b in range(1, inst.m + 1) if b != a]
        blocks.sort(key=lambda e: (e[1].bit_count(), e[0]))
        rows.append(tuple(blocks))
    return DemandMatrixA(tuple(rows))


def theorem3_rate(inst: Instance) -> tuple[int, int]:
    """Optimal rate when every bit is held by 0, m-1 or m-2 decoders (or all m).

    ``R_i`` counts, given Y_i, everything decoder ``i`` demands plus everything
    other decoders demand outside their exclusive two-missing blocks, then adds
    the longest block that is missing at ``i``. Returns ``(max R_i, argmax)``.
    """
    if not classify(inst).is_gm2_form:
        raise PreconditionError("some bit is held by neither 0, m, m-1 nor m-2 decoders")
    m = inst.m
    fs, ys = inst.demand_masks, inst.side_masks
    pair = [[0] * (m + 1) for _ in range(m + 1)]  # pair[j][i] = f_{j{i,j}}
    for j in range(1, m + 1):
        for i in range(1, m + 1):
            if i != j:
                pair[j][i] = exclusive_pair_block(inst, j, i)
    reduced = [0] * (m + 1)
    for j in range(1, m + 1):
        own = 0
        for i in range(1, m + 1):
            own |= pair[j][i]
        reduced[j] = fs[j - 1] & ~own
    best, arg = -1, 0
    for i in range(1, m + 1):
        union = fs[i - 1]
        for j in range(1, m + 1):
            if j != i:
                union |= reduced[j]
        r = (union & ~ys[i - 1]).bit_count()
        r += max((pair[j][i].bit_count() for j in range(1, m + 1) if j != i), default=0)
        if r > best:
            best, arg = r, i
    return best, arg


def no_excess_rate(inst: Instance) -> int:
    """Rate when Step 2 has nothing to promote: best of the m 'one decoder first' chains."""
    t1, _ = step1(inst)
    _, trace = step2(inst, t1)
    if trace:
        raise PreconditionError(f"Step 2 promotes {len(trace)} component(s)")
    m = inst.m
    perms = [(k, *[d for d in range(1, m + 1) if d != k]) for k in range(1, m + 1)]
    return max(chain_value(inst, p).value for p in perms)


def directed_cycle_rate(m: int) -> int:
    if m < 2:
        raise PreconditionError("a directed cycle needs at least two decoders")
    return m - 1


def dag_analysis(inst: Instance) -> tuple[int, tuple[int, ...]]:
    """Rate ``s`` of an acyclic instance and an ordering where each decoder's side
    information is covered by the demands of the decoders before it."""
    if not classify(inst).is_dag:
        raise PreconditionError("instance graph has a cycle")
    ys, fs = inst.side_masks, inst.demand_masks
    left = set(range(1, inst.m + 1))
    covered = 0
    order = []
    while left:
        d = next((d for d in sorted(left) if ys[d - 1] & ~covered == 0), None)
        if d is None:
            raise PreconditionError("no decoder can be peeled; instance graph has a cycle")
        order.append(d)
        left.discard(d)
        covered |= fs[d - 1]
    return inst.s, tuple(order)


def dag_witness_holds(inst: Instance, order) -> bool:
    covered = 0
    for d in order:
        if inst.side_masks[d - 1] & ~covered:
            return False
        covered |= inst.demand_masks[d - 1]
    return True


def staircase_row(inst: Instance, a: int) -> list[list[frozenset]]:
    """Apply the staircase transform to row ``a`` of the demand matrix, bits as symbols."""
    row = demand_matrix(inst).rows[a - 1]
    vectors = [[frozenset([inst.bits[k - 1].label]) for k in iter_ids(block)] for _, block in row]
    return staircase_xor(vectors)
