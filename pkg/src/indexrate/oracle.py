"""Minimum scalar-linear broadcast rate over GF(2), by subspace enumeration.

Every subspace of GF(2)^s has exactly one reduced row-echelon basis, so
walking dimensions upward and, inside a dimension, every pivot-column choice
and every filling of the free entries visits each candidate code once. Row
vectors are ints; column ``c`` (0-based) is source bit ``c + 1``.

A code is decodable when each demanded bit ``e_b`` of each decoder lies in the
code's row space plus the span of that decoder's side information, i.e. some
codeword agrees with ``e_b`` on every coordinate the decoder does not hold.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bounds import GuardError
from .instance import Instance

DEFAULT_MAX_BITS = 9
_CHUNK = 1 << 15


@dataclass(frozen=True)
class LinearCode:
    s: int
    rows: tuple[int, ...]

    @property
    def r(self) -> int:
        return len(self.rows)

    @property
    def pivots(self) -> tuple[int, ...]:
        """1-based pivot columns."""
        return tuple((row & -row).bit_length() for row in self.rows)

    def row_strings(self) -> list[str]:
        return ["".join("1" if row >> c & 1 else "0" for c in range(self.s)) for row in self.rows]


def gf2_reduce(vec: int, basis: dict[int, int]) -> int:
    """Reduce ``vec`` against a basis keyed by lowest set bit."""
    while vec:
        low = vec & -vec
        piv = basis.get(low)
        if piv is None:
            return vec
        vec ^= piv
    return 0


def gf2_basis(rows) -> dict[int, int]:
    basis: dict[int, int] = {}
    for row in rows:
        v = gf2_reduce(row, basis)
        if v:
            basis[v & -v] = v
    return basis


def gf2_rank(rows) -> int:
    return len(gf2_basis(rows))


def rref(rows, s: int) -> LinearCode:
    """Canonical reduced row-echelon form (pivot = lowest column index)."""
    basis = gf2_basis(rows)
    pivs = sorted(basis)
    vecs = {p: basis[p] for p in pivs}
    for p in pivs:
        for q in pivs:
            if q != p and vecs[q] & p:
                vecs[q] ^= vecs[p]
    return LinearCode(s, tuple(vecs[p] for p in pivs))


def _requirements(inst: Instance) -> list[tuple[int, int]]:
    """(mask of coordinates the decoder lacks, target e_b) per demanded bit.

    A requirement whose lacked set is contained in another's for the same
    target is implied by it and dropped.
    """
    reqs = set()
    for i in range(inst.m):
        lacks = inst.all_bits & ~inst.side_masks[i]
        f = inst.demand_masks[i]
        while f:
            low = f & -f
            reqs.add((lacks, low))
            f ^= low
    return sorted(
        (lacks, t)
        for lacks, t in reqs
        if not any(t2 == t and l2 != lacks and lacks & ~l2 == 0 for l2, t2 in reqs)
    )


def decodable(inst: Instance, code: LinearCode) -> bool:
    if code.s != inst.s:
        raise ValueError(f"code has {code.s} columns, instance has {inst.s} bits")
    for i in range(inst.m):
        y = inst.side_masks[i]
        basis = gf2_basis(row & ~y for row in code.rows)
        f = inst.demand_masks[i]
        while f:
            low = f & -f
            if gf2_reduce(low, basis):
                return False
            f ^= low
    return True


def _satisfaction_tables(inst: Instance) -> list[tuple[np.ndarray, int]]:
    """Per 62-requirement word: (sat, full) where sat[v] flags the requirements codeword v meets."""
    reqs = _requirements(inst)
    vals = np.arange(1 << inst.s, dtype=np.int64)
    words = []
    for start in range(0, len(reqs), 62):
        chunk = reqs[start : start + 62]
        sat = np.zeros(1 << inst.s, dtype=np.int64)
        for idx, (lacks, target) in enumerate(chunk):
            sat |= ((vals & lacks) == target).astype(np.int64) << idx
        words.append((sat, (1 << len(chunk)) - 1))
    return words


def _pivot_layout(pivots: tuple[int, ...], s: int):
    """Base rows and (row, column) of every free RREF entry."""
    pset = set(pivots)
    base = [1 << p for p in pivots]
    free = [(r, c) for r, p in enumerate(pivots) for c in range(p + 1, s) if c not in pset]
    return base, free


def _codes_for(pivots, s: int, lo: int, hi: int) -> np.ndarray:
    """Rows (shape ``(hi-lo, r)``) of the RREF matrices with free-entry fillings lo..hi-1."""
    base, free = _pivot_layout(pivots, s)
    fill = np.arange(lo, hi, dtype=np.int64)
    rows = np.tile(np.array(base, dtype=np.int64), (hi - lo, 1))
    for bit, (r, c) in enumerate(free):
        rows[:, r] |= ((fill >> bit) & 1) << c
    return rows


def _span(rows: np.ndarray) -> np.ndarray:
    elems = np.zeros((rows.shape[0], 1), dtype=np.int64)
    for r in range(rows.shape[1]):
        elems = np.concatenate([elems, elems ^ rows[:, r : r + 1]], axis=1)
    return elems


def iter_subspaces(s: int, r: int):
    """Every r-dimensional subspace of GF(2)^s as a LinearCode, in search order."""
    for pivots in itertools.combinations(range(s), r):
        _, free = _pivot_layout(pivots, s)
        for lo in range(0, 1 << len(free), _CHUNK):
            hi = min(lo + _CHUNK, 1 << len(free))
            for row in _codes_for(pivots, s, lo, hi):
                yield LinearCode(s, tuple(int(x) for x in row))


def count_subspaces(s: int, r: int) -> int:
    """Gaussian binomial coefficient [s choose r] at q = 2."""
    num = den = 1
    for i in range(r):
        num *= (1 << (s - i)) - 1
        den *= (1 << (i + 1)) - 1
    return num // den


def first_decodable(inst: Instance, r: int, sat=None) -> LinearCode | None:
    """First decodable r-dimensional code in enumeration order, or None."""
    s = inst.s
    words = _satisfaction_tables(inst) if sat is None else sat
    if not words:
        return LinearCode(s, ()) if r == 0 else None
    for pivots in itertools.combinations(range(s), r):
        _, free = _pivot_layout(pivots, s)
        total = 1 << len(free)
        for lo in range(0, total, _CHUNK):
            hi = min(lo + _CHUNK, total)
            rows = _codes_for(pivots, s, lo, hi)
            span = _span(rows)
            ok = np.ones(hi - lo, dtype=bool)
            for table, full in words:
                ok &= np.bitwise_or.reduce(table[span], axis=1) == full
            hit = np.flatnonzero(ok)
            if hit.size:
                return LinearCode(s, tuple(int(x) for x in rows[hit[0]]))
    return None


def exact_scalar_linear(inst: Instance, max_s: int = DEFAULT_MAX_BITS) -> tuple[int, LinearCode]:
    """Smallest dimension of a decodable binary linear code, with the first such code found."""
    if inst.s > max_s:
        raise GuardError(f"s={inst.s} exceeds the oracle guard {max_s}")
    sat = _satisfaction_tables(inst)
    for r in range(inst.s + 1):
        code = first_decodable(inst, r, sat)
        if code is not None:
            return r, code
    raise AssertionError("the identity code is always decodable")
