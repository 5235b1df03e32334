"""Chained lower bound on the broadcast rate.

For a decoder ordering sigma the bound sums, step by step, the demanded bits of
the next decoder that are neither in its own side information nor in the side
information or demands of any earlier decoder. The best ordering is found by a
dynamic program over decoder subsets, since a step's contribution depends only
on the *set* of earlier decoders.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .instance import Instance

ENUMERATION_GUARD = 8


class GuardError(ValueError):
    """Raised when an exhaustive computation would exceed its size guard."""


@dataclass(frozen=True)
class ChainWitness:
    permutation: tuple[int, ...]
    terms: tuple[int, ...]
    value: int


def chain_value(inst: Instance, perm) -> ChainWitness:
    perm = tuple(perm)
    if sorted(perm) != list(range(1, inst.m + 1)):
        raise ValueError(f"{perm} is not a permutation of 1..{inst.m}")
    ys, fs = inst.side_masks, inst.demand_masks
    covered = 0
    terms = []
    for d in perm:
        terms.append((fs[d - 1] & ~(ys[d - 1] | covered)).bit_count())
        covered |= ys[d - 1] | fs[d - 1]
    return ChainWitness(perm, tuple(terms), sum(terms))


def dsm_plus_dp(inst: Instance) -> ChainWitness:
    """Maximize the chain over all m! orderings in O(2^m * m).

    ``best[T]`` is the largest total the decoders outside ``T`` can still add
    once the decoders in ``T`` have been placed first. The witness is read off
    front to back, taking the smallest decoder that stays on an optimal path.
    """
    m = inst.m
    if m > inst.max_decoders:
        raise GuardError(f"m={m} exceeds the cap {inst.max_decoders}")
    ys, fs = inst.side_masks, inst.demand_masks
    full = (1 << m) - 1
    reach = [0] * (1 << m)
    for t in range(1, 1 << m):
        low = t & -t
        d = low.bit_length() - 1
        reach[t] = reach[t ^ low] | ys[d] | fs[d]
    own = [fs[d] & ~ys[d] for d in range(m)]

    best = [0] * (1 << m)
    for t in range(full - 1, -1, -1):
        cover = reach[t]
        top = 0
        rest = full & ~t
        while rest:
            low = rest & -rest
            d = low.bit_length() - 1
            v = (own[d] & ~cover).bit_count() + best[t | low]
            if v > top:
                top = v
            rest ^= low
        best[t] = top

    perm, terms, t = [], [], 0
    for _ in range(m):
        cover = reach[t]
        for d in range(m):
            if t >> d & 1:
                continue
            term = (own[d] & ~cover).bit_count()
            if term + best[t | 1 << d] == best[t]:
                perm.append(d + 1)
                terms.append(term)
                t |= 1 << d
                break
    return ChainWitness(tuple(perm), tuple(terms), best[0])


def dsm_plus_enumerate(inst: Instance, guard: int = ENUMERATION_GUARD) -> ChainWitness:
    """Brute force over every ordering; first maximizer in lexicographic order wins."""
    if inst.m > guard:
        raise GuardError(f"m={inst.m} exceeds the enumeration guard {guard}")
    best = None
    for perm in itertools.permutations(range(1, inst.m + 1)):
        w = chain_value(inst, perm)
        if best is None or w.value > best.value:
            best = w
    return best
