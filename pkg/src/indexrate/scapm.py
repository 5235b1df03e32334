"""Split CAPM: fractional allocation of bits across messages.

Each source bit ``k`` carries a mass ``theta(I, k)`` in every message ``U_I``;
the masses of a bit always sum to one. Balancing promotes mass (not whole bits)
to the next level, splitting it evenly over all one-larger supersets. A block
length ``t`` that clears every denominator then turns the allocation back into
an integral table of sub-bits, where the usual XOR step applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ._bits import fmt_subset, iter_ids
from .capm import Component, MessageTable, TraceEvent, capm_rate, step1_destination, step3
from .instance import BitSpec, Instance

# inner-loop cap per subset; every iteration zeroes an entry or closes a gap
_STEP_LIMIT = 1_000_000


class ThetaTable:
    """Sparse ``(subset, bit) -> Fraction`` map; zero entries are never stored."""

    def __init__(self, entries: dict[int, dict[int, Fraction]] | None = None):
        self._by_subset: dict[int, dict[int, Fraction]] = {}
        for subset, row in (entries or {}).items():
            for k, v in row.items():
                self.add(subset, k, v)

    def get(self, subset: int, k: int) -> Fraction:
        return self._by_subset.get(subset, {}).get(k, Fraction(0))

    def row(self, subset: int) -> dict[int, Fraction]:
        return self._by_subset.get(subset, {})

    def add(self, subset: int, k: int, amount) -> None:
        row = self._by_subset.setdefault(subset, {})
        v = row.get(k, Fraction(0)) + amount
        if v:
            row[k] = v
        else:
            row.pop(k, None)
        if not row:
            del self._by_subset[subset]

    def subsets(self) -> list[int]:
        return sorted(self._by_subset, key=lambda s: (s.bit_count(), s))

    def entries(self):
        """Yield ``(subset, bit, theta)`` by subset order then bit index."""
        for subset in self.subsets():
            row = self._by_subset[subset]
            for k in sorted(row):
                yield subset, k, row[k]

    def bit_total(self, k: int) -> Fraction:
        return sum((row.get(k, Fraction(0)) for row in self._by_subset.values()), Fraction(0))

    def copy(self) -> "ThetaTable":
        out = ThetaTable()
        out._by_subset = {s: dict(r) for s, r in self._by_subset.items()}
        return out

    def __eq__(self, other):
        if not isinstance(other, ThetaTable):
            return NotImplemented
        return self._by_subset == other._by_subset

    def as_dict(self) -> dict[tuple[frozenset[int], int], Fraction]:
        return {(frozenset(iter_ids(s)), k): v for s, k, v in self.entries()}


def s_step1(inst: Instance) -> ThetaTable:
    theta = ThetaTable()
    for k in range(1, inst.s + 1):
        theta.add(step1_destination(inst, k), k, Fraction(1))
    return theta


def frac_entropy(inst: Instance, theta: ThetaTable, subset: int, j: int) -> Fraction:
    y = inst.side_masks[j - 1]
    return sum((v for k, v in theta.row(subset).items() if not y >> (k - 1) & 1), Fraction(0))


def _promote(theta: ThetaTable, subset: int, k: int, amount: Fraction, m: int) -> None:
    ups = [subset | 1 << d for d in range(m) if not subset >> d & 1]
    share = amount / len(ups)
    theta.add(subset, k, -amount)
    for up in ups:
        theta.add(up, k, share)


def _balance(inst: Instance, theta: ThetaTable, subset: int, trace: list[TraceEvent]) -> None:
    ys = inst.side_masks
    for _ in range(_STEP_LIMIT):
        row = theta.row(subset)
        if not row:
            return
        hs = [(frac_entropy(inst, theta, subset, i), i) for i in iter_ids(subset)]
        h_lo, i_star = min(hs)
        h_hi, j_star = min(hs, key=lambda h: (-h[0], h[1]))
        gap = h_hi - h_lo
        if gap == 0:
            return
        y_i, y_j = ys[i_star - 1], ys[j_star - 1]
        cands = sorted(k for k in row if y_i >> (k - 1) & 1 and not y_j >> (k - 1) & 1)
        if not cands:
            return
        whole = [k for k in cands if row[k] <= gap]
        if whole:
            k = min(whole, key=lambda k: (-row[k], k))
            amount, kind = row[k], "whole"
        else:
            k = min(cands, key=lambda k: (row[k], k))
            amount, kind = gap, "partial"
        _promote(theta, subset, k, amount, inst.m)
        trace.append(
            TraceEvent(
                "promoted",
                {"bit": k, "src": subset, "amount": amount, "kind": kind, "i*": i_star, "j*": j_star},
            )
        )
    raise RuntimeError(f"balancing U{fmt_subset(subset)} did not terminate")


def s_step2(inst: Instance, theta: ThetaTable) -> tuple[ThetaTable, list[TraceEvent]]:
    theta = theta.copy()
    trace: list[TraceEvent] = []
    for level in range(1, inst.m):
        for subset in [s for s in theta.subsets() if s.bit_count() == level]:
            _balance(inst, theta, subset, trace)
    return theta, trace


@dataclass
class ExpandedPlan:
    """``t``-fold block expansion; sub-bit ``j`` of bit ``k`` has index ``(k-1)*t + j``."""

    t: int
    instance: Instance
    table: MessageTable


def block_length(theta: ThetaTable) -> int:
    return math.lcm(*(v.denominator for _, _, v in theta.entries()))


def expand_instance(inst: Instance, t: int) -> Instance:
    bits = tuple(BitSpec(f"{b.label}.{j}", b.need, b.has) for b in inst.bits for j in range(1, t + 1))
    return Instance(inst.m, bits, inst.max_decoders, max(inst.max_bits, len(bits)))


def expand(inst: Instance, theta: ThetaTable) -> ExpandedPlan:
    t = block_length(theta)
    big = expand_instance(inst, t)
    placed: dict[int, list[tuple[int, Component]]] = {}
    by_bit: dict[int, list[tuple[int, Fraction]]] = {}
    for subset, k, v in theta.entries():
        by_bit.setdefault(k, []).append((subset, v))
    for k in range(1, inst.s + 1):
        b = inst.bits[k - 1]
        origin = step1_destination(inst, k)
        nxt = (k - 1) * t
        for subset, v in sorted(by_bit.get(k, []), key=lambda e: e[0]):
            count = v * t
            if count.denominator != 1:
                raise ValueError(f"theta entry {v} not integral at t={t}")
            for _ in range(int(count)):
                comp = Component(1 << nxt, b.need, b.has, origin, subset != origin)
                placed.setdefault(subset, []).append((nxt, comp))
                nxt += 1
    table = MessageTable({s: [c for _, c in sorted(lst, key=lambda e: e[0])] for s, lst in placed.items()})
    return ExpandedPlan(t, big, table)


@dataclass
class ScapmRun:
    rate: Fraction
    t: int
    plan: ExpandedPlan
    table: MessageTable
    theta: ThetaTable
    trace: list[TraceEvent]


def run_scapm(inst: Instance) -> ScapmRun:
    theta0 = s_step1(inst)
    theta, trace = s_step2(inst, theta0)
    plan = expand(inst, theta)
    table, xtrace = step3(plan.instance, plan.table)
    rate = Fraction(capm_rate(plan.instance, table), plan.t)
    return ScapmRun(rate, plan.t, plan, table, theta, trace + xtrace)


def format_theta_trace(inst: Instance, trace: list[TraceEvent], expanded: Instance | None = None) -> str:
    """Promotions name bits of ``inst``; XOR events name sub-bits of ``expanded``."""
    lines = []
    for ev in trace:
        d = ev.detail
        if ev.kind == "promoted":
            lines.append(
                f"promoted bit={inst.bits[d['bit'] - 1].label} src={fmt_subset(d['src'])} "
                f"amount={d['amount']} kind={d['kind']} i*={d['i*']} j*={d['j*']}"
            )
        else:
            lines.append(ev.line(expanded))
    return "".join(line + "\n" for line in lines)
