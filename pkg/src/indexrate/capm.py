"""Coded approximate partition multicast (CAPM).

Source bits are first placed in subset-indexed messages ``U_I`` (one message
per decoder set ``I``), unbalanced messages then push surplus bits one level
up, and finally compatible surplus bits that started in the same message are
XORed together. The rate of a table is the sum over messages of the worst
per-decoder conditional entropy, which for disjoint XORs of uniform bits is
just the number of components a decoder cannot already reconstruct.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ._bits import fmt_subset, iter_ids, lowest_id
from .instance import Instance


@dataclass(frozen=True)
class Component:
    """XOR of the source bits in ``bits``; a single bit when ``bits`` is a singleton."""

    bits: int
    need: int
    has: int
    origin: int
    excess: bool = False


@dataclass
class Message:
    subset: int
    components: list[Component] = field(default_factory=list)

    @property
    def level(self) -> int:
        return self.subset.bit_count()


class MessageTable:
    """Nonempty messages keyed by decoder-subset mask."""

    def __init__(self, messages: dict[int, list[Component]] | None = None):
        self._msgs: dict[int, list[Component]] = {}
        for subset, comps in (messages or {}).items():
            if comps:
                self._msgs[subset] = list(comps)

    @staticmethod
    def order_key(subset: int) -> tuple[int, int]:
        return subset.bit_count(), subset

    @property
    def messages(self) -> list[Message]:
        return [Message(s, list(self._msgs[s])) for s in sorted(self._msgs, key=self.order_key)]

    def subsets(self) -> list[int]:
        return sorted(self._msgs, key=self.order_key)

    def components(self, subset: int) -> list[Component]:
        """The live component list of ``U_subset`` (empty list if absent)."""
        return self._msgs.get(subset, [])

    def add(self, subset: int, comp: Component) -> None:
        self._msgs.setdefault(subset, []).append(comp)

    def remove(self, subset: int, index: int) -> Component:
        comps = self._msgs[subset]
        comp = comps.pop(index)
        if not comps:
            del self._msgs[subset]
        return comp

    def nonempty(self, subset: int) -> bool:
        return subset in self._msgs

    def copy(self) -> "MessageTable":
        return MessageTable({s: list(c) for s, c in self._msgs.items()})

    def __eq__(self, other):
        if not isinstance(other, MessageTable):
            return NotImplemented
        return self._msgs == other._msgs

    def __len__(self):
        return len(self._msgs)

    def describe(self, inst: Instance) -> list[str]:
        out = []
        for msg in self.messages:
            parts = []
            for c in msg.components:
                parts.append("+".join(inst.labels(c.bits)) + ("*" if c.excess else ""))
            out.append(f"U{fmt_subset(msg.subset)} = {' '.join(parts)}")
        return out


@dataclass(frozen=True)
class TraceEvent:
    """One table edit; ``detail`` keeps a fixed key order per kind."""

    kind: str
    detail: dict

    def line(self, inst: Instance | None = None) -> str:
        fields = [self.kind]
        for key, value in self.detail.items():
            if key in ("src", "dst", "msg"):
                value = fmt_subset(value)
            elif key in ("bits", "keep", "drop"):
                value = "+".join(inst.labels(value)) if inst else "+".join(map(str, iter_ids(value)))
            fields.append(f"{key}={value}")
        return " ".join(fields)


def format_trace(inst: Instance, trace: list[TraceEvent]) -> str:
    return "".join(ev.line(inst) + "\n" for ev in trace)


class CapmError(ValueError):
    pass


# --------------------------------------------------------------------------
# rates
# --------------------------------------------------------------------------


def _unknown(comps, y: int) -> int:
    return sum(1 for c in comps if c.bits & ~y)


def message_rate(inst: Instance, msg: Message, i: int) -> int:
    """H(U_I | Y_i): the number of components of ``msg`` not fully inside Y_i."""
    if not msg.subset >> (i - 1) & 1:
        raise CapmError(f"decoder {i} does not decode U{fmt_subset(msg.subset)}")
    return _unknown(msg.components, inst.side_masks[i - 1])


def _max_rate(inst: Instance, subset: int, comps) -> int:
    return max(_unknown(comps, inst.side_masks[i - 1]) for i in iter_ids(subset))


def capm_rate(inst: Instance, table: MessageTable) -> int:
    return sum(_max_rate(inst, s, table.components(s)) for s in table.subsets())


# --------------------------------------------------------------------------
# the three steps
# --------------------------------------------------------------------------


def step1_destination(inst: Instance, k: int) -> int:
    """Subset receiving bit ``k`` (1-based): its demanders plus its holders, or everyone."""
    b = inst.bits[k - 1]
    return b.need | b.has if b.has else inst.everyone


def step1(inst: Instance) -> tuple[MessageTable, list[TraceEvent]]:
    table = MessageTable()
    trace = []
    for k, b in enumerate(inst.bits, start=1):
        dst = step1_destination(inst, k)
        table.add(dst, Component(1 << (k - 1), b.need, b.has, dst))
        trace.append(TraceEvent("placed", {"bits": 1 << (k - 1), "dst": dst}))
    return table, trace


def _destination(table: MessageTable, subset: int, m: int) -> int:
    missing = [d for d in range(m) if not subset >> d & 1]
    for d in missing:
        if table.nonempty(subset | 1 << d):
            return subset | 1 << d
    return subset | 1 << missing[0]


def _balance(inst: Instance, table: MessageTable, subset: int, trace: list[TraceEvent]) -> None:
    ys = inst.side_masks
    while table.nonempty(subset):
        comps = table.components(subset)
        rates = [(_unknown(comps, ys[i - 1]), i) for i in iter_ids(subset)]
        lo = min(rates)
        hi = min(rates, key=lambda r: (-r[0], r[1]))
        if lo[0] == hi[0]:
            return
        i_star, j_star = lo[1], hi[1]
        y_i, y_j = ys[i_star - 1], ys[j_star - 1]
        # first component (in message order) known at i* but not at j*
        pos = next(p for p, c in enumerate(comps) if not c.bits & ~y_i and c.bits & ~y_j)
        comp = table.remove(subset, pos)
        dst = _destination(table, subset, inst.m)
        table.add(dst, replace(comp, excess=True))
        trace.append(
            TraceEvent("promoted", {"bits": comp.bits, "src": subset, "dst": dst, "i*": i_star, "j*": j_star})
        )


def step2(inst: Instance, table: MessageTable) -> tuple[MessageTable, list[TraceEvent]]:
    """Level by level, promote surplus components until every message below [m] is balanced.

    Promotions only go one level up, so all messages of level L exist before
    level L is visited.
    """
    table = table.copy()
    trace: list[TraceEvent] = []
    for level in range(1, inst.m):
        for subset in [s for s in table.subsets() if s.bit_count() == level]:
            _balance(inst, table, subset, trace)
    return table, trace


def _first_pair(comps: list[Component]) -> tuple[int, int] | None:
    for a, va in enumerate(comps):
        if not va.excess:
            continue
        for b in range(a + 1, len(comps)):
            vb = comps[b]
            if (
                vb.excess
                and va.origin == vb.origin
                and va.need & ~vb.has == 0
                and vb.need & ~va.has == 0
            ):
                return a, b
    return None


def merge(a: Component, b: Component) -> Component:
    return Component(a.bits | b.bits, a.need | b.need, a.has & b.has, a.origin, a.excess)


def step3(inst: Instance, table: MessageTable) -> tuple[MessageTable, list[TraceEvent]]:
    table = table.copy()
    trace: list[TraceEvent] = []
    for subset in table.subsets():
        comps = table.components(subset)
        while (pair := _first_pair(comps)) is not None:
            a, b = pair
            keep, drop = comps[a], comps[b]
            comps[a] = merge(keep, drop)
            del comps[b]
            trace.append(TraceEvent("xored", {"msg": subset, "keep": keep.bits, "drop": drop.bits}))
    return table, trace


@dataclass
class CapmRun:
    rate: int
    table: MessageTable
    trace: list[TraceEvent]
    stage_tables: tuple[MessageTable, MessageTable]
    stage_rates: tuple[int, int, int]

    @property
    def promotions(self) -> int:
        return sum(1 for ev in self.trace if ev.kind == "promoted")


def run_capm(inst: Instance) -> CapmRun:
    t1, tr1 = step1(inst)
    t2, tr2 = step2(inst, t1)
    t3, tr3 = step3(inst, t2)
    rates = (capm_rate(inst, t1), capm_rate(inst, t2), capm_rate(inst, t3))
    return CapmRun(rates[2], t3, tr1 + tr2 + tr3, (t1, t2), rates)


def replay(inst: Instance, trace: list[TraceEvent], table: MessageTable | None = None) -> MessageTable:
    """Apply trace events to ``table`` (default: empty); ``placed`` events rebuild Step 1."""
    table = MessageTable() if table is None else table.copy()
    for ev in trace:
        d = ev.detail
        if ev.kind == "placed":
            k = lowest_id(d["bits"])
            b = inst.bits[k - 1]
            table.add(d["dst"], Component(d["bits"], b.need, b.has, d["dst"]))
        elif ev.kind == "promoted":
            comps = table.components(d["src"])
            pos = next(p for p, c in enumerate(comps) if c.bits == d["bits"])
            comp = table.remove(d["src"], pos)
            table.add(d["dst"], replace(comp, excess=True))
        elif ev.kind == "xored":
            comps = table.components(d["msg"])
            a = next(p for p, c in enumerate(comps) if c.bits == d["keep"])
            b = next(p for p, c in enumerate(comps) if c.bits == d["drop"])
            comps[a] = merge(comps[a], comps[b])
            del comps[b]
        else:
            raise CapmError(f"unknown trace event {ev.kind!r}")
    return table


# --------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    decoder: int | None = None
    bit: int | None = None

    def __bool__(self):
        return self.ok


def verify_feasible(inst: Instance, table: MessageTable) -> Feasibility:
    """Peel components decoder by decoder: a component with one unknown bit reveals it."""
    msgs = table.messages
    for i in range(1, inst.m + 1):
        known = inst.side_masks[i - 1]
        pending = [c.bits for msg in msgs if msg.subset >> (i - 1) & 1 for c in msg.components]
        changed = True
        while changed:
            changed = False
            rest = []
            for bits in pending:
                unknown = bits & ~known
                if unknown == 0:
                    continue
                if unknown & (unknown - 1) == 0:
                    known |= unknown
                    changed = True
                else:
                    rest.append(bits)
            pending = rest
        missing = inst.demand_masks[i - 1] & ~known
        if missing:
            return Feasibility(False, i, lowest_id(missing))
    return Feasibility(True)


def check_table(inst: Instance, table: MessageTable) -> None:
    """Raise CapmError unless every bit sits in exactly one component and demands are routed."""
    seen = 0
    for msg in table.messages:
        for c in msg.components:
            if not c.bits:
                raise CapmError("empty component")
            if c.bits & seen:
                raise CapmError("bit covered twice")
            seen |= c.bits
            if c.need & ~msg.subset:
                raise CapmError(f"component demanded outside U{fmt_subset(msg.subset)}")
            if c.need & c.has:
                raise CapmError("component both held and demanded by one decoder")
    if seen != inst.all_bits:
        raise CapmError("table does not cover every source bit")
