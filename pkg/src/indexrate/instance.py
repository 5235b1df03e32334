"""Groupcast index-coding instances: parsing, normalization, decomposition.

An instance has ``m`` decoders and an ordered list of source bits. Every bit
carries the set of decoders that hold it as side information (``has``) and the
set of decoders that demand it (``need``). Decoder sets are int bitmasks; the
list order of bits is the canonical order used by every tie-break downstream.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from graphlib import CycleError, TopologicalSorter

from ._bits import full_mask, ids_to_mask, iter_ids, mask_to_ids

MAX_DECODERS = 16
MAX_BITS = 4096


class InstanceError(ValueError):
    """Raised for instances that violate a structural invariant."""


class ParseError(InstanceError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class BitSpec:
    label: str
    need: int
    has: int


@dataclass(frozen=True)
class Instance:
    """Immutable instance; decoder and bit indices exposed to callers are 1-based."""

    m: int
    bits: tuple[BitSpec, ...]
    max_decoders: int = field(default=MAX_DECODERS, compare=False, repr=False)
    max_bits: int = field(default=MAX_BITS, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.bits, tuple):
            object.__setattr__(self, "bits", tuple(self.bits))
        if self.m < 1:
            raise InstanceError("an instance needs at least one decoder")
        if self.m > self.max_decoders:
            raise InstanceError(f"m={self.m} exceeds the decoder cap {self.max_decoders}")
        if len(self.bits) > self.max_bits:
            raise InstanceError(f"s={len(self.bits)} exceeds the bit cap {self.max_bits}")
        everyone = full_mask(self.m)
        seen = set()
        for k, b in enumerate(self.bits, start=1):
            if b.label in seen:
                raise InstanceError(f"duplicate bit label {b.label!r}")
            seen.add(b.label)
            if (b.need | b.has) & ~everyone:
                raise InstanceError(f"bit {b.label!r} names a decoder outside 1..{self.m}")
            if b.need & b.has:
                raise InstanceError(
                    f"bit {b.label!r}: decoders {list(mask_to_ids(b.need & b.has))} both hold and demand it"
                )

    @property
    def s(self) -> int:
        return len(self.bits)

    @cached_property
    def everyone(self) -> int:
        return full_mask(self.m)

    @cached_property
    def all_bits(self) -> int:
        return full_mask(self.s)

    @cached_property
    def side_masks(self) -> tuple[int, ...]:
        """``side_masks[i - 1]`` is the bit mask of Y_i."""
        ys = [0] * self.m
        for k, b in enumerate(self.bits):
            for i in iter_ids(b.has):
                ys[i - 1] |= 1 << k
        return tuple(ys)

    @cached_property
    def demand_masks(self) -> tuple[int, ...]:
        fs = [0] * self.m
        for k, b in enumerate(self.bits):
            for i in iter_ids(b.need):
                fs[i - 1] |= 1 << k
        return tuple(fs)

    def labels(self, mask: int) -> list[str]:
        return [self.bits[k - 1].label for k in iter_ids(mask)]

    def _check_decoder(self, i: int) -> None:
        if not 1 <= i <= self.m:
            raise IndexError(f"decoder {i} out of range 1..{self.m}")


@dataclass(frozen=True)
class Classification:
    is_dag: bool
    is_directed_cycle: bool
    is_gm2_form: bool
    is_unicast: bool


# --------------------------------------------------------------------------
# file format
# --------------------------------------------------------------------------

_TOKEN = re.compile(r"\S+")


def _tokens(line: str) -> list[tuple[str, int]]:
    line = line.split("#", 1)[0]
    return [(mo.group(0), mo.start() + 1) for mo in _TOKEN.finditer(line)]


def _decoder_index(tok: str, col: int, lineno: int, m: int) -> int:
    try:
        i = int(tok)
    except ValueError:
        raise ParseError(f"expected a decoder index, got {tok!r}", lineno, col) from None
    if not 1 <= i <= m:
        raise ParseError(f"decoder index {i} out of range 1..{m}", lineno, col)
    return i


def parse_instance(text: str, max_decoders: int = MAX_DECODERS, max_bits: int = MAX_BITS) -> Instance:
    """Parse the line-oriented instance format.

    ::

        decoders 3
        bit a need 1 has 2 3   # comment
        bit b need 2 3 has
    """
    m = None
    bits: list[BitSpec] = []
    labels: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokens(raw)
        if not toks:
            continue
        head, col = toks[0]
        if m is None:
            if head != "decoders" or len(toks) != 2:
                raise ParseError("expected 'decoders <m>' as the first statement", lineno, col)
            try:
                m = int(toks[1][0])
            except ValueError:
                raise ParseError(f"bad decoder count {toks[1][0]!r}", lineno, toks[1][1]) from None
            if not 1 <= m <= max_decoders:
                raise ParseError(f"decoder count {m} outside 1..{max_decoders}", lineno, toks[1][1])
            continue
        if head != "bit":
            raise ParseError(f"unknown statement {head!r}", lineno, col)
        if len(toks) < 4 or toks[2][0] != "need":
            raise ParseError("expected 'bit <label> need <i...> has <j...>'", lineno, col)
        label = toks[1][0]
        if label in ("need", "has"):
            raise ParseError("missing bit label", lineno, toks[1][1])
        if label in labels:
            raise ParseError(f"duplicate bit label {label!r} (first on line {labels[label]})", lineno, toks[1][1])
        rest = toks[3:]
        try:
            split = [t for t, _ in rest].index("has")
        except ValueError:
            raise ParseError("missing 'has' keyword", lineno, len(raw) + 1) from None
        need = [_decoder_index(t, c, lineno, m) for t, c in rest[:split]]
        has = [_decoder_index(t, c, lineno, m) for t, c in rest[split + 1 :]]
        clash = set(need) & set(has)
        if clash:
            raise ParseError(
                f"bit {label!r}: decoder(s) {sorted(clash)} both hold and demand it", lineno, col
            )
        labels[label] = lineno
        bits.append(BitSpec(label, ids_to_mask(need), ids_to_mask(has)))
        if len(bits) > max_bits:
            raise ParseError(f"more than {max_bits} bits", lineno, col)
    if m is None:
        raise ParseError("empty instance: missing 'decoders <m>'", 1)
    return Instance(m, tuple(bits), max_decoders=max_decoders, max_bits=max_bits)


def render_instance(inst: Instance) -> str:
    lines = [f"decoders {inst.m}"]
    for b in inst.bits:
        need = " ".join(str(i) for i in iter_ids(b.need))
        has = " ".join(str(i) for i in iter_ids(b.has))
        line = f"bit {b.label} need"
        if need:
            line += " " + need
        line += " has"
        if has:
            line += " " + has
        lines.append(line)
    return "\n".join(lines) + "\n"


def instance_to_dict(inst: Instance) -> dict:
    return {
        "decoders": inst.m,
        "bits": [
            {"label": b.label, "need": list(mask_to_ids(b.need)), "has": list(mask_to_ids(b.has))}
            for b in inst.bits
        ],
    }


def instance_from_dict(data: dict) -> Instance:
    bits = tuple(
        BitSpec(str(b["label"]), ids_to_mask(b["need"]), ids_to_mask(b["has"])) for b in data["bits"]
    )
    return Instance(int(data["decoders"]), bits)


def instance_to_json(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), sort_keys=True)


def make_instance(m: int, specs, labels=None) -> Instance:
    """Build an instance from ``(need_ids, has_ids)`` pairs; labels default to b1, b2, ..."""
    specs = list(specs)
    if labels is None:
        labels = [f"b{k}" for k in range(1, len(specs) + 1)]
    return Instance(
        m, tuple(BitSpec(lab, ids_to_mask(need), ids_to_mask(has)) for lab, (need, has) in zip(labels, specs))
    )


# --------------------------------------------------------------------------
# normalization
# --------------------------------------------------------------------------


def _compact(mask: int, mapping: dict[int, int]) -> int:
    out = 0
    for i in iter_ids(mask):
        out |= 1 << (mapping[i] - 1)
    return out


def normalize(inst: Instance, merge: bool = True) -> tuple[Instance, list[str]]:
    """Drop undemanded bits and merge decoders with identical side information.

    Merged decoders keep the position of the lowest index in their group and
    demand the union of the group's demands; indices are then compacted.
    """
    warnings: list[str] = []
    kept = []
    for b in inst.bits:
        if b.need:
            kept.append(b)
        else:
            warnings.append(f"purged undemanded bit {b.label}")
    if not merge:
        return Instance(inst.m, tuple(kept), inst.max_decoders, inst.max_bits), warnings

    side = [0] * inst.m
    for k, b in enumerate(kept):
        for i in iter_ids(b.has):
            side[i - 1] |= 1 << k
    leader: dict[int, int] = {}
    group_of = {}
    for i in range(1, inst.m + 1):
        y = side[i - 1]
        if y in leader:
            group_of[i] = leader[y]
            warnings.append(f"merged decoder {i} into decoder {leader[y]} (identical side information)")
        else:
            leader[y] = i
            group_of[i] = i
    leaders = sorted(set(group_of.values()))
    if len(leaders) == inst.m:
        return Instance(inst.m, tuple(kept), inst.max_decoders, inst.max_bits), warnings
    new_index = {old: new for new, old in enumerate(leaders, start=1)}
    mapping = {i: new_index[group_of[i]] for i in range(1, inst.m + 1)}
    bits = tuple(BitSpec(b.label, _compact(b.need, mapping), _compact(b.has, mapping)) for b in kept)
    return Instance(len(leaders), bits, inst.max_decoders, inst.max_bits), warnings


# --------------------------------------------------------------------------
# queries
# --------------------------------------------------------------------------


def side_info(inst: Instance, i: int) -> frozenset[int]:
    inst._check_decoder(i)
    return frozenset(iter_ids(inst.side_masks[i - 1]))


def demand(inst: Instance, i: int) -> frozenset[int]:
    inst._check_decoder(i)
    return frozenset(iter_ids(inst.demand_masks[i - 1]))


def group_by_absence(inst: Instance) -> dict[frozenset[int], frozenset[int]]:
    """Map each absence set J (decoders lacking the bit) to the bits missing at exactly J."""
    groups: dict[int, int] = {}
    for k, b in enumerate(inst.bits):
        j = inst.everyone & ~b.has
        groups[j] = groups.get(j, 0) | (1 << k)
    return {frozenset(iter_ids(j)): frozenset(iter_ids(v)) for j, v in sorted(groups.items())}


def cond_count(inst: Instance, bits, i: int) -> int:
    """|bits \\ Y_i|: the conditional entropy of independent uniform bits given Y_i."""
    inst._check_decoder(i)
    mask = bits if isinstance(bits, int) else ids_to_mask(bits)
    return (mask & ~inst.side_masks[i - 1]).bit_count()


def _has_cycle(inst: Instance) -> bool:
    graph: dict[tuple[str, int], set[tuple[str, int]]] = {}
    for i in range(1, inst.m + 1):
        graph[("d", i)] = set()
    for k, b in enumerate(inst.bits, start=1):
        # TopologicalSorter takes predecessor sets: holder -> bit -> demander
        graph[("b", k)] = {("d", i) for i in iter_ids(b.has)}
        for i in iter_ids(b.need):
            graph[("d", i)].add(("b", k))
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError:
        return True
    return False


def _is_unicast(inst: Instance) -> bool:
    if any(b.need.bit_count() != 1 for b in inst.bits):
        return False
    return all(f.bit_count() == 1 for f in inst.demand_masks)


def _is_directed_cycle(inst: Instance) -> bool:
    if inst.m < 2 or inst.s != inst.m or not _is_unicast(inst):
        return False
    if any(y.bit_count() != 1 for y in inst.side_masks):
        return False
    demander = {}
    for k, b in enumerate(inst.bits, start=1):
        demander[k] = b.need.bit_length()
    succ = {i: demander[inst.side_masks[i - 1].bit_length()] for i in range(1, inst.m + 1)}
    seen, cur = set(), 1
    while cur not in seen:
        seen.add(cur)
        cur = succ[cur]
    return cur == 1 and len(seen) == inst.m


def classify(inst: Instance) -> Classification:
    m = inst.m
    gm2 = all(b.has.bit_count() in (0, m, m - 1, m - 2) for b in inst.bits)
    return Classification(
        is_dag=not _has_cycle(inst),
        is_directed_cycle=_is_directed_cycle(inst),
        is_gm2_form=gm2,
        is_unicast=_is_unicast(inst),
    )
