"""Helpers for int-bitmask sets.

Decoder ``i`` (1-based) lives at bit ``i - 1`` of a decoder mask; source bit
``k`` (1-based) lives at bit ``k - 1`` of a bit mask.
"""

from __future__ import annotations

from typing import Iterable, Iterator


def ids_to_mask(ids: Iterable[int]) -> int:
    mask = 0
    for i in ids:
        mask |= 1 << (i - 1)
    return mask


def iter_ids(mask: int) -> Iterator[int]:
    """Yield the 1-based members of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length()
        mask ^= low


def mask_to_ids(mask: int) -> tuple[int, ...]:
    return tuple(iter_ids(mask))


def lowest_id(mask: int) -> int:
    return (mask & -mask).bit_length()


def full_mask(n: int) -> int:
    return (1 << n) - 1


def fmt_subset(mask: int) -> str:
    return "{" + ",".join(str(i) for i in iter_ids(mask)) + "}"


def parse_subset(text: str) -> int:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ValueError(f"not a subset literal: {text!r}")
    body = text[1:-1].strip()
    if not body:
        return 0
    return ids_to_mask(int(tok) for tok in body.split(","))
