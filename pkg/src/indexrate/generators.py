"""Deterministic instance builders for tests and the ``generate`` subcommand."""

from __future__ import annotations

import random
from importlib import resources
from math import comb
from itertools import combinations

from ._bits import ids_to_mask
from .instance import BitSpec, Instance, parse_instance


def _random_subset(rng: random.Random, pool: list[int], nonempty: bool = False) -> int:
    while True:
        mask = ids_to_mask(d for d in pool if rng.random() < 0.5)
        if mask or not nonempty or not pool:
            return mask


def directed_cycle(m: int) -> Instance:
    """Decoder k demands bit k and holds bit k+1 (decoder m holds bit 1)."""
    if m < 2:
        raise ValueError("a directed cycle needs m >= 2")
    bits = [BitSpec(f"b{k}", 1 << (k - 1), 1 << ((k - 2) % m)) for k in range(1, m + 1)]
    return Instance(m, tuple(bits))


def undirected_cycle(m: int) -> Instance:
    """Decoder k demands bit k and holds both neighbouring bits."""
    if m < 3:
        raise ValueError("an undirected cycle needs m >= 3")
    bits = []
    for k in range(1, m + 1):
        left, right = (k - 2) % m + 1, k % m + 1
        bits.append(BitSpec(f"b{k}", 1 << (k - 1), ids_to_mask((left, right))))
    return Instance(m, tuple(bits))


def random_dag(m: int, s: int, seed: int) -> Instance:
    """Acyclic by construction: holders of a bit always rank above its demanders."""
    if m < 1 or s < 0:
        raise ValueError("need m >= 1 and s >= 0")
    rng = random.Random(seed)
    rank = list(range(1, m + 1))
    rng.shuffle(rank)
    bits = []
    for k in range(1, s + 1):
        cut = rng.randint(1, m)
        lower, upper = rank[:cut], rank[cut:]
        need = ids_to_mask([rng.choice(lower)]) | _random_subset(rng, lower)
        has = _random_subset(rng, upper)
        bits.append(BitSpec(f"b{k}", need, has))
    return Instance(m, tuple(bits))


def random_gm2(m: int, s: int, seed: int) -> Instance:
    """Every bit held by nobody, by all but one, or by all but two decoders."""
    if m < 2:
        raise ValueError("need m >= 2")
    rng = random.Random(seed)
    everyone = list(range(1, m + 1))
    bits = []
    for k in range(1, s + 1):
        kind = rng.choice((0, 1, 2) if m >= 3 else (0, 1))
        if kind == 0:
            missing = everyone
        else:
            missing = rng.sample(everyone, kind)
        has = ids_to_mask(d for d in everyone if d not in missing)
        need = _random_subset(rng, sorted(missing), nonempty=True)
        bits.append(BitSpec(f"b{k}", need, has))
    return Instance(m, tuple(bits))


def random_instance(m: int, s: int, seed: int, p_has: float = 0.4) -> Instance:
    """Unstructured groupcast instance: random holders, random nonempty demanders."""
    if m < 1:
        raise ValueError("need m >= 1")
    rng = random.Random(seed)
    everyone = list(range(1, m + 1))
    bits = []
    for k in range(1, s + 1):
        while True:
            held = [d for d in everyone if rng.random() < p_has]
            rest = [d for d in everyone if d not in held]
            if rest:
                break
        need = _random_subset(rng, rest, nonempty=True)
        bits.append(BitSpec(f"b{k}", need, ids_to_mask(held)))
    return Instance(m, tuple(bits))


def coded_caching_delivery(users: int, cached: int) -> Instance:
    """Delivery-phase instance of centralized coded caching with distinct demands.

    Each file splits into one subfile per ``cached``-subset T of users; users in
    T store that subfile of every file. User u wants the subfiles of its own
    file it does not store, each modeled as one bit held exactly by T.
    """
    if not 0 <= cached < users:
        raise ValueError("need 0 <= cached < users")
    bits = []
    for u in range(1, users + 1):
        for T in combinations(range(1, users + 1), cached):
            if u in T:
                continue
            label = f"W{u}_" + ("".join(map(str, T)) or "0")
            bits.append(BitSpec(label, 1 << (u - 1), ids_to_mask(T)))
    inst = Instance(users, tuple(bits))
    assert inst.s == users * comb(users - 1, cached)
    return inst


GENERATORS = {
    "cycle": lambda m, s, seed: directed_cycle(m),
    "dag": random_dag,
    "gm2": random_gm2,
    "random": random_instance,
}


# fixtures shipped with the package, with expected values used by ``check --paper-suite``
SUITE = {
    "capm_example1": {"lower": 5, "capm": 5, "capm_after_step2": 6, "scapm": "5", "certified": True},
    "capm_example2": {"capm": 5},
    "capm_example2_swapped": {"capm": 6},
    "capm_example3": {"capm": 5},
    "fractional_four_user": {"lower": 10, "capm": 11, "scapm": "21/2", "t": 2, "certified": False},
    "five_cycle": {"lower": 2, "scapm": "5/2", "t": 2, "oracle": 3},
    "directed_cycle4": {"lower": 3, "capm": 3, "oracle": 3, "certified": True},
}

SUITE_NOTES = {
    "fractional_four_user": "known optimum 21/2 via an LP lower bound that this tool does not compute",
    "five_cycle": "known optimum 5/2; the best binary scalar-linear code needs 3",
}


def fixture_text(name: str) -> str:
    return resources.files("indexrate").joinpath("data", f"{name}.ic").read_text(encoding="utf-8")


def load_fixture(name: str) -> Instance:
    return parse_instance(fixture_text(name))


def match_fixture(inst: Instance) -> str | None:
    """Name of the bundled fixture whose normalized form renders identically, if any."""
    from .instance import normalize, render_instance

    text = render_instance(inst)
    for name in SUITE:
        if render_instance(normalize(load_fixture(name))[0]) == text:
            return name
    return None
