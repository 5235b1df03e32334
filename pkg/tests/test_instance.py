import json

import pytest
from hypothesis import given

from conftest import instances
from indexrate.generators import directed_cycle, load_fixture, random_dag
from indexrate.instance import (
    BitSpec,
    Instance,
    InstanceError,
    ParseError,
    classify,
    cond_count,
    demand,
    group_by_absence,
    instance_from_dict,
    instance_to_dict,
    instance_to_json,
    make_instance,
    normalize,
    parse_instance,
    render_instance,
    side_info,
)


def test_smallest_instance():
    inst = parse_instance("decoders 1\nbit a need 1 has\n")
    assert inst.m == 1 and inst.s == 1
    assert inst.bits[0] == BitSpec("a", 0b1, 0)


def test_example1_parses(example1):
    assert (example1.m, example1.s) == (4, 6)
    assert [b.label for b in example1.bits] == ["b1", "b2", "b3", "b4", "b5", "b6"]


def test_comments_and_blank_lines_ignored():
    text = "# header\n\ndecoders 2  # two\nbit x need 1 has 2   # tail\n\n"
    inst = parse_instance(text)
    assert inst.s == 1 and inst.bits[0].has == 0b10


def test_has_and_need_overlap_rejected():
    with pytest.raises(InstanceError, match="both hold and demand"):
        parse_instance("decoders 2\nbit a need 1 has 1\n")


@pytest.mark.parametrize(
    "text, line",
    [
        ("bit a need 1 has\n", 1),
        ("decoders 2\nbit a need 1 hax 2\n", 2),
        ("decoders 2\nbit a need 3 has\n", 2),
        ("decoders two\n", 1),
        ("decoders 2\nbit a need 1 has\nbit a need 2 has\n", 3),
        ("decoders 2\nbits a need 1 has\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_instance(text)
    assert info.value.line == line


def test_decoder_cap_enforced():
    with pytest.raises(ParseError, match="outside 1..4"):
        parse_instance("decoders 5\n", max_decoders=4)


def test_bit_cap_enforced():
    text = "decoders 1\n" + "".join(f"bit b{k} need 1 has\n" for k in range(3))
    with pytest.raises(ParseError, match="more than 2 bits"):
        parse_instance(text, max_bits=2)


@given(instances(max_m=6, max_s=8))
def test_render_parse_round_trip(inst):
    assert parse_instance(render_instance(inst)) == inst


@given(instances(max_m=6, max_s=8))
def test_json_round_trip(inst):
    assert instance_from_dict(json.loads(instance_to_json(inst))) == inst
    assert instance_from_dict(instance_to_dict(inst)) == inst


def test_make_instance_uses_one_based_ids():
    inst = make_instance(3, [({1, 2}, {3}), ({3}, set())], labels=["p", "q"])
    assert inst.bits[0] == BitSpec("p", 0b011, 0b100)
    assert inst.bits[1] == BitSpec("q", 0b100, 0)


class TestNormalize:
    def test_undemanded_bit_purged(self):
        inst = make_instance(2, [(set(), {1}), ({2}, {1})])
        out, warnings = normalize(inst)
        assert out.s == 1 and out.bits[0].label == "b2"
        assert warnings == ["purged undemanded bit b1"]

    def test_identical_side_information_merged(self):
        # decoders 2 and 3 both hold exactly bit b1
        inst = make_instance(3, [({1}, {2, 3}), ({2}, set()), ({3}, set())])
        out, warnings = normalize(inst)
        assert out.m == 2
        assert demand(out, 2) == {2, 3}
        assert side_info(out, 2) == {1}
        assert warnings == ["merged decoder 3 into decoder 2 (identical side information)"]

    def test_indices_compacted_in_order(self):
        inst = make_instance(4, [({1}, {2, 4}), ({4}, {1}), ({2}, set()), ({3}, {1})])
        out, _ = normalize(inst)
        # decoders 2 and 4 share Y = {b1}; 2 survives, 3 becomes 3
        assert out.m == 3
        assert [out.bits[k].need for k in range(4)] == [0b001, 0b010, 0b010, 0b100]

    def test_example1_unchanged(self, example1):
        out, warnings = normalize(example1)
        assert out == example1 and warnings == []

    def test_merge_can_be_disabled(self):
        inst = make_instance(2, [({1}, set()), ({2}, set())])
        out, warnings = normalize(inst, merge=False)
        assert out == inst and warnings == []


def test_side_info_and_demand_queries(example1):
    assert side_info(example1, 2) == {1, 2, 3, 4}
    assert side_info(example1, 4) == frozenset()
    assert demand(example1, 1) == {1, 4}
    assert demand(example1, 4) == {5}
    with pytest.raises(IndexError):
        side_info(example1, 5)


def test_single_decoder_demanding_everything():
    inst = make_instance(1, [({1}, set())] * 3)
    assert demand(inst, 1) == {1, 2, 3}


def test_group_by_absence_example1(example1):
    groups = group_by_absence(example1)
    assert groups == {
        frozenset({1, 3, 4}): frozenset({1, 2}),
        frozenset({3, 4}): frozenset({3}),
        frozenset({1, 4}): frozenset({4}),
        frozenset({1, 2, 3, 4}): frozenset({5, 6}),
    }


def test_group_by_absence_degenerate_cases():
    inst = make_instance(3, [({1}, set()), ({2}, set())])
    assert list(group_by_absence(inst)) == [frozenset({1, 2, 3})]
    assert group_by_absence(Instance(2, ())) == {}


@given(instances())
def test_group_by_absence_partitions_bits(inst):
    groups = group_by_absence(inst)
    seen = [k for v in groups.values() for k in v]
    assert sorted(seen) == list(range(1, inst.s + 1))
    for absent, ks in groups.items():
        for k in ks:
            assert {d for d in range(1, inst.m + 1) if not inst.bits[k - 1].has >> (d - 1) & 1} == absent


def test_cond_count(example1):
    assert cond_count(example1, {1, 4}, 1) == 2
    for i in range(1, 5):
        assert cond_count(example1, set(), i) == 0
        assert cond_count(example1, side_info(example1, i), i) == 0


class TestClassify:
    def test_directed_cycle(self):
        c = classify(load_fixture("directed_cycle4"))
        assert c.is_directed_cycle and not c.is_dag and c.is_unicast

    def test_generated_cycle_matches_fixture(self):
        assert directed_cycle(4) == load_fixture("directed_cycle4")

    def test_chain_is_dag(self):
        inst = make_instance(3, [({1}, set()), ({2}, {1}), ({3}, {1, 2})])
        c = classify(inst)
        assert c.is_dag and not c.is_directed_cycle

    def test_example1(self, example1):
        c = classify(example1)
        assert not c.is_gm2_form and not c.is_dag and not c.is_unicast

    def test_two_disjoint_cycles_are_not_one_cycle(self):
        inst = make_instance(4, [({1}, {2}), ({2}, {1}), ({3}, {4}), ({4}, {3})])
        assert not classify(inst).is_directed_cycle

    def test_random_dags_classified_acyclic(self):
        for seed in range(30):
            assert classify(random_dag(5, 8, seed)).is_dag

    def test_gm2_form_counts_holders(self):
        inst = make_instance(4, [({1}, {2, 3, 4}), ({1, 2}, {3, 4}), ({4}, set())])
        assert classify(inst).is_gm2_form
        inst = make_instance(4, [({1}, {2})])
        assert not classify(inst).is_gm2_form
