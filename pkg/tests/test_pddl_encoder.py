"""Tests for the PDDL encoding and rendering."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpmn2pddl.bpmn_parser import parse_bpmn
from bpmn2pddl.pddl_encoder import (
    EffAdd,
    EffAnd,
    EffNot,
    EffOneOf,
    EncodeOptions,
    EncodingError,
    DoneMode,
    counter_for,
    emit_domain,
    emit_problems,
    encode_event,
    encode_exclusive,
    encode_inclusive,
    encode_parallel,
    encode_task,
    render_pddl,
    sanitize_id,
)
from bpmn2pddl.process_graph import MessageStrategy, build_graph
from conftest import CORPUS_DIR, fixture

LINEAR = """<?xml version="1.0"?>
<bpmn:definitions xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL" id="D">
  <bpmn:process id="P1" name="Linear">
    <bpmn:startEvent id="S1"/>
    <bpmn:task id="T1" name="work"/>
    <bpmn:endEvent id="E1"/>
    <bpmn:sequenceFlow id="F1" sourceRef="S1" targetRef="T1"/>
    <bpmn:sequenceFlow id="F2" sourceRef="T1" targetRef="E1"/>
  </bpmn:process>
</bpmn:definitions>"""


def _graph(xml: str, strategy=MessageStrategy.IGNORE):
    return build_graph(parse_bpmn(xml), strategy)


def _credit_graph(strategy=MessageStrategy.IGNORE):
    return build_graph(parse_bpmn((CORPUS_DIR / "credit_scoring.bpmn").read_text()), strategy)


class TestSanitizeId:
    def test_task_name_lowercased(self):
        assert sanitize_id("Request credit score", lower=True) == "request_credit_score"

    def test_element_id_keeps_casing(self):
        assert sanitize_id("StartEvent_1els7eb") == "StartEvent_1els7eb"

    def test_leading_digit_and_specials(self):
        assert sanitize_id("7-Ship (fast)", lower=True) == "n7_ship__fast_"

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sanitize_id("")

    @given(st.text(min_size=1, max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_output_is_valid_identifier(self, raw):
        out = sanitize_id(raw)
        assert out
        assert not out[0].isdigit()
        assert all(c.isalnum() or c == "_" for c in out)
        assert sanitize_id(out) == out  # idempotent on sanitized input


class TestTaskEncoding:
    def test_figure_shape_after_start_event(self):
        graph = _credit_graph()
        action = encode_task(graph.nodes["Activity_0rvq1gc"], graph)
        assert action.name == "request_credit_score"
        assert action.precondition == ["StartEvent_1els7eb"]
        assert action.effect == EffAnd(
            [EffAdd("EventBasedGateway_02s95tm"), EffNot("StartEvent_1els7eb")]
        )

    def test_message_ignored_is_plain(self):
        graph = _graph(fixture("msg_task_task.bpmn").read_text(), MessageStrategy.IGNORE)
        action = encode_task(graph.nodes["Task_notify"], graph)
        assert action.effect == EffAnd([EffAdd("End_a"), EffNot("Start_a")])

    def test_message_emulated_is_oneof(self):
        graph = _graph(
            fixture("msg_task_task.bpmn").read_text(), MessageStrategy.EXCLUSIVE_EMULATION
        )
        action = encode_task(graph.nodes["Task_notify"], graph)
        oneof = action.effect.items[0]
        assert isinstance(oneof, EffOneOf)
        assert len(oneof.outcomes) == 2
        assert oneof.outcomes[0] == EffAdd("End_a")
        # the message branch keeps the normal successor and adds the target's entry
        assert oneof.outcomes[1] == EffAnd([EffAdd("End_a"), EffAdd("Task_handle")])

    def test_unnamed_task_uses_id(self):
        xml = LINEAR.replace('name="work"', "")
        graph = _graph(xml)
        action = encode_task(graph.nodes["T1"], graph)
        assert action.name == "t1"


class TestEventEncoding:
    def test_start_event_has_no_action(self):
        graph = _graph(LINEAR)
        assert encode_event(graph.nodes["S1"], graph) is None

    def test_end_event_sets_done(self):
        graph = _graph(LINEAR)
        action = encode_event(graph.nodes["E1"], graph)
        assert action.name == "event_E1"
        assert action.precondition == ["E1"]
        assert action.effect == EffAnd([EffAdd("done"), EffNot("E1")])

    def test_intermediate_event_passes_through(self):
        graph = _credit_graph()
        action = encode_event(graph.nodes["IntermediateCatchEvent_0yg7cuh"], graph)
        assert action.precondition == ["IntermediateCatchEvent_0yg7cuh"]
        assert action.effect == EffAnd(
            [EffAdd("ExclusiveGateway_11dldcm"), EffNot("IntermediateCatchEvent_0yg7cuh")]
        )

    def test_end_event_all_pools_mode(self):
        graph = _graph(LINEAR)
        action = encode_event(graph.nodes["E1"], graph, EncodeOptions(done_mode=DoneMode.ALL_POOLS))
        assert action.effect == EffAnd([EffAdd("pool_done_linear"), EffNot("E1")])


class TestExclusiveEncoding:
    def test_event_based_gateway_oneof(self):
        graph = _credit_graph()
        (action,) = encode_exclusive(graph.nodes["EventBasedGateway_02s95tm"], graph)
        assert action.name == "event_EventBasedGateway_02s95tm"
        assert action.precondition == ["EventBasedGateway_02s95tm"]
        assert action.effect == EffAnd(
            [
                EffOneOf(
                    [
                        EffAdd("IntermediateCatchEvent_0ujob24"),
                        EffAdd("IntermediateCatchEvent_0yg7cuh"),
                    ]
                ),
                EffNot("EventBasedGateway_02s95tm"),
            ]
        )

    def test_single_outgoing_is_plain(self):
        xml = LINEAR.replace(
            '<bpmn:sequenceFlow id="F2" sourceRef="T1" targetRef="E1"/>',
            '<bpmn:exclusiveGateway id="G1"/>'
            '<bpmn:sequenceFlow id="F2" sourceRef="T1" targetRef="G1"/>'
            '<bpmn:sequenceFlow id="F3" sourceRef="G1" targetRef="E1"/>',
        )
        graph = _graph(xml)
        (action,) = encode_exclusive(graph.nodes["G1"], graph)
        assert action.effect == EffAnd([EffAdd("E1"), EffNot("G1")])

    def test_xor_join_one_action_per_branch(self):
        graph = _credit_graph()
        actions = encode_exclusive(graph.nodes["ExclusiveGateway_1lo9p0a"], graph)
        assert [a.name for a in actions] == [
            "event_ExclusiveGateway_1lo9p0a_0",
            "event_ExclusiveGateway_1lo9p0a_1",
        ]
        assert actions[0].precondition == ["arr_ExclusiveGateway_1lo9p0a_0"]
        assert actions[1].precondition == ["arr_ExclusiveGateway_1lo9p0a_1"]
        for action in actions:
            assert EffAdd("Activity_0sd3fg4") in action.effect.items

    def test_mixed_gateway_rejected(self):
        xml = """<?xml version="1.0"?>
<bpmn:definitions xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL" id="D">
  <bpmn:process id="P1">
    <bpmn:startEvent id="S1"/><bpmn:startEvent id="S2"/>
    <bpmn:exclusiveGateway id="G1"/>
    <bpmn:endEvent id="E1"/><bpmn:endEvent id="E2"/>
    <bpmn:sequenceFlow id="F1" sourceRef="S1" targetRef="G1"/>
    <bpmn:sequenceFlow id="F2" sourceRef="S2" targetRef="G1"/>
    <bpmn:sequenceFlow id="F3" sourceRef="G1" targetRef="E1"/>
    <bpmn:sequenceFlow id="F4" sourceRef="G1" targetRef="E2"/>
  </bpmn:process>
</bpmn:definitions>"""
        graph = _graph(xml)
        with pytest.raises(EncodingError):
            encode_exclusive(graph.nodes["G1"], graph)


class TestParallelEncoding:
    def test_split_activates_all_branches(self):
        graph = _graph(fixture("xor_and_deadlock.bpmn").read_text())
        # reuse the AND-join fixture's parallel join; build a split from dispatch
        dispatch = _graph((CORPUS_DIR / "dispatch_of_goods.bpmn").read_text())
        (split,) = encode_parallel(dispatch.nodes["ParallelGateway_0prep"], dispatch)
        adds = [i for i in split.effect.items if isinstance(i, EffAdd)]
        assert {a.pred for a in adds} == {"Activity_0pack", "Activity_0label", "Activity_0insure"}
        assert EffNot("ParallelGateway_0prep") in split.effect.items

    def test_join_requires_every_marker(self):
        graph = _graph((CORPUS_DIR / "dispatch_of_goods.bpmn").read_text())
        (join,) = encode_parallel(graph.nodes["ParallelGateway_0ready"], graph)
        assert join.precondition == [
            "arr_ParallelGateway_0ready_0",
            "arr_ParallelGateway_0ready_1",
            "arr_ParallelGateway_0ready_2",
        ]
        dels = {i.pred for i in join.effect.items if isinstance(i, EffNot)}
        assert dels == set(join.precondition)

    def test_single_branch_split_is_pass_through(self):
        xml = LINEAR.replace(
            '<bpmn:sequenceFlow id="F2" sourceRef="T1" targetRef="E1"/>',
            '<bpmn:parallelGateway id="G1"/>'
            '<bpmn:sequenceFlow id="F2" sourceRef="T1" targetRef="G1"/>'
            '<bpmn:sequenceFlow id="F3" sourceRef="G1" targetRef="E1"/>',
        )
        graph = _graph(xml)
        (action,) = encode_parallel(graph.nodes["G1"], graph)
        assert action.effect == EffAnd([EffAdd("E1"), EffNot("G1")])


class TestInclusiveEncoding:
    def test_split_enumerates_nonempty_subsets(self):
        graph = _graph(fixture("inclusive_pair.bpmn").read_text())
        (action,) = encode_inclusive(graph.nodes["Split_1"], graph)
        # the split follows the start event directly, so it consumes the start marker
        assert action.precondition == ["Start_1", "count_Split_1_0"]
        oneof = action.effect.items[0]
        assert isinstance(oneof, EffOneOf)
        assert oneof.outcomes == [
            EffAnd([EffAdd("Task_a"), EffAdd("count_Split_1_1")]),
            EffAnd([EffAdd("Task_b"), EffAdd("count_Split_1_1")]),
            EffAnd([EffAdd("Task_a"), EffAdd("Task_b"), EffAdd("count_Split_1_2")]),
        ]

    def test_counter_width_matches_branches(self):
        graph = _graph(fixture("inclusive_pair.bpmn").read_text())
        counter = counter_for(graph.nodes["Split_1"], graph)
        assert counter.width == 2
        assert counter.count_preds == ["count_Split_1_0", "count_Split_1_1", "count_Split_1_2"]

    def test_join_decrements_and_releases(self):
        graph = _graph(fixture("inclusive_pair.bpmn").read_text())
        actions = encode_inclusive(graph.nodes["Join_1"], graph)
        # 2 branches x 2 counter levels + release
        assert len(actions) == 5
        release = actions[-1]
        assert release.precondition == ["count_Split_1_0", "Join_1"]
        assert EffAdd("End_1") in release.effect.items
        final_decrement = actions[0]
        assert final_decrement.precondition == ["arr_Join_1_0", "count_Split_1_1"]
        assert EffAdd("Join_1") in final_decrement.effect.items  # join reached on last arrival

    def test_degenerate_single_branch(self):
        xml = LINEAR.replace(
            '<bpmn:sequenceFlow id="F2" sourceRef="T1" targetRef="E1"/>',
            '<bpmn:inclusiveGateway id="G1"/>'
            '<bpmn:sequenceFlow id="F2" sourceRef="T1" targetRef="G1"/>'
            '<bpmn:sequenceFlow id="F3" sourceRef="G1" targetRef="E1"/>',
        )
        graph = _graph(xml)
        (action,) = encode_inclusive(graph.nodes["G1"], graph)
        assert action.effect == EffAnd(
            [EffAdd("E1"), EffAdd("count_G1_1"), EffNot("G1"), EffNot("count_G1_0")]
        )

    def test_branch_limit_enforced(self):
        flows = "".join(
            f'<bpmn:task id="B{i}"/>'
            f'<bpmn:sequenceFlow id="FB{i}" sourceRef="G1" targetRef="B{i}"/>'
            f'<bpmn:endEvent id="EB{i}"/>'
            f'<bpmn:sequenceFlow id="FE{i}" sourceRef="B{i}" targetRef="EB{i}"/>'
            for i in range(7)
        )
        xml = LINEAR.replace(
            '<bpmn:sequenceFlow id="F2" sourceRef="T1" targetRef="E1"/>',
            '<bpmn:inclusiveGateway id="G1"/>'
            '<bpmn:sequenceFlow id="F2" sourceRef="T1" targetRef="G1"/>'
            f'<bpmn:sequenceFlow id="F3" sourceRef="G1" targetRef="E1"/>{flows}',
        )
        graph = _graph(xml)
        with pytest.raises(EncodingError):
            emit_domain(graph)

    def test_join_without_split_rejected(self):
        xml = """<?xml version="1.0"?>
<bpmn:definitions xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL" id="D">
  <bpmn:process id="P1">
    <bpmn:startEvent id="S1"/><bpmn:startEvent id="S2"/>
    <bpmn:inclusiveGateway id="J1"/>
    <bpmn:endEvent id="E1"/>
    <bpmn:sequenceFlow id="F1" sourceRef="S1" targetRef="J1"/>
    <bpmn:sequenceFlow id="F2" sourceRef="S2" targetRef="J1"/>
    <bpmn:sequenceFlow id="F3" sourceRef="J1" targetRef="E1"/>
  </bpmn:process>
</bpmn:definitions>"""
        graph = _graph(xml)
        with pytest.raises(EncodingError):
            emit_domain(graph)


class TestDomainAssembly:
    def test_linear_counts(self):
        graph = _graph(LINEAR)
        domain = emit_domain(graph)
        assert len(domain.actions) == 2  # task + end event
        assert len(domain.predicates) == 4  # 3 nodes + done
        assert domain.predicates == ["S1", "T1", "E1", "done"]

    def test_requirements_default_and_compat(self):
        graph = _graph(LINEAR)
        assert emit_domain(graph).requirements == [":strips", ":typing", ":non-deterministic"]
        compat = emit_domain(graph, EncodeOptions(fig4_compat=True))
        assert compat.requirements == [":strips", ":typing"]
        assert compat.types == ["task", "event", "gateway"]

    def test_every_referenced_predicate_declared(self):
        for name in ("credit_scoring.bpmn", "place_order.bpmn", "dispatch_of_goods.bpmn"):
            graph = _credit_graph() if name == "credit_scoring.bpmn" else _graph(
                (CORPUS_DIR / name).read_text()
            )
            domain = emit_domain(graph)
            declared = set(domain.predicates)
            for action in domain.actions:
                assert set(action.precondition) <= declared
                assert _preds_of(action.effect) <= declared

    def test_predicate_count_without_joins_or_messages(self):
        # spec formula applies verbatim when no converging gateways / synthetics exist
        graph = _graph((CORPUS_DIR / "order_pizza_2.bpmn").read_text())
        domain = emit_domain(graph)
        assert len(domain.predicates) == len(graph.nodes) + 1

    def test_inclusive_adds_width_plus_one(self):
        graph = _graph(fixture("inclusive_pair.bpmn").read_text())
        domain = emit_domain(graph)
        count_preds = [p for p in domain.predicates if p.startswith("count_")]
        assert len(count_preds) == 3

    def test_bootstrap_actions_only_with_flag(self):
        graph = _graph(LINEAR)
        assert not any(a.name.startswith("start_") for a in emit_domain(graph).actions)
        domain = emit_domain(graph, EncodeOptions(allow_spontaneous_start=True))
        boot = [a for a in domain.actions if a.name == "start_S1"]
        assert len(boot) == 1
        assert boot[0].precondition == []

    def test_all_pools_mode_adds_finisher(self):
        graph = _credit_graph()
        domain = emit_domain(graph, EncodeOptions(done_mode=DoneMode.ALL_POOLS))
        finisher = domain.actions[-1]
        assert finisher.name == "finish_process"
        assert finisher.precondition == [
            "pool_done_frontend",
            "pool_done_scoring",
            "pool_done_external",
        ]
        assert finisher.effect == EffAnd([EffAdd("done")])


class TestProblems:
    def test_three_pool_variants(self):
        graph = _credit_graph()
        problems = emit_problems(graph)
        assert [p.variant for p in problems] == [
            "all_starts",
            "prestarted_frontend",
            "prestarted_scoring",
            "prestarted_external",
        ]
        for p in problems:
            assert p.goal == ["done"]
            assert p.domain_name == "credit_scoring"

    def test_single_pool_deduplicates(self):
        graph = _graph(LINEAR)
        problems = emit_problems(graph)
        assert [p.variant for p in problems] == ["all_starts"]
        assert problems[0].init == ["S1"]

    def test_counters_always_in_init(self):
        graph = _graph(fixture("inclusive_pair.bpmn").read_text())
        for p in emit_problems(graph):
            assert "count_Split_1_0" in p.init

    def test_empty_variant_behind_flag(self):
        graph = _graph(LINEAR)
        problems = emit_problems(graph, EncodeOptions(allow_spontaneous_start=True))
        assert problems[0].variant == "empty"
        assert problems[0].init == []

    def test_message_sent_by_start_event_is_available_in_init(self):
        xml = fixture("msg_task_event.bpmn").read_text().replace(
            'sourceRef="Task_send" targetRef="Catch_notice"',
            'sourceRef="Start_a" targetRef="Catch_notice"',
        )
        graph = _graph(xml)
        problems = {p.variant: p for p in emit_problems(graph)}
        marker = "msg_Start_a_to_Catch_notice"
        assert marker in problems["all_starts"].init
        assert marker in problems["prestarted_sender"].init
        assert marker not in problems["prestarted_receiver"].init


class TestRendering:
    def test_byte_identical_across_runs(self):
        graph1 = _credit_graph()
        graph2 = _credit_graph()
        assert render_pddl(emit_domain(graph1)) == render_pddl(emit_domain(graph2))

    def test_oneof_rendered_inside_effect_conjunction(self):
        graph = _credit_graph()
        text = render_pddl(emit_domain(graph))
        assert "(oneof" in text
        assert text.count("(") == text.count(")")

    def test_problem_rendering(self):
        graph = _graph(LINEAR)
        (problem,) = emit_problems(graph)
        text = render_pddl(problem)
        assert "(define (problem linear_all_starts)" in text
        assert "(:domain linear)" in text
        assert "(:init (S1))" in text
        assert "(:goal (and (done)))" in text

    def test_lf_line_endings(self):
        graph = _graph(LINEAR)
        text = render_pddl(emit_domain(graph))
        assert "\r" not in text
        assert text.endswith("\n")


def _preds_of(tree) -> set[str]:
    if isinstance(tree, EffAdd):
        return {tree.pred}
    if isinstance(tree, EffNot):
        return {tree.pred}
    if isinstance(tree, EffAnd):
        out = set()
        for i in tree.items:
            out |= _preds_of(i)
        return out
    out = set()
    for o in tree.outcomes:
        out |= _preds_of(o)
    return out
