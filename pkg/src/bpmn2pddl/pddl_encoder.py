"""Translate a process graph into a nondeterministic PDDL domain and problems.

Encoding summary: every flow node owns a boolean predicate; control is a
set of marker predicates that actions move around. A start event's marker
is consumed directly by its successor (start events emit no action).
Exclusive and event-based splits branch with ``oneof``; parallel splits
activate every branch; inclusive splits choose a non-empty branch subset
and track how many branches are still active with a one-hot counter
family ``count_<g>_0..n`` that the matching join drains back to zero
before releasing. Converging gateways wait on one arrival predicate per
incoming flow; message interactions synthesized into the graph carry
``msg_*`` predicates from sender to receiver.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

from .bpmn_parser import FlowNode, NodeKind
from .process_graph import MessageStrategy, ProcessGraph


class EncodingError(Exception):
    pass


class DoneMode(Enum):
    ANY_END = "any"
    ALL_POOLS = "all"


@dataclass
class EncodeOptions:
    fig4_compat: bool = False
    done_mode: DoneMode = DoneMode.ANY_END
    allow_spontaneous_start: bool = False
    max_inclusive_branches: int = 6


# ---------------------------------------------------------------------------
# PDDL abstract syntax


@dataclass
class EffAdd:
    pred: str


@dataclass
class EffNot:
    pred: str


@dataclass
class EffAnd:
    items: list[EffAdd | EffNot | EffAnd | EffOneOf]


@dataclass
class EffOneOf:
    outcomes: list[EffAdd | EffNot | EffAnd]


EffectTree = EffAdd | EffNot | EffAnd | EffOneOf


@dataclass
class PddlAction:
    name: str
    precondition: list[str]  # conjunction of positive literals
    effect: EffAnd


@dataclass
class PddlDomain:
    name: str
    requirements: list[str]
    types: list[str]
    predicates: list[str]
    actions: list[PddlAction]


@dataclass
class PddlProblem:
    name: str
    domain_name: str
    init: list[str]
    goal: list[str]
    variant: str = ""


@dataclass
class CounterEncoding:
    gateway: str
    width: int
    count_preds: list[str]  # count_<g>_0 .. count_<g>_width


# ---------------------------------------------------------------------------
# Identifier handling

_INVALID_CHARS = re.compile(r"[^A-Za-z0-9_]")


def sanitize_id(raw: str, *, lower: bool = False) -> str:
    """Turn arbitrary text into a PDDL identifier.

    Characters outside ``[A-Za-z0-9_]`` become ``_``; a leading digit gains
    the prefix ``n``. Task-derived action names are lowercased, element-id
    predicates keep their casing.
    """
    if not raw:
        raise ValueError("cannot sanitize an empty identifier")
    if lower:
        raw = raw.lower()
    out = _INVALID_CHARS.sub("_", raw)
    if out[0].isdigit():
        out = "n" + out
    return out


class _NameAllocator:
    """Deterministic collision resolution: repeated names get _2, _3, ..."""

    def __init__(self) -> None:
        self._taken: set[str] = set()

    def claim(self, name: str) -> str:
        if name not in self._taken:
            self._taken.add(name)
            return name
        k = 2
        while f"{name}_{k}" in self._taken:
            k += 1
        final = f"{name}_{k}"
        self._taken.add(final)
        return final


# ---------------------------------------------------------------------------
# Encoder


class _Encoder:
    """Resolves marker predicates for a graph and encodes its nodes."""

    def __init__(self, graph: ProcessGraph, options: EncodeOptions):
        self.graph = graph
        self.options = options
        self.preds = _NameAllocator()
        self.action_names = _NameAllocator()

        self.done = self.preds.claim("done")
        self.pool_done: dict[str, str] = {}
        if options.done_mode is DoneMode.ALL_POOLS:
            for pool in graph.pools:
                label = sanitize_id(graph.pool_names[pool], lower=True)
                self.pool_done[pool] = self.preds.claim(f"pool_done_{label}")

        self.node_pred: dict[str, str] = {}
        for nid in graph.nodes:
            self.node_pred[nid] = self.preds.claim(sanitize_id(nid))

        self.counters: dict[str, CounterEncoding] = {}
        for nid, node in graph.nodes.items():
            if node.kind is not NodeKind.INCLUSIVE_GATEWAY:
                continue
            if len(graph.incoming[nid]) >= 2:
                continue  # converging side uses the matched split's counter
            width = len(graph.outgoing[nid])
            if width > options.max_inclusive_branches:
                raise EncodingError(
                    f"inclusive gateway {nid!r} has {width} branches; "
                    f"limit is {options.max_inclusive_branches}"
                )
            base = self.node_pred[nid]
            preds = [self.preds.claim(f"count_{base}_{k}") for k in range(width + 1)]
            self.counters[nid] = CounterEncoding(gateway=nid, width=width, count_preds=preds)

        self.arr: dict[tuple[str, int], str] = {}
        for nid, node in graph.nodes.items():
            if not node.kind.is_gateway or len(graph.incoming[nid]) < 2:
                continue
            for i, fid in enumerate(graph.incoming[nid]):
                flow = graph.flows[fid]
                if graph.nodes[flow.source].kind is NodeKind.START_EVENT:
                    continue  # the start predicate itself is the arrival marker
                self.arr[(nid, i)] = self.preds.claim(f"arr_{self.node_pred[nid]}_{i}")

        self.msg: dict[str, str] = {}
        for fid, flow in graph.flows.items():
            if not flow.synthetic:
                continue
            tgt = graph.nodes[flow.target]
            if tgt.kind is NodeKind.START_EVENT:
                continue  # message-start: the start predicate is the marker
            src_p = self.node_pred[flow.source]
            tgt_p = self.node_pred[flow.target]
            self.msg[fid] = self.preds.claim(f"msg_{src_p}_to_{tgt_p}")

        self.join_split = self._match_inclusive_joins()

    # -- marker resolution ---------------------------------------------------

    def marker(self, flow_id: str) -> str:
        """The predicate representing a token on the given flow."""
        flow = self.graph.flows[flow_id]
        src = self.graph.nodes[flow.source]
        tgt = self.graph.nodes[flow.target]
        if tgt.kind is NodeKind.START_EVENT:
            return self.node_pred[flow.target]
        if flow.synthetic:
            return self.msg[flow_id]
        if src.kind is NodeKind.START_EVENT:
            return self.node_pred[flow.source]
        if tgt.kind.is_gateway and len(self.graph.incoming[flow.target]) >= 2:
            idx = self.graph.incoming[flow.target].index(flow_id)
            return self.arr[(flow.target, idx)]
        return self.node_pred[flow.target]

    def entry_markers(self, node_id: str) -> list[str]:
        """Markers a non-gateway node's action consumes, incoming order."""
        return [self.marker(f) for f in self.graph.incoming[node_id]]

    def out_markers(self, node_id: str) -> list[str]:
        """Markers a node's action produces, outgoing order."""
        return [self.marker(f) for f in self.graph.outgoing[node_id]]

    def _match_inclusive_joins(self) -> dict[str, str]:
        splits = [
            nid
            for nid, n in self.graph.nodes.items()
            if n.kind is NodeKind.INCLUSIVE_GATEWAY and len(self.graph.incoming[nid]) < 2
        ]
        mapping: dict[str, str] = {}
        for nid, node in self.graph.nodes.items():
            if node.kind is not NodeKind.INCLUSIVE_GATEWAY or len(self.graph.incoming[nid]) < 2:
                continue
            for split in splits:
                if nid in self._reach(split):
                    mapping[nid] = split
                    break
            else:
                raise EncodingError(
                    f"inclusive join {nid!r} has no matching diverging inclusive gateway"
                )
        return mapping

    def _reach(self, root: str) -> set[str]:
        seen: set[str] = set()
        frontier = [self.graph.flows[f].target for f in self.graph.outgoing[root]]
        while frontier:
            nid = frontier.pop()
            if nid in seen:
                continue
            seen.add(nid)
            frontier.extend(self.graph.flows[f].target for f in self.graph.outgoing[nid])
        return seen

    # -- node encodings --------------------------------------------------------

    def encode_node(self, node: FlowNode) -> list[PddlAction]:
        if node.kind is NodeKind.TASK:
            return [self._encode_task(node)]
        if node.kind.is_event:
            action = self._encode_event(node)
            return [action] if action else []
        return self._encode_gateway(node)

    def _encode_task(self, node: FlowNode) -> PddlAction:
        graph = self.graph
        pre = self.entry_markers(node.id)
        if not pre:
            raise EncodingError(f"task {node.id!r} has no incoming flow")
        base_adds = self.out_markers(node.id)
        name = self.action_names.claim(sanitize_id(node.name or node.id, lower=True))

        outcomes: list[list[str]] = [base_adds]
        if graph.msg_strategy is MessageStrategy.EXCLUSIVE_EMULATION:
            for msg in graph.task_task_messages:
                if msg.source != node.id:
                    continue
                outcomes.append(base_adds + [self._emulation_trigger(msg.target)])

        dels = [EffNot(p) for p in pre]
        if len(outcomes) == 1:
            effect = EffAnd([*(EffAdd(p) for p in base_adds), *dels])
        else:
            effect = EffAnd([EffOneOf([_outcome(adds) for adds in outcomes]), *dels])
        return PddlAction(name=name, precondition=pre, effect=effect)

    def _emulation_trigger(self, task_id: str) -> str:
        """Entry marker forced true when a task-task message is emulated."""
        normal_in = self.graph.normal_incoming(task_id)
        if normal_in:
            return self.marker(normal_in[0])
        return self.node_pred[task_id]

    def _encode_event(self, node: FlowNode) -> PddlAction | None:
        if node.kind is NodeKind.START_EVENT:
            if self.options.allow_spontaneous_start:
                name = self.action_names.claim(f"start_{sanitize_id(node.id)}")
                return PddlAction(
                    name=name,
                    precondition=[],
                    effect=EffAnd([EffAdd(self.node_pred[node.id])]),
                )
            return None
        pre = self.entry_markers(node.id)
        name = self.action_names.claim(f"event_{sanitize_id(node.id)}")
        dels = [EffNot(p) for p in pre]
        if node.kind is NodeKind.END_EVENT:
            if self.options.done_mode is DoneMode.ALL_POOLS:
                adds = [EffAdd(self.pool_done[node.pool])]
            else:
                adds = [EffAdd(self.done)]
            return PddlAction(name=name, precondition=pre, effect=EffAnd([*adds, *dels]))
        adds = [EffAdd(p) for p in self.out_markers(node.id)]
        return PddlAction(name=name, precondition=pre, effect=EffAnd([*adds, *dels]))

    def _encode_gateway(self, node: FlowNode) -> list[PddlAction]:
        graph = self.graph
        n_in = len(graph.incoming[node.id])
        n_out = len(graph.outgoing[node.id])
        if n_in >= 2 and n_out >= 2:
            raise EncodingError(
                f"gateway {node.id!r} both converges and diverges; split it into two gateways"
            )
        if n_in >= 2:
            return self._encode_join(node)
        return [self._encode_split(node)]

    def _encode_split(self, node: FlowNode) -> PddlAction:
        graph = self.graph
        entry = self.marker(graph.incoming[node.id][0])
        succ = self.out_markers(node.id)
        name = self.action_names.claim(f"event_{sanitize_id(node.id)}")

        if node.kind is NodeKind.PARALLEL_GATEWAY:
            effect = EffAnd([*(EffAdd(p) for p in succ), EffNot(entry)])
            return PddlAction(name=name, precondition=[entry], effect=effect)

        if node.kind is NodeKind.INCLUSIVE_GATEWAY:
            counter = self.counters[node.id]
            count0 = counter.count_preds[0]
            subsets = [
                list(c) for size in range(1, counter.width + 1) for c in combinations(range(counter.width), size)
            ]
            outcomes = [
                _outcome([succ[i] for i in subset] + [counter.count_preds[len(subset)]])
                for subset in subsets
            ]
            dels = [EffNot(entry), EffNot(count0)]
            if len(outcomes) == 0:
                effect = EffAnd([EffNot(entry)])
            elif len(outcomes) == 1:
                effect = EffAnd([*_outcome_items(outcomes[0]), *dels])
            else:
                effect = EffAnd([EffOneOf(outcomes), *dels])
            return PddlAction(name=name, precondition=[entry, count0], effect=effect)

        # ExclusiveGateway and EventBasedGateway share the oneof encoding
        if len(succ) <= 1:
            effect = EffAnd([*(EffAdd(p) for p in succ), EffNot(entry)])
        else:
            effect = EffAnd([EffOneOf([EffAdd(p) for p in succ]), EffNot(entry)])
        return PddlAction(name=name, precondition=[entry], effect=effect)

    def _encode_join(self, node: FlowNode) -> list[PddlAction]:
        graph = self.graph
        base = sanitize_id(node.id)
        markers = [self.marker(f) for f in graph.incoming[node.id]]
        succ = self.out_markers(node.id)
        succ_adds = [EffAdd(p) for p in succ]

        if node.kind is NodeKind.PARALLEL_GATEWAY:
            name = self.action_names.claim(f"event_{base}")
            effect = EffAnd([*succ_adds, *(EffNot(m) for m in markers)])
            return [PddlAction(name=name, precondition=list(markers), effect=effect)]

        if node.kind is NodeKind.INCLUSIVE_GATEWAY:
            counter = self.counters[self.join_split[node.id]]
            own = self.node_pred[node.id]
            actions: list[PddlAction] = []
            for i, m in enumerate(markers):
                for k in range(1, counter.width + 1):
                    name = self.action_names.claim(f"event_{base}_{i}_{k}")
                    adds: list[EffAdd | EffNot] = [EffAdd(counter.count_preds[k - 1])]
                    if k == 1:
                        adds.append(EffAdd(own))
                    effect = EffAnd([*adds, EffNot(m), EffNot(counter.count_preds[k])])
                    actions.append(
                        PddlAction(name=name, precondition=[m, counter.count_preds[k]], effect=effect)
                    )
            release = self.action_names.claim(f"event_{base}")
            actions.append(
                PddlAction(
                    name=release,
                    precondition=[counter.count_preds[0], own],
                    effect=EffAnd([*succ_adds, EffNot(own)]),
                )
            )
            return actions

        # exclusive / event-based merge: one pass-through action per branch
        actions = []
        for i, m in enumerate(markers):
            name = self.action_names.claim(f"event_{base}_{i}")
            effect = EffAnd([*succ_adds, EffNot(m)])
            actions.append(PddlAction(name=name, precondition=[m], effect=effect))
        return actions

    # -- assembly ---------------------------------------------------------------

    def declared_predicates(self) -> list[str]:
        preds = [self.node_pred[nid] for nid in self.graph.nodes]
        preds.append(self.done)
        preds.extend(self.pool_done[p] for p in self.graph.pools if p in self.pool_done)
        for nid in self.graph.nodes:
            if nid in self.counters:
                preds.extend(self.counters[nid].count_preds)
        for nid in self.graph.nodes:
            for i in range(len(self.graph.incoming[nid])):
                if (nid, i) in self.arr:
                    preds.append(self.arr[(nid, i)])
        for fid in self.graph.flows:
            if fid in self.msg:
                preds.append(self.msg[fid])
        return preds

    def domain(self) -> PddlDomain:
        actions: list[PddlAction] = []
        for node in self.graph.nodes.values():
            actions.extend(self.encode_node(node))
        if self.options.done_mode is DoneMode.ALL_POOLS:
            name = self.action_names.claim("finish_process")
            actions.append(
                PddlAction(
                    name=name,
                    precondition=[self.pool_done[p] for p in self.graph.pools],
                    effect=EffAnd([EffAdd(self.done)]),
                )
            )
        requirements = [":strips", ":typing"]
        if not self.options.fig4_compat:
            requirements.append(":non-deterministic")
        return PddlDomain(
            name=sanitize_id(self.graph.source_name, lower=True),
            requirements=requirements,
            types=["task", "event", "gateway"],
            predicates=self.declared_predicates(),
            actions=actions,
        )

    def problem_inits(self, start_preds: list[str]) -> list[str]:
        init = list(start_preds)
        for nid in self.graph.nodes:
            if nid in self.counters:
                init.append(self.counters[nid].count_preds[0])
        # a message sent by a start event is available whenever that start is
        for fid, flow in self.graph.flows.items():
            if not flow.synthetic:
                continue
            if self.graph.nodes[flow.source].kind is not NodeKind.START_EVENT:
                continue
            if self.node_pred[flow.source] in init:
                marker = self.marker(fid)
                if marker not in init:
                    init.append(marker)
        return init


def _outcome(adds: list[str]) -> EffAdd | EffAnd:
    if len(adds) == 1:
        return EffAdd(adds[0])
    return EffAnd([EffAdd(p) for p in adds])


def _outcome_items(outcome: EffAdd | EffAnd) -> list:
    return outcome.items if isinstance(outcome, EffAnd) else [outcome]


# ---------------------------------------------------------------------------
# Public operations


def encode_task(node: FlowNode, graph: ProcessGraph, options: EncodeOptions | None = None) -> PddlAction:
    enc = _Encoder(graph, options or EncodeOptions())
    return enc._encode_task(node)


def encode_event(
    node: FlowNode, graph: ProcessGraph, options: EncodeOptions | None = None
) -> PddlAction | None:
    enc = _Encoder(graph, options or EncodeOptions())
    return enc._encode_event(node)


def encode_exclusive(
    node: FlowNode, graph: ProcessGraph, options: EncodeOptions | None = None
) -> list[PddlAction]:
    if node.kind not in (NodeKind.EXCLUSIVE_GATEWAY, NodeKind.EVENT_BASED_GATEWAY):
        raise EncodingError(f"{node.id!r} is not an exclusive or event-based gateway")
    enc = _Encoder(graph, options or EncodeOptions())
    return enc._encode_gateway(node)


def encode_parallel(
    node: FlowNode, graph: ProcessGraph, options: EncodeOptions | None = None
) -> list[PddlAction]:
    if node.kind is not NodeKind.PARALLEL_GATEWAY:
        raise EncodingError(f"{node.id!r} is not a parallel gateway")
    enc = _Encoder(graph, options or EncodeOptions())
    return enc._encode_gateway(node)


def encode_inclusive(
    node: FlowNode,
    graph: ProcessGraph,
    counter: CounterEncoding | None = None,
    options: EncodeOptions | None = None,
) -> list[PddlAction]:
    if node.kind is not NodeKind.INCLUSIVE_GATEWAY:
        raise EncodingError(f"{node.id!r} is not an inclusive gateway")
    enc = _Encoder(graph, options or EncodeOptions())
    if counter is not None:
        if len(graph.incoming[node.id]) < 2:
            enc.counters[node.id] = counter
        else:
            enc.counters[enc.join_split[node.id]] = counter
    return enc._encode_gateway(node)


def counter_for(node: FlowNode, graph: ProcessGraph, options: EncodeOptions | None = None) -> CounterEncoding:
    """The counter family emitted for a diverging inclusive gateway."""
    enc = _Encoder(graph, options or EncodeOptions())
    return enc.counters[node.id]


def emit_domain(graph: ProcessGraph, options: EncodeOptions | None = None) -> PddlDomain:
    return _Encoder(graph, options or EncodeOptions()).domain()


def emit_problems(graph: ProcessGraph, options: EncodeOptions | None = None) -> list[PddlProblem]:
    """The paper's problem variants: all pools started, one pool started
    (per pool), and optionally the empty bootstrap variant."""
    options = options or EncodeOptions()
    enc = _Encoder(graph, options)
    domain_name = sanitize_id(graph.source_name, lower=True)
    goal = [enc.done]

    def make(variant: str, start_preds: list[str]) -> PddlProblem:
        return PddlProblem(
            name=f"{domain_name}_{variant}",
            domain_name=domain_name,
            init=enc.problem_inits(start_preds),
            goal=goal,
            variant=variant,
        )

    problems: list[PddlProblem] = []
    if options.allow_spontaneous_start:
        problems.append(make("empty", []))

    all_starts = [
        enc.node_pred[nid] for pool in graph.pools for nid in graph.start_nodes[pool]
    ]
    all_problem = make("all_starts", all_starts)
    problems.append(all_problem)

    labels = _NameAllocator()
    for pool in graph.pools:
        label = labels.claim(sanitize_id(graph.pool_names[pool], lower=True))
        pool_starts = [enc.node_pred[nid] for nid in graph.start_nodes[pool]]
        prob = make(f"prestarted_{label}", pool_starts)
        if set(prob.init) == set(all_problem.init):
            continue  # single-pool case collapses onto all_starts
        problems.append(prob)
    return problems


# ---------------------------------------------------------------------------
# Rendering


def render_pddl(obj: PddlDomain | PddlProblem) -> str:
    if isinstance(obj, PddlDomain):
        return _render_domain(obj)
    return _render_problem(obj)


def _render_domain(domain: PddlDomain) -> str:
    lines = [f"(define (domain {domain.name})"]
    lines.append(f"  (:requirements {' '.join(domain.requirements)})")
    lines.append(f"  (:types {' '.join(domain.types)})")
    lines.append("  (:predicates")
    for pred in domain.predicates:
        lines.append(f"    ({pred})")
    lines.append("  )")
    for action in domain.actions:
        lines.append(f"  (:action {action.name}")
        pre = " ".join(f"({p})" for p in action.precondition)
        lines.append(f"    :precondition (and {pre})" if pre else "    :precondition (and)")
        lines.extend(_render_effect(action.effect))
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def _render_effect(effect: EffAnd) -> list[str]:
    has_oneof = any(isinstance(item, EffOneOf) for item in effect.items)
    if not has_oneof:
        inline = " ".join(_inline(item) for item in effect.items)
        return [f"    :effect (and {inline})"]
    lines = ["    :effect (and"]
    for idx, item in enumerate(effect.items):
        last = idx == len(effect.items) - 1
        suffix = ")" if last else ""
        if isinstance(item, EffOneOf):
            lines.append("      (oneof")
            for oidx, outcome in enumerate(item.outcomes):
                close = ")" if oidx == len(item.outcomes) - 1 else ""
                lines.append(f"        {_inline(outcome)}{close}{suffix if oidx == len(item.outcomes) - 1 else ''}")
        else:
            lines.append(f"      {_inline(item)}{suffix}")
    return lines


def _inline(item: EffectTree) -> str:
    if isinstance(item, EffAdd):
        return f"({item.pred})"
    if isinstance(item, EffNot):
        return f"(not ({item.pred}))"
    if isinstance(item, EffAnd):
        return f"(and {' '.join(_inline(i) for i in item.items)})"
    return f"(oneof {' '.join(_inline(o) for o in item.outcomes)})"


def _render_problem(problem: PddlProblem) -> str:
    init = " ".join(f"({p})" for p in problem.init)
    goal = " ".join(f"({p})" for p in problem.goal)
    lines = [
        f"(define (problem {problem.name})",
        f"  (:domain {problem.domain_name})",
        f"  (:init {init})" if init else "  (:init)",
        f"  (:goal (and {goal}))",
        ")",
    ]
    return "\n".join(lines) + "\n"
