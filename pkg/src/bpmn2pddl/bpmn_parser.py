"""Parse BPMN 2.0 XML into a typed in-memory process model.

Only the control-flow subset is read: tasks, events, gateways, sequence
flows, message flows, and pools. Lanes are parsed and discarded, diagram
interchange (``bpmndi:``) is ignored, and constructs outside the subset
(subprocesses, boundary events, data objects, ...) are rejected with a
structured error.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"


class ParseError(Exception):
    """Base class for all structured parse failures."""


class MalformedXml(ParseError):
    pass


class UnsupportedElement(ParseError):
    def __init__(self, tag: str):
        super().__init__(f"unsupported BPMN element: {tag}")
        self.tag = tag


class DanglingReference(ParseError):
    def __init__(self, flow_id: str, ref: str):
        super().__init__(f"flow {flow_id!r} references unknown node {ref!r}")
        self.flow_id = flow_id
        self.ref = ref


class DuplicateId(ParseError):
    def __init__(self, element_id: str):
        super().__init__(f"duplicate id {element_id!r}")
        self.element_id = element_id


class InvalidStructure(ParseError):
    pass


class NodeKind(Enum):
    TASK = "task"
    START_EVENT = "startEvent"
    END_EVENT = "endEvent"
    INTERMEDIATE_CATCH = "intermediateCatchEvent"
    INTERMEDIATE_THROW = "intermediateThrowEvent"
    EXCLUSIVE_GATEWAY = "exclusiveGateway"
    INCLUSIVE_GATEWAY = "inclusiveGateway"
    PARALLEL_GATEWAY = "parallelGateway"
    EVENT_BASED_GATEWAY = "eventBasedGateway"

    @property
    def is_event(self) -> bool:
        return self in (
            NodeKind.START_EVENT,
            NodeKind.END_EVENT,
            NodeKind.INTERMEDIATE_CATCH,
            NodeKind.INTERMEDIATE_THROW,
        )

    @property
    def is_gateway(self) -> bool:
        return self in (
            NodeKind.EXCLUSIVE_GATEWAY,
            NodeKind.INCLUSIVE_GATEWAY,
            NodeKind.PARALLEL_GATEWAY,
            NodeKind.EVENT_BASED_GATEWAY,
        )


@dataclass
class FlowNode:
    id: str
    name: str | None
    kind: NodeKind
    pool: str


@dataclass
class SequenceFlow:
    id: str
    source: str
    target: str
    synthetic: bool = False
    condition_label: str | None = None


@dataclass
class MessageFlow:
    id: str
    source: str
    target: str


@dataclass
class Pool:
    id: str
    name: str | None
    node_ids: list[str] = field(default_factory=list)


@dataclass
class BpmnModel:
    pools: list[Pool]
    nodes: dict[str, FlowNode]
    sequence_flows: list[SequenceFlow]
    message_flows: list[MessageFlow]
    source_name: str


# Tags normalized to a plain Task.
_TASK_TAGS = {
    "task",
    "sendTask",
    "receiveTask",
    "userTask",
    "serviceTask",
    "manualTask",
    "scriptTask",
}

_NODE_TAGS = {
    "startEvent": NodeKind.START_EVENT,
    "endEvent": NodeKind.END_EVENT,
    "intermediateCatchEvent": NodeKind.INTERMEDIATE_CATCH,
    "intermediateThrowEvent": NodeKind.INTERMEDIATE_THROW,
    "exclusiveGateway": NodeKind.EXCLUSIVE_GATEWAY,
    "inclusiveGateway": NodeKind.INCLUSIVE_GATEWAY,
    "parallelGateway": NodeKind.PARALLEL_GATEWAY,
    "eventBasedGateway": NodeKind.EVENT_BASED_GATEWAY,
}

# Non-control-flow elements that are legal to skip silently.
_IGNORED_TAGS = {
    "documentation",
    "extensionElements",
    "laneSet",
    "lane",
    "textAnnotation",
    "association",
    "group",
    "property",
    "monitoring",
    "auditing",
    "message",
    "signal",
    "error",
    "category",
}


def _local(tag: str) -> tuple[str, str]:
    """Split an ElementTree tag into (namespace URI, local name)."""
    if tag.startswith("{"):
        uri, _, name = tag[1:].partition("}")
        return uri, name
    return "", tag


def _clean_name(raw: str | None) -> str | None:
    if raw is None:
        return None
    name = " ".join(raw.split())
    return name or None


def parse_bpmn(xml_text: str, *, source_name: str | None = None) -> BpmnModel:
    """Parse BPMN 2.0 XML text into a :class:`BpmnModel`.

    Raises a :class:`ParseError` subclass on malformed XML, unsupported
    elements, dangling flow references, duplicate ids, or structurally
    invalid flows. Never raises anything else on string input.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedXml(f"not parseable as XML: {exc}") from None

    uri, local = _local(root.tag)
    if local != "definitions" or uri != BPMN_NS:
        raise MalformedXml(
            f"root element is <{local}> in namespace {uri!r}, expected BPMN definitions"
        )

    processes: list[ET.Element] = []
    collaboration: ET.Element | None = None
    for child in root:
        curi, cname = _local(child.tag)
        if curi != BPMN_NS:
            continue
        if cname == "process":
            processes.append(child)
        elif cname == "collaboration" and collaboration is None:
            collaboration = child

    participants: list[tuple[str, str | None, str | None]] = []
    message_elems: list[ET.Element] = []
    if collaboration is not None:
        for child in collaboration:
            curi, cname = _local(child.tag)
            if curi != BPMN_NS:
                continue
            if cname == "participant":
                pid = child.get("id")
                if pid is None:
                    raise InvalidStructure("participant without id")
                participants.append((pid, _clean_name(child.get("name")), child.get("processRef")))
            elif cname == "messageFlow":
                message_elems.append(child)

    pools: list[Pool] = []
    nodes: dict[str, FlowNode] = {}
    sequence_flows: list[SequenceFlow] = []
    seen_ids: set[str] = set()

    def claim_id(element_id: str) -> None:
        if element_id in seen_ids:
            raise DuplicateId(element_id)
        seen_ids.add(element_id)

    process_pool: dict[str, str] = {}  # process id -> pool id
    participant_refs = {ref for _, _, ref in participants if ref}
    for proc in processes:
        proc_id = proc.get("id")
        if proc_id is None:
            raise InvalidStructure("process without id")
        process_pool[proc_id] = proc_id  # overridden below when a participant claims it

    for pid, pname, ref in participants:
        if ref is not None and ref in process_pool:
            process_pool[ref] = pid
            pools.append(Pool(id=pid, name=pname))
        # participants without a resolvable process carry no nodes; skip them

    for proc in processes:
        proc_id = proc.get("id") or ""
        if proc_id not in participant_refs:
            pools.append(Pool(id=proc_id, name=_clean_name(proc.get("name")) or proc_id))

    pool_by_id = {p.id: p for p in pools}

    for proc in processes:
        proc_id = proc.get("id") or ""
        pool_id = process_pool[proc_id]
        pool = pool_by_id[pool_id]
        for elem in proc:
            euri, ename = _local(elem.tag)
            if euri != BPMN_NS:
                continue
            if ename in _IGNORED_TAGS:
                continue
            if ename == "sequenceFlow":
                fid = elem.get("id")
                src = elem.get("sourceRef")
                tgt = elem.get("targetRef")
                if fid is None:
                    raise InvalidStructure("sequence flow without id")
                if src is None or tgt is None:
                    raise InvalidStructure(f"sequence flow {fid!r} missing sourceRef/targetRef")
                claim_id(fid)
                label = _clean_name(elem.get("name"))
                if label is None:
                    for sub in elem:
                        if _local(sub.tag) == (BPMN_NS, "conditionExpression"):
                            label = _clean_name(sub.text)
                            break
                sequence_flows.append(
                    SequenceFlow(id=fid, source=src, target=tgt, condition_label=label)
                )
                continue
            if ename in _TASK_TAGS:
                kind = NodeKind.TASK
            elif ename in _NODE_TAGS:
                kind = _NODE_TAGS[ename]
            else:
                raise UnsupportedElement(ename)
            nid = elem.get("id")
            if nid is None:
                raise InvalidStructure(f"<{ename}> element without id")
            claim_id(nid)
            nodes[nid] = FlowNode(id=nid, name=_clean_name(elem.get("name")), kind=kind, pool=pool_id)
            pool.node_ids.append(nid)

    for flow in sequence_flows:
        for ref in (flow.source, flow.target):
            if ref not in nodes:
                raise DanglingReference(flow.id, ref)
        if nodes[flow.source].pool != nodes[flow.target].pool:
            raise InvalidStructure(
                f"sequence flow {flow.id!r} crosses pools "
                f"({nodes[flow.source].pool!r} -> {nodes[flow.target].pool!r})"
            )

    message_flows: list[MessageFlow] = []
    for elem in message_elems:
        fid = elem.get("id")
        src = elem.get("sourceRef")
        tgt = elem.get("targetRef")
        if fid is None:
            raise InvalidStructure("message flow without id")
        if src is None or tgt is None:
            raise InvalidStructure(f"message flow {fid!r} missing sourceRef/targetRef")
        if src in pool_by_id or tgt in pool_by_id or src in participant_refs or tgt in participant_refs:
            # pool-level message flow: not a task/event interaction, skipped
            continue
        claim_id(fid)
        for ref in (src, tgt):
            if ref not in nodes:
                raise DanglingReference(fid, ref)
        if nodes[src].pool == nodes[tgt].pool:
            raise InvalidStructure(f"message flow {fid!r} connects nodes of the same pool")
        message_flows.append(MessageFlow(id=fid, source=src, target=tgt))

    if source_name is None:
        source_name = _derive_source_name(collaboration, processes)

    return BpmnModel(
        pools=pools,
        nodes=nodes,
        sequence_flows=sequence_flows,
        message_flows=message_flows,
        source_name=source_name,
    )


def _derive_source_name(collaboration: ET.Element | None, processes: list[ET.Element]) -> str:
    if collaboration is not None:
        name = _clean_name(collaboration.get("name"))
        if name:
            return name
    for proc in processes:
        name = _clean_name(proc.get("name"))
        if name:
            return name
    for proc in processes:
        pid = proc.get("id")
        if pid:
            return pid
    return "process"
