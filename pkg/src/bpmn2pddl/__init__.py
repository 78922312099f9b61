"""BPMN 2.0 to FOND PDDL compiler with a built-in grounded checker."""

from .bpmn_parser import (
    BpmnModel,
    DanglingReference,
    DuplicateId,
    FlowNode,
    InvalidStructure,
    MalformedXml,
    MessageFlow,
    NodeKind,
    ParseError,
    Pool,
    SequenceFlow,
    UnsupportedElement,
    parse_bpmn,
)
from .fond_checker import (
    CheckReport,
    GroundAction,
    LimitExceeded,
    Limits,
    Outcome,
    PddlSyntaxError,
    Policy,
    SolveMode,
    StateSpace,
    Trace,
    TraceSet,
    Unsolvable,
    UnsupportedFeature,
    analyze,
    applicable,
    apply,
    enumerate_traces,
    explore,
    export_policy_dot,
    ground_domain,
    parse_pddl,
    solve,
    token_double_adds,
    traces_to_json,
    verify_policy,
)
from .pddl_encoder import (
    CounterEncoding,
    DoneMode,
    EncodeOptions,
    EncodingError,
    PddlAction,
    PddlDomain,
    PddlProblem,
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
from .process_graph import (
    Diagnostic,
    GraphError,
    IsolatedNode,
    MessageStrategy,
    MultipleIncomingNonGateway,
    MultipleOutgoingNonGateway,
    NoEndEvent,
    NoStartEvent,
    ProcessGraph,
    build_graph,
    export_graph_dot,
    validate_graph,
)

__version__ = "0.1.0"
