"""Grounded interpreter and solver for the emitted nondeterministic domains.

Exhaustively explores the propositional state space, decides strong and
strong-cyclic solvability over the AND-OR graph, extracts deterministic
policies, and enumerates execution traces. Also parses the emitted PDDL
subset back in, so the pipeline's output can be round-tripped and checked
without an external planner.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import product

from .pddl_encoder import (
    EffAdd,
    EffAnd,
    EffNot,
    EffOneOf,
    PddlAction,
    PddlDomain,
    PddlProblem,
)


class PddlSyntaxError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, column {col})" if line else message)
        self.line = line
        self.col = col


class UnsupportedFeature(Exception):
    pass


class Unsolvable(Exception):
    def __init__(self, mode: SolveMode):
        super().__init__(f"no {mode.value} policy exists")
        self.mode = mode


class LimitExceeded(Exception):
    pass


class SolveMode(Enum):
    STRONG = "strong"
    STRONG_CYCLIC = "strong-cyclic"


@dataclass
class Limits:
    max_states: int = 1_000_000
    max_traces: int = 100_000
    max_trace_len: int = 10_000


GroundState = frozenset  # canonical, order-independent state representation


@dataclass(frozen=True)
class Outcome:
    adds: frozenset
    dels: frozenset


@dataclass(frozen=True)
class GroundAction:
    name: str
    pre: frozenset
    outcomes: tuple[Outcome, ...]


# ---------------------------------------------------------------------------
# PDDL subset parser


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    tokens: list[tuple[str, int, int]] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            col += 1
            i += 1
            continue
        if c in "()":
            tokens.append((c, line, col))
            col += 1
            i += 1
            continue
        start = i
        start_col = col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        tokens.append((text[start:i], line, start_col))
    return tokens


class _SExpr:
    __slots__ = ("items", "line", "col")

    def __init__(self, items: list, line: int, col: int):
        self.items = items
        self.line = line
        self.col = col


def _read(tokens: list[tuple[str, int, int]]) -> _SExpr:
    pos = 0

    def read_one() -> object:
        nonlocal pos
        if pos >= len(tokens):
            raise PddlSyntaxError("unexpected end of input")
        tok, line, col = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise PddlSyntaxError("missing )", line, col)
                if tokens[pos][0] == ")":
                    pos += 1
                    return _SExpr(items, line, col)
                items.append(read_one())
        if tok == ")":
            raise PddlSyntaxError("unexpected )", line, col)
        return (tok, line, col)

    expr = read_one()
    if pos != len(tokens):
        tok, line, col = tokens[pos]
        raise PddlSyntaxError(f"trailing input {tok!r}", line, col)
    if not isinstance(expr, _SExpr):
        raise PddlSyntaxError("expected a parenthesized form", expr[1], expr[2])
    return expr


def _sym(item: object, what: str) -> str:
    if isinstance(item, tuple):
        return item[0]
    raise PddlSyntaxError(f"expected {what}", item.line, item.col)


def _atom(item: object) -> str:
    """An atom of the subset: a zero-arity predicate like (done)."""
    if not isinstance(item, _SExpr) or len(item.items) == 0:
        line, col = _pos(item)
        raise PddlSyntaxError("expected a (predicate) atom", line, col)
    if len(item.items) > 1:
        raise UnsupportedFeature("predicates with arguments are outside the supported subset")
    return _sym(item.items[0], "a predicate name")


def _pos(item: object) -> tuple[int, int]:
    if isinstance(item, _SExpr):
        return item.line, item.col
    return item[1], item[2]


def parse_pddl(text: str) -> PddlDomain | PddlProblem:
    """Parse a domain or problem in the emitted subset.

    Raises :class:`PddlSyntaxError` with position information, or
    :class:`UnsupportedFeature` for constructs outside the subset
    (parameters, conditional effects, numeric fluents, objects, ...).
    """
    tokens = _tokenize(text)
    if not tokens:
        raise PddlSyntaxError("empty input")
    top = _read(tokens)
    items = top.items
    if not items or _sym(items[0], "define") != "define":
        raise PddlSyntaxError("expected (define ...)", top.line, top.col)
    if len(items) < 2 or not isinstance(items[1], _SExpr) or not items[1].items:
        raise PddlSyntaxError("expected (domain NAME) or (problem NAME)", top.line, top.col)
    head = items[1]
    kind = _sym(head.items[0], "domain or problem")
    if kind == "domain":
        return _parse_domain(items)
    if kind == "problem":
        return _parse_problem(items)
    raise PddlSyntaxError(f"expected domain or problem, got {kind!r}", head.line, head.col)


def _parse_domain(items: list) -> PddlDomain:
    name = _sym(items[1].items[1], "a domain name") if len(items[1].items) > 1 else ""
    if not name:
        raise PddlSyntaxError("domain has no name", items[1].line, items[1].col)
    requirements: list[str] = []
    types: list[str] = []
    predicates: list[str] = []
    actions: list[PddlAction] = []
    for section in items[2:]:
        if not isinstance(section, _SExpr) or not section.items:
            line, col = _pos(section)
            raise PddlSyntaxError("expected a (:section ...)", line, col)
        tag = _sym(section.items[0], "a section tag")
        body = section.items[1:]
        if tag == ":requirements":
            requirements = [_sym(b, "a requirement flag") for b in body]
        elif tag == ":types":
            types = [_sym(b, "a type name") for b in body]
        elif tag == ":predicates":
            predicates = [_atom(b) for b in body]
        elif tag == ":action":
            actions.append(_parse_action(section))
        elif tag in (":constants", ":functions"):
            raise UnsupportedFeature(f"{tag} is outside the supported subset")
        else:
            raise PddlSyntaxError(f"unknown domain section {tag!r}", section.line, section.col)
    domain = PddlDomain(
        name=name, requirements=requirements, types=types, predicates=predicates, actions=actions
    )
    _validate_domain(domain)
    return domain


def _parse_action(section: _SExpr) -> PddlAction:
    body = section.items[1:]
    if not body:
        raise PddlSyntaxError("action has no name", section.line, section.col)
    name = _sym(body[0], "an action name")
    precondition: list[str] = []
    effect: EffAnd | None = None
    i = 1
    while i < len(body):
        key = _sym(body[i], "an action keyword")
        if i + 1 >= len(body):
            raise PddlSyntaxError(f"{key} has no value", section.line, section.col)
        value = body[i + 1]
        if key == ":parameters":
            if not isinstance(value, _SExpr) or value.items:
                raise UnsupportedFeature("action parameters are outside the supported subset")
        elif key == ":precondition":
            precondition = _parse_precondition(value)
        elif key == ":effect":
            effect = _parse_effect_root(value)
        else:
            raise PddlSyntaxError(f"unknown action keyword {key!r}", section.line, section.col)
        i += 2
    if effect is None:
        raise PddlSyntaxError(f"action {name!r} has no effect", section.line, section.col)
    return PddlAction(name=name, precondition=precondition, effect=effect)


def _parse_precondition(value: object) -> list[str]:
    if not isinstance(value, _SExpr) or not value.items:
        line, col = _pos(value)
        raise PddlSyntaxError("expected a precondition", line, col)
    head = value.items[0]
    if isinstance(head, tuple) and head[0] == "and":
        atoms = []
        for sub in value.items[1:]:
            if isinstance(sub, _SExpr) and sub.items and isinstance(sub.items[0], tuple) and sub.items[0][0] == "not":
                raise UnsupportedFeature("negative preconditions are outside the supported subset")
            atoms.append(_atom(sub))
        return atoms
    if isinstance(head, tuple) and head[0] == "not":
        raise UnsupportedFeature("negative preconditions are outside the supported subset")
    return [_atom(value)]


_UNSUPPORTED_EFFECTS = {"when", "forall", "exists", "increase", "decrease", "assign", "probabilistic"}


def _parse_effect_root(value: object) -> EffAnd:
    tree = _parse_effect(value, inside_oneof=False)
    if isinstance(tree, EffAnd):
        return tree
    return EffAnd([tree])


def _parse_effect(value: object, inside_oneof: bool) -> EffAdd | EffNot | EffAnd | EffOneOf:
    if not isinstance(value, _SExpr) or not value.items:
        line, col = _pos(value)
        raise PddlSyntaxError("expected an effect", line, col)
    head = value.items[0]
    if isinstance(head, tuple):
        word = head[0]
        if word in _UNSUPPORTED_EFFECTS:
            raise UnsupportedFeature(f"({word} ...) effects are outside the supported subset")
        if word == "and":
            return EffAnd([_parse_effect(sub, inside_oneof) for sub in value.items[1:]])
        if word == "not":
            if len(value.items) != 2:
                raise PddlSyntaxError("(not ...) takes one atom", value.line, value.col)
            return EffNot(_atom(value.items[1]))
        if word == "oneof":
            if inside_oneof:
                raise UnsupportedFeature("nested oneof effects are outside the supported subset")
            outcomes = [_parse_effect(sub, inside_oneof=True) for sub in value.items[1:]]
            for o in outcomes:
                if isinstance(o, EffOneOf):
                    raise UnsupportedFeature("nested oneof effects are outside the supported subset")
            return EffOneOf(outcomes)
    return EffAdd(_atom(value))


def _parse_problem(items: list) -> PddlProblem:
    head = items[1]
    name = _sym(head.items[1], "a problem name") if len(head.items) > 1 else ""
    if not name:
        raise PddlSyntaxError("problem has no name", head.line, head.col)
    domain_name = ""
    init: list[str] = []
    goal: list[str] = []
    for section in items[2:]:
        if not isinstance(section, _SExpr) or not section.items:
            line, col = _pos(section)
            raise PddlSyntaxError("expected a (:section ...)", line, col)
        tag = _sym(section.items[0], "a section tag")
        body = section.items[1:]
        if tag == ":domain":
            domain_name = _sym(body[0], "a domain name") if body else ""
        elif tag == ":init":
            init = [_atom(b) for b in body]
        elif tag == ":goal":
            if len(body) != 1:
                raise PddlSyntaxError(":goal takes one formula", section.line, section.col)
            goal = _parse_precondition(body[0])
        elif tag == ":objects":
            raise UnsupportedFeature(":objects is outside the supported subset")
        else:
            raise PddlSyntaxError(f"unknown problem section {tag!r}", section.line, section.col)
    return PddlProblem(name=name, domain_name=domain_name, init=init, goal=goal)


def _validate_domain(domain: PddlDomain) -> None:
    declared = set(domain.predicates)
    for action in domain.actions:
        for p in action.precondition:
            if p not in declared:
                raise PddlSyntaxError(
                    f"action {action.name!r} uses undeclared predicate {p!r}"
                )
        for p in _effect_preds(action.effect):
            if p not in declared:
                raise PddlSyntaxError(
                    f"action {action.name!r} uses undeclared predicate {p!r}"
                )


def _effect_preds(tree) -> set[str]:
    if isinstance(tree, EffAdd):
        return {tree.pred}
    if isinstance(tree, EffNot):
        return {tree.pred}
    if isinstance(tree, EffAnd):
        out: set[str] = set()
        for item in tree.items:
            out |= _effect_preds(item)
        return out
    out = set()
    for o in tree.outcomes:
        out |= _effect_preds(o)
    return out


# ---------------------------------------------------------------------------
# Grounding and state transitions


def ground_domain(domain: PddlDomain) -> list[GroundAction]:
    """Flatten effect trees into explicit nondeterministic outcomes."""
    _validate_domain(domain)
    grounded = []
    for action in domain.actions:
        grounded.append(
            GroundAction(
                name=action.name,
                pre=frozenset(action.precondition),
                outcomes=tuple(_flatten_effect(action.effect)),
            )
        )
    return grounded


def _flatten_effect(effect: EffAnd) -> list[Outcome]:
    adds, dels, groups = _collect_effect(effect)
    if not groups:
        return [Outcome(adds=frozenset(adds), dels=frozenset(dels - adds))]
    outcomes = []
    for combo in product(*groups):
        o_adds = set(adds)
        o_dels = set(dels)
        for a, d in combo:
            o_adds |= a
            o_dels |= d
        outcomes.append(Outcome(adds=frozenset(o_adds), dels=frozenset(o_dels - o_adds)))
    return outcomes


def _collect_effect(tree) -> tuple[set, set, list]:
    if isinstance(tree, EffAdd):
        return {tree.pred}, set(), []
    if isinstance(tree, EffNot):
        return set(), {tree.pred}, []
    if isinstance(tree, EffAnd):
        adds: set = set()
        dels: set = set()
        groups: list = []
        for item in tree.items:
            a, d, g = _collect_effect(item)
            adds |= a
            dels |= d
            groups.extend(g)
        return adds, dels, groups
    # EffOneOf
    group = []
    for o in tree.outcomes:
        a, d, g = _collect_effect(o)
        if g:
            raise UnsupportedFeature("nested oneof effects are outside the supported subset")
        group.append((a, d))
    return set(), set(), [group]


def applicable(state: frozenset, action: GroundAction) -> bool:
    return action.pre <= state


def apply(state: frozenset, action: GroundAction, outcome_index: int) -> frozenset:
    outcome = action.outcomes[outcome_index]
    return (state - outcome.dels) | outcome.adds


# ---------------------------------------------------------------------------
# Exhaustive exploration


@dataclass
class DoubleAdd:
    state_index: int
    action: str
    outcome: int
    pred: str


@dataclass
class StateSpace:
    states: list[frozenset]
    index: dict[frozenset, int]
    transitions: list[list[tuple[str, int, int]]]  # per state: (action, outcome, successor)
    goal_states: set[int]
    deadlock_states: set[int]
    double_adds: list[DoubleAdd]
    actions: dict[str, GroundAction]


def explore(domain: PddlDomain, problem: PddlProblem, limits: Limits | None = None) -> StateSpace:
    """BFS over every state reachable from init via every outcome."""
    limits = limits or Limits()
    actions = ground_domain(domain)
    init = frozenset(problem.init)
    goal = frozenset(problem.goal)

    states = [init]
    index = {init: 0}
    transitions: list[list[tuple[str, int, int]]] = [[]]
    goal_states: set[int] = set()
    deadlock_states: set[int] = set()
    double_adds: list[DoubleAdd] = []

    queue = deque([0])
    while queue:
        sidx = queue.popleft()
        state = states[sidx]
        if goal <= state:
            goal_states.add(sidx)
        any_applicable = False
        for action in actions:
            if not applicable(state, action):
                continue
            any_applicable = True
            for oidx, outcome in enumerate(action.outcomes):
                for pred in outcome.adds & state:
                    double_adds.append(DoubleAdd(sidx, action.name, oidx, pred))
                succ = (state - outcome.dels) | outcome.adds
                tidx = index.get(succ)
                if tidx is None:
                    if len(states) >= limits.max_states:
                        raise LimitExceeded(f"more than {limits.max_states} states reachable")
                    tidx = len(states)
                    states.append(succ)
                    index[succ] = tidx
                    transitions.append([])
                    queue.append(tidx)
                transitions[sidx].append((action.name, oidx, tidx))
        if not any_applicable and not (goal <= state):
            deadlock_states.add(sidx)

    return StateSpace(
        states=states,
        index=index,
        transitions=transitions,
        goal_states=goal_states,
        deadlock_states=deadlock_states,
        double_adds=double_adds,
        actions={a.name: a for a in actions},
    )


def token_double_adds(space: StateSpace) -> list[DoubleAdd]:
    """Double-adds of token predicates (goal latches and counters exempt)."""
    return [
        d
        for d in space.double_adds
        if d.pred != "done" and not d.pred.startswith(("count_", "pool_done_"))
    ]


# ---------------------------------------------------------------------------
# Policies


@dataclass
class Policy:
    mapping: dict[frozenset, str]
    kind: SolveMode


def solve(
    domain: PddlDomain,
    problem: PddlProblem,
    mode: SolveMode = SolveMode.STRONG_CYCLIC,
    limits: Limits | None = None,
    space: StateSpace | None = None,
) -> Policy:
    """Decide solvability and extract a deterministic policy.

    Strong mode: backward AND-OR fixpoint (a state wins when some action
    has every outcome winning). Strong-cyclic mode: iterative pruning
    fixpoint. Ties between qualifying actions break lexicographically.
    Raises :class:`Unsolvable` when the initial state is not winning.
    """
    if space is None:
        space = explore(domain, problem, limits)
    by_action = [_group_by_action(trs) for trs in space.transitions]

    if mode is SolveMode.STRONG:
        mapping = _solve_strong(space, by_action)
    else:
        mapping = _solve_strong_cyclic(space, by_action)

    policy = Policy(mapping=mapping, kind=mode)
    verify_policy(space, policy)
    return policy


def _group_by_action(transitions: list[tuple[str, int, int]]) -> dict[str, list[int]]:
    grouped: dict[str, list[int]] = {}
    for name, _oidx, succ in transitions:
        grouped.setdefault(name, []).append(succ)
    return grouped


def _solve_strong(space: StateSpace, by_action) -> dict[frozenset, str]:
    n = len(space.states)
    level = {s: 0 for s in space.goal_states}
    winning = set(space.goal_states)
    current = 0
    changed = True
    while changed:
        changed = False
        current += 1
        added = []
        for s in range(n):
            if s in winning:
                continue
            for name in by_action[s]:
                if all(succ in winning for succ in by_action[s][name]):
                    added.append(s)
                    break
        for s in added:
            winning.add(s)
            level[s] = current
            changed = True
    if 0 not in winning:
        raise Unsolvable(SolveMode.STRONG)

    full: dict[int, str] = {}
    for s in winning - space.goal_states:
        candidates = [
            name
            for name, succs in sorted(by_action[s].items())
            if all(succ in winning and level[succ] < level[s] for succ in succs)
        ]
        full[s] = candidates[0]
    return _restrict_to_reachable(space, full, by_action)


def _solve_strong_cyclic(space: StateSpace, by_action) -> dict[frozenset, str]:
    n = len(space.states)
    winning = set(range(n))
    while True:
        allowed: dict[int, dict[str, list[int]]] = {}
        for s in winning:
            acts = {
                name: succs
                for name, succs in by_action[s].items()
                if all(succ in winning for succ in succs)
            }
            if acts:
                allowed[s] = acts
        # states that can reach a goal through allowed actions
        reach = set(g for g in space.goal_states if g in winning)
        changed = True
        while changed:
            changed = False
            for s in winning:
                if s in reach or s not in allowed:
                    continue
                for succs in allowed[s].values():
                    if any(t in reach for t in succs):
                        reach.add(s)
                        changed = True
                        break
        if reach == winning:
            break
        winning = reach
        if 0 not in winning:
            raise Unsolvable(SolveMode.STRONG_CYCLIC)
    if 0 not in winning:
        raise Unsolvable(SolveMode.STRONG_CYCLIC)

    # fair-progress extraction: pick actions with some outcome strictly closer to goal
    level = {g: 0 for g in space.goal_states if g in winning}
    frontier = deque(level)
    allowed = {
        s: {
            name: succs
            for name, succs in by_action[s].items()
            if all(succ in winning for succ in succs)
        }
        for s in winning
    }
    while frontier:
        t = frontier.popleft()
        for s in winning:
            if s in level:
                continue
            for succs in allowed[s].values():
                if t in succs:
                    level[s] = level[t] + 1
                    frontier.append(s)
                    break
    full: dict[int, str] = {}
    for s in winning - space.goal_states:
        candidates = [
            name
            for name, succs in sorted(allowed[s].items())
            if any(succ in level and level[succ] < level[s] for succ in succs)
        ]
        full[s] = candidates[0]
    return _restrict_to_reachable(space, full, by_action)


def _restrict_to_reachable(space: StateSpace, full: dict[int, str], by_action) -> dict[frozenset, str]:
    mapping: dict[frozenset, str] = {}
    seen = {0}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        if s in space.goal_states or s not in full:
            continue
        mapping[space.states[s]] = full[s]
        for succ in by_action[s][full[s]]:
            if succ not in seen:
                seen.add(succ)
                queue.append(succ)
    return mapping


class PolicyVerificationError(Exception):
    pass


def verify_policy(space: StateSpace, policy: Policy) -> None:
    """Check closure and the mode's success guarantee by simulation."""
    by_action = [_group_by_action(trs) for trs in space.transitions]
    reached = {0}
    queue = deque([0])
    edges: dict[int, list[int]] = {}
    while queue:
        s = queue.popleft()
        if s in space.goal_states:
            continue
        state = space.states[s]
        if state not in policy.mapping:
            raise PolicyVerificationError(f"policy is not closed: state {sorted(state)} unmapped")
        name = policy.mapping[state]
        if name not in by_action[s]:
            raise PolicyVerificationError(f"policy action {name!r} not applicable")
        succs = by_action[s][name]
        edges[s] = succs
        for t in succs:
            if t not in reached:
                reached.add(t)
                queue.append(t)

    if policy.kind is SolveMode.STRONG:
        # acyclic and every leaf a goal state
        color: dict[int, int] = {}

        def dfs(s: int) -> None:
            color[s] = 1
            for t in edges.get(s, []):
                if color.get(t) == 1:
                    raise PolicyVerificationError("strong policy revisits a state")
                if color.get(t, 0) == 0:
                    dfs(t)
            color[s] = 2
            if s not in edges and s not in space.goal_states:
                raise PolicyVerificationError("strong policy reaches a non-goal leaf")

        dfs(0)
    else:
        # every reachable state must still reach a goal inside the policy graph
        goal_reaching = set(g for g in space.goal_states if g in reached)
        changed = True
        while changed:
            changed = False
            for s in reached:
                if s in goal_reaching:
                    continue
                if any(t in goal_reaching for t in edges.get(s, [])):
                    goal_reaching.add(s)
                    changed = True
        missing = reached - goal_reaching
        if missing:
            raise PolicyVerificationError(
                "strong-cyclic policy can get stuck away from the goal"
            )


# ---------------------------------------------------------------------------
# Trace enumeration


@dataclass
class Trace:
    steps: list[tuple[frozenset, str, int]]
    terminal: str  # "goal" | "deadlock" | "cycle"


@dataclass
class TraceSet:
    traces: list[Trace] = field(default_factory=list)


def enumerate_traces(
    domain: PddlDomain,
    problem: PddlProblem,
    policy: Policy | None = None,
    limits: Limits | None = None,
) -> TraceSet:
    """DFS enumeration of maximal traces.

    Under a policy only the outcome branches; in all mode (policy=None)
    both the action and the outcome branch. A trace ends at the goal, in
    a deadlock, or at the first state it revisits (cycle cutoff).
    """
    limits = limits or Limits()
    actions = ground_domain(domain)
    init = frozenset(problem.init)
    goal = frozenset(problem.goal)
    result = TraceSet()

    # stack of (state, path-set, steps)
    stack: list[tuple[frozenset, frozenset, tuple]] = [(init, frozenset([init]), ())]
    while stack:
        state, path, steps = stack.pop()
        if len(steps) > limits.max_trace_len:
            raise LimitExceeded(f"trace longer than {limits.max_trace_len} steps")
        if goal <= state:
            _record(result, Trace(list(steps), "goal"), limits)
            continue
        if policy is not None:
            chosen = policy.mapping.get(state)
            applicable_actions = [a for a in actions if a.name == chosen and applicable(state, a)]
        else:
            applicable_actions = [a for a in actions if applicable(state, a)]
        if not applicable_actions:
            _record(result, Trace(list(steps), "deadlock"), limits)
            continue
        for action in applicable_actions:
            for oidx in range(len(action.outcomes)):
                succ = apply(state, action, oidx)
                new_steps = steps + ((state, action.name, oidx),)
                if succ in path:
                    _record(result, Trace(list(new_steps), "cycle"), limits)
                    continue
                stack.append((succ, path | {succ}, new_steps))
    return result


def _record(result: TraceSet, trace: Trace, limits: Limits) -> None:
    if len(result.traces) >= limits.max_traces:
        raise LimitExceeded(f"more than {limits.max_traces} traces")
    result.traces.append(trace)


def traces_to_json(traces: TraceSet) -> list[dict]:
    return [
        {
            "steps": [
                {"state": sorted(state), "action": action, "outcome": outcome}
                for state, action, outcome in trace.steps
            ],
            "terminal": trace.terminal,
        }
        for trace in traces.traces
    ]


# ---------------------------------------------------------------------------
# Reports and exports


@dataclass
class CheckReport:
    problem_name: str
    variant: str
    n_states: int
    n_deadlocks: int
    strong: Policy | None
    strong_cyclic: Policy | None


def analyze(
    domain: PddlDomain,
    problem: PddlProblem,
    modes: tuple[SolveMode, ...] = (SolveMode.STRONG, SolveMode.STRONG_CYCLIC),
    limits: Limits | None = None,
) -> CheckReport:
    space = explore(domain, problem, limits)
    strong = cyclic = None
    if SolveMode.STRONG in modes:
        try:
            strong = solve(domain, problem, SolveMode.STRONG, limits, space)
        except Unsolvable:
            strong = None
    if SolveMode.STRONG_CYCLIC in modes:
        try:
            cyclic = solve(domain, problem, SolveMode.STRONG_CYCLIC, limits, space)
        except Unsolvable:
            cyclic = None
    return CheckReport(
        problem_name=problem.name,
        variant=problem.variant,
        n_states=len(space.states),
        n_deadlocks=len(space.deadlock_states),
        strong=strong,
        strong_cyclic=cyclic,
    )


def export_policy_dot(domain: PddlDomain, problem: PddlProblem, policy: Policy) -> str:
    """DOT digraph of the policy: states labeled by their true predicates,
    edges labeled action/outcome, goal states double-circled."""
    actions = {a.name: a for a in ground_domain(domain)}
    init = frozenset(problem.init)
    goal = frozenset(problem.goal)

    order: list[frozenset] = [init]
    ids = {init: "s0"}
    queue = deque([init])
    edges: list[tuple[str, str, str]] = []
    while queue:
        state = queue.popleft()
        if goal <= state:
            continue
        name = policy.mapping.get(state)
        if name is None:
            continue
        action = actions[name]
        for oidx in range(len(action.outcomes)):
            succ = apply(state, action, oidx)
            if succ not in ids:
                ids[succ] = f"s{len(order)}"
                order.append(succ)
                queue.append(succ)
            label = name if len(action.outcomes) == 1 else f"{name}/{oidx}"
            edges.append((ids[state], ids[succ], label))

    lines = ["digraph policy {", "  rankdir=LR;"]
    for state in order:
        sid = ids[state]
        label = "\\n".join(sorted(state)) or "{}"
        shape = "doublecircle" if goal <= state else "box"
        lines.append(f'  {sid} [shape={shape} label="{label}"];')
    for src, dst, label in edges:
        lines.append(f'  {src} -> {dst} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
