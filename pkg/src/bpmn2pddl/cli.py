"""Command-line pipeline: translate, check, and batch-run BPMN diagrams.

Exit codes are a stable contract: 0 success, 1 input or encoding error,
2 check failure / limit exceeded (or warnings with --warnings-as-errors).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import fond_checker
from .bpmn_parser import ParseError, parse_bpmn
from .fond_checker import CheckReport, Limits, LimitExceeded, SolveMode
from .pddl_encoder import (
    DoneMode,
    EncodeOptions,
    EncodingError,
    PddlDomain,
    PddlProblem,
    emit_domain,
    emit_problems,
    render_pddl,
)
from .process_graph import Diagnostic, GraphError, MessageStrategy, build_graph, export_graph_dot, validate_graph

ENV_MAX_STATES = "BPMN2PDDL_MAX_STATES"


@dataclass
class RunConfig:
    input_path: str = ""
    output_dir: str = "out"
    msg_strategy: MessageStrategy = MessageStrategy.EXCLUSIVE_EMULATION
    done_mode: DoneMode = DoneMode.ANY_END
    fig4_compat: bool = False
    allow_spontaneous_start: bool = False
    max_inclusive_branches: int = 6
    solve_mode: str = "both"  # strong | cyclic | both
    limits: Limits = field(default_factory=Limits)
    write_dot: bool = False
    write_traces: bool = False
    warnings_as_errors: bool = False

    def encode_options(self) -> EncodeOptions:
        return EncodeOptions(
            fig4_compat=self.fig4_compat,
            done_mode=self.done_mode,
            allow_spontaneous_start=self.allow_spontaneous_start,
            max_inclusive_branches=self.max_inclusive_branches,
        )

    def solve_modes(self) -> tuple[SolveMode, ...]:
        if self.solve_mode == "strong":
            return (SolveMode.STRONG,)
        if self.solve_mode == "cyclic":
            return (SolveMode.STRONG_CYCLIC,)
        return (SolveMode.STRONG, SolveMode.STRONG_CYCLIC)


@dataclass
class TranslationResult:
    stem: str
    graph: object
    diagnostics: list[Diagnostic]
    domain: PddlDomain
    problems: list[PddlProblem]
    domain_text: str
    problem_texts: dict[str, str]  # variant -> text
    n_nodes: int
    n_flows: int
    n_synthetic: int
    elapsed_ms: float


def translate_file(path: str | Path, config: RunConfig | None = None) -> TranslationResult:
    """Run parse → graph → encode → render on one .bpmn file.

    The elapsed time covers exactly that span (no file writes, no checking).
    """
    config = config or RunConfig()
    path = Path(path)
    xml_text = path.read_text(encoding="utf-8")
    stem = path.stem

    start = time.perf_counter()
    model = parse_bpmn(xml_text, source_name=stem)
    graph = build_graph(model, config.msg_strategy)
    diagnostics = validate_graph(graph)
    options = config.encode_options()
    domain = emit_domain(graph, options)
    problems = emit_problems(graph, options)
    domain_text = render_pddl(domain)
    problem_texts = {p.variant: render_pddl(p) for p in problems}
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    return TranslationResult(
        stem=stem,
        graph=graph,
        diagnostics=diagnostics,
        domain=domain,
        problems=problems,
        domain_text=domain_text,
        problem_texts=problem_texts,
        n_nodes=len(graph.nodes),
        n_flows=len(graph.flows),
        n_synthetic=sum(1 for f in graph.flows.values() if f.synthetic),
        elapsed_ms=elapsed_ms,
    )


def _write_outputs(result: TranslationResult, config: RunConfig) -> None:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{result.stem}.domain.pddl").write_text(result.domain_text, encoding="utf-8", newline="\n")
    for variant, text in result.problem_texts.items():
        (out / f"{result.stem}.{variant}.problem.pddl").write_text(text, encoding="utf-8", newline="\n")
    if config.write_dot:
        (out / f"{result.stem}.graph.dot").write_text(
            export_graph_dot(result.graph), encoding="utf-8", newline="\n"
        )


def _translate_or_report(config: RunConfig) -> TranslationResult | None:
    try:
        result = translate_file(config.input_path, config)
    except OSError as exc:
        print(f"error: cannot read {config.input_path}: {exc}", file=sys.stderr)
        return None
    except (ParseError, GraphError, EncodingError) as exc:
        print(f"error: {config.input_path}: {exc}", file=sys.stderr)
        return None
    _write_outputs(result, config)
    for diag in result.diagnostics:
        print(f"warning: {diag.code}: {diag.message}", file=sys.stderr)
    lines = result.domain_text.count("\n")
    print(
        f"{result.stem}: nodes={result.n_nodes} flows={result.n_flows} "
        f"synthetic={result.n_synthetic} predicates={len(result.domain.predicates)} "
        f"actions={len(result.domain.actions)} lines={lines} "
        f"problems={len(result.problems)} elapsed_ms={result.elapsed_ms:.1f}"
    )
    return result


def cmd_translate(config: RunConfig) -> int:
    result = _translate_or_report(config)
    if result is None:
        return 1
    if config.warnings_as_errors and result.diagnostics:
        return 2
    return 0


def _check_problems(result: TranslationResult, config: RunConfig) -> tuple[list[CheckReport], bool]:
    reports: list[CheckReport] = []
    limit_hit = False
    for problem in result.problems:
        try:
            reports.append(
                fond_checker.analyze(result.domain, problem, config.solve_modes(), config.limits)
            )
        except LimitExceeded as exc:
            print(f"limit exceeded on {problem.name}: {exc}", file=sys.stderr)
            limit_hit = True
    return reports, limit_hit


def cmd_check(config: RunConfig) -> int:
    result = _translate_or_report(config)
    if result is None:
        return 1

    check_start = time.perf_counter()
    reports, limit_hit = _check_problems(result, config)
    failed = limit_hit
    out = Path(config.output_dir)
    for report in reports:
        wanted = config.solve_modes()
        strong_txt = _solvable_text(report.strong, SolveMode.STRONG in wanted)
        cyclic_txt = _solvable_text(report.strong_cyclic, SolveMode.STRONG_CYCLIC in wanted)
        policy = report.strong_cyclic or report.strong
        size = len(policy.mapping) if policy else 0
        print(
            f"{report.problem_name}: states={report.n_states} deadlocks={report.n_deadlocks} "
            f"strong={strong_txt} strong_cyclic={cyclic_txt} policy_size={size}"
        )
        if policy is None:
            failed = True
        else:
            problem = next(p for p in result.problems if p.name == report.problem_name)
            if config.write_dot:
                dot = fond_checker.export_policy_dot(result.domain, problem, policy)
                (out / f"{result.stem}.{report.variant}.policy.dot").write_text(
                    dot, encoding="utf-8", newline="\n"
                )
            if config.write_traces:
                traces = fond_checker.enumerate_traces(result.domain, problem, policy, config.limits)
                payload = fond_checker.traces_to_json(traces)
                (out / f"{result.stem}.{report.variant}.traces.json").write_text(
                    json.dumps(payload, indent=2) + "\n", encoding="utf-8", newline="\n"
                )
    print(f"check elapsed_ms={(time.perf_counter() - check_start) * 1000.0:.1f}")
    if failed:
        return 2
    if config.warnings_as_errors and result.diagnostics:
        return 2
    return 0


def _solvable_text(policy, requested: bool) -> str:
    if not requested:
        return "-"
    return "yes" if policy else "no"


def cmd_corpus(config: RunConfig) -> int:
    directory = Path(config.input_path)
    if not directory.is_dir():
        print(f"error: {config.input_path} is not a directory", file=sys.stderr)
        return 1
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows: list[str] = []
    any_failed = False
    for path in sorted(directory.glob("*.bpmn")):
        try:
            result = translate_file(path, config)
            _write_outputs(result, config)
        except (OSError, ParseError, GraphError, EncodingError) as exc:
            print(f"{path.name}: ERROR: {exc}", file=sys.stderr)
            rows.append(f"{path.name}\tERROR\t\t\t\t\t\t\t")
            any_failed = True
            continue
        reports, limit_hit = _check_problems(result, config)
        wanted = config.solve_modes()
        n_states = max((r.n_states for r in reports), default=0)
        strong_txt = cyclic_txt = "-"
        if SolveMode.STRONG in wanted:
            strong_txt = _yn(all(r.strong is not None for r in reports) and not limit_hit)
        if SolveMode.STRONG_CYCLIC in wanted:
            cyclic_txt = _yn(all(r.strong_cyclic is not None for r in reports) and not limit_hit)
        lines = result.domain_text.count("\n")
        rows.append(
            f"{path.name}\t{result.n_nodes}\t{len(result.domain.predicates)}"
            f"\t{len(result.domain.actions)}\t{lines}\t{result.elapsed_ms:.1f}"
            f"\t{n_states}\t{strong_txt}\t{cyclic_txt}"
        )

    header = "file\tnodes\tpredicates\tactions\tlines\tms\tstates\tstrong\tstrong_cyclic"
    tsv = header + "\n" + "".join(row + "\n" for row in rows)
    (out / "corpus_summary.tsv").write_text(tsv, encoding="utf-8", newline="\n")
    print(tsv, end="")
    return 1 if any_failed else 0


def _yn(flag: bool) -> str:
    return "yes" if flag else "no"


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpmn2pddl",
        description="Translate BPMN 2.0 diagrams to FOND PDDL and verify them",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("input", help="input .bpmn file (or directory for corpus)")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument(
            "--msg-strategy",
            choices=["ignore", "exclusive"],
            default="exclusive",
            help="task-task message flows: ignore or emulate as exclusive branching",
        )
        p.add_argument("--done-mode", choices=["any", "all"], default="any")
        p.add_argument("--fig4-compat", action="store_true", help="omit :non-deterministic from :requirements")
        p.add_argument("--allow-spontaneous-start", action="store_true")
        p.add_argument("--max-inclusive-branches", type=int, default=6)
        p.add_argument("--solve", choices=["strong", "cyclic", "both"], default="both")
        p.add_argument("--max-states", type=int, default=None)
        p.add_argument("--dot", action="store_true", help="write DOT exports")
        p.add_argument("--traces", action="store_true", help="write JSON trace reports")
        p.add_argument("--warnings-as-errors", action="store_true")

    for name in ("translate", "check", "corpus"):
        common(sub.add_parser(name))
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    limits = Limits()
    env_max = os.environ.get(ENV_MAX_STATES)
    if env_max is not None:
        limits.max_states = int(env_max)
    if args.max_states is not None:
        limits.max_states = args.max_states
    return RunConfig(
        input_path=args.input,
        output_dir=args.out,
        msg_strategy=(
            MessageStrategy.IGNORE if args.msg_strategy == "ignore" else MessageStrategy.EXCLUSIVE_EMULATION
        ),
        done_mode=DoneMode.ANY_END if args.done_mode == "any" else DoneMode.ALL_POOLS,
        fig4_compat=args.fig4_compat,
        allow_spontaneous_start=args.allow_spontaneous_start,
        max_inclusive_branches=args.max_inclusive_branches,
        solve_mode=args.solve,
        limits=limits,
        write_dot=args.dot,
        write_traces=args.traces,
        warnings_as_errors=args.warnings_as_errors,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    config = config_from_args(args)
    if args.command == "translate":
        return cmd_translate(config)
    if args.command == "check":
        return cmd_check(config)
    return cmd_corpus(config)


if __name__ == "__main__":
    sys.exit(main())
