"""The agent environment: a cursor over the graph with four tools.

None of the tools mutate the graph. A session is single-threaded; any number
of sessions may share one immutable graph. Test execution is delegated to a
runner contract and its trace file is consumed, never produced, here.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError, IllegalMove, IoFailure, NoSuchEdge, RunnerFailure, UnknownNode
from .model import Dtg, SubGraph
from .spans import SourceSpan


@dataclass
class AgentState:
    """Cursor over the graph; ``graph_view`` is the visible world."""

    current_node_id: str
    visited_nodes: list[str]
    hypothesis: str
    graph_view: SubGraph


@dataclass(frozen=True)
class TraceOverlay:
    """Nodes/edges exercised by one test run, mapped onto the graph."""

    test_id: str
    touched_edges: frozenset[str]
    touched_nodes: frozenset[str]
    verdict: str
    observed_values: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class NodeReport:
    node_id: str
    name: str
    kind: str
    type: str
    schema: tuple[tuple[str, str], ...]
    constraints: tuple[str, ...]
    file: str
    line_start: int
    line_end: int
    function: str
    incident: tuple[tuple[str, str, str, str], ...]  # (edge_id, direction, other node, plane)


@dataclass(frozen=True)
class TransformationView:
    edge_id: str
    text: str
    plane: str
    group: str
    semantics: str
    guard_condition: str
    source: SourceSpan | None
    ref_file: SourceSpan | None
    connecting_edges: tuple[str, ...]


@dataclass
class Session:
    graph: Dtg
    state: AgentState
    view_radius: int
    repo_root: Path | None = None
    overlays: dict[str, TraceOverlay] = field(default_factory=dict)


def open_session(g: Dtg, start_node: str, view_radius: int = 2, repo_root: str | Path | None = None) -> Session:
    if start_node not in g.nodes:
        raise UnknownNode(f"no such node: {start_node}")
    if view_radius < 0:
        raise ValueError("view_radius must be >= 0")
    state = AgentState(
        current_node_id=start_node,
        visited_nodes=[start_node],
        hypothesis="",
        graph_view=g.subgraph_within_radius(start_node, view_radius),
    )
    return Session(graph=g, state=state, view_radius=view_radius, repo_root=Path(repo_root) if repo_root else None)


def navigate(session: Session, direction: str, choice: str) -> AgentState:
    """Move along the chosen incident edge; appends to the visit history."""
    state = session.state
    options = dict(session.graph.neighbors(state.current_node_id, direction))
    if choice not in options:
        raise IllegalMove(f"edge {choice} is not {direction} of {state.current_node_id}")
    target = options[choice]
    state.current_node_id = target
    state.visited_nodes.append(target)
    state.graph_view = session.graph.subgraph_within_radius(target, session.view_radius)
    return state


def inspect_data(session: Session) -> NodeReport:
    """Metadata of the current node, verbatim, plus an incident-edge summary."""
    node = session.graph.node(session.state.current_node_id)
    incident = []
    for eid, other in session.graph.neighbors(node.id, "upstream"):
        incident.append((eid, "in", other, session.graph.edges[eid].plane))
    for eid, other in session.graph.neighbors(node.id, "downstream"):
        incident.append((eid, "out", other, session.graph.edges[eid].plane))
    meta = node.meta
    return NodeReport(
        node_id=node.id,
        name=node.name,
        kind=node.kind,
        type=node.type,
        schema=node.schema,
        constraints=node.constraints,
        file=meta.span.file_path if meta else "",
        line_start=meta.span.line_start if meta else 0,
        line_end=meta.span.line_end if meta else 0,
        function=meta.function if meta else "",
        incident=tuple(sorted(incident)),
    )


def read_transformation(session: Session, target_node_id: str) -> TransformationView:
    """Source text of the transformation connecting the cursor and the target."""
    state = session.state
    edge_ids = session.graph.edges_between(state.current_node_id, target_node_id)
    if not edge_ids:
        raise NoSuchEdge(f"no edge between {state.current_node_id} and {target_node_id}")
    edge = session.graph.edges[edge_ids[0]]
    text = ""
    if edge.source is not None:
        if session.repo_root is None:
            raise IoFailure("session has no repository snapshot configured")
        path = session.repo_root / edge.source.file_path
        try:
            lines = path.read_text(encoding="utf-8").split("\n")
        except OSError as exc:
            raise IoFailure(f"snapshot file missing: {path}") from exc
        text = "\n".join(lines[edge.source.line_start - 1 : edge.source.line_end])
    return TransformationView(
        edge_id=edge.edge_id,
        text=text,
        plane=edge.plane,
        group=edge.group,
        semantics=edge.semantics,
        guard_condition=edge.guard.condition_text if edge.guard else "",
        source=edge.source,
        ref_file=edge.ref_file,
        connecting_edges=tuple(edge_ids),
    )


# ---------------------------------------------------------------------------
# Test execution and trace overlays
# ---------------------------------------------------------------------------

_TRACE_FIELDS = {"event", "id", "value_text"}


def parse_trace(text: str, test_id: str, g: Dtg | None = None) -> TraceOverlay:
    """Parse a line-delimited trace; every referenced id must resolve."""
    touched_edges: set[str] = set()
    touched_nodes: set[str] = set()
    observed: dict[str, str] = {}
    verdict: str | None = None
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise FormatError("empty trace", 1)
    for i, raw in enumerate(lines, start=1):
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid trace record: {exc.msg}", i) from exc
        if not isinstance(record, dict):
            raise FormatError("trace record is not an object", i)
        if "verdict" in record:
            if set(record) != {"verdict"}:
                raise FormatError("verdict record carries extra fields", i)
            if record["verdict"] not in ("pass", "fail"):
                raise FormatError(f"bad verdict {record['verdict']!r}", i)
            if i != len(lines):
                raise FormatError("verdict must be the final record", i)
            verdict = record["verdict"]
            continue
        unknown = set(record) - _TRACE_FIELDS
        if unknown:
            raise FormatError(f"unknown trace field(s) {sorted(unknown)}", i)
        if "event" not in record or "id" not in record:
            raise FormatError("trace record needs event and id", i)
        event, ident = record["event"], record["id"]
        if event == "node":
            if g is not None and ident not in g.nodes:
                raise FormatError(f"trace references unknown node {ident}", i)
            touched_nodes.add(ident)
            if "value_text" in record:
                observed[ident] = record["value_text"]
        elif event == "edge":
            if g is not None and ident not in g.edges:
                raise FormatError(f"trace references unknown edge {ident}", i)
            touched_edges.add(ident)
        else:
            raise FormatError(f"unknown trace event {event!r}", i)
    if verdict is None:
        raise FormatError("trace has no final verdict record", len(lines))
    return TraceOverlay(
        test_id=test_id,
        touched_edges=frozenset(touched_edges),
        touched_nodes=frozenset(touched_nodes),
        verdict=verdict,
        observed_values=observed,
    )


def load_trace(path: str | Path, test_id: str, g: Dtg | None = None) -> TraceOverlay:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read trace {path}: {exc}") from exc
    return parse_trace(text, test_id, g)


@dataclass(frozen=True)
class TestRun:
    exit_code: int
    trace_path: Path | None


class CommandRunner:
    """Runs a configured command template; ``{test_id}`` and ``{trace}`` are filled in."""

    def __init__(self, template: str, workdir: str | Path | None = None, trace_path: str | Path | None = None):
        self.template = template
        self.workdir = Path(workdir) if workdir else None
        self.trace_path = Path(trace_path) if trace_path else None

    def run(self, test_id: str) -> TestRun:
        command = self.template.format(test_id=test_id, trace=self.trace_path or "")
        try:
            proc = subprocess.run(
                command,
                shell=True,
                cwd=self.workdir,
                capture_output=True,
                text=True,
                timeout=120,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise RunnerFailure(f"runner could not execute {command!r}: {exc}") from exc
        trace = self.trace_path if self.trace_path and self.trace_path.exists() else None
        return TestRun(exit_code=proc.returncode, trace_path=trace)


def run_test(session: Session, test_id: str, runner) -> TraceOverlay:
    """Execute one test through the runner and overlay its trace, if any."""
    result = runner.run(test_id)
    if result.trace_path is not None:
        try:
            overlay = load_trace(result.trace_path, test_id, session.graph)
        except FormatError as exc:
            raise RunnerFailure(f"malformed trace file: {exc}") from exc
    else:
        overlay = TraceOverlay(
            test_id=test_id,
            touched_edges=frozenset(),
            touched_nodes=frozenset(),
            verdict="pass" if result.exit_code == 0 else "fail",
        )
    session.overlays[test_id] = overlay
    return overlay
