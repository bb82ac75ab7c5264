"""The data transformation graph: data states as nodes, transformations as edges.

A directed multigraph. Nodes are variables/objects at a specific semantic
stage ("module.func.var#version"); edges are the calls, assignments, and
returns that map one state to another, optionally guarded by a control-flow
predicate. The graph is mutated only during the single-owner build phase and
treated as immutable afterwards, so queries are freely shareable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import DanglingEndpoint, DuplicateEdgeId, DuplicateId, UnknownNode
from .frontend import GuardInfo
from .spans import SourceSpan

NODE_KINDS = frozenset({"argument", "local", "global", "constant", "return_value", "field"})
EDGE_PLANES = frozenset({"call", "operator", "assignment", "return"})
DIRECTIONS = ("upstream", "downstream")


@dataclass(frozen=True)
class NodeMeta:
    """Where a data state lives: file, line span, enclosing function."""

    span: SourceSpan
    function: str = ""


@dataclass(frozen=True)
class DataNode:
    """One data state. ``id`` is "name#version" and unique per graph."""

    id: str
    name: str
    kind: str
    type: str = "unknown"
    schema: tuple[tuple[str, str], ...] = ()
    constraints: tuple[str, ...] = ()
    meta: NodeMeta | None = None

    def __post_init__(self) -> None:
        if self.kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {self.kind!r} on {self.id}")
        if self.version < 0:
            raise ValueError(f"negative version on {self.id}")
        for c in self.constraints:
            if not c:
                raise ValueError(f"empty constraint on {self.id}")

    @property
    def version(self) -> int:
        _, _, v = self.id.rpartition("#")
        try:
            return int(v)
        except ValueError:
            return -1

    def with_constraint(self, text: str) -> "DataNode":
        return replace(self, constraints=self.constraints + (text,))


@dataclass(frozen=True)
class TransformEdge:
    """One transformation between two data states.

    ``group`` ties together the per-input edges of a joint multi-input
    transformation; for call sites it is "<callee>@L<line>", with a leading
    "?" when the callee could not be resolved.
    """

    edge_id: str
    src: str
    dst: str
    plane: str
    group: str = ""
    source: SourceSpan | None = None
    ref_file: SourceSpan | None = None
    guard: GuardInfo | None = None
    semantics: str = ""

    def __post_init__(self) -> None:
        if self.plane not in EDGE_PLANES:
            raise ValueError(f"unknown plane {self.plane!r} on {self.edge_id}")

    @property
    def callee(self) -> str | None:
        if "@L" not in self.group:
            return None
        head = self.group.split("@L")[0]
        return head.lstrip("?") or None

    @property
    def resolved(self) -> bool:
        return not self.group.startswith("?")


def _node_name(node_id: str) -> str:
    return node_id.rpartition("#")[0]


@dataclass
class Dtg:
    """Directed multigraph with per-node adjacency, deterministically ordered."""

    nodes: dict[str, DataNode] = field(default_factory=dict)
    edges: dict[str, TransformEdge] = field(default_factory=dict)
    outgoing: dict[str, list[str]] = field(default_factory=dict)
    incoming: dict[str, list[str]] = field(default_factory=dict)

    # -- build-phase mutation ------------------------------------------------

    def add_node(self, node: DataNode) -> "Dtg":
        if node.id in self.nodes:
            raise DuplicateId(f"node id already present: {node.id}")
        self.nodes[node.id] = node
        self.outgoing[node.id] = []
        self.incoming[node.id] = []
        return self

    def add_edge(self, edge: TransformEdge) -> "Dtg":
        if edge.edge_id in self.edges:
            raise DuplicateEdgeId(f"edge id already present: {edge.edge_id}")
        for endpoint in (edge.src, edge.dst):
            if endpoint not in self.nodes:
                raise DanglingEndpoint(f"edge {edge.edge_id} references missing node {endpoint}")
        self.edges[edge.edge_id] = edge
        self.outgoing[edge.src].append(edge.edge_id)
        self.outgoing[edge.src].sort()
        self.incoming[edge.dst].append(edge.edge_id)
        self.incoming[edge.dst].sort()
        return self

    def replace_edge(self, edge: TransformEdge) -> None:
        """Build-phase only: swap an edge's payload without touching adjacency."""
        if edge.edge_id not in self.edges:
            raise UnknownNode(f"no such edge: {edge.edge_id}")
        old = self.edges[edge.edge_id]
        if (old.src, old.dst) != (edge.src, edge.dst):
            raise ValueError("replace_edge cannot move endpoints")
        self.edges[edge.edge_id] = edge

    def replace_node(self, node: DataNode) -> None:
        if node.id not in self.nodes:
            raise UnknownNode(f"no such node: {node.id}")
        self.nodes[node.id] = node

    # -- queries ---------------------------------------------------------------

    def node(self, node_id: str) -> DataNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(f"no such node: {node_id}") from None

    def edge(self, edge_id: str) -> TransformEdge:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise UnknownNode(f"no such edge: {edge_id}") from None

    def neighbors(self, node_id: str, direction: str) -> list[tuple[str, str]]:
        """(edge_id, neighbor) pairs, ordered by edge_id."""
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        self.node(node_id)
        if direction == "downstream":
            return [(eid, self.edges[eid].dst) for eid in self.outgoing[node_id]]
        return [(eid, self.edges[eid].src) for eid in self.incoming[node_id]]

    def edges_between(self, a: str, b: str) -> list[str]:
        """Edges connecting a and b in either direction, ordered by edge_id."""
        self.node(a)
        self.node(b)
        out = [eid for eid in self.outgoing[a] if self.edges[eid].dst == b]
        out += [eid for eid in self.incoming[a] if self.edges[eid].src == b]
        return sorted(set(out))

    def subgraph_within_radius(self, center: str, radius: int) -> "SubGraph":
        """Undirected BFS ball around ``center`` with its induced edges."""
        self.node(center)
        if radius < 0:
            raise ValueError("radius must be >= 0")
        ball = {center}
        frontier = [center]
        for _ in range(radius):
            nxt: list[str] = []
            for nid in frontier:
                for eid in self.outgoing[nid]:
                    other = self.edges[eid].dst
                    if other not in ball:
                        ball.add(other)
                        nxt.append(other)
                for eid in self.incoming[nid]:
                    other = self.edges[eid].src
                    if other not in ball:
                        ball.add(other)
                        nxt.append(other)
            frontier = nxt
        induced = {
            eid: e for eid, e in self.edges.items() if e.src in ball and e.dst in ball
        }
        return SubGraph(
            center=center,
            radius=radius,
            nodes={nid: self.nodes[nid] for nid in sorted(ball)},
            edges={eid: induced[eid] for eid in sorted(induced)},
        )

    def groups(self) -> dict[str, list[str]]:
        """group tag -> edge ids, both sides sorted."""
        out: dict[str, list[str]] = {}
        for eid in sorted(self.edges):
            out.setdefault(self.edges[eid].group, []).append(eid)
        return out

    def validate(self) -> "ValidationReport":
        return validate(self)


@dataclass(frozen=True)
class SubGraph:
    """A bounded-radius neighborhood of a parent graph."""

    center: str
    radius: int
    nodes: dict[str, DataNode]
    edges: dict[str, TransformEdge]


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


def validate(g: Dtg) -> ValidationReport:
    """Check every structural invariant; violations are data, not failures."""
    out: list[Violation] = []

    for nid, node in g.nodes.items():
        if node.id != nid:
            out.append(Violation("IdMismatch", nid, f"keyed {nid} but node.id is {node.id}"))
        if node.kind not in NODE_KINDS:
            out.append(Violation("BadKind", nid, f"kind {node.kind!r}"))
        if node.version < 0:
            out.append(Violation("BadVersion", nid, "version must be a non-negative integer"))
        if _node_name(nid) != node.name:
            out.append(Violation("NameMismatch", nid, f"id prefix does not match name {node.name!r}"))
        for c in node.constraints:
            if not c:
                out.append(Violation("EmptyConstraint", nid, "empty constraint text"))

    for eid, edge in g.edges.items():
        if edge.edge_id != eid:
            out.append(Violation("IdMismatch", eid, "keyed id differs from edge_id"))
        if edge.plane not in EDGE_PLANES:
            out.append(Violation("BadPlane", eid, f"plane {edge.plane!r}"))
        for endpoint in (edge.src, edge.dst):
            if endpoint not in g.nodes:
                out.append(Violation("DanglingEndpoint", eid, f"missing node {endpoint}"))
        if edge.src == edge.dst:
            out.append(Violation("SelfLoop", eid, "src == dst is only legal as a versioned mutation"))
        elif edge.src in g.nodes and edge.dst in g.nodes:
            src, dst = g.nodes[edge.src], g.nodes[edge.dst]
            if src.name == dst.name and dst.version != src.version + 1 and edge.plane in ("assignment", "call"):
                if dst.version <= src.version:
                    out.append(
                        Violation("BadMutationVersion", eid, f"{edge.src} -> {edge.dst} does not advance the version")
                    )

    # Adjacency closure: both directions describe exactly the edge set.
    seen_out: set[str] = set()
    for nid, eids in g.outgoing.items():
        if nid not in g.nodes:
            out.append(Violation("AdjacencyMismatch", nid, "outgoing entry for unknown node"))
            continue
        for eid in eids:
            if eid not in g.edges or g.edges[eid].src != nid:
                out.append(Violation("AdjacencyMismatch", nid, f"outgoing lists {eid}"))
            seen_out.add(eid)
    seen_in: set[str] = set()
    for nid, eids in g.incoming.items():
        if nid not in g.nodes:
            out.append(Violation("AdjacencyMismatch", nid, "incoming entry for unknown node"))
            continue
        for eid in eids:
            if eid not in g.edges or g.edges[eid].dst != nid:
                out.append(Violation("AdjacencyMismatch", nid, f"incoming lists {eid}"))
            seen_in.add(eid)
    for eid in g.edges:
        if eid not in seen_out or eid not in seen_in:
            out.append(Violation("AdjacencyMismatch", eid, "edge missing from adjacency"))
    for nid in g.nodes:
        if nid not in g.outgoing or nid not in g.incoming:
            out.append(Violation("AdjacencyMismatch", nid, "node missing adjacency entries"))

    return ValidationReport(tuple(out))


def check_subgraph(g: Dtg, sub: SubGraph) -> list[str]:
    """Problems with a SubGraph relative to its parent; empty when sound."""
    problems: list[str] = []
    ball = _bfs_ball(g, sub.center, sub.radius)
    if set(sub.nodes) != ball:
        problems.append("node set is not the undirected BFS ball")
    for eid, e in sub.edges.items():
        if e.src not in sub.nodes or e.dst not in sub.nodes:
            problems.append(f"edge {eid} endpoint outside subgraph")
    return problems


def _bfs_ball(g: Dtg, center: str, radius: int) -> set[str]:
    ball = {center}
    frontier = [center]
    for _ in range(radius):
        nxt = []
        for nid in frontier:
            for eid in g.outgoing[nid]:
                o = g.edges[eid].dst
                if o not in ball:
                    ball.add(o)
                    nxt.append(o)
            for eid in g.incoming[nid]:
                o = g.edges[eid].src
                if o not in ball:
                    ball.add(o)
                    nxt.append(o)
        frontier = nxt
    return ball
