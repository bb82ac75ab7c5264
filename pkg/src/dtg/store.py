"""Persist, reload, and index graphs.

The on-disk format is line-delimited UTF-8 JSON: one header record, then one
record per node (sorted by id), then one per edge (sorted by edge_id). Field
order is fixed and unknown fields are rejected, so files are byte-stable and
diffable. Streaming the records keeps repo-scale graphs loadable without an
external database.

Loaded graphs and both index tiers are immutable; concurrent reads are safe.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyIndex, FormatError, IoFailure, UnknownAttribute
from .frontend import GuardInfo
from .model import DataNode, Dtg, NodeMeta, TransformEdge
from .spans import SourceSpan

FORMAT_VERSION = 1
_NO_FILE = "<none>"

_NODE_FIELDS = ("id", "name", "kind", "type", "schema", "constraints", "file", "line_start", "line_end", "function")
_EDGE_FIELDS = ("edge_id", "src", "dst", "plane", "group", "guard", "source_span", "ref_span", "semantics")
_GUARD_FIELDS = ("condition", "kind", "polarity", "file", "line_start", "line_end", "col_start", "col_end")
_HEADER_FIELDS = ("format_version", "node_count", "edge_count")


def _span_out(span: SourceSpan | None) -> list | None:
    if span is None:
        return None
    return [span.file_path, span.line_start, span.col_start, span.line_end, span.col_end]


def _span_in(raw, line: int) -> SourceSpan | None:
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) != 5:
        raise FormatError(f"bad span {raw!r}", line)
    try:
        return SourceSpan(raw[0], raw[1], raw[3], raw[2], raw[4])
    except (ValueError, TypeError) as exc:
        raise FormatError(f"bad span: {exc}", line) from exc


def _node_record(node: DataNode) -> dict:
    meta = node.meta
    return {
        "id": node.id,
        "name": node.name,
        "kind": node.kind,
        "type": node.type,
        "schema": dict(node.schema),
        "constraints": list(node.constraints),
        "file": meta.span.file_path if meta else _NO_FILE,
        "line_start": meta.span.line_start if meta else 1,
        "line_end": meta.span.line_end if meta else 1,
        "function": meta.function if meta else "",
    }


def _edge_record(edge: TransformEdge) -> dict:
    guard = None
    if edge.guard is not None:
        gd = edge.guard
        guard = {
            "condition": gd.condition_text,
            "kind": gd.kind,
            "polarity": gd.polarity,
            "file": gd.span.file_path,
            "line_start": gd.span.line_start,
            "line_end": gd.span.line_end,
            "col_start": gd.span.col_start,
            "col_end": gd.span.col_end,
        }
    return {
        "edge_id": edge.edge_id,
        "src": edge.src,
        "dst": edge.dst,
        "plane": edge.plane,
        "group": edge.group,
        "guard": guard,
        "source_span": _span_out(edge.source),
        "ref_span": _span_out(edge.ref_file),
        "semantics": edge.semantics,
    }


def dumps_graph(g: Dtg) -> str:
    lines = [json.dumps({"format_version": FORMAT_VERSION, "node_count": len(g.nodes), "edge_count": len(g.edges)})]
    for nid in sorted(g.nodes):
        lines.append(json.dumps(_node_record(g.nodes[nid]), ensure_ascii=False))
    for eid in sorted(g.edges):
        lines.append(json.dumps(_edge_record(g.edges[eid]), ensure_ascii=False))
    return "\n".join(lines) + "\n"


def graph_checksum(g: Dtg) -> str:
    return hashlib.sha256(dumps_graph(g).encode("utf-8")).hexdigest()


def save_graph(g: Dtg, path: str | Path) -> dict:
    """Write the graph; round-trips through load_graph identically."""
    payload = dumps_graph(g)
    try:
        Path(path).write_text(payload, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return {
        "format_version": FORMAT_VERSION,
        "node_count": len(g.nodes),
        "edge_count": len(g.edges),
        "checksum": hashlib.sha256(payload.encode("utf-8")).hexdigest(),
    }


def _check_fields(record: dict, expected: tuple[str, ...], line: int, what: str) -> None:
    got = tuple(record.keys())
    unknown = [k for k in got if k not in expected]
    if unknown:
        raise FormatError(f"unknown {what} field(s) {unknown}", line)
    missing = [k for k in expected if k not in record]
    if missing:
        raise FormatError(f"missing {what} field(s) {missing}", line)


def _parse_json_line(raw: str, line: int) -> dict:
    try:
        record = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid record: {exc.msg}", line) from exc
    if not isinstance(record, dict):
        raise FormatError("record is not an object", line)
    return record


def loads_graph(text: str) -> Dtg:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty file", 1)

    header = _parse_json_line(lines[0], 1)
    _check_fields(header, _HEADER_FIELDS, 1, "header")
    if header["format_version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {header['format_version']}", 1)
    node_count, edge_count = header["node_count"], header["edge_count"]
    expected_total = 1 + node_count + edge_count
    if len(lines) != expected_total:
        raise FormatError(
            f"expected {expected_total} record lines ({node_count} nodes, {edge_count} edges), found {len(lines)}",
            min(len(lines) + 1, expected_total),
        )

    g = Dtg()
    for i in range(node_count):
        line_no = 2 + i
        record = _parse_json_line(lines[1 + i], line_no)
        _check_fields(record, _NODE_FIELDS, line_no, "node")
        meta = None
        if record["file"] != _NO_FILE:
            try:
                meta = NodeMeta(
                    SourceSpan(record["file"], record["line_start"], record["line_end"]), record["function"]
                )
            except (ValueError, TypeError) as exc:
                raise FormatError(f"bad node metadata: {exc}", line_no) from exc
        try:
            node = DataNode(
                id=record["id"],
                name=record["name"],
                kind=record["kind"],
                type=record["type"],
                schema=tuple((k, v) for k, v in record["schema"].items()),
                constraints=tuple(record["constraints"]),
                meta=meta,
            )
            g.add_node(node)
        except FormatError:
            raise
        except Exception as exc:
            raise FormatError(f"bad node record: {exc}", line_no) from exc

    for i in range(edge_count):
        line_no = 2 + node_count + i
        record = _parse_json_line(lines[1 + node_count + i], line_no)
        _check_fields(record, _EDGE_FIELDS, line_no, "edge")
        guard = None
        if record["guard"] is not None:
            graw = record["guard"]
            _check_fields(graw, _GUARD_FIELDS, line_no, "guard")
            try:
                guard = GuardInfo(
                    condition_text=graw["condition"],
                    span=SourceSpan(
                        graw["file"], graw["line_start"], graw["line_end"], graw["col_start"], graw["col_end"]
                    ),
                    polarity=graw["polarity"],
                    kind=graw["kind"],
                )
            except (ValueError, TypeError) as exc:
                raise FormatError(f"bad guard: {exc}", line_no) from exc
        try:
            edge = TransformEdge(
                edge_id=record["edge_id"],
                src=record["src"],
                dst=record["dst"],
                plane=record["plane"],
                group=record["group"],
                source=_span_in(record["source_span"], line_no),
                ref_file=_span_in(record["ref_span"], line_no),
                guard=guard,
                semantics=record["semantics"],
            )
            g.add_edge(edge)
        except FormatError:
            raise
        except Exception as exc:
            raise FormatError(f"bad edge record ({record.get('edge_id', '?')}): {exc}", line_no) from exc

    report = g.validate()
    if not report.ok():
        first = report.violations[0]
        raise FormatError(f"loaded graph violates {first.code} on {first.subject}: {first.message}", None)
    return g


def load_graph(path: str | Path) -> Dtg:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return loads_graph(text)


# ---------------------------------------------------------------------------
# Attribute index
# ---------------------------------------------------------------------------


@dataclass
class AttrIndex:
    """kind/name/file -> node ids; plane -> edge ids. Values stay sorted."""

    kind: dict[str, list[str]] = field(default_factory=dict)
    name: dict[str, list[str]] = field(default_factory=dict)
    file: dict[str, list[str]] = field(default_factory=dict)
    plane: dict[str, list[str]] = field(default_factory=dict)

    @classmethod
    def build(cls, g: Dtg) -> "AttrIndex":
        idx = cls()
        for node in g.nodes.values():
            idx.add_node(node)
        for edge in g.edges.values():
            idx.add_edge(edge)
        return idx

    @staticmethod
    def _insert(table: dict[str, list[str]], key: str, value: str) -> None:
        bucket = table.setdefault(key, [])
        if value not in bucket:
            bucket.append(value)
            bucket.sort()

    def add_node(self, node: DataNode) -> None:
        self._insert(self.kind, node.kind, node.id)
        self._insert(self.name, node.name, node.id)
        tail = node.name.rpartition(".")[2]
        if tail != node.name:
            self._insert(self.name, tail, node.id)
        if node.meta is not None:
            self._insert(self.file, node.meta.span.file_path, node.id)

    def add_edge(self, edge: TransformEdge) -> None:
        self._insert(self.plane, edge.plane, edge.edge_id)

    def lookup(self, selector: str) -> list[str]:
        """Selector "attr=value" over kind | name | file | plane."""
        attr, sep, value = selector.partition("=")
        if not sep:
            raise UnknownAttribute(f"selector must look like attr=value, got {selector!r}")
        table = {"kind": self.kind, "name": self.name, "file": self.file, "plane": self.plane}.get(attr)
        if table is None:
            raise UnknownAttribute(f"unknown attribute {attr!r}")
        return list(table.get(value, []))


def attr_lookup(idx: AttrIndex, selector: str) -> list[str]:
    return idx.lookup(selector)


# ---------------------------------------------------------------------------
# Semantic index
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]+|[a-z]+|[0-9]+")


def tokenize(text: str) -> list[str]:
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def _bucket(token: str, dims: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dims


def hashed_embedding(fields: list[tuple[str, float]], dims: int) -> tuple[float, ...]:
    """Hashed bag of identifier tokens with TF weighting, L2-normalized."""
    vec = [0.0] * dims
    for text, weight in fields:
        for token in tokenize(text):
            vec[_bucket(token, dims)] += weight
    norm = math.sqrt(sum(v * v for v in vec))
    if norm > 0:
        vec = [v / norm for v in vec]
    return tuple(vec)


def node_fields(node: DataNode) -> list[tuple[str, float]]:
    fields = [(node.name, 2.0), (node.type, 1.0)]
    fields.extend((c, 1.0) for c in node.constraints)
    fields.extend((f"{k} {v}", 0.5) for k, v in node.schema)
    return fields


def edge_fields(edge: TransformEdge) -> list[tuple[str, float]]:
    return [(edge.group, 2.0), (edge.plane, 1.0), (edge.semantics, 1.0)]


@dataclass
class SemanticIndex:
    """Deterministic model-free vector tier; an external embedder can replace it."""

    dims: int = 256
    vectors: dict[str, tuple[float, ...]] = field(default_factory=dict)

    @classmethod
    def build(cls, g: Dtg, dims: int = 256, embedder=None) -> "SemanticIndex":
        idx = cls(dims=dims)
        for nid in sorted(g.nodes):
            node = g.nodes[nid]
            if embedder is not None:
                idx.vectors[nid] = _normalized(embedder(f"{node.name} {node.type} {' '.join(node.constraints)}"))
            else:
                idx.vectors[nid] = hashed_embedding(node_fields(node), dims)
        for eid in sorted(g.edges):
            edge = g.edges[eid]
            if embedder is not None:
                idx.vectors[eid] = _normalized(embedder(f"{edge.group} {edge.plane} {edge.semantics}"))
            else:
                idx.vectors[eid] = hashed_embedding(edge_fields(edge), dims)
        return idx

    def search(self, query: str, k: int, embedder=None) -> list[tuple[str, float]]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.vectors:
            raise EmptyIndex("semantic index has no entries")
        if embedder is not None:
            qvec = _normalized(embedder(query))
        else:
            qvec = hashed_embedding([(query, 1.0)], self.dims)
        scored = [
            (ident, sum(a * b for a, b in zip(qvec, vec)))
            for ident, vec in self.vectors.items()
        ]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored[:k]


def _normalized(values) -> tuple[float, ...]:
    vec = list(values)
    norm = math.sqrt(sum(v * v for v in vec))
    if norm > 0:
        vec = [v / norm for v in vec]
    return tuple(vec)


def semantic_search(idx: SemanticIndex, query: str, k: int) -> list[tuple[str, float]]:
    return idx.search(query, k)
