"""Turn raw constructs into a linked graph of data states and transformations.

Per-module graphs are assembled statement by statement (arguments become #0
states, each rebinding bumps the version, calls and assignments become edges
carrying the innermost enclosing guard). A cross-module pass then wires call
sites to callee parameter states and callee returns back to the receiving
state; what cannot be resolved by import-aware lexical matching stays marked
unresolved on the edge group.

Module builds are independent and may run concurrently; linking is a
single-owner merge phase and the finished graph is immutable.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import frontend
from .errors import EncodingFailure, InconsistentInput, IoFailure, SummarizerFailure
from .frontend import GuardInfo, ParseResult, RawConstruct
from .model import DataNode, Dtg, NodeMeta, TransformEdge
from .spans import SourceSpan, line_span

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class FunctionRecord:
    """Definition-site facts for one function, as the linker needs them."""

    module: str
    dotted: str
    file: str
    params: tuple[str, ...]
    body: tuple[int, int]
    return_ann: str | None
    has_return: bool

    @property
    def full_name(self) -> str:
        return f"{self.module}.{self.dotted}"

    @property
    def return_node_id(self) -> str:
        return f"{self.full_name}.<return>#0"


@dataclass
class CallSite:
    """One call invocation with the node ids its argument slots resolved to."""

    module: str
    line: int
    callee: str
    group: str
    dst_node: str
    slot_srcs: list[str | None]
    ref_span: SourceSpan


@dataclass
class CallIndex:
    """name -> definition-site mapping plus the per-module import tables
    and call-site worksheet the link pass consumes."""

    defs: dict[str, FunctionRecord] = field(default_factory=dict)
    imports: dict[str, dict[str, str]] = field(default_factory=dict)
    sites: list[CallSite] = field(default_factory=list)

    def add_module(self, module: str, constructs: list[RawConstruct], imports: dict[str, str]) -> None:
        self.imports[module] = dict(imports)
        by_fn_args: dict[str, list[RawConstruct]] = {}
        returns: set[str] = set()
        for c in constructs:
            if c.category == "Argument":
                by_fn_args.setdefault(c.enclosing_function, []).append(c)
            elif c.category == "Return":
                returns.add(c.enclosing_function)
        for c in constructs:
            if c.category != "FunctionDef":
                continue
            payload = c.payload()
            args = sorted(by_fn_args.get(c.symbol, []), key=lambda a: a.span.sort_key())
            rec = FunctionRecord(
                module=module,
                dotted=c.symbol,
                file=c.span.file_path,
                params=tuple(a.symbol for a in args),
                body=tuple(payload.get("body", (c.span.line_start, c.span.line_end))),
                return_ann=payload.get("returns"),
                has_return=c.symbol in returns,
            )
            self.defs[rec.full_name] = rec

    def resolve(self, caller_module: str, callee: str) -> FunctionRecord | None:
        imports = self.imports.get(caller_module, {})
        if "." not in callee:
            local = self.defs.get(f"{caller_module}.{callee}")
            if local is not None:
                return local
            target = imports.get(callee)
            if target is not None:
                return self.defs.get(target)
            return None
        head, _, rest = callee.partition(".")
        target_head = imports.get(head)
        if target_head is not None:
            return self.defs.get(f"{target_head}.{rest}")
        return self.defs.get(callee)


def scan_imports(parsed: ParseResult, module_name: str) -> dict[str, str]:
    """Local name -> imported dotted target, for lexical call resolution."""
    table: dict[str, str] = {}
    for node in parsed.tree.body:
        if isinstance(node, ast.Import):
            for alias in node.names:
                local = alias.asname or alias.name.split(".")[0]
                table[local] = alias.name if alias.asname else alias.name.split(".")[0]
        elif isinstance(node, ast.ImportFrom):
            base = node.module or ""
            if node.level:
                parts = module_name.split(".")
                keep = parts[: max(len(parts) - node.level, 0)]
                prefix = ".".join(keep)
                base = f"{prefix}.{base}".strip(".") if base else prefix
            for alias in node.names:
                if alias.name == "*":
                    continue
                local = alias.asname or alias.name
                table[local] = f"{base}.{alias.name}".strip(".")
    return table


# ---------------------------------------------------------------------------
# Module graph construction
# ---------------------------------------------------------------------------


def _span_contains(outer_payload: list, span: SourceSpan) -> bool:
    ls, cs, le, ce = outer_payload
    return (ls, cs) <= (span.line_start, span.col_start) and (span.line_end, span.col_end) <= (le, ce)


@dataclass
class _Stmt:
    kind: str  # assign | return | call
    span: SourceSpan
    targets: list[str]
    payload: dict
    calls: list[RawConstruct] = field(default_factory=list)
    call_payloads: list[dict] = field(default_factory=list)


class _ModuleBuilder:
    def __init__(
        self,
        constructs: list[RawConstruct],
        guards: list[GuardInfo],
        module_name: str,
        site_sink: list[CallSite] | None = None,
    ):
        self.constructs = constructs
        self.guards = [g for g in guards if g.kind in ("branch", "loop")]
        self.module = module_name
        self.sites = site_sink if site_sink is not None else []
        self.g = Dtg()
        self.edge_seq: dict[tuple[str, str, int], int] = {}
        self.local_defs = {c.symbol: c for c in constructs if c.category == "FunctionDef"}
        self.externals = {c.symbol: c for c in constructs if c.category == "ExternalRef"}

    # -- node helpers -------------------------------------------------------

    def _add_node(self, node: DataNode) -> str:
        self.g.add_node(node)
        return node.id

    def _global_node(self, name: str) -> str:
        nid = f"{self.module}.{name}#0"
        if nid not in self.g.nodes:
            c = self.externals[name]
            self._add_node(
                DataNode(
                    id=nid,
                    name=f"{self.module}.{name}",
                    kind="global",
                    meta=NodeMeta(line_span(c.span.file_path, c.span.line_start, c.span.line_end), ""),
                )
            )
        return nid

    def _const_node(self, fn: str, literal: str, span: SourceSpan) -> str:
        name = f"{self.module}.{fn}.<const:{literal}>"
        nid = f"{name}#0"
        if nid not in self.g.nodes:
            self._add_node(
                DataNode(
                    id=nid,
                    name=name,
                    kind="constant",
                    type=_literal_type(literal),
                    meta=NodeMeta(line_span(span.file_path, span.line_start, span.line_start), fn),
                )
            )
        return nid

    def _edge_id(self, src: str, dst: str, line: int) -> str:
        key = (src, dst, line)
        k = self.edge_seq.get(key, 0)
        self.edge_seq[key] = k + 1
        return f"{src}->{dst}@L{line}#{k}"

    def _innermost_guard(self, span: SourceSpan) -> GuardInfo | None:
        best: GuardInfo | None = None
        for gd in self.guards:
            if gd.span.file_path != span.file_path:
                continue
            if gd.span.line_start <= span.line_start and span.line_end <= gd.span.line_end:
                if best is None or gd.span.line_count() < best.span.line_count():
                    best = gd
        return best

    def _add_edge(self, src: str, dst: str, plane: str, group: str, source: SourceSpan, ref: SourceSpan) -> TransformEdge:
        edge = TransformEdge(
            edge_id=self._edge_id(src, dst, ref.line_start),
            src=src,
            dst=dst,
            plane=plane,
            group=group,
            source=source,
            ref_file=ref,
            guard=self._innermost_guard(ref),
        )
        self.g.add_edge(edge)
        return edge

    # -- main walk ------------------------------------------------------------

    def build(self) -> Dtg:
        by_fn: dict[str, list[RawConstruct]] = {}
        for c in self.constructs:
            if c.category in ("Argument", "LocalAssignment", "Return", "Call"):
                if c.enclosing_function and c.enclosing_function not in self.local_defs:
                    raise InconsistentInput(
                        f"construct {c.category}:{c.symbol} references unknown function {c.enclosing_function!r}"
                    )
            by_fn.setdefault(c.enclosing_function, []).append(c)

        for name in self.externals:
            self._global_node(name)

        for fn_name, fn_construct in sorted(self.local_defs.items(), key=lambda kv: kv[1].span.sort_key()):
            self._build_function(fn_name, fn_construct, by_fn.get(fn_name, []))
        return self.g

    def _build_function(self, fn: str, fn_construct: RawConstruct, members: list[RawConstruct]) -> None:
        versions: dict[str, int] = {}
        fq = f"{self.module}.{fn}"

        def live(name: str) -> str | None:
            if name in versions:
                return f"{fq}.{name}#{versions[name]}"
            if name in self.externals:
                return self._global_node(name)
            return None

        def bind(name: str, kind: str, typ: str | None, schema: dict | None, span: SourceSpan) -> str:
            versions[name] = versions.get(name, -1) + 1
            nid = f"{fq}.{name}#{versions[name]}"
            self._add_node(
                DataNode(
                    id=nid,
                    name=f"{fq}.{name}",
                    kind=kind,
                    type=typ or "unknown",
                    schema=tuple((schema or {}).items()),
                    meta=NodeMeta(line_span(span.file_path, span.line_start, span.line_end), fn),
                )
            )
            return nid

        for arg in sorted((c for c in members if c.category == "Argument"), key=lambda c: c.span.sort_key()):
            bind(arg.symbol, "argument", arg.detail or "unknown", None, arg.span)

        return_node: str | None = None

        def ensure_return() -> str:
            nonlocal return_node
            if return_node is None:
                ann = fn_construct.payload().get("returns")
                return_node = self._add_node(
                    DataNode(
                        id=f"{fq}.<return>#0",
                        name=f"{fq}.<return>",
                        kind="return_value",
                        type=ann or "unknown",
                        meta=NodeMeta(
                            line_span(fn_construct.span.file_path, fn_construct.span.line_start, fn_construct.span.line_end),
                            fn,
                        ),
                    )
                )
            return return_node

        stmts = self._statements(members)
        for stmt in stmts:
            if stmt.kind == "assign":
                self._emit_assignment(stmt, fn, fq, live, bind)
            elif stmt.kind == "return":
                self._emit_return(stmt, fn, fq, live, ensure_return)
            else:
                self._emit_unbound_call(stmt, fn, fq, live, bind)

    def _statements(self, members: list[RawConstruct]) -> list[_Stmt]:
        assigns: dict[tuple, _Stmt] = {}
        stmts: list[_Stmt] = []
        for c in members:
            if c.category == "LocalAssignment":
                key = (c.span, c.detail)
                if key not in assigns:
                    assigns[key] = _Stmt(kind="assign", span=c.span, targets=[], payload=c.payload())
                    stmts.append(assigns[key])
                assigns[key].targets.append(c.symbol)
            elif c.category == "Return":
                stmts.append(_Stmt(kind="return", span=c.span, targets=[], payload=c.payload()))

        calls = [c for c in members if c.category == "Call"]
        for call in sorted(calls, key=lambda c: c.span.sort_key()):
            containers = [
                s
                for s in stmts
                if s.payload.get("value_span") and _span_contains(s.payload["value_span"], call.span)
            ]
            if containers:
                smallest = min(
                    containers,
                    key=lambda s: (s.payload["value_span"][2] - s.payload["value_span"][0], s.span.line_count()),
                )
                smallest.calls.append(call)
                smallest.call_payloads.append(call.payload())
            else:
                stmts.append(
                    _Stmt(kind="call", span=call.span, targets=[], payload=call.payload(), calls=[call])
                )
        stmts.sort(key=lambda s: (s.span.line_start, s.span.col_start, s.kind))
        return stmts

    # -- per-statement emission -------------------------------------------------

    def _call_group(self, fn: str, call: RawConstruct, payload: dict, live) -> tuple[str, SourceSpan, list[str | None], list[str]]:
        """Group tag, source span, positional slot node ids, extra input node ids."""
        callee = payload["callee"]
        line = call.span.line_start
        rec = self.local_defs.get(callee)
        if rec is not None:
            body = rec.payload().get("body", [rec.span.line_start, rec.span.line_end])
            source = line_span(rec.span.file_path, body[0], body[1])
            group = f"{callee}@L{line}"
        elif "." not in callee and callee in frontend._BUILTIN_NAMES:
            source = call.span
            group = f"{callee}@L{line}"
        else:
            source = call.span
            group = f"?{callee}@L{line}"

        slots: list[str | None] = []
        for slot in payload.get("argspec", []):
            if slot == "~":
                slots.append(None)
            elif slot.startswith("#"):
                slots.append(self._const_node(fn, slot[1:], call.span))
            else:
                slots.append(live(slot))
        used = {s for s in slots if s}
        extras: list[str] = []
        for name in payload.get("extras", []):
            nid = live(name)
            if nid and nid not in used:
                used.add(nid)
                extras.append(nid)
        return group, source, slots, extras

    def _is_foldable_builtin(self, payload: dict) -> bool:
        callee = payload.get("callee", "")
        return (
            "." not in callee
            and callee in frontend._BUILTIN_NAMES
            and callee not in self.local_defs
        )

    def _emit_assignment(self, stmt: _Stmt, fn: str, fq: str, live, bind) -> None:
        payload = stmt.payload
        # Resolve every input against pre-assignment versions before binding.
        inputs = [live(n) for n in payload.get("inputs", [])]
        inputs = [i for i in inputs if i]
        consts = [self._const_node(fn, lit, stmt.span) for lit in payload.get("consts", [])]

        call_edges = [
            (call, cp)
            for call, cp in zip(stmt.calls, stmt.call_payloads)
            if not self._is_foldable_builtin(cp)
        ]
        groups = [(call, cp, self._call_group(fn, call, cp, live)) for call, cp in call_edges]

        typ = payload.get("type")
        if typ is None and len(call_edges) == 1:
            rec = self.local_defs.get(call_edges[0][1]["callee"])
            if rec is not None:
                typ = rec.payload().get("returns")

        targets = [
            bind(t, "field" if "." in t else "local", typ, payload.get("schema"), stmt.span)
            for t in stmt.targets
        ]
        line = stmt.span.line_start

        covered: set[str] = set()
        for call, cp, (group, source, slots, extras) in groups:
            self.sites.append(
                CallSite(self.module, call.span.line_start, cp["callee"], group, targets[0], list(slots), call.span)
            )
            for src in list(slots) + list(extras):
                if src is None:
                    continue
                covered.add(src)
                for target in targets:
                    self._add_edge(src, target, "call", group, source, call.span)

        plain = [i for i in inputs + consts if i not in covered]
        group = f"={stmt.targets[0]}@L{line}" if stmt.targets else f"=@L{line}"
        for target in targets:
            for src in plain:
                self._add_edge(src, target, "assignment", group, stmt.span, stmt.span)

    def _emit_return(self, stmt: _Stmt, fn: str, fq: str, live, ensure_return) -> None:
        payload = stmt.payload
        target = ensure_return()
        line = stmt.span.line_start
        inputs = [live(n) for n in payload.get("inputs", [])]
        inputs = [i for i in inputs if i]
        consts = [self._const_node(fn, lit, stmt.span) for lit in payload.get("consts", [])]

        call_edges = [
            (call, cp)
            for call, cp in zip(stmt.calls, stmt.call_payloads)
            if not self._is_foldable_builtin(cp)
        ]
        covered: set[str] = set()
        for call, cp in call_edges:
            group, source, slots, extras = self._call_group(fn, call, cp, live)
            self.sites.append(
                CallSite(self.module, call.span.line_start, cp["callee"], group, target, list(slots), call.span)
            )
            for src in list(slots) + list(extras):
                if src is None:
                    continue
                covered.add(src)
                self._add_edge(src, target, "call", group, source, call.span)

        plain = [i for i in inputs + consts if i not in covered]
        for src in plain:
            self._add_edge(src, target, "return", f"return@L{line}", stmt.span, stmt.span)

    def _emit_unbound_call(self, stmt: _Stmt, fn: str, fq: str, live, bind) -> None:
        call = stmt.calls[0]
        payload = stmt.payload
        base = payload.get("base")
        group, source, slots, extras = self._call_group(fn, call, payload, live)
        line = call.span.line_start

        if base is not None and (old := live(base)) is not None and not old.startswith(f"{self.module}.{base}#"):
            # Unbound method call on a local state: model as in-place mutation.
            new = bind(base, "local", self.g.nodes[old].type, None, call.span)
            self.sites.append(CallSite(self.module, line, payload["callee"], group, new, list(slots), call.span))
            self._add_edge(old, new, "call", group, source, call.span)
            for src in list(slots) + extras:
                if src is None or src == old:
                    continue
                self._add_edge(src, new, "call", group, source, call.span)
            return

        callee_tail = payload["callee"].split(".")[-1]
        result = f"{fq}.{callee_tail}@L{line}"
        if f"{result}#0" not in self.g.nodes:
            self._add_node(
                DataNode(
                    id=f"{result}#0",
                    name=result,
                    kind="local",
                    meta=NodeMeta(line_span(call.span.file_path, line, call.span.line_end), fn),
                )
            )
        dst = f"{result}#0"
        self.sites.append(CallSite(self.module, line, payload["callee"], group, dst, list(slots), call.span))
        for src in list(slots) + extras:
            if src is None:
                continue
            self._add_edge(src, dst, "call", group, source, call.span)


def _literal_type(literal: str) -> str:
    try:
        value = ast.literal_eval(literal)
    except (ValueError, SyntaxError):
        return "unknown"
    return type(value).__name__


def build_module_graph(
    constructs: list[RawConstruct],
    guards: list[GuardInfo],
    module_name: str = "module",
    site_sink: list[CallSite] | None = None,
) -> Dtg:
    """Build one module's graph from its constructs and guards."""
    return _ModuleBuilder(constructs, guards, module_name, site_sink).build()


# ---------------------------------------------------------------------------
# Cross-module linkage
# ---------------------------------------------------------------------------


def _next_edge_id(g: Dtg, src: str, dst: str, line: int) -> str:
    prefix = f"{src}->{dst}@L{line}#"
    k = 0
    while f"{prefix}{k}" in g.edges:
        k += 1
    return f"{prefix}{k}"


def link_cross_module(per_module: list[Dtg], call_index: CallIndex) -> Dtg:
    """Merge module graphs and wire resolvable call sites to their callees."""
    merged = Dtg()
    for g in per_module:
        for node in g.nodes.values():
            merged.add_node(node)
    for g in per_module:
        for edge in g.edges.values():
            merged.add_edge(edge)

    by_group: dict[str, list[str]] = {}
    for eid in sorted(merged.edges):
        by_group.setdefault(merged.edges[eid].group, []).append(eid)

    for site in call_index.sites:
        rec = call_index.resolve(site.module, site.callee)
        if rec is None:
            continue
        clean_group = site.group.lstrip("?")
        body_span = line_span(rec.file, rec.body[0], rec.body[1])
        for eid in by_group.get(site.group, []):
            edge = merged.edges[eid]
            if edge.ref_file == site.ref_span:
                merged.replace_edge(replace(edge, group=clean_group, source=body_span))
        for k, src in enumerate(site.slot_srcs):
            if src is None or k >= len(rec.params):
                continue
            param_node = f"{rec.full_name}.{rec.params[k]}#0"
            if src == param_node:
                continue  # recursive call feeding a parameter back to itself
            if src not in merged.nodes or param_node not in merged.nodes:
                continue
            merged.add_edge(
                TransformEdge(
                    edge_id=_next_edge_id(merged, src, param_node, site.line),
                    src=src,
                    dst=param_node,
                    plane="call",
                    group=clean_group,
                    source=body_span,
                    ref_file=site.ref_span,
                )
            )
        ret_node = rec.return_node_id
        if ret_node == site.dst_node:
            continue  # recursive call in return position
        if ret_node in merged.nodes and site.dst_node in merged.nodes:
            merged.add_edge(
                TransformEdge(
                    edge_id=_next_edge_id(merged, ret_node, site.dst_node, site.line),
                    src=ret_node,
                    dst=site.dst_node,
                    plane="return",
                    group=clean_group,
                    source=body_span,
                    ref_file=site.ref_span,
                )
            )
    return merged


# ---------------------------------------------------------------------------
# Constraint attachment
# ---------------------------------------------------------------------------

def attach_constraints(g: Dtg, guards: list[GuardInfo]) -> Dtg:
    """Attach assert predicates to the state versions that flow out of them.

    Identifier tokens of the predicate are matched against bindings in the
    same file; the nearest preceding binding of each name gets the constraint.
    """
    for guard in sorted((gd for gd in guards if gd.kind == "assert"), key=lambda gd: gd.span.sort_key()):
        names = _IDENT_RE.findall(guard.condition_text)
        for name in dict.fromkeys(names):
            best: DataNode | None = None
            for node in g.nodes.values():
                if node.meta is None or node.meta.span.file_path != guard.span.file_path:
                    continue
                if node.kind not in ("argument", "local", "field"):
                    continue
                if node.name.rpartition(".")[2] != name:
                    continue
                if node.meta.span.line_start > guard.span.line_start:
                    continue
                key = (node.meta.span.line_start, node.version)
                if best is None or key > (best.meta.span.line_start, best.version):
                    best = node
            if best is not None:
                g.replace_node(best.with_constraint(guard.condition_text))
    return g


# ---------------------------------------------------------------------------
# Transformation summaries
# ---------------------------------------------------------------------------

_ASSIGN_SPLIT_RE = re.compile(r"(?<![=!<>+\-*/%&|^])=(?!=)")


def default_summarizer(edge: TransformEdge, code: str) -> str:
    """Deterministic template summary; a plugged model can replace this."""
    text = code.strip()
    if edge.plane == "call":
        return f"call: {edge.callee or text}"
    if edge.plane == "assignment":
        parts = _ASSIGN_SPLIT_RE.split(text.splitlines()[0], maxsplit=1)
        rhs = parts[1].strip() if len(parts) == 2 else text
        return f"assignment: {rhs}"
    if edge.plane == "return":
        first = text.splitlines()[0].strip()
        value = first[len("return"):].strip() if first.startswith("return") else first
        return f"return: {value}" if value else "return"
    return f"operator: {text.splitlines()[0]}"


def summarize_transformation(edge: TransformEdge, code: str, summarizer=default_summarizer) -> str:
    """Summarize one transformation; raises SummarizerFailure on empty input/output."""
    if not code or not code.strip():
        raise SummarizerFailure(f"no source text for edge {edge.edge_id}")
    try:
        text = summarizer(edge, code)
    except SummarizerFailure:
        raise
    except Exception as exc:
        raise SummarizerFailure(f"summarizer failed on {edge.edge_id}: {exc}") from exc
    if not text:
        raise SummarizerFailure(f"summarizer produced empty text for {edge.edge_id}")
    return text


def read_span(file_texts: dict[str, str], span: SourceSpan | None) -> str:
    if span is None or span.file_path not in file_texts:
        return ""
    lines = file_texts[span.file_path].split("\n")
    return "\n".join(lines[span.line_start - 1 : span.line_end])


def summarize_graph(g: Dtg, file_texts: dict[str, str], summarizer=default_summarizer) -> Dtg:
    """Fill every edge's semantics from its source span; unreadable spans stay empty."""
    for eid in sorted(g.edges):
        edge = g.edges[eid]
        code = read_span(file_texts, edge.source)
        if not code.strip():
            continue
        g.replace_edge(replace(edge, semantics=summarize_transformation(edge, code, summarizer)))
    return g


# ---------------------------------------------------------------------------
# Repository pipeline
# ---------------------------------------------------------------------------


@dataclass
class FileReport:
    path: str
    status: str  # ok | recovered | failed
    detail: str = ""


@dataclass
class RepoBuild:
    graph: Dtg
    manifest: dict
    reports: list[FileReport]
    call_index: CallIndex
    file_texts: dict[str, str]
    guards: list[GuardInfo]


def discover_files(repo_root: Path, extensions: tuple[str, ...]) -> list[str]:
    out = []
    for path in sorted(repo_root.rglob("*")):
        if not path.is_file() or path.suffix not in extensions:
            continue
        rel = path.relative_to(repo_root).as_posix()
        if any(part.startswith(".") or part == "__pycache__" for part in rel.split("/")):
            continue
        out.append(rel)
    return out


def build_repo(repo_root: str | Path, profile_name: str = "python", summarize: bool = True) -> RepoBuild:
    """Eager whole-repository build: parse, extract, build, link, constrain, summarize.

    The language profile is loaded from the profile root (overridable through
    the DTG_PROFILES environment variable).
    """
    repo_root = Path(repo_root)
    profile = frontend.load_profile(frontend.default_profile_root() / profile_name)
    files = discover_files(repo_root, profile.extensions)

    index = CallIndex()
    module_graphs: list[Dtg] = []
    reports: list[FileReport] = []
    file_texts: dict[str, str] = {}
    all_guards: list[GuardInfo] = []

    per_module: list[tuple[str, list[RawConstruct], list[GuardInfo]]] = []
    for rel in files:
        module = frontend.module_name_for(rel)
        try:
            parsed = frontend.parse_file(repo_root / rel, display_path=rel)
        except (EncodingFailure, IoFailure) as exc:
            reports.append(FileReport(rel, "failed", str(exc)))
            continue
        file_texts[rel] = parsed.source_for_segments()
        constructs = frontend.extract_constructs(parsed, None, module, profile)
        guards = frontend.extract_guards(parsed, None, profile)
        all_guards.extend(guards)
        index.add_module(module, constructs, scan_imports(parsed, module))
        per_module.append((module, constructs, guards))
        if parsed.errors:
            reports.append(FileReport(rel, "recovered", f"{len(parsed.errors)} unparseable region(s)"))
        else:
            reports.append(FileReport(rel, "ok"))

    for module, constructs, guards in per_module:
        module_graphs.append(build_module_graph(constructs, guards, module, site_sink=index.sites))

    graph = link_cross_module(module_graphs, index)
    graph = attach_constraints(graph, all_guards)
    if summarize:
        graph = summarize_graph(graph, file_texts)

    manifest = {
        "format_version": 1,
        "builder_version": "0.1.0",
        "profile": profile.language,
        "files": [r.path for r in reports if r.status != "failed"],
        "failed_files": [r.path for r in reports if r.status == "failed"],
        "node_count": len(graph.nodes),
        "edge_count": len(graph.edges),
    }
    return RepoBuild(graph, manifest, reports, index, file_texts, all_guards)


class LazyRepoGraph:
    """Per-module graphs built on first reference, then cached.

    ``module_graph`` parses and builds one module lazily; ``full`` links the
    whole repository eagerly (and reuses any cached module builds).
    """

    def __init__(self, repo_root: str | Path, profile_name: str = "python"):
        self.repo_root = Path(repo_root)
        self.profile = frontend.load_profile(frontend.default_profile_root() / profile_name)
        self.files = discover_files(self.repo_root, self.profile.extensions)
        self.modules = {frontend.module_name_for(rel): rel for rel in self.files}
        self.built: dict[str, Dtg] = {}
        self._full: RepoBuild | None = None

    def module_graph(self, module: str) -> Dtg:
        if module in self.built:
            return self.built[module]
        rel = self.modules[module]
        parsed = frontend.parse_file(self.repo_root / rel, display_path=rel)
        constructs = frontend.extract_constructs(parsed, None, module, self.profile)
        guards = frontend.extract_guards(parsed, None, self.profile)
        g = build_module_graph(constructs, guards, module)
        g = attach_constraints(g, guards)
        self.built[module] = g
        return g

    def full(self) -> RepoBuild:
        if self._full is None:
            self._full = build_repo(self.repo_root)
        return self._full
