"""Source frontend: parse files and extract the raw constructs the graph builder consumes.

Parsing uses the standard library grammar with line-granular error recovery:
on a syntax error the offending line range is blanked and parsing retries, so
a tree handle comes back even for broken files and only the damaged regions
drop out. Extraction is gated by a language profile (a directory of
``.scm``-style pattern files) selected by file extension, so further language
backends can slot in without touching the downstream graph layers.

Per-call state only; safe to use concurrently on different files.
"""

from __future__ import annotations

import ast
import builtins
import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .errors import EncodingFailure, IoFailure
from .spans import SourceSpan

CONSTRUCT_CATEGORIES = frozenset(
    {
        "FunctionDef",
        "Argument",
        "LocalAssignment",
        "Call",
        "Branch",
        "Return",
        "ExternalRef",
    }
)

GUARD_POLARITIES = frozenset({"taken", "not-taken", "unknown"})
GUARD_KINDS = frozenset({"branch", "loop", "assert"})

_BUILTIN_NAMES = frozenset(dir(builtins))

# Type-vocabulary names are annotation plumbing, not data references.
_TYPING_NAMES = frozenset(
    {
        "Any", "Optional", "Union", "List", "Dict", "Tuple", "Set", "FrozenSet",
        "Callable", "Iterable", "Iterator", "Sequence", "Mapping", "MutableMapping",
        "Type", "TypeVar", "Generic", "Protocol", "ClassVar", "Final", "Literal",
        "Annotated", "TypedDict", "NamedTuple", "NoReturn", "Never", "Self",
    }
)

_LITERAL_TYPES = {int: "int", float: "float", str: "str", bool: "bool", bytes: "bytes", complex: "complex"}
_CAST_BUILTINS = frozenset({"str", "int", "float", "bool", "list", "dict", "set", "tuple", "frozenset", "bytes"})


@dataclass(frozen=True)
class RawConstruct:
    """One extracted syntactic fact with its source span.

    ``detail`` is a category-specific payload: annotation text for Argument,
    condition text for Branch, and a compact JSON record for
    FunctionDef/LocalAssignment/Call/Return (see the ``payload`` helper).
    """

    category: str
    symbol: str
    enclosing_function: str
    span: SourceSpan
    detail: str = ""

    def __post_init__(self) -> None:
        if self.category not in CONSTRUCT_CATEGORIES:
            raise ValueError(f"unknown construct category {self.category!r}")
        if self.category in ("Argument", "LocalAssignment", "Return") and not self.enclosing_function:
            raise ValueError(f"{self.category} construct requires an enclosing function")

    def payload(self) -> dict:
        """Decode the JSON detail of structured categories."""
        return json.loads(self.detail) if self.detail else {}


@dataclass(frozen=True)
class GuardInfo:
    """A control-flow predicate guarding a source region."""

    condition_text: str
    span: SourceSpan
    polarity: str = "unknown"
    kind: str = "branch"

    def __post_init__(self) -> None:
        if not self.condition_text:
            raise ValueError("guard condition_text must be non-empty")
        if self.polarity not in GUARD_POLARITIES:
            raise ValueError(f"unknown polarity {self.polarity!r}")
        if self.kind not in GUARD_KINDS:
            raise ValueError(f"unknown guard kind {self.kind!r}")


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    message: str


@dataclass
class ParseResult:
    """Tree handle plus the regions that failed to parse."""

    path: str
    text: str
    tree: ast.Module
    errors: list[ParseError] = field(default_factory=list)
    recovered_text: str = ""

    def source_for_segments(self) -> str:
        return self.recovered_text or self.text


# ---------------------------------------------------------------------------
# Language profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LanguageProfile:
    """Extraction patterns for one language, loaded from profiles/<lang>/."""

    language: str
    extensions: tuple[str, ...]
    constructs: dict
    guards: dict

    def allows(self, category: str, node_kind: str) -> bool:
        return node_kind in self.constructs.get(category, ())

    def guard_allows(self, kind: str, node_kind: str) -> bool:
        return node_kind in self.guards.get(kind, ())


def _read_sexprs(text: str) -> list:
    """Tiny reader for the (head (item item ...)) pattern lines."""
    tokens: list[str] = []
    for raw_line in text.splitlines():
        line = raw_line.split(";")[0]
        tokens.extend(line.replace("(", " ( ").replace(")", " ) ").split())

    def read(pos: int):
        if tokens[pos] != "(":
            return tokens[pos], pos + 1
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            item, pos = read(pos)
            items.append(item)
        return items, pos + 1

    out = []
    pos = 0
    while pos < len(tokens):
        expr, pos = read(pos)
        out.append(expr)
    return out


def _pattern_map(path: Path) -> dict:
    mapping: dict = {}
    for expr in _read_sexprs(path.read_text(encoding="utf-8")):
        if not isinstance(expr, list) or len(expr) != 2:
            raise ValueError(f"bad pattern in {path}: {expr!r}")
        head, items = expr
        mapping[head] = frozenset(items if isinstance(items, list) else [items])
    return mapping


def default_profile_root() -> Path:
    override = os.environ.get("DTG_PROFILES")
    if override:
        return Path(override)
    return Path(__file__).parent / "profiles"


def load_profile(profile_dir: Path | str) -> LanguageProfile:
    profile_dir = Path(profile_dir)
    meta = json.loads((profile_dir / "profile.json").read_text(encoding="utf-8"))
    queries = profile_dir / "queries"
    return LanguageProfile(
        language=meta["language"],
        extensions=tuple(meta["extensions"]),
        constructs=_pattern_map(queries / "constructs.scm"),
        guards=_pattern_map(queries / "guards.scm"),
    )


def profile_for_path(path: str, profiles_root: Path | None = None) -> LanguageProfile | None:
    root = profiles_root or default_profile_root()
    ext = Path(path).suffix
    for candidate in sorted(p for p in root.iterdir() if p.is_dir()):
        if not (candidate / "profile.json").exists():
            continue
        profile = load_profile(candidate)
        if ext in profile.extensions:
            return profile
    return None


def python_profile() -> LanguageProfile:
    return load_profile(default_profile_root() / "python")


# ---------------------------------------------------------------------------
# Parsing with line-granular recovery
# ---------------------------------------------------------------------------


def parse_source(path: str, text: str | bytes) -> ParseResult:
    """Parse ``text`` and always come back with a tree handle.

    Unparseable regions are blanked line by line and reported in
    ``errors``; the surviving statements parse normally.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingFailure(f"{path}: not valid UTF-8: {exc}") from exc

    lines = text.split("\n")
    errors: list[ParseError] = []
    blanked: set[int] = set()
    work = list(lines)

    for _ in range(len(lines) + 5):
        source = "\n".join(work)
        try:
            tree = ast.parse(source)
            return ParseResult(path=path, text=text, tree=tree, errors=errors, recovered_text=source)
        except SyntaxError as exc:
            ls = exc.lineno or 1
            le = exc.end_lineno or ls
            if le < ls:
                le = ls
            ls = min(max(ls, 1), len(lines))
            le = min(max(le, ls), len(lines))
            region = range(ls, le + 1)
            if all(i in blanked for i in region):
                # The reported region is already gone; widen to make progress.
                candidates = [i for i in range(1, len(lines) + 1) if i not in blanked]
                if not candidates:
                    break
                ls = le = candidates[0]
                region = range(ls, le + 1)
            col = max(0, (exc.offset or 1) - 1)
            end_col = max(col, (exc.end_offset or exc.offset or 1) - 1)
            errors.append(
                ParseError(
                    span=SourceSpan(path, ls, le, col if ls == le else 0, end_col if ls == le else 0),
                    message=exc.msg or "syntax error",
                )
            )
            for i in region:
                work[i - 1] = ""
                blanked.add(i)

    # Nothing parseable survived.
    return ParseResult(path=path, text=text, tree=ast.Module(body=[], type_ignores=[]), errors=errors, recovered_text="")


def parse_file(path: str | Path, display_path: str | None = None) -> ParseResult:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return parse_source(display_path or str(path), raw)


def module_name_for(rel_path: str) -> str:
    parts = rel_path.replace("\\", "/").split("/")
    parts[-1] = parts[-1].rsplit(".", 1)[0]
    if parts[-1] == "__init__" and len(parts) > 1:
        parts = parts[:-1]
    return ".".join(p for p in parts if p)


# ---------------------------------------------------------------------------
# Construct extraction
# ---------------------------------------------------------------------------


def _node_span(path: str, node: ast.AST) -> SourceSpan:
    end_line = getattr(node, "end_lineno", None) or node.lineno
    end_col = getattr(node, "end_col_offset", None)
    if end_col is None:
        end_col = node.col_offset
    return SourceSpan(path, node.lineno, end_line, node.col_offset, end_col)


def _span_list(node: ast.AST) -> list[int]:
    """[line_start, col_start, line_end, col_end] for containment tests."""
    end_line = getattr(node, "end_lineno", None) or node.lineno
    end_col = getattr(node, "end_col_offset", None)
    if end_col is None:
        end_col = node.col_offset
    return [node.lineno, node.col_offset, end_line, end_col]


@lru_cache(maxsize=16)
def _source_lines(source: str) -> tuple[str, ...]:
    return tuple(source.split("\n"))


def _segment(source: str, node: ast.AST) -> str:
    """Verbatim source slice for a node; avoids re-splitting the file per call."""
    ls = getattr(node, "lineno", None)
    ce = getattr(node, "end_col_offset", None)
    if ls is None or ce is None:
        return ast.unparse(node)
    le = getattr(node, "end_lineno", None) or ls
    cs = node.col_offset
    lines = _source_lines(source)
    if ls == le:
        return lines[ls - 1][cs:ce]
    parts = [lines[ls - 1][cs:]]
    parts.extend(lines[ls:le - 1])
    parts.append(lines[le - 1][:ce])
    return "\n".join(parts)


def _dotted(expr: ast.AST) -> str | None:
    """'a.b.c' for an attribute chain rooted at a Name, else None."""
    parts: list[str] = []
    cur = expr
    while isinstance(cur, ast.Attribute):
        parts.append(cur.attr)
        cur = cur.value
    if isinstance(cur, ast.Name):
        parts.append(cur.id)
        parts.reverse()
        return ".".join(parts)
    return None


_COMP_TYPES = (ast.ListComp, ast.SetComp, ast.DictComp, ast.GeneratorExp)


def _target_names(node: ast.AST) -> list[str]:
    """Names bound by an assignment target, in source order."""
    if isinstance(node, ast.Name):
        return [node.id]
    if isinstance(node, (ast.Tuple, ast.List)):
        out: list[str] = []
        for elt in node.elts:
            out.extend(_target_names(elt))
        return out
    if isinstance(node, ast.Starred):
        return _target_names(node.value)
    return []


def _collect_loads(expr: ast.AST | None, shadow: frozenset[str], externals_ok) -> list[str]:
    """Data references in an expression, appearance order, deduplicated.

    Plain-name callee heads are dropped unless external (the call target is
    the edge, not an input); attribute-chain bases count as data.
    Comprehension and lambda bindings shadow the enclosing scope.
    """
    found: list[str] = []
    seen: set[str] = set()

    def add(name: str) -> None:
        if name not in shadow and name not in seen:
            seen.add(name)
            found.append(name)

    def walk(node: ast.AST, local_shadow: set[str]) -> None:
        if isinstance(node, ast.Call):
            func = node.func
            if isinstance(func, ast.Name):
                if externals_ok(func.id) and func.id not in local_shadow:
                    add(func.id)
            else:
                walk(func, local_shadow)
            for arg in node.args:
                walk(arg, local_shadow)
            for kw in node.keywords:
                walk(kw.value, local_shadow)
            return
        if isinstance(node, ast.Name):
            if isinstance(node.ctx, ast.Load) and node.id not in local_shadow:
                add(node.id)
            return
        if isinstance(node, ast.Lambda):
            inner = set(local_shadow)
            args = node.args
            for a in args.posonlyargs + args.args + args.kwonlyargs:
                inner.add(a.arg)
            if args.vararg:
                inner.add(args.vararg.arg)
            if args.kwarg:
                inner.add(args.kwarg.arg)
            walk(node.body, inner)
            return
        if isinstance(node, _COMP_TYPES):
            inner = set(local_shadow)
            for gen in node.generators:
                walk(gen.iter, inner)
                inner.update(_target_names(gen.target))
                for cond in gen.ifs:
                    walk(cond, inner)
            for fld in ("elt", "key", "value"):
                sub = getattr(node, fld, None)
                if sub is not None:
                    walk(sub, inner)
            return
        for child in ast.iter_child_nodes(node):
            walk(child, local_shadow)

    if expr is not None:
        walk(expr, set(shadow))
    return found


def _annotation_names(expr: ast.AST | None) -> list[str]:
    if expr is None:
        return []
    out = []
    for node in ast.walk(expr):
        if isinstance(node, ast.Name):
            out.append(node.id)
    return out


def _outermost_calls(expr: ast.AST | None) -> list[ast.Call]:
    """Calls not nested inside another call within the same expression."""
    if expr is None:
        return []
    out: list[ast.Call] = []

    def walk(node: ast.AST) -> None:
        if isinstance(node, ast.Call):
            out.append(node)
            return
        if isinstance(node, (ast.Lambda, *_COMP_TYPES)):
            return
        for child in ast.iter_child_nodes(node):
            walk(child)

    walk(expr)
    return out


def _literal_text(source: str, node: ast.AST) -> str | None:
    if isinstance(node, ast.Constant) and not isinstance(node.value, (bytes,)):
        return _segment(source, node)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub) and isinstance(node.operand, ast.Constant):
        return _segment(source, node)
    return None


def _infer_type(node: ast.AST | None) -> str | None:
    if node is None:
        return None
    if isinstance(node, ast.Constant):
        return _LITERAL_TYPES.get(type(node.value))
    if isinstance(node, ast.JoinedStr):
        return "str"
    if isinstance(node, ast.List):
        return "list"
    if isinstance(node, ast.Tuple):
        return "tuple"
    if isinstance(node, ast.Dict):
        return "dict"
    if isinstance(node, ast.Set):
        return "set"
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _CAST_BUILTINS:
        return node.func.id
    return None


def _dict_schema(source: str, node: ast.AST | None) -> dict | None:
    if not isinstance(node, ast.Dict):
        return None
    schema: dict = {}
    for key, value in zip(node.keys, node.values):
        if isinstance(key, ast.Constant) and isinstance(key.value, str):
            schema[key.value] = _infer_type(value) or "unknown"
    return schema or None


def _collect_bound_names(fn: ast.AST) -> set[str]:
    """Every name the function binds (params, assignments, loop/with/except targets)."""
    bound: set[str] = set()
    args = fn.args
    for a in args.posonlyargs + args.args + args.kwonlyargs:
        bound.add(a.arg)
    if args.vararg:
        bound.add(args.vararg.arg)
    if args.kwarg:
        bound.add(args.kwarg.arg)

    def walk(node: ast.AST) -> None:
        for child in ast.iter_child_nodes(node):
            if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef, ast.Lambda, ast.ClassDef)):
                if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                    bound.add(child.name)
                continue
            if isinstance(child, (ast.Assign, ast.AugAssign, ast.AnnAssign)):
                targets = child.targets if isinstance(child, ast.Assign) else [child.target]
                for tgt in targets:
                    bound.update(_target_names(tgt))
            elif isinstance(child, (ast.For, ast.AsyncFor)):
                bound.update(_target_names(child.target))
            elif isinstance(child, (ast.With, ast.AsyncWith)):
                for item in child.items:
                    if item.optional_vars is not None:
                        bound.update(_target_names(item.optional_vars))
            elif isinstance(child, ast.ExceptHandler) and child.name:
                bound.add(child.name)
            elif isinstance(child, ast.NamedExpr):
                bound.update(_target_names(child.target))
            elif isinstance(child, (ast.Import, ast.ImportFrom)):
                for alias in child.names:
                    bound.add((alias.asname or alias.name).split(".")[0])
            walk(child)

    walk(fn)
    return bound


def extract_constructs(
    parsed: ParseResult,
    text: str | None = None,
    module_name: str = "module",
    profile: LanguageProfile | None = None,
) -> list[RawConstruct]:
    """Extract the raw constructs of one module, ordered by source position."""
    profile = profile or python_profile()
    source = parsed.source_for_segments() if text is None else text
    path = parsed.path

    module_defs = {
        n.name for n in parsed.tree.body if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef))
    }
    constructs: list[RawConstruct] = []
    external_seen: set[str] = set()

    def is_external(name: str, fn_bound: set[str]) -> bool:
        return (
            name not in fn_bound
            and name not in module_defs
            and name not in _BUILTIN_NAMES
            and name not in _TYPING_NAMES
        )

    def note_external(name: str, fn: str, node: ast.AST, fn_bound: set[str]) -> None:
        if not profile.allows("ExternalRef", "Name"):
            return
        if name in external_seen or not is_external(name, fn_bound):
            return
        external_seen.add(name)
        constructs.append(
            RawConstruct(
                category="ExternalRef",
                symbol=name,
                enclosing_function=fn,
                span=_node_span(path, node),
            )
        )

    def emit_call(node: ast.Call, fn: str, fn_bound: set[str]) -> None:
        if not profile.allows("Call", type(node).__name__):
            return
        callee = _dotted(node.func) or "<dynamic>"
        argspec: list[str] = []
        for arg in node.args:
            if isinstance(arg, ast.Starred):
                argspec.append("~")
            elif isinstance(arg, ast.Name):
                argspec.append(arg.id)
            else:
                lit = _literal_text(source, arg)
                argspec.append(f"#{lit}" if lit is not None else "~")
        externals_ok = lambda n: is_external(n, fn_bound)
        extras = [n for n in _collect_loads(node, frozenset(), externals_ok) if n not in set(argspec)]
        base = None
        if isinstance(node.func, ast.Attribute):
            chain = _dotted(node.func)
            if chain:
                base = chain.split(".")[0]
        detail = json.dumps(
            {"callee": callee, "argspec": argspec, "extras": extras, "base": base},
            separators=(",", ":"),
        )
        constructs.append(
            RawConstruct(
                category="Call",
                symbol=callee,
                enclosing_function=fn,
                span=_node_span(path, node),
                detail=detail,
            )
        )
        for name in _collect_loads(node, frozenset(), externals_ok):
            if is_external(name, fn_bound):
                note_external(name, fn, node, fn_bound)

    def emit_value_expr(value: ast.AST | None, fn: str, fn_bound: set[str], calls: bool = True) -> None:
        """Call constructs and external notes for one statement's value expression."""
        if value is None:
            return
        if calls:
            for call in _outermost_calls(value):
                emit_call(call, fn, fn_bound)
        externals_ok = lambda n: is_external(n, fn_bound)
        for name in _collect_loads(value, frozenset(), externals_ok):
            if is_external(name, fn_bound):
                note_external(name, fn, value, fn_bound)

    def walk_function(fn_node: ast.AST, dotted_fn: str, parent_fn: str) -> None:
        fn_bound = _collect_bound_names(fn_node)
        externals_ok = lambda n: is_external(n, fn_bound)

        body = fn_node.body
        returns_text = _segment(source, fn_node.returns) if fn_node.returns is not None else None
        detail = json.dumps(
            {"returns": returns_text, "body": [body[0].lineno, body[-1].end_lineno or body[-1].lineno]},
            separators=(",", ":"),
        )
        if profile.allows("FunctionDef", type(fn_node).__name__):
            constructs.append(
                RawConstruct(
                    category="FunctionDef",
                    symbol=dotted_fn,
                    enclosing_function=parent_fn,
                    span=_node_span(path, fn_node),
                    detail=detail,
                )
            )

        args = fn_node.args
        for a in args.posonlyargs + args.args + args.kwonlyargs + [x for x in (args.vararg, args.kwarg) if x]:
            if not profile.allows("Argument", "arg"):
                break
            ann = _segment(source, a.annotation) if a.annotation is not None else ""
            constructs.append(
                RawConstruct(
                    category="Argument",
                    symbol=a.arg,
                    enclosing_function=dotted_fn,
                    span=_node_span(path, a),
                    detail=ann,
                )
            )
            for name in _annotation_names(a.annotation):
                note_external(name, dotted_fn, a.annotation, fn_bound)
        for name in _annotation_names(fn_node.returns):
            note_external(name, dotted_fn, fn_node.returns, fn_bound)

        def emit_assignment(stmt: ast.stmt, targets: list[str], value: ast.AST | None, ann: str | None) -> None:
            inputs = _collect_loads(value, frozenset(), externals_ok)
            if isinstance(stmt, ast.AugAssign):
                tgt_names = _target_names(stmt.target)
                inputs = [n for n in tgt_names if n] + [n for n in inputs if n not in tgt_names]
            consts: list[str] = []
            if value is not None:
                lit = _literal_text(source, value)
                if lit is not None:
                    consts.append(lit)
            inferred = ann or _infer_type(value)
            schema = _dict_schema(source, value)
            rhs = _segment(source, value) if value is not None else ""
            payload = json.dumps(
                {
                    "inputs": inputs,
                    "consts": consts,
                    "type": inferred,
                    "schema": schema,
                    "rhs": rhs,
                    "value_span": _span_list(value) if value is not None else None,
                },
                separators=(",", ":"),
            )
            for tname in targets:
                constructs.append(
                    RawConstruct(
                        category="LocalAssignment",
                        symbol=tname,
                        enclosing_function=dotted_fn,
                        span=_node_span(path, stmt),
                        detail=payload,
                    )
                )

        def walk_stmts(stmts: list[ast.stmt]) -> None:
            for stmt in stmts:
                kind = type(stmt).__name__
                if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    walk_function(stmt, f"{dotted_fn}.{stmt.name}", dotted_fn)
                    continue
                if isinstance(stmt, ast.ClassDef):
                    walk_class(stmt, f"{dotted_fn}.{stmt.name}", dotted_fn)
                    continue
                if isinstance(stmt, ast.Assign) and profile.allows("LocalAssignment", kind):
                    names: list[str] = []
                    for tgt in stmt.targets:
                        names.extend(_target_names(tgt))
                        if not names and (d := _dotted(tgt)):
                            names.append(d)
                    emit_assignment(stmt, names, stmt.value, None)
                    emit_value_expr(stmt.value, dotted_fn, fn_bound)
                elif isinstance(stmt, ast.AugAssign) and profile.allows("LocalAssignment", kind):
                    names = _target_names(stmt.target) or ([d] if (d := _dotted(stmt.target)) else [])
                    emit_assignment(stmt, names, stmt.value, None)
                    emit_value_expr(stmt.value, dotted_fn, fn_bound)
                elif isinstance(stmt, ast.AnnAssign) and profile.allows("LocalAssignment", kind):
                    ann_text = _segment(source, stmt.annotation)
                    for name in _annotation_names(stmt.annotation):
                        note_external(name, dotted_fn, stmt.annotation, fn_bound)
                    if stmt.value is not None:
                        names = _target_names(stmt.target) or ([d] if (d := _dotted(stmt.target)) else [])
                        emit_assignment(stmt, names, stmt.value, ann_text)
                        emit_value_expr(stmt.value, dotted_fn, fn_bound)
                elif isinstance(stmt, ast.Return):
                    if profile.allows("Return", kind):
                        inputs = _collect_loads(stmt.value, frozenset(), externals_ok)
                        consts = []
                        if stmt.value is not None and (lit := _literal_text(source, stmt.value)) is not None:
                            consts.append(lit)
                        payload = json.dumps(
                            {
                                "inputs": inputs,
                                "consts": consts,
                                "rhs": _segment(source, stmt.value) if stmt.value is not None else "",
                                "value_span": _span_list(stmt.value) if stmt.value is not None else None,
                            },
                            separators=(",", ":"),
                        )
                        constructs.append(
                            RawConstruct(
                                category="Return",
                                symbol="",
                                enclosing_function=dotted_fn,
                                span=_node_span(path, stmt),
                                detail=payload,
                            )
                        )
                    emit_value_expr(stmt.value, dotted_fn, fn_bound)
                elif isinstance(stmt, ast.If):
                    if profile.allows("Branch", kind):
                        constructs.append(
                            RawConstruct(
                                category="Branch",
                                symbol="",
                                enclosing_function=dotted_fn,
                                span=_node_span(path, stmt),
                                detail=_segment(source, stmt.test),
                            )
                        )
                    emit_value_expr(stmt.test, dotted_fn, fn_bound)
                    walk_stmts(stmt.body)
                    walk_stmts(stmt.orelse)
                elif isinstance(stmt, ast.While):
                    if profile.allows("Branch", kind):
                        constructs.append(
                            RawConstruct(
                                category="Branch",
                                symbol="",
                                enclosing_function=dotted_fn,
                                span=_node_span(path, stmt),
                                detail=_segment(source, stmt.test),
                            )
                        )
                    emit_value_expr(stmt.test, dotted_fn, fn_bound)
                    walk_stmts(stmt.body)
                    walk_stmts(stmt.orelse)
                elif isinstance(stmt, (ast.For, ast.AsyncFor)):
                    cond = f"{_segment(source, stmt.target)} in {_segment(source, stmt.iter)}"
                    if profile.allows("Branch", kind):
                        constructs.append(
                            RawConstruct(
                                category="Branch",
                                symbol="",
                                enclosing_function=dotted_fn,
                                span=_node_span(path, stmt),
                                detail=cond,
                            )
                        )
                    if profile.allows("LocalAssignment", kind):
                        inputs = _collect_loads(stmt.iter, frozenset(), externals_ok)
                        payload = json.dumps(
                            {
                                "inputs": inputs,
                                "consts": [],
                                "type": None,
                                "schema": None,
                                "rhs": _segment(source, stmt.iter),
                                "value_span": _span_list(stmt.iter),
                            },
                            separators=(",", ":"),
                        )
                        for tname in _target_names(stmt.target):
                            constructs.append(
                                RawConstruct(
                                    category="LocalAssignment",
                                    symbol=tname,
                                    enclosing_function=dotted_fn,
                                    span=_node_span(path, stmt),
                                    detail=payload,
                                )
                            )
                    emit_value_expr(stmt.iter, dotted_fn, fn_bound)
                    walk_stmts(stmt.body)
                    walk_stmts(stmt.orelse)
                elif isinstance(stmt, ast.Expr):
                    emit_value_expr(stmt.value, dotted_fn, fn_bound)
                elif isinstance(stmt, ast.Assert):
                    # Assert predicates become guards/constraints, not Call constructs.
                    emit_value_expr(stmt.test, dotted_fn, fn_bound, calls=False)
                    if stmt.msg is not None:
                        emit_value_expr(stmt.msg, dotted_fn, fn_bound, calls=False)
                elif isinstance(stmt, (ast.With, ast.AsyncWith)):
                    for item in stmt.items:
                        emit_value_expr(item.context_expr, dotted_fn, fn_bound)
                    walk_stmts(stmt.body)
                elif isinstance(stmt, ast.Try):
                    walk_stmts(stmt.body)
                    for handler in stmt.handlers:
                        walk_stmts(handler.body)
                    walk_stmts(stmt.orelse)
                    walk_stmts(stmt.finalbody)
                elif isinstance(stmt, (ast.Raise,)):
                    if stmt.exc is not None:
                        emit_value_expr(stmt.exc, dotted_fn, fn_bound)

        walk_stmts(fn_node.body)

    def walk_class(cls_node: ast.ClassDef, dotted_cls: str, parent_fn: str) -> None:
        for stmt in cls_node.body:
            if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
                walk_function(stmt, f"{dotted_cls}.{stmt.name}", parent_fn)
            elif isinstance(stmt, ast.ClassDef):
                walk_class(stmt, f"{dotted_cls}.{stmt.name}", parent_fn)

    for top in parsed.tree.body:
        if isinstance(top, (ast.FunctionDef, ast.AsyncFunctionDef)):
            walk_function(top, top.name, "")
        elif isinstance(top, ast.ClassDef):
            walk_class(top, top.name, "")

    constructs.sort(key=lambda c: (c.span.line_start, c.span.col_start, c.category, c.symbol))
    return constructs


# ---------------------------------------------------------------------------
# Guard extraction
# ---------------------------------------------------------------------------


def _region_span(path: str, stmts: list[ast.stmt]) -> SourceSpan:
    first, last = stmts[0], stmts[-1]
    end_line = getattr(last, "end_lineno", None) or last.lineno
    end_col = getattr(last, "end_col_offset", None) or last.col_offset
    return SourceSpan(path, first.lineno, end_line, first.col_offset, end_col)


def extract_guards(
    parsed: ParseResult,
    text: str | None = None,
    profile: LanguageProfile | None = None,
) -> list[GuardInfo]:
    """One guard per controlled region; asserts guard everything downstream of them."""
    profile = profile or python_profile()
    source = parsed.source_for_segments() if text is None else text
    path = parsed.path
    guards: list[GuardInfo] = []

    def walk(stmts: list[ast.stmt]) -> None:
        for stmt in stmts:
            kind = type(stmt).__name__
            if isinstance(stmt, ast.If) and profile.guard_allows("branch", kind):
                cond = _segment(source, stmt.test)
                guards.append(GuardInfo(cond, _region_span(path, stmt.body), "taken", "branch"))
                if stmt.orelse:
                    guards.append(GuardInfo(cond, _region_span(path, stmt.orelse), "not-taken", "branch"))
                walk(stmt.body)
                walk(stmt.orelse)
            elif isinstance(stmt, ast.While) and profile.guard_allows("loop", kind):
                guards.append(GuardInfo(_segment(source, stmt.test), _region_span(path, stmt.body), "taken", "loop"))
                walk(stmt.body)
                walk(stmt.orelse)
            elif isinstance(stmt, (ast.For, ast.AsyncFor)) and profile.guard_allows("loop", kind):
                cond = f"{_segment(source, stmt.target)} in {_segment(source, stmt.iter)}"
                guards.append(GuardInfo(cond, _region_span(path, stmt.body), "taken", "loop"))
                walk(stmt.body)
                walk(stmt.orelse)
            elif isinstance(stmt, ast.Assert) and profile.guard_allows("assert", kind):
                guards.append(
                    GuardInfo(_segment(source, stmt.test), _node_span(path, stmt), "taken", "assert")
                )
            elif isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                walk(stmt.body)
            elif isinstance(stmt, (ast.With, ast.AsyncWith)):
                walk(stmt.body)
            elif isinstance(stmt, ast.Try):
                walk(stmt.body)
                for handler in stmt.handlers:
                    walk(handler.body)
                walk(stmt.orelse)
                walk(stmt.finalbody)

    walk(parsed.tree.body)
    guards.sort(key=lambda g: (g.span.line_start, g.span.col_start, g.polarity))
    return guards
