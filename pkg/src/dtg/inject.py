"""Synthetic fault injection: mutate a repository copy and record ground truth.

Four fault classes, all applied by minimal text surgery so the mutated
repository still parses and rebuilds into a valid graph. The ground-truth
record names the edges of the rebuilt (mutated) graph a localizer should
find; for dropped calls it also keeps the removed edge id as provenance,
since that edge no longer exists after the mutation.
"""

from __future__ import annotations

import ast
import builtins
import random
import re
import shutil
from dataclasses import dataclass
from pathlib import Path

from .builder import build_repo
from .errors import NoInjectableSite
from .model import Dtg

FAULT_CLASSES = ("off_by_one", "dropped_call", "swapped_args", "inverted_guard")

_BUILTINS = frozenset(dir(builtins))


@dataclass(frozen=True)
class _Site:
    file: str
    line: int
    col: int
    kind: str
    data: tuple


def _functions(tree: ast.Module):
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            yield node


def _single_line(node: ast.AST) -> bool:
    return getattr(node, "end_lineno", node.lineno) == node.lineno


def _collect_sites(repo: Path, fault_class: str) -> list[_Site]:
    sites: list[_Site] = []
    for path in sorted(repo.rglob("*.py")):
        rel = path.relative_to(repo).as_posix()
        try:
            tree = ast.parse(path.read_text(encoding="utf-8"))
        except (OSError, SyntaxError, UnicodeDecodeError):
            continue
        for fn in _functions(tree):
            fn_end = fn.end_lineno or fn.lineno
            for stmt in ast.walk(fn):
                if fault_class == "off_by_one" and isinstance(stmt, (ast.Assign, ast.AugAssign)):
                    for sub in ast.walk(stmt.value):
                        if (
                            isinstance(sub, ast.Constant)
                            and type(sub.value) is int
                            and _single_line(sub)
                        ):
                            sites.append(
                                _Site(rel, stmt.lineno, stmt.col_offset, "off_by_one",
                                      (sub.lineno, sub.col_offset, sub.end_col_offset, sub.value))
                            )
                            break
                elif fault_class == "swapped_args" and isinstance(stmt, ast.Call):
                    if (
                        len(stmt.args) >= 2
                        and isinstance(stmt.args[0], ast.Name)
                        and isinstance(stmt.args[1], ast.Name)
                        and stmt.args[0].id != stmt.args[1].id
                        and stmt.args[0].lineno == stmt.args[1].lineno
                        and _single_line(stmt.args[0])
                        and _single_line(stmt.args[1])
                    ):
                        a, b = stmt.args[0], stmt.args[1]
                        sites.append(
                            _Site(rel, stmt.lineno, stmt.col_offset, "swapped_args",
                                  (a.lineno, a.col_offset, a.end_col_offset, a.id,
                                   b.col_offset, b.end_col_offset, b.id))
                        )
                elif fault_class == "inverted_guard" and isinstance(stmt, ast.If):
                    if _single_line(stmt.test):
                        sites.append(
                            _Site(rel, stmt.lineno, stmt.col_offset, "inverted_guard",
                                  (stmt.test.lineno, stmt.test.col_offset, stmt.test.end_col_offset))
                        )
                elif fault_class == "dropped_call" and isinstance(stmt, ast.Assign):
                    if (
                        len(stmt.targets) == 1
                        and isinstance(stmt.targets[0], ast.Name)
                        and isinstance(stmt.value, ast.Call)
                        and isinstance(stmt.value.func, ast.Name)
                        and stmt.value.func.id not in _BUILTINS
                        and len(stmt.value.args) == 1
                        and isinstance(stmt.value.args[0], ast.Name)
                        and not stmt.value.keywords
                        and stmt.targets[0].id != stmt.value.args[0].id
                        and _single_line(stmt)
                    ):
                        target = stmt.targets[0].id
                        later_uses = _later_use_lines(fn, target, stmt.lineno, fn_end)
                        if later_uses:
                            sites.append(
                                _Site(rel, stmt.lineno, stmt.col_offset, "dropped_call",
                                      (target, stmt.value.args[0].id, stmt.value.func.id, tuple(later_uses), fn_end))
                            )
    return sorted(dict.fromkeys(sites), key=lambda s: (s.file, s.line, s.col, s.data))


def _later_use_lines(fn: ast.AST, name: str, after_line: int, fn_end: int) -> list[int]:
    lines = set()
    for node in ast.walk(fn):
        if isinstance(node, ast.Name) and node.id == name and isinstance(node.ctx, ast.Load):
            if after_line < node.lineno <= fn_end:
                lines.add(node.lineno)
    return sorted(lines)


def _apply(site: _Site, text: str) -> tuple[str, dict]:
    lines = text.split("\n")

    def splice(line_no: int, col_a: int, col_b: int, replacement: str) -> None:
        ln = lines[line_no - 1]
        lines[line_no - 1] = ln[:col_a] + replacement + ln[col_b:]

    info: dict = {"fault_class": site.kind, "file": site.file, "line": site.line}
    if site.kind == "off_by_one":
        lit_line, col_a, col_b, value = site.data
        splice(lit_line, col_a, col_b, str(value + 1))
        info["description"] = f"integer literal {value} bumped to {value + 1}"
    elif site.kind == "swapped_args":
        line_no, a0, a1, name_a, b0, b1, name_b = site.data
        # Replace right-most first so offsets stay valid.
        splice(line_no, b0, b1, name_a)
        splice(line_no, a0, a1, name_b)
        info["description"] = f"arguments {name_a} and {name_b} swapped"
    elif site.kind == "inverted_guard":
        line_no, col_a, col_b = site.data
        original = lines[line_no - 1][col_a:col_b]
        splice(line_no, col_a, col_b, f"not ({original})")
        info["description"] = f"guard inverted: not ({original})"
        info["inverted_condition"] = f"not ({original})"
    elif site.kind == "dropped_call":
        target, source_name, callee, later_uses, fn_end = site.data
        lines[site.line - 1] = ""
        pattern = re.compile(rf"\b{re.escape(target)}\b")
        for line_no in range(site.line + 1, min(fn_end, len(lines)) + 1):
            lines[line_no - 1] = pattern.sub(source_name, lines[line_no - 1])
        info["description"] = f"call to {callee} dropped; {target} uses now receive {source_name}"
        info["dropped_callee"] = callee
        info["first_use_line"] = later_uses[0]
    return "\n".join(lines), info


def _edges_at_line(g: Dtg, file: str, line: int) -> list[str]:
    out = [
        eid
        for eid, e in g.edges.items()
        if e.ref_file is not None and e.ref_file.file_path == file and e.ref_file.line_start == line
    ]
    return sorted(out)


def _ground_truth_edges(g: Dtg, info: dict) -> list[str]:
    if info["fault_class"] == "inverted_guard":
        wanted = info["inverted_condition"]
        return sorted(
            eid for eid, e in g.edges.items()
            if e.guard is not None and e.guard.condition_text == wanted
            and e.ref_file is not None and e.ref_file.file_path == info["file"]
        )
    if info["fault_class"] == "dropped_call":
        return _edges_at_line(g, info["file"], info["first_use_line"])
    return _edges_at_line(g, info["file"], info["line"])


def inject_fault(repo_path: str | Path, fault_class: str, seed: int, out_repo: str | Path) -> dict:
    """Copy the repo, apply one seeded mutation, and return the ground-truth record."""
    if fault_class not in FAULT_CLASSES:
        raise ValueError(f"fault_class must be one of {FAULT_CLASSES}")
    repo_path = Path(repo_path)
    out_repo = Path(out_repo)

    sites = _collect_sites(repo_path, fault_class)
    if not sites:
        raise NoInjectableSite(f"no {fault_class} site in {repo_path}")

    rng = random.Random(seed)
    ordered = rng.sample(sites, len(sites))

    original = build_repo(repo_path)
    for site in ordered:
        src_file = repo_path / site.file
        mutated_text, info = _apply(site, src_file.read_text(encoding="utf-8"))
        try:
            ast.parse(mutated_text)
        except SyntaxError:
            continue

        if out_repo.exists():
            shutil.rmtree(out_repo)
        shutil.copytree(repo_path, out_repo)
        (out_repo / site.file).write_text(mutated_text, encoding="utf-8")

        rebuilt = build_repo(out_repo)
        if not rebuilt.graph.validate().ok():
            continue
        gt = _ground_truth_edges(rebuilt.graph, info)
        if not gt:
            continue

        record = {
            "fault_class": fault_class,
            "seed": seed,
            "file": info["file"],
            "line": info["line"],
            "description": info["description"],
            "edge_ids": gt,
        }
        if fault_class == "dropped_call":
            removed = _edges_at_line(original.graph, info["file"], info["line"])
            record["removed_edge"] = removed[0] if removed else ""
        return record

    raise NoInjectableSite(f"no viable {fault_class} site in {repo_path}")
