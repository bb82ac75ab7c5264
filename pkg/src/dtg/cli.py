"""Command-line surface: build graphs, query them, localize, inject, evaluate.

Exit codes: 0 success, 1 partial failure (some files skipped), 2 invalid
inputs or malformed data, 3 localization stopped without convergence
(budget or search space exhausted; the report is still written). All
outputs are deterministic given flags and seeds; machine-readable files
are line-delimited records.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .builder import build_repo
from .config import PolicyConfig
from .corpus import load_corpus
from .errors import DtgError, FormatError, IoFailure, NoInjectableSite
from .inject import FAULT_CLASSES, inject_fault
from .localize import EvalConfig
from .model import Dtg
from .nav import load_trace
from .store import AttrIndex, SemanticIndex, load_graph, save_graph


def _print_build_summary(g: Dtg, out) -> None:
    print(f"nodes total {len(g.nodes)}", file=out)
    kinds: dict[str, int] = {}
    for node in g.nodes.values():
        kinds[node.kind] = kinds.get(node.kind, 0) + 1
    for kind in sorted(kinds):
        print(f"nodes kind={kind} {kinds[kind]}", file=out)
    print(f"edges total {len(g.edges)}", file=out)
    planes: dict[str, int] = {}
    for edge in g.edges.values():
        planes[edge.plane] = planes.get(edge.plane, 0) + 1
    for plane in sorted(planes):
        print(f"edges plane={plane} {planes[plane]}", file=out)


def cmd_build(args) -> int:
    repo = Path(args.repo)
    if not repo.is_dir():
        print(f"error: repo path {repo} is not a directory", file=sys.stderr)
        return 2
    try:
        build = build_repo(repo, profile_name=args.profile)
    except (OSError, ValueError) as exc:
        print(f"error: cannot load profile {args.profile!r}: {exc}", file=sys.stderr)
        return 2
    failed = [r for r in build.reports if r.status == "failed"]
    parsed = [r for r in build.reports if r.status != "failed"]
    if build.reports and not parsed:
        print("error: no file in the repository could be parsed", file=sys.stderr)
        for r in failed:
            print(f"failed {r.path}: {r.detail}", file=sys.stderr)
        return 2
    manifest = dict(build.manifest)
    manifest.update(save_graph(build.graph, args.out))
    Path(str(args.out) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _print_build_summary(build.graph, sys.stdout)
    for r in failed:
        print(f"failed {r.path}: {r.detail}", file=sys.stderr)
    return 1 if failed else 0


def cmd_query(args) -> int:
    try:
        g = load_graph(args.graph)
    except (FormatError, IoFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.semantic is not None:
        idx = SemanticIndex.build(g)
        try:
            results = idx.search(args.semantic, args.k)
        except DtgError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for ident, score in results:
            print(f"{ident}\t{score:.6f}")
        return 0
    selectors = []
    if args.kind:
        selectors.append(f"kind={args.kind}")
    if args.plane:
        selectors.append(f"plane={args.plane}")
    if args.name:
        selectors.append(f"name={args.name}")
    if not selectors:
        print("error: provide --kind, --plane, --name, or --semantic", file=sys.stderr)
        return 2
    idx = AttrIndex.build(g)
    try:
        results_sets = [set(idx.lookup(sel)) for sel in selectors]
    except DtgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    hits = sorted(set.intersection(*results_sets))
    for ident in hits:
        print(ident)
    return 0


def _resolve_entries(g: Dtg, selector: str) -> list[str]:
    if "=" in selector:
        return AttrIndex.build(g).lookup(selector)
    entries = [s for s in selector.split(",") if s]
    return entries


def cmd_localize(args) -> int:
    from .localize import default_scorer, localize

    try:
        g = load_graph(args.graph)
    except (FormatError, IoFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    overlay = None
    if args.trace:
        try:
            overlay = load_trace(args.trace, Path(args.trace).stem, g)
        except (FormatError, IoFailure) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    config = PolicyConfig.from_file(args.config) if args.config else PolicyConfig()
    if args.budget is not None:
        config = config.with_overrides(budget=args.budget)
    if args.seed is not None:
        config = config.with_overrides(seed=args.seed)
    try:
        entries = _resolve_entries(g, args.entry)
        for nid in entries:
            g.node(nid)
    except DtgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not entries:
        print("error: entry selector matched no nodes", file=sys.stderr)
        return 2
    report = localize(g, entries, overlay, default_scorer(g, config), config.budget, config.seed, config)

    lines = [
        json.dumps(
            {
                "nodes_visited": report.nodes_visited,
                "budget_spent": report.budget_spent,
                "converged": report.converged,
            }
        )
    ]
    for eid, score in report.ranked_suspects:
        edge = g.edges[eid]
        span = edge.ref_file
        lines.append(
            json.dumps(
                {
                    "edge_id": eid,
                    "score": round(score, 6),
                    "plane": edge.plane,
                    "group": edge.group,
                    "file": span.file_path if span else "",
                    "line": span.line_start if span else 0,
                }
            )
        )
    payload = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    for raw in lines[1 : 1 + args.top]:
        record = json.loads(raw)
        print(f"{record['score']:.6f}  {record['file']}:{record['line']}  {record['edge_id']}")
    print(f"visited {report.nodes_visited} nodes, spent {report.budget_spent}, converged {report.converged}")
    return 0 if report.converged else 3


def cmd_inject(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        record = inject_fault(args.repo, args.fault, args.seed, out / "repo")
    except NoInjectableSite as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    (out / "ground_truth.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{record['fault_class']} at {record['file']}:{record['line']}")
    for eid in record["edge_ids"]:
        print(f"ground-truth {eid}")
    return 0


def cmd_eval(args) -> int:
    from .localize import evaluate, oracle_scorer

    try:
        loaded = load_corpus(args.corpus)
    except (ValueError, DtgError, OSError, json.JSONDecodeError) as exc:
        print(f"error: malformed corpus: {exc}", file=sys.stderr)
        return 2
    instances = [inst for inst, _ in loaded]
    base = PolicyConfig.from_file(args.configs) if args.configs else PolicyConfig()
    configs = [
        EvalConfig(name="full", kind="mcts", policy=base),
        EvalConfig(name="budget_starved", kind="mcts", policy=base.with_overrides(budget=3)),
        EvalConfig(name="file_first", kind="file_first", policy=base),
    ]
    if args.oracle:
        gt_by_name = {inst.name: inst.ground_truth for inst in instances}
        configs.insert(
            0,
            EvalConfig(
                name="oracle",
                kind="mcts",
                policy=base.with_overrides(budget=max(base.budget, 2000)),
                scorer_factory=lambda inst: oracle_scorer(gt_by_name[inst.name]),
            ),
        )
    rows = evaluate(instances, configs)
    header = "config\ttop1\ttop5\tmean_nodes_visited\tmean_budget"
    out_lines = [header]
    for row in rows:
        out_lines.append(
            f"{row.config}\t{row.top1:.3f}\t{row.top5:.3f}\t{row.mean_nodes_visited:.2f}\t{row.mean_budget:.2f}"
        )
    payload = "\n".join(out_lines) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    print(payload, end="")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dtg", description="Data transformation graphs for repositories")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a graph from a repository")
    p_build.add_argument("--repo", required=True)
    p_build.add_argument("--out", required=True)
    p_build.add_argument("--profile", default="python")
    p_build.set_defaults(func=cmd_build)

    p_query = sub.add_parser("query", help="query a saved graph")
    p_query.add_argument("--graph", required=True)
    p_query.add_argument("--kind")
    p_query.add_argument("--plane")
    p_query.add_argument("--name")
    p_query.add_argument("--semantic")
    p_query.add_argument("--k", type=int, default=10)
    p_query.set_defaults(func=cmd_query)

    p_loc = sub.add_parser("localize", help="rank suspect transformations")
    p_loc.add_argument("--graph", required=True)
    p_loc.add_argument("--entry", required=True, help="comma-separated node ids or an attr=value selector")
    p_loc.add_argument("--trace")
    p_loc.add_argument("--config")
    p_loc.add_argument("--budget", type=int)
    p_loc.add_argument("--seed", type=int)
    p_loc.add_argument("--out")
    p_loc.add_argument("--top", type=int, default=5)
    p_loc.set_defaults(func=cmd_localize)

    p_inj = sub.add_parser("inject", help="inject one synthetic fault")
    p_inj.add_argument("--repo", required=True)
    p_inj.add_argument("--fault", required=True, choices=FAULT_CLASSES)
    p_inj.add_argument("--seed", type=int, required=True)
    p_inj.add_argument("--out", required=True)
    p_inj.set_defaults(func=cmd_inject)

    p_eval = sub.add_parser("eval", help="run the localization harness over a corpus")
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--configs")
    p_eval.add_argument("--out")
    p_eval.add_argument("--oracle", action="store_true", help="include the oracle-scorer config")
    p_eval.set_defaults(func=cmd_eval)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
