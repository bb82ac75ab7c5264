"""Synthetic evaluation corpora: seeded pipeline repositories, injected faults,
and failing-run traces.

The generated repositories are small multi-module pipelines with per-stage
invariants, which gives every fault class injectable sites and every injected
fault a detection point a few transformations downstream. Traces model an
execution that stops at the first violated invariant: everything feeding the
detection point is touched, nothing past it is.
"""

from __future__ import annotations

import json
import random
import shutil
from dataclasses import dataclass
from pathlib import Path

from .builder import build_repo
from .inject import FAULT_CLASSES, inject_fault
from .localize import CorpusInstance
from .model import Dtg
from .nav import TraceOverlay, load_trace


def generate_repo(out_dir: str | Path, seed: int) -> None:
    """Write a seeded pipeline repository: stages, scrubbers, and a driver.

    Every function validates its own output against a repo-unique sentinel,
    so a failing run's constraint text identifies exactly one stage.
    """
    rng = random.Random(seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_stages = rng.randint(4, 6)

    scale_mul = [rng.randint(2, 9) for _ in range(n_stages)]
    shift_add = [rng.randint(3, 40) for _ in range(n_stages)]
    limits = rng.sample(range(50, 200), n_stages)
    scrub_sub = [rng.randint(1, 9) for _ in range(n_stages)]
    sentinels = rng.sample(range(1000, 9999), 2 * n_stages)

    stage_lines = []
    for i in range(n_stages):
        stage_lines.append(
            f"def stage_{i}(value, scale):\n"
            f"    scaled = value * scale + {scale_mul[i]}\n"
            f"    shifted = scaled + {shift_add[i]}\n"
            f"    if shifted > {limits[i]}:\n"
            f"        shifted = shifted - {limits[i]}\n"
            f"    assert shifted != {sentinels[i]}, \"stage_{i} shifted hit the sentinel\"\n"
            f"    return shifted\n"
        )
    (out_dir / "pipeline.py").write_text("\n\n".join(stage_lines) + "\n", encoding="utf-8")

    scrub_lines = []
    for i in range(n_stages):
        scrub_lines.append(
            f"def scrub_{i}(value):\n"
            f"    cleaned = value - {scrub_sub[i]}\n"
            f"    assert cleaned != {sentinels[n_stages + i]}, \"scrub_{i} cleaned value hit the sentinel\"\n"
            f"    return cleaned\n"
        )
    (out_dir / "helpers.py").write_text("\n\n".join(scrub_lines) + "\n", encoding="utf-8")

    # Reporting utilities: textually similar to the pipeline (they format the
    # same shifted/cleaned values) but causally disconnected from it.
    fmt_lines = []
    for i in range(n_stages):
        fmt_lines.append(
            f"def format_stage_{i}(shifted, cleaned):\n"
            f"    banner = f\"stage {i}: shifted={{shifted}} cleaned={{cleaned}}\"\n"
            f"    caption = banner.upper()\n"
            f"    footer = f\"shifted total {i}\"\n"
            f"    summary = caption + footer\n"
            f"    return summary\n"
        )
    (out_dir / "formatters.py").write_text("\n\n".join(fmt_lines) + "\n", encoding="utf-8")

    stage_imports = ", ".join(f"stage_{i}" for i in range(n_stages))
    scrub_imports = ", ".join(f"scrub_{i}" for i in range(n_stages))
    fmt_imports = ", ".join(f"format_stage_{i}" for i in range(n_stages))
    body = ["def run_pipeline(seed_value, scale):"]
    prev = "seed_value"
    for i in range(n_stages):
        body.append(f"    v{i} = stage_{i}({prev}, scale)")
        body.append(f"    c{i} = scrub_{i}(v{i})")
        prev = f"c{i}"
    body.append(f"    return {prev}")

    audit = ["def audit_report(seed_value, scale):"]
    prev = "seed_value"
    for i in range(n_stages):
        audit.append(f"    a{i} = stage_{i}({prev}, scale)")
        audit.append(f"    r{i} = format_stage_{i}(a{i}, scale)")
        prev = f"a{i}"
    audit.append(f"    return {prev}")

    driver = (
        f"from formatters import {fmt_imports}\n"
        f"from helpers import {scrub_imports}\n"
        f"from pipeline import {stage_imports}\n\n\n"
        + "\n".join(body)
        + "\n\n\n"
        + "\n".join(audit)
        + "\n"
    )
    (out_dir / "driver.py").write_text(driver, encoding="utf-8")


# ---------------------------------------------------------------------------
# Trace synthesis
# ---------------------------------------------------------------------------


def detection_node(g: Dtg, gt_edges: list[str]) -> str:
    """First constrained state downstream of the fault, else the nearest sink."""
    starts = sorted({g.edges[e].dst for e in gt_edges if e in g.edges})
    seen = set(starts)
    frontier = list(starts)
    fallback = starts[0] if starts else sorted(g.nodes)[0]
    while frontier:
        for nid in sorted(frontier):
            if g.nodes[nid].constraints:
                return nid
        nxt = []
        for nid in sorted(frontier):
            for eid in g.outgoing[nid]:
                dst = g.edges[eid].dst
                if dst not in seen:
                    seen.add(dst)
                    nxt.append(dst)
        frontier = nxt
    sinks = [nid for nid in sorted(seen) if not g.outgoing[nid]]
    return sinks[0] if sinks else fallback


def observation_sink(g: Dtg, detection: str) -> str:
    """Where the test observed the failure: the sink downstream of detection."""
    seen = {detection}
    frontier = [detection]
    sinks: list[str] = []
    while frontier:
        nxt = []
        for nid in sorted(frontier):
            if not g.outgoing[nid]:
                sinks.append(nid)
            for eid in g.outgoing[nid]:
                dst = g.edges[eid].dst
                if dst not in seen:
                    seen.add(dst)
                    nxt.append(dst)
        frontier = nxt
    return sorted(sinks)[0] if sinks else detection


def synthesize_trace(g: Dtg, gt_edges: list[str], test_id: str) -> tuple[str, str]:
    """Trace text for the failing run, plus the entry node for localization.

    Execution stops at the detection point (the first violated invariant), so
    the touched set is its upstream cone; the entry node is the test's
    observation point, the sink the pipeline was asked for.
    """
    det = detection_node(g, gt_edges)
    touched_nodes = {det}
    touched_edges: set[str] = set()
    frontier = [det]
    while frontier:
        nxt = []
        for nid in frontier:
            for eid in g.incoming[nid]:
                touched_edges.add(eid)
                src = g.edges[eid].src
                if src not in touched_nodes:
                    touched_nodes.add(src)
                    nxt.append(src)
        frontier = nxt

    node = g.nodes[det]
    tail = node.name.rpartition(".")[2]
    if node.constraints:
        observed = f"{tail}: violated {node.constraints[0]}"
    else:
        observed = f"{tail}: unexpected value"

    lines = []
    for nid in sorted(touched_nodes):
        record = {"event": "node", "id": nid}
        if nid == det:
            record["value_text"] = observed
        lines.append(json.dumps(record))
    for eid in sorted(touched_edges):
        lines.append(json.dumps({"event": "edge", "id": eid}))
    lines.append(json.dumps({"verdict": "fail"}))
    return "\n".join(lines) + "\n", observation_sink(g, det)


# ---------------------------------------------------------------------------
# Corpus assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InstancePaths:
    root: Path
    repo: Path
    record: Path
    trace: Path


def instance_paths(corpus_dir: str | Path, fault_class: str, seed: int) -> InstancePaths:
    root = Path(corpus_dir) / f"{fault_class}_s{seed}"
    return InstancePaths(root=root, repo=root / "repo", record=root / "ground_truth.json", trace=root / "trace.jsonl")


def generate_instance(corpus_dir: str | Path, fault_class: str, seed: int, base_repo: Path | None = None) -> Path:
    """One corpus instance: mutated repo, ground truth record, failing trace."""
    paths = instance_paths(corpus_dir, fault_class, seed)
    paths.root.mkdir(parents=True, exist_ok=True)

    if base_repo is None:
        base_repo = paths.root / "base"
        generate_repo(base_repo, seed)
        cleanup_base = True
    else:
        cleanup_base = False

    record = inject_fault(base_repo, fault_class, seed, paths.repo)
    built = build_repo(paths.repo)
    trace_text, det = synthesize_trace(built.graph, record["edge_ids"], test_id=f"{fault_class}_s{seed}")
    paths.trace.write_text(trace_text, encoding="utf-8")
    record["entry_nodes"] = [det]
    record["trace"] = paths.trace.name
    paths.record.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    if cleanup_base:
        shutil.rmtree(base_repo)
    return paths.root


def generate_corpus(corpus_dir: str | Path, classes=FAULT_CLASSES, seeds=range(5)) -> list[Path]:
    out = []
    for fault_class in classes:
        for seed in seeds:
            out.append(generate_instance(corpus_dir, fault_class, seed))
    return out


def load_instance(instance_dir: str | Path) -> tuple[CorpusInstance, dict]:
    instance_dir = Path(instance_dir)
    record = json.loads((instance_dir / "ground_truth.json").read_text(encoding="utf-8"))
    built = build_repo(instance_dir / "repo")
    overlay: TraceOverlay | None = None
    trace_path = instance_dir / record.get("trace", "trace.jsonl")
    if trace_path.exists():
        overlay = load_trace(trace_path, record.get("trace", "trace"), built.graph)
    instance = CorpusInstance(
        name=instance_dir.name,
        graph=built.graph,
        ground_truth=frozenset(record["edge_ids"]),
        entry_nodes=tuple(record["entry_nodes"]),
        overlay=overlay,
    )
    return instance, record


def load_corpus(corpus_dir: str | Path) -> list[tuple[CorpusInstance, dict]]:
    corpus_dir = Path(corpus_dir)
    out = []
    for child in sorted(corpus_dir.iterdir()):
        if child.is_dir() and (child / "ground_truth.json").exists():
            out.append(load_instance(child))
    if not out:
        raise ValueError(f"no corpus instances under {corpus_dir}")
    return out
