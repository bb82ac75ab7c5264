"""Search-based fault localization over data lineages.

The policy is an iterated select/expand/rollout/backup traversal starting
upstream from the failure's entry states, guided by a pluggable scorer.
Selection and rollout work on max-normalized scores and convergence uses a
score ratio, so rankings are invariant under positive scaling of the scorer.
A learned policy would plug in through the Scorer contract; none ships here.

Rollouts only read the immutable graph, so search instances are independent;
statistics are per-instance and never shared.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .config import PolicyConfig
from .errors import EmptyGraph, UnknownNode
from .model import Dtg, TransformEdge
from .nav import AgentState, TraceOverlay
from .store import hashed_embedding, tokenize

Scorer = Callable[[AgentState, TransformEdge, Optional[TraceOverlay]], float]


@dataclass(frozen=True)
class LocalizationReport:
    ranked_suspects: tuple[tuple[str, float], ...]
    traversal_trace: tuple[str, ...]
    nodes_visited: int
    budget_spent: int
    converged: bool

    def top(self, k: int) -> list[str]:
        return [eid for eid, _ in self.ranked_suspects[:k]]


# ---------------------------------------------------------------------------
# Scorers
# ---------------------------------------------------------------------------


def _distances_to(g: Dtg, target: str) -> dict[str, int]:
    """Undirected hop distance from every reachable node to ``target``."""
    dist = {target: 0}
    frontier = [target]
    while frontier:
        nxt = []
        for nid in frontier:
            for eid in g.incoming[nid]:
                other = g.edges[eid].src
                if other not in dist:
                    dist[other] = dist[nid] + 1
                    nxt.append(other)
            for eid in g.outgoing[nid]:
                other = g.edges[eid].dst
                if other not in dist:
                    dist[other] = dist[nid] + 1
                    nxt.append(other)
        frontier = nxt
    return dist


def _failure_text(overlay: TraceOverlay | None) -> str:
    if overlay is None:
        return ""
    return " ".join(overlay.observed_values[k] for k in sorted(overlay.observed_values))


def _violated_nodes(g: Dtg, overlay: TraceOverlay | None) -> list[str]:
    """Nodes where the failure was observed or whose constraint text the failure message repeats."""
    if overlay is None:
        return []
    out = {nid for nid in overlay.observed_values if nid in g.nodes}
    ft_tokens = set(tokenize(_failure_text(overlay)))
    if ft_tokens:
        for nid, node in g.nodes.items():
            for constraint in node.constraints:
                ctoks = set(tokenize(constraint))
                if ctoks and ctoks <= ft_tokens:
                    out.add(nid)
                    break
    return sorted(out)


def default_scorer(g: Dtg, config: PolicyConfig | None = None) -> Scorer:
    """Overlay-aware heuristic: trace evidence, then proximity to the violated
    constraint, then lexical similarity to the failure text."""
    config = config or PolicyConfig()
    cache: dict = {"overlay": None, "ready": False}

    def prepare(overlay: TraceOverlay | None) -> None:
        if cache["ready"] and cache["overlay"] is overlay:
            return
        cache["overlay"] = overlay
        cache["ready"] = True
        cache["violated"] = _violated_nodes(g, overlay)
        cache["dists"] = {v: _distances_to(g, v) for v in cache["violated"]}
        text = _failure_text(overlay)
        cache["ft_vec"] = hashed_embedding([(text, 1.0)], 256) if text else None

    def score(state: AgentState, edge: TransformEdge, overlay: TraceOverlay | None) -> float:
        prepare(overlay)
        touched = 1.0 if overlay is not None and edge.edge_id in overlay.touched_edges else 0.0
        proximity = 0.0
        for v in cache["violated"]:
            d = cache["dists"][v].get(edge.dst)
            if d is not None:
                proximity = max(proximity, config.proximity_decay**d)
        semantic = 0.0
        if cache["ft_vec"] is not None:
            evec = hashed_embedding([(edge.group, 2.0), (edge.plane, 1.0), (edge.semantics, 1.0)], 256)
            semantic = max(0.0, sum(a * b for a, b in zip(cache["ft_vec"], evec)))
        raw = (
            config.touched_weight * touched
            + config.constraint_weight * proximity
            + config.semantic_weight * semantic
        )
        return min(1.0, raw)

    return score


def oracle_scorer(target_edges, hit: float = 1.0, miss: float = 0.1) -> Scorer:
    """Ground-truth scorer for harness runs: ``hit`` on the fault, ``miss`` elsewhere."""
    targets = frozenset(target_edges)

    def score(state: AgentState, edge: TransformEdge, overlay: TraceOverlay | None) -> float:
        return hit if edge.edge_id in targets else miss

    return score


def constant_scorer(value: float = 0.0) -> Scorer:
    def score(state: AgentState, edge: TransformEdge, overlay: TraceOverlay | None) -> float:
        return value

    return score


# ---------------------------------------------------------------------------
# MCTS-style traversal
# ---------------------------------------------------------------------------


@dataclass
class _TreeNode:
    node_id: str
    untried: list[tuple[str, str, bool]] = field(default_factory=list)  # (edge_id, neighbor, upstream)
    children: list[tuple[str, str]] = field(default_factory=list)  # (edge_id, node_id)
    visits: int = 0
    value: float = 0.0


def _incident_moves(g: Dtg, node_id: str) -> list[tuple[str, str]]:
    """Candidate moves, upstream first (causes sit upstream of manifestations)."""
    ups = g.neighbors(node_id, "upstream")
    downs = g.neighbors(node_id, "downstream")
    return list(ups) + list(downs)


def _tagged_moves(g: Dtg, node_id: str) -> list[tuple[str, str, bool]]:
    out = [(eid, nb, True) for eid, nb in g.neighbors(node_id, "upstream")]
    out += [(eid, nb, False) for eid, nb in g.neighbors(node_id, "downstream")]
    return out


def _exhausted(g: Dtg, seen: set[str]) -> bool:
    """True when no unvisited node borders the visited component."""
    for nid in seen:
        for _, nb in _incident_moves(g, nid):
            if nb not in seen:
                return False
    return True


def _weighted_pick(rng: random.Random, items: list[tuple[str, float]]) -> str:
    """Deterministic weighted draw on max-normalized weights (scale-invariant)."""
    mx = max(w for _, w in items)
    if mx <= 0.0:
        return items[rng.randrange(len(items))][0]
    ratios = [w / mx for _, w in items]
    total = sum(ratios)
    r = rng.random() * total
    acc = 0.0
    for (key, _), ratio in zip(items, ratios):
        acc += ratio
        if r <= acc:
            return key
    return items[-1][0]


def localize(
    g: Dtg,
    entry_nodes: list[str],
    overlay: TraceOverlay | None,
    scorer: Scorer,
    budget: int,
    seed: int,
    config: PolicyConfig | None = None,
) -> LocalizationReport:
    """Rank suspect transformations upstream of the given failure manifestations."""
    config = config or PolicyConfig()
    if not g.nodes:
        raise EmptyGraph("cannot localize over an empty graph")
    if not entry_nodes:
        raise UnknownNode("entry_nodes must be non-empty")
    for nid in entry_nodes:
        if nid not in g.nodes:
            raise UnknownNode(f"no such node: {nid}")
    if budget < 1:
        raise ValueError("budget must be >= 1")

    rng = random.Random(seed)
    trace: list[str] = []
    seen: set[str] = set()
    scores: dict[str, float] = {}
    view_cache: dict[str, object] = {}

    def agent_state(node_id: str) -> AgentState:
        if node_id not in view_cache:
            view_cache[node_id] = g.subgraph_within_radius(node_id, config.view_radius)
        return AgentState(
            current_node_id=node_id,
            visited_nodes=list(trace),
            hypothesis="",
            graph_view=view_cache[node_id],
        )

    def visit(node_id: str) -> bool:
        """One budget step per first visit; re-walking known nodes is free
        (the graph is immutable and scores are cached, so revisits cannot
        change the outcome)."""
        if node_id in seen:
            return True
        if len(trace) >= budget:
            return False
        seen.add(node_id)
        trace.append(node_id)
        state = None
        for eid in sorted(set(g.incoming[node_id]) | set(g.outgoing[node_id])):
            if eid not in scores:
                if state is None:
                    state = agent_state(node_id)
                scores[eid] = scorer(state, g.edges[eid], overlay)
        return True

    def max_seen() -> float:
        return max(scores.values(), default=0.0)

    tree: dict[str, _TreeNode] = {}

    def tree_node(node_id: str) -> _TreeNode:
        if node_id not in tree:
            tree[node_id] = _TreeNode(node_id=node_id, untried=_tagged_moves(g, node_id))
        return tree[node_id]

    def pop_untried(tn: _TreeNode) -> tuple[str, str]:
        """Best untried move: upstream before downstream, then by edge score."""
        i = min(
            range(len(tn.untried)),
            key=lambda j: (not tn.untried[j][2], -scores.get(tn.untried[j][0], 0.0), tn.untried[j][0]),
        )
        edge_id, neighbor, _ = tn.untried.pop(i)
        return edge_id, neighbor

    root = _TreeNode(node_id="<root>", untried=[(f"<entry:{n}>", n, True) for n in entry_nodes])

    def uct(parent: _TreeNode, child: _TreeNode, norm: float) -> float:
        exploit = (child.value / child.visits) / norm if child.visits else 0.0
        explore = config.exploration * math.sqrt(math.log(parent.visits + 1) / child.visits) if child.visits else float("inf")
        return exploit + explore

    def ranked() -> tuple[tuple[str, float], ...]:
        return tuple(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])))

    converged = False
    streak = 0
    no_progress = 0
    out_of_budget = False

    while not out_of_budget and not converged:
        visited_before = len(trace)
        # Selection: descend fully expanded tree nodes by normalized UCT.
        path: list[_TreeNode] = [root]
        on_path = {"<root>"}
        cur = root
        while not cur.untried and cur.children:
            norm = max_seen() or 1.0
            best = min(
                cur.children,
                key=lambda pair: (-uct(cur, tree_node(pair[1]), norm), pair[0]),
            )
            child = tree_node(best[1])
            if child.node_id in on_path:
                break
            if not visit(child.node_id):
                out_of_budget = True
                break
            path.append(child)
            on_path.add(child.node_id)
            cur = child

        reward = 0.0
        if not out_of_budget:
            # Expansion: best untried move, upstream-biased and score-guided.
            if cur.untried:
                edge_id, neighbor = pop_untried(cur)
                if not edge_id.startswith("<entry:"):
                    reward = max(reward, scores.get(edge_id, 0.0))
                if visit(neighbor):
                    cur.children.append((edge_id, neighbor))
                    leaf = tree_node(neighbor)
                    path.append(leaf)
                    cur = leaf
                else:
                    out_of_budget = True

        if not out_of_budget:
            # Rollout: weighted walk from the leaf, upstream moves first.
            roll_node = cur.node_id
            roll_seen = set(on_path)
            for _ in range(config.rollout_depth):
                if roll_node == "<root>":
                    break
                ups = [(eid, nb) for eid, nb in g.neighbors(roll_node, "upstream") if nb not in roll_seen]
                downs = [(eid, nb) for eid, nb in g.neighbors(roll_node, "downstream") if nb not in roll_seen]
                moves = ups or downs
                if not moves:
                    break
                weighted = [(f"{eid}\x00{nb}", scores.get(eid, 0.0)) for eid, nb in moves]
                pick = _weighted_pick(rng, weighted)
                eid, nb = pick.split("\x00")
                if not visit(nb):
                    out_of_budget = True
                    break
                reward = max(reward, scores.get(eid, 0.0))
                roll_seen.add(nb)
                roll_node = nb

        for tnode in path:
            tnode.visits += 1
            tnode.value += reward

        # Convergence: runner-up under half the leader, sustained.
        suspects = ranked()
        if len(suspects) >= 1 and suspects[0][1] > 0.0:
            runner_up = suspects[1][1] if len(suspects) > 1 else 0.0
            if runner_up < config.convergence_ratio * suspects[0][1]:
                streak += 1
            else:
                streak = 0
            if streak >= config.convergence_streak:
                converged = True
        else:
            streak = 0

        # A pure scorer over an immutable graph cannot change the ranking
        # without new discoveries; stop once the reachable component is
        # explored (or the search is provably stuck).
        if len(trace) == visited_before:
            no_progress += 1
            if no_progress >= max(config.convergence_streak, 1) and _exhausted(g, seen):
                break
            if no_progress >= 50:
                break
        else:
            no_progress = 0

        if len(trace) >= budget:
            out_of_budget = True

    return LocalizationReport(
        ranked_suspects=ranked(),
        traversal_trace=tuple(trace),
        nodes_visited=len(trace),
        budget_spent=len(trace),
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Evaluation harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusInstance:
    """One evaluation case: a graph, the injected fault, and its failing run."""

    name: str
    graph: Dtg
    ground_truth: frozenset[str]
    entry_nodes: tuple[str, ...]
    overlay: TraceOverlay | None = None


@dataclass(frozen=True)
class EvalConfig:
    name: str
    kind: str  # "mcts" | "file_first"
    policy: PolicyConfig = PolicyConfig()
    scorer_factory: Callable[[CorpusInstance], Scorer] | None = None


@dataclass(frozen=True)
class EvalRow:
    config: str
    top1: float
    top5: float
    mean_nodes_visited: float
    mean_budget: float


def file_first_baseline(instance: CorpusInstance) -> LocalizationReport:
    """Graph-ablated baseline: scan files by lexical match, read them in order.

    Edges are ranked purely by file order and line position; node visits count
    every state in each file scanned until the fault's file has been read.
    """
    g = instance.graph
    failure = _failure_text(instance.overlay)
    ft = set(tokenize(failure))

    files: dict[str, dict] = {}
    for node in g.nodes.values():
        f = node.meta.span.file_path if node.meta else "<none>"
        files.setdefault(f, {"tokens": set(), "nodes": 0, "edges": []})
        files[f]["tokens"].update(tokenize(node.name))
        files[f]["nodes"] += 1
    for eid, edge in g.edges.items():
        f = edge.ref_file.file_path if edge.ref_file else "<none>"
        files.setdefault(f, {"tokens": set(), "nodes": 0, "edges": []})
        files[f]["tokens"].update(tokenize(edge.group))
        line = edge.ref_file.line_start if edge.ref_file else 0
        files[f]["edges"].append((line, eid))

    def lexical_score(f: str) -> int:
        return len(files[f]["tokens"] & ft)

    scan_order = sorted(files, key=lambda f: (-lexical_score(f), f))
    ranked: list[tuple[str, float]] = []
    nodes_seen = 0
    trace: list[str] = []
    found = False
    for f in scan_order:
        if found:
            break
        nodes_seen += files[f]["nodes"]
        for node in g.nodes.values():
            meta_file = node.meta.span.file_path if node.meta else "<none>"
            if meta_file == f:
                trace.append(node.id)
        for _, eid in sorted(files[f]["edges"]):
            ranked.append((eid, 1.0 / (len(ranked) + 1)))
            if eid in instance.ground_truth:
                found = True
    return LocalizationReport(
        ranked_suspects=tuple(ranked),
        traversal_trace=tuple(trace),
        nodes_visited=nodes_seen,
        budget_spent=nodes_seen,
        converged=found,
    )


def evaluate(corpus: list[CorpusInstance], configs: list[EvalConfig]) -> list[EvalRow]:
    """Per-config localization rates and traversal cost over a corpus."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    rows = []
    for cfg in configs:
        top1 = top5 = 0
        nodes_total = 0
        budget_total = 0
        for instance in corpus:
            if cfg.kind == "file_first":
                report = file_first_baseline(instance)
            else:
                if cfg.scorer_factory is not None:
                    scorer = cfg.scorer_factory(instance)
                else:
                    scorer = default_scorer(instance.graph, cfg.policy)
                report = localize(
                    instance.graph,
                    list(instance.entry_nodes),
                    instance.overlay,
                    scorer,
                    budget=cfg.policy.budget,
                    seed=cfg.policy.seed,
                    config=cfg.policy,
                )
            hits = set(report.top(5)) & instance.ground_truth
            if set(report.top(1)) & instance.ground_truth:
                top1 += 1
            if hits:
                top5 += 1
            nodes_total += report.nodes_visited
            budget_total += report.budget_spent
        n = len(corpus)
        rows.append(
            EvalRow(
                config=cfg.name,
                top1=top1 / n,
                top5=top5 / n,
                mean_nodes_visited=nodes_total / n,
                mean_budget=budget_total / n,
            )
        )
    return rows
