"""Independent reference implementations the tests check the library against.

Everything here is written the dumb, obviously-correct way (full scans,
fresh BFS, explicit cosine) and stays independent of the code paths it
verifies.
"""

from __future__ import annotations

import math

from dtg.model import Dtg


def edge_scan_neighbors(g: Dtg, node_id: str, direction: str) -> list[tuple[str, str]]:
    """neighbors() recomputed by scanning the full edge list."""
    out = []
    for eid in sorted(g.edges):
        edge = g.edges[eid]
        if direction == "downstream" and edge.src == node_id:
            out.append((eid, edge.dst))
        if direction == "upstream" and edge.dst == node_id:
            out.append((eid, edge.src))
    return out


def bfs_ball(g: Dtg, center: str, radius: int) -> set[str]:
    """Undirected BFS ball recomputed from the raw edge list."""
    ball = {center}
    frontier = {center}
    for _ in range(radius):
        nxt = set()
        for eid in g.edges:
            edge = g.edges[eid]
            if edge.src in frontier and edge.dst not in ball:
                nxt.add(edge.dst)
            if edge.dst in frontier and edge.src not in ball:
                nxt.add(edge.src)
        ball |= nxt
        frontier = nxt
    return ball


def induced_edges(g: Dtg, nodes: set[str]) -> set[str]:
    return {eid for eid, e in g.edges.items() if e.src in nodes and e.dst in nodes}


def attr_scan(g: Dtg, selector: str) -> list[str]:
    """Attribute lookup recomputed by linear scan."""
    attr, _, value = selector.partition("=")
    hits = []
    if attr == "kind":
        hits = [nid for nid, n in g.nodes.items() if n.kind == value]
    elif attr == "name":
        hits = [
            nid for nid, n in g.nodes.items() if n.name == value or n.name.rpartition(".")[2] == value
        ]
    elif attr == "file":
        hits = [nid for nid, n in g.nodes.items() if n.meta is not None and n.meta.span.file_path == value]
    elif attr == "plane":
        hits = [eid for eid, e in g.edges.items() if e.plane == value]
    return sorted(hits)


def cosine(a, b) -> float:
    num = sum(x * y for x, y in zip(a, b))
    da = math.sqrt(sum(x * x for x in a))
    db = math.sqrt(sum(y * y for y in b))
    if da == 0 or db == 0:
        return 0.0
    return num / (da * db)


def brute_force_search(vectors: dict, query_vec, k: int) -> list[str]:
    """Semantic search recomputed over raw stored vectors.

    Stored vectors are unit length by construction, so cosine is a plain dot
    product; re-normalizing here would inject 1-ulp noise into tie ordering.
    """
    scored = sorted(
        ((ident, sum(x * y for x, y in zip(query_vec, vec))) for ident, vec in vectors.items()),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return [ident for ident, _ in scored[:k]]


def brute_force_best_edge(g: Dtg, scorer, overlay, state_for) -> str:
    """Score every edge directly and return the argmax (ties by edge id)."""
    best_id, best_score = None, -1.0
    for eid in sorted(g.edges):
        score = scorer(state_for(eid), g.edges[eid], overlay)
        if score > best_score:
            best_id, best_score = eid, score
    return best_id


def replay_walk(g: Dtg, visited: list[str]) -> bool:
    """Every consecutive pair in a walk must be joined by an incident edge."""
    for a, b in zip(visited, visited[1:]):
        ups = {nb for _, nb in edge_scan_neighbors(g, a, "upstream")}
        downs = {nb for _, nb in edge_scan_neighbors(g, a, "downstream")}
        if b not in ups | downs:
            return False
    return True


def shortest_upstream_path_len(g: Dtg, start: str, target_edge: str) -> int | None:
    """Hops from start to the fault edge walking undirected, by plain BFS."""
    target = g.edges[target_edge]
    if start in (target.src, target.dst):
        return 0
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for nid in frontier:
            for eid in sorted(g.edges):
                e = g.edges[eid]
                for a, b in ((e.src, e.dst), (e.dst, e.src)):
                    if a == nid and b not in dist:
                        dist[b] = dist[nid] + 1
                        if b in (target.src, target.dst):
                            return dist[b]
                        nxt.append(b)
        frontier = nxt
    return None
