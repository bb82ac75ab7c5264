from collections import Counter

import pytest

from dtg.builder import (
    CallIndex,
    attach_constraints,
    build_module_graph,
    build_repo,
    default_summarizer,
    link_cross_module,
    scan_imports,
    summarize_transformation,
    LazyRepoGraph,
)
from dtg.errors import InconsistentInput, SummarizerFailure
from dtg.frontend import extract_constructs, extract_guards, parse_source
from dtg.model import TransformEdge
from dtg.store import dumps_graph

PT = "utils.process_transactions"
SAN = "utils.sanitize"
HANDLE = "utils.handle"

TOY_NODES = {
    f"{PT}.id#0",
    f"{PT}.data#0",
    f"{PT}.cleaned_id#0",
    f"{PT}.<return>#0",
    f"{HANDLE}.cleaned_id#0",
    f"{HANDLE}.data#0",
    f"{HANDLE}.print@L6#0",
    f"{SAN}.id#0",
    f"{SAN}.id#1",
    f"{SAN}.<return>#0",
}

TOY_EDGES = {
    # (src, dst, plane, group)
    (f"{PT}.id#0", f"{PT}.cleaned_id#0", "call", "sanitize@L2"),
    (f"{PT}.id#0", f"{SAN}.id#0", "call", "sanitize@L2"),
    (f"{SAN}.<return>#0", f"{PT}.cleaned_id#0", "return", "sanitize@L2"),
    (f"{PT}.cleaned_id#0", f"{PT}.<return>#0", "call", "handle@L3"),
    (f"{PT}.data#0", f"{PT}.<return>#0", "call", "handle@L3"),
    (f"{PT}.cleaned_id#0", f"{HANDLE}.cleaned_id#0", "call", "handle@L3"),
    (f"{PT}.data#0", f"{HANDLE}.data#0", "call", "handle@L3"),
    (f"{HANDLE}.cleaned_id#0", f"{HANDLE}.print@L6#0", "call", "print@L6"),
    (f"{SAN}.id#0", f"{SAN}.id#1", "assignment", "=id@L9"),
    (f"{SAN}.id#1", f"{SAN}.<return>#0", "return", "return@L11"),
}


def edge_tuples(g):
    return {(e.src, e.dst, e.plane, e.group) for e in g.edges.values()}


def test_toy_graph_matches_frozen_fixture(toy_build):
    build, _ = toy_build
    g = build.graph
    assert set(g.nodes) == TOY_NODES
    assert edge_tuples(g) == TOY_EDGES
    assert g.nodes[f"{SAN}.id#1"].constraints == ("len(id) == 4",)
    assert g.validate().ok()


def test_toy_node_details(toy_build):
    g = toy_build[0].graph
    assert g.nodes[f"{SAN}.id#0"].kind == "argument"
    assert g.nodes[f"{SAN}.id#0"].type == "Any"
    assert g.nodes[f"{SAN}.id#1"].kind == "local"
    assert g.nodes[f"{SAN}.<return>#0"].type == "str"
    assert g.nodes[f"{PT}.cleaned_id#0"].type == "str"


def test_toy_call_edge_source_is_callee_body(toy_build):
    g = toy_build[0].graph
    site = next(e for e in g.edges.values() if e.group == "sanitize@L2" and e.dst == f"{PT}.cleaned_id#0" and e.plane == "call")
    assert (site.source.line_start, site.source.line_end) == (9, 11)
    assert site.ref_file.line_start == 2


def test_chooser_build_covers_expected_states(chooser_build):
    g = chooser_build[0].graph
    kinds = Counter(n.kind for n in g.nodes.values())
    assert kinds["argument"] == 6
    assert kinds["return_value"] == 1
    assert kinds["global"] == 3
    locals_first = {n.name.rpartition(".")[2] for n in g.nodes.values() if n.kind == "local" and n.version == 0}
    assert {"messages", "info", "source_hint"} <= locals_first
    assert g.validate().ok()


def test_chooser_guarded_appends(chooser_build):
    g = chooser_build[0].graph
    guarded = [e for e in g.edges.values() if e.guard is not None]
    assert {e.guard.condition_text for e in guarded} == {
        "wheels_skipped", "sdists_skipped", "unsupported_wheels", "source_hint",
    }
    assert all(e.guard.polarity == "taken" for e in guarded)


def test_degenerate_module_only_arguments():
    text = "def f(a, b):\n    pass\n"
    parsed = parse_source("m.py", text)
    g = build_module_graph(extract_constructs(parsed, None, "m"), extract_guards(parsed), "m")
    assert {n.kind for n in g.nodes.values()} == {"argument"}
    assert g.edges == {}


def test_unknown_enclosing_function_rejected(toy_source):
    parsed = parse_source("utils.py", toy_source)
    constructs = extract_constructs(parsed, None, "utils")
    broken = [c for c in constructs if c.category != "FunctionDef"]
    with pytest.raises(InconsistentInput):
        build_module_graph(broken, [], "utils")


def test_unresolved_call_flagged_but_valid():
    text = "def f(x):\n    y = mystery(x)\n    return y\n"
    parsed = parse_source("m.py", text)
    g = build_module_graph(extract_constructs(parsed, None, "m"), [], "m")
    edge = next(e for e in g.edges.values() if e.plane == "call")
    assert edge.group == "?mystery@L2"
    assert not edge.resolved
    assert edge.callee == "mystery"
    assert g.validate().ok()


def test_two_module_mutual_linking(two_module_repo):
    build = build_repo(two_module_repo)
    g = build.graph
    tuples = edge_tuples(g)
    # alpha.prepare -> beta.combine and back through the return
    assert ("alpha.prepare.raw#0", "beta.combine.value#0", "call", "combine@L5") in tuples
    assert ("beta.combine.<return>#0", "alpha.prepare.staged#0", "return", "combine@L5") in tuples
    # beta.combine -> alpha.rescale and back
    assert ("beta.combine.value#0", "alpha.rescale.value#0", "call", "rescale@L5") in tuples
    assert ("alpha.rescale.<return>#0", "beta.combine.scaled#0", "return", "rescale@L5") in tuples
    assert g.validate().ok()


def test_scan_imports():
    text = "import os\nimport os.path as osp\nfrom beta import combine\nfrom pkg.sub import f as g\n"
    parsed = parse_source("alpha.py", text)
    table = scan_imports(parsed, "alpha")
    assert table == {"os": "os", "osp": "os.path", "combine": "beta.combine", "g": "pkg.sub.f"}


def test_attach_constraints_chained_asserts():
    text = (
        "def f(x):\n"
        "    x = x + 1\n"
        "    assert x > 0\n"
        "    assert x < 100\n"
        "    assert x != 13\n"
        "    return x\n"
    )
    parsed = parse_source("m.py", text)
    constructs = extract_constructs(parsed, None, "m")
    guards = extract_guards(parsed)
    g = build_module_graph(constructs, guards, "m")
    g = attach_constraints(g, guards)
    assert g.nodes["m.f.x#1"].constraints == ("x > 0", "x < 100", "x != 13")
    assert g.nodes["m.f.x#0"].constraints == ()


def test_attach_constraints_no_asserts_is_noop(toy_build):
    g = toy_build[0].graph
    before = dumps_graph(g)
    attach_constraints(g, [])
    assert dumps_graph(g) == before


def test_summarize_assignment_template(toy_build):
    g = toy_build[0].graph
    edge = next(e for e in g.edges.values() if e.plane == "assignment")
    assert summarize_transformation(edge, "id = str(int(id))") == "assignment: str(int(id))"


def test_summarize_call_and_plugged_model(toy_build):
    g = toy_build[0].graph
    edge = next(e for e in g.edges.values() if e.group == "sanitize@L2" and e.plane == "call")
    assert summarize_transformation(edge, "def sanitize(id):...") == "call: sanitize"

    def model(e, code):
        return "normalizes a transaction identifier"

    assert summarize_transformation(edge, "anything", model) == "normalizes a transaction identifier"


def test_summarize_empty_code_fails(toy_build):
    g = toy_build[0].graph
    edge = next(iter(g.edges.values()))
    with pytest.raises(SummarizerFailure):
        summarize_transformation(edge, "")


def test_construct_conservation(toy_build, chooser_build):
    for build, _ in (toy_build, chooser_build):
        g = build.graph
        module = next(iter(build.file_texts))
        parsed = parse_source(module, build.file_texts[module])
        constructs = extract_constructs(parsed, None, module.rsplit(".", 1)[0])
        arg_constructs = sum(1 for c in constructs if c.category == "Argument")
        arg_nodes = sum(1 for n in g.nodes.values() if n.kind == "argument")
        assert arg_nodes == arg_constructs
        local_nodes = sum(1 for n in g.nodes.values() if n.kind in ("local", "field"))
        assigns = sum(1 for c in constructs if c.category == "LocalAssignment")
        assert local_nodes >= assigns


def test_rebuild_idempotence(toy_repo):
    first = dumps_graph(build_repo(toy_repo).graph)
    second = dumps_graph(build_repo(toy_repo).graph)
    assert first == second


def test_ref_spans_inside_producing_file(toy_build, chooser_build):
    for build, _ in (toy_build, chooser_build):
        files = set(build.file_texts)
        for edge in build.graph.edges.values():
            assert edge.ref_file.file_path in files
            line_count = build.file_texts[edge.ref_file.file_path].count("\n") + 1
            assert 1 <= edge.ref_file.line_start <= edge.ref_file.line_end <= line_count


def test_every_call_group_has_edges(toy_build):
    g = toy_build[0].graph
    groups = g.groups()
    assert {"sanitize@L2", "handle@L3", "print@L6"} <= set(groups)
    assert all(groups[tag] for tag in ("sanitize@L2", "handle@L3", "print@L6"))


def test_lazy_repo_builds_on_demand(two_module_repo):
    lazy = LazyRepoGraph(two_module_repo)
    assert lazy.built == {}
    g_alpha = lazy.module_graph("alpha")
    assert set(lazy.built) == {"alpha"}
    assert any(nid.startswith("alpha.") for nid in g_alpha.nodes)
    assert not any(nid.startswith("beta.") for nid in g_alpha.nodes)
    assert lazy.module_graph("alpha") is g_alpha
    full = lazy.full()
    assert any(nid.startswith("beta.") for nid in full.graph.nodes)


def test_mutation_method_calls_bump_versions():
    text = "def f(items, x):\n    items.append(x)\n    items.append(x)\n    return items\n"
    parsed = parse_source("m.py", text)
    g = build_module_graph(extract_constructs(parsed, None, "m"), [], "m")
    assert "m.f.items#1" in g.nodes
    assert "m.f.items#2" in g.nodes
    mutation = next(e for e in g.edges.values() if e.src == "m.f.items#0" and e.dst == "m.f.items#1")
    assert mutation.plane == "call"


def test_constants_deduplicated_per_function():
    text = (
        "def helper(v, k):\n"
        "    return v\n"
        "\n"
        "def f(x):\n"
        "    a = helper(x, 5)\n"
        "    b = helper(x, 5)\n"
        "    return a + b\n"
    )
    parsed = parse_source("m.py", text)
    g = build_module_graph(extract_constructs(parsed, None, "m"), [], "m")
    consts = [n for n in g.nodes.values() if n.kind == "constant"]
    assert len(consts) == 1
    assert consts[0].name == "m.f.<const:5>"
    assert len(g.incoming["m.f.a#0"]) == 2  # x and the constant


def test_external_callee_becomes_data_input():
    text = "def f(x):\n    a = Helper(x)\n    return a\n"
    parsed = parse_source("m.py", text)
    g = build_module_graph(extract_constructs(parsed, None, "m"), [], "m")
    assert "m.Helper#0" in g.nodes
    assert g.nodes["m.Helper#0"].kind == "global"
    sources = {g.edges[eid].src for eid in g.incoming["m.f.a#0"]}
    assert sources == {"m.f.x#0", "m.Helper#0"}


def test_dict_literal_schema():
    text = 'def f(uid):\n    record = {"id": 1, "name": "x"}\n    return record\n'
    parsed = parse_source("m.py", text)
    g = build_module_graph(extract_constructs(parsed, None, "m"), [], "m")
    node = g.nodes["m.f.record#0"]
    assert node.type == "dict"
    assert node.schema == (("id", "int"), ("name", "str"))


def test_link_cross_module_disjoint_precondition(toy_build):
    g = toy_build[0].graph
    with pytest.raises(Exception):
        link_cross_module([g, g], CallIndex())


def test_recursive_calls_produce_no_self_loops():
    text = (
        "def collapse(node):\n"
        "    if node:\n"
        "        return collapse(node)\n"
        "    return node\n"
    )
    parsed = parse_source("m.py", text)
    constructs = extract_constructs(parsed, None, "m")
    index = CallIndex()
    index.add_module("m", constructs, {})
    g = build_module_graph(constructs, extract_guards(parsed), "m", site_sink=index.sites)
    linked = link_cross_module([g], index)
    assert linked.validate().ok()
    assert all(e.src != e.dst for e in linked.edges.values())


def test_default_summarizer_return_plane():
    edge = TransformEdge(edge_id="e", src="m.f.a#0", dst="m.f.<return>#0", plane="return", group="return@L3")
    assert default_summarizer(edge, "return a + b") == "return: a + b"
