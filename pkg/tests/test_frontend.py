import ast
from collections import Counter

import pytest

from dtg import frontend
from dtg.errors import EncodingFailure, IoFailure
from dtg.frontend import (
    extract_constructs,
    extract_guards,
    module_name_for,
    parse_file,
    parse_source,
    profile_for_path,
    python_profile,
)


def counts(constructs) -> dict:
    return dict(Counter(c.category for c in constructs))


def test_parse_toy_three_function_defs(toy_source):
    parsed = parse_source("utils.py", toy_source)
    defs = [n for n in ast.walk(parsed.tree) if isinstance(n, ast.FunctionDef)]
    assert len(defs) == 3
    assert parsed.errors == []


def test_parse_empty_file():
    parsed = parse_source("empty.py", "")
    assert parsed.errors == []
    assert parsed.tree.body == []


def test_parse_broken_file_recovers_with_error_span():
    # Recovery fixture: the stdlib parser reports line 1 for "def f(:",
    # the line is skipped, and an empty tree comes back.
    parsed = parse_source("broken.py", "def f(:")
    assert len(parsed.errors) == 1
    assert parsed.errors[0].span.line_start == 1
    assert parsed.errors[0].span.line_end == 1
    assert parsed.tree.body == []


def test_parse_recovery_keeps_rest_of_file():
    text = "def f(:\n\ndef g():\n    return 1\n"
    parsed = parse_source("broken.py", text)
    assert any(e.span.line_start == 1 for e in parsed.errors)
    defs = [n for n in parsed.tree.body if isinstance(n, ast.FunctionDef)]
    assert [d.name for d in defs] == ["g"]
    constructs = extract_constructs(parsed, None, "broken")
    assert all(c.symbol != "f" for c in constructs if c.category == "FunctionDef")


def test_parse_source_rejects_bad_utf8():
    with pytest.raises(EncodingFailure):
        parse_source("bin.py", b"\xff\xfe\x00broken")


def test_parse_file_missing_path_raises(tmp_path):
    with pytest.raises(IoFailure):
        parse_file(tmp_path / "nope.py")


def test_toy_construct_counts(toy_source):
    parsed = parse_source("utils.py", toy_source)
    constructs = extract_constructs(parsed, None, "utils")
    assert counts(constructs) == {
        "FunctionDef": 3,
        "Argument": 5,
        "LocalAssignment": 2,
        "Return": 2,
        "Call": 4,
    }
    args = [c.symbol for c in constructs if c.category == "Argument"]
    assert args == ["id", "data", "cleaned_id", "data", "id"]


def test_chooser_construct_counts(chooser_source):
    parsed = parse_source("chooser.py", chooser_source)
    constructs = extract_constructs(parsed, None, "chooser")
    table = {k: v for k, v in counts(constructs).items() if k != "Call"}
    assert table == {
        "FunctionDef": 1,
        "Argument": 6,
        "LocalAssignment": 3,
        "Branch": 4,
        "Return": 1,
        "ExternalRef": 3,
    }
    assert [c.symbol for c in constructs if c.category == "Argument"] == [
        "self", "package", "links_seen", "wheels_skipped", "sdists_skipped", "unsupported_wheels",
    ]
    assert [c.symbol for c in constructs if c.category == "LocalAssignment"] == [
        "messages", "info", "source_hint",
    ]
    assert sorted(c.symbol for c in constructs if c.category == "ExternalRef") == [
        "ConsoleMessage", "Package", "PoetryRuntimeError",
    ]


def test_empty_file_extracts_nothing():
    parsed = parse_source("empty.py", "")
    assert extract_constructs(parsed, None, "empty") == []


def test_extraction_is_deterministic(toy_source):
    parsed = parse_source("utils.py", toy_source)
    first = extract_constructs(parsed, None, "utils")
    second = extract_constructs(parse_source("utils.py", toy_source), None, "utils")
    assert first == second


def test_constructs_ordered_by_position(chooser_source):
    parsed = parse_source("chooser.py", chooser_source)
    constructs = extract_constructs(parsed, None, "chooser")
    keys = [(c.span.line_start, c.span.col_start) for c in constructs]
    assert keys == sorted(keys)


def test_arguments_name_a_function_def(chooser_source, toy_source):
    for path, text, mod in (("chooser.py", chooser_source, "chooser"), ("utils.py", toy_source, "utils")):
        constructs = extract_constructs(parse_source(path, text), None, mod)
        fn_names = {c.symbol for c in constructs if c.category == "FunctionDef"}
        for c in constructs:
            if c.category == "Argument":
                assert c.enclosing_function in fn_names


def test_spans_nested_in_function_span(toy_source):
    constructs = extract_constructs(parse_source("utils.py", toy_source), None, "utils")
    fn_spans = {c.symbol: c.span for c in constructs if c.category == "FunctionDef"}
    for c in constructs:
        if c.enclosing_function in fn_spans:
            outer = fn_spans[c.enclosing_function]
            assert outer.line_start <= c.span.line_start
            assert c.span.line_end <= outer.line_end


def test_guards_toy(toy_source):
    guards = extract_guards(parse_source("utils.py", toy_source))
    assert len(guards) == 1
    assert guards[0].condition_text == "len(id) == 4"
    assert guards[0].kind == "assert"
    assert guards[0].polarity == "taken"


def test_guards_chooser_four_ifs(chooser_source):
    guards = extract_guards(parse_source("chooser.py", chooser_source))
    assert len(guards) == 4
    assert all(g.kind == "branch" for g in guards)


def test_guards_straight_line_function():
    text = "def f(value):\n    doubled = value + value\n    return doubled\n"
    assert extract_guards(parse_source("s.py", text)) == []


def test_guards_else_region_polarity():
    text = "def f(flag, x):\n    if flag:\n        y = x + 1\n    else:\n        y = x - 1\n    return y\n"
    guards = extract_guards(parse_source("s.py", text))
    assert [(g.polarity, g.span.line_start) for g in guards] == [("taken", 3), ("not-taken", 5)]


def test_augmented_and_tuple_assignments():
    text = "def f(a, b):\n    a += 1\n    x, y = a, b\n    return x\n"
    constructs = extract_constructs(parse_source("s.py", text), None, "s")
    assigns = [c.symbol for c in constructs if c.category == "LocalAssignment"]
    assert assigns == ["a", "x", "y"]


def test_attribute_write_recorded_with_dotted_symbol():
    text = "def f(obj, v):\n    obj.field = v\n    return obj\n"
    constructs = extract_constructs(parse_source("s.py", text), None, "s")
    assigns = [c.symbol for c in constructs if c.category == "LocalAssignment"]
    assert assigns == ["obj.field"]


def test_comprehension_variables_ignored():
    text = "def f(items):\n    out = [v * 2 for v in items]\n    return out\n"
    constructs = extract_constructs(parse_source("s.py", text), None, "s")
    symbols = {c.symbol for c in constructs}
    assert "v" not in symbols
    assert "v" not in {c.symbol for c in constructs if c.category == "ExternalRef"}


def test_module_level_globals_count_as_external_refs():
    text = "LIMIT = 10\n\ndef f(x):\n    if x > LIMIT:\n        x = LIMIT\n    return x\n"
    constructs = extract_constructs(parse_source("s.py", text), None, "s")
    externals = [c.symbol for c in constructs if c.category == "ExternalRef"]
    assert externals == ["LIMIT"]


def test_profile_selection_by_extension():
    assert profile_for_path("pkg/mod.py").language == "python"
    assert profile_for_path("notes.txt") is None


def test_profile_gates_categories(tmp_path, toy_source):
    profile_dir = tmp_path / "python"
    (profile_dir / "queries").mkdir(parents=True)
    (profile_dir / "profile.json").write_text('{"language": "python", "extensions": [".py"]}')
    (profile_dir / "queries" / "constructs.scm").write_text("(FunctionDef (FunctionDef))\n(Argument (arg))\n")
    (profile_dir / "queries" / "guards.scm").write_text("(assert (Assert))\n")
    profile = frontend.load_profile(profile_dir)
    constructs = extract_constructs(parse_source("utils.py", toy_source), None, "utils", profile)
    assert set(counts(constructs)) == {"FunctionDef", "Argument"}


def test_module_name_for():
    assert module_name_for("utils.py") == "utils"
    assert module_name_for("pkg/mod.py") == "pkg.mod"
    assert module_name_for("pkg/__init__.py") == "pkg"


def test_default_profile_loads():
    profile = python_profile()
    assert ".py" in profile.extensions
    assert profile.allows("Branch", "If")


def test_counts_match_ground_truth_beside_fixtures():
    import json
    from pathlib import Path

    fixtures = Path(__file__).parent / "fixtures"
    for source_path, sidecar in (
        (fixtures / "toy" / "utils.py", fixtures / "toy" / "utils.py.counts.json"),
        (fixtures / "chooser.py", fixtures / "chooser.py.counts.json"),
    ):
        expected = json.loads(sidecar.read_text())
        parsed = parse_source(source_path.name, source_path.read_text())
        constructs = extract_constructs(parsed, None, source_path.stem)
        assert counts(constructs) == expected
