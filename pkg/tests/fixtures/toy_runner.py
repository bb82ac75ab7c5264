"""Hand-built runner for the toy repository's failing test.

Simulates `process_transactions("12345", data)`: the sanitize assert fires
after the reassignment, so the trace covers the executed prefix only.
Usage: toy_runner.py <test_id> <trace_path>
"""

import json
import sys

TRACE = [
    {"event": "node", "id": "utils.process_transactions.id#0"},
    {"event": "node", "id": "utils.process_transactions.data#0"},
    {"event": "node", "id": "utils.sanitize.id#0"},
    {
        "event": "node",
        "id": "utils.sanitize.id#1",
        "value_text": "id: wrong length: 12345",
    },
    {"event": "edge", "id": "utils.process_transactions.id#0->utils.process_transactions.cleaned_id#0@L2#0"},
    {"event": "edge", "id": "utils.process_transactions.id#0->utils.sanitize.id#0@L2#0"},
    {"event": "edge", "id": "utils.sanitize.id#0->utils.sanitize.id#1@L9#0"},
    {"verdict": "fail"},
]


def main() -> int:
    trace_path = sys.argv[2]
    with open(trace_path, "w", encoding="utf-8") as fh:
        for record in TRACE:
            fh.write(json.dumps(record) + "\n")
    return 1


if __name__ == "__main__":
    sys.exit(main())
