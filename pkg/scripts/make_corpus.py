"""Generate an injected-fault evaluation corpus.

Usage:
    python scripts/make_corpus.py --out corpus/ [--seeds 5] [--classes off_by_one,inverted_guard]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dtg.corpus import generate_corpus
from dtg.inject import FAULT_CLASSES


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--classes", default=",".join(FAULT_CLASSES))
    args = parser.parse_args()

    classes = tuple(c for c in args.classes.split(",") if c)
    unknown = set(classes) - set(FAULT_CLASSES)
    if unknown:
        parser.error(f"unknown fault class(es): {sorted(unknown)}")

    instances = generate_corpus(args.out, classes=classes, seeds=range(args.seeds))
    for path in instances:
        print(path)
    print(f"{len(instances)} instances under {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
