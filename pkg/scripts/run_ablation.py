"""Reproduce the ablation-shaped comparison on an injected-fault corpus.

Runs four configurations over the corpus and prints the metrics table:
oracle scorer (verification), full policy, budget-starved policy (the
premature-termination ablation), and the file-first baseline (the
graph ablation). Generates a fresh 20-instance corpus unless --corpus
points at an existing one.

Usage:
    python scripts/run_ablation.py [--corpus corpus/] [--budget 60] [--seed 0]
"""

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dtg.config import PolicyConfig
from dtg.corpus import generate_corpus, load_corpus
from dtg.localize import EvalConfig, evaluate, oracle_scorer


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus")
    parser.add_argument("--budget", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--starved-budget", type=int, default=3)
    args = parser.parse_args()

    tmp = None
    corpus_dir = args.corpus
    if corpus_dir is None:
        tmp = tempfile.TemporaryDirectory(prefix="dtg_corpus_")
        corpus_dir = tmp.name
        generate_corpus(corpus_dir, seeds=range(5))

    instances = [inst for inst, _ in load_corpus(corpus_dir)]
    base = PolicyConfig(budget=args.budget, seed=args.seed)
    gt_by_name = {inst.name: inst.ground_truth for inst in instances}
    configs = [
        EvalConfig(
            "oracle", "mcts", base.with_overrides(budget=max(args.budget, 2000)),
            scorer_factory=lambda inst: oracle_scorer(gt_by_name[inst.name]),
        ),
        EvalConfig("full", "mcts", base),
        EvalConfig("budget_starved", "mcts", base.with_overrides(budget=args.starved_budget)),
        EvalConfig("file_first", "file_first", base),
    ]
    rows = evaluate(instances, configs)

    print(f"{len(instances)} instances from {corpus_dir}")
    print("config\ttop1\ttop5\tmean_nodes_visited\tmean_budget")
    for row in rows:
        print(f"{row.config}\t{row.top1:.3f}\t{row.top5:.3f}\t{row.mean_nodes_visited:.2f}\t{row.mean_budget:.2f}")

    if tmp is not None:
        tmp.cleanup()
    return 0


if __name__ == "__main__":
    sys.exit(main())
