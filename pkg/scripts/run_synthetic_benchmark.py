#!/usr/bin/env python3
"""End-to-end demo: synthesize a corpus, run every setting, emit reports.

Generates a multilingual corpus with the built-in generator, executes the
full (setting x with/without AL) grid through the CLI, and prints the
resulting summary table. Everything lands under --workdir.
"""

import argparse
import json
import sys
from pathlib import Path

from lingalloc.cli import main as cli_main


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="benchmark_out")
    parser.add_argument("--task", default="classification",
                        choices=["classification", "tagging", "parsing"])
    parser.add_argument("--languages", default="aa,bb,cc,dd")
    parser.add_argument("--train-size", type=int, default=700)
    parser.add_argument("--test-size", type=int, default=150)
    parser.add_argument("--overlap", type=float, default=0.5)
    parser.add_argument("--budget", type=int, default=300)
    parser.add_argument("--replicates", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    work = Path(args.workdir)
    corpus = work / "corpus"
    rc = cli_main(
        [
            "synth",
            "--task", args.task,
            "--languages", args.languages,
            "--train-size", str(args.train_size),
            "--test-size", str(args.test_size),
            "--overlap", str(args.overlap),
            "--seed", str(args.seed),
            "--budget", str(args.budget),
            "--out", str(corpus),
        ]
    )
    if rc:
        return rc
    config_path = corpus / "config.json"
    config = json.loads(config_path.read_text())
    config["replicates"] = args.replicates
    config["training"] = {"learning_rates": [0.5], "max_epochs": 25, "patience": 5}
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True))

    out = work / "runs"
    rc = cli_main(["run", "--config", str(config_path), "--jobs", str(args.jobs), "--out", str(out)])
    if rc:
        return rc
    rc = cli_main(["report", "--out", str(out)])
    if rc:
        return rc
    print()
    print((out / "summary.csv").read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
