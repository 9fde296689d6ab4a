"""Desk-scale replication study for one simulation setting.

Runs the full generate/search/evaluate loop and writes the same outputs as
``fairpen simulate``. Full-scale runs (n = 1,000,000 and 1000 replications)
are a matter of patience, not code: pass --n and --reps.

Usage:
    python scripts/run_desk_experiment.py --setting 1 --reps 50 --n 100000 \
        --out results/setting1
"""

import argparse
import json
from pathlib import Path

from fairpen.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--setting", type=int, default=1, choices=(1, 2, 3))
    parser.add_argument("--reps", type=int, default=50)
    parser.add_argument("--n", type=int, default=100_000)
    parser.add_argument("--candidates", type=int, default=40)
    parser.add_argument("--seed", type=int, default=20250809)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--alphas", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99])
    parser.add_argument("--syntheses", nargs="+", default=["population_weighted", "group_weighted", "maximum"])
    parser.add_argument("--drop-column", action="append", default=[])
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    out = Path(args.out or f"results/setting{args.setting}")
    out.parent.mkdir(parents=True, exist_ok=True)
    config = {
        "sim": {"setting": args.setting, "n": args.n, "reps": args.reps, "seed": args.seed},
        "threshold": 0.5,
        "search": {
            "num_candidates": args.candidates,
            "log10_lower": -3,
            "log10_upper": 1,
            "folds": 3,
            "seed": args.seed,
            "alphas": args.alphas,
            "syntheses": args.syntheses,
        },
        "output_dir": str(out),
    }
    config_path = out.with_suffix(".config.json")
    config_path.parent.mkdir(parents=True, exist_ok=True)
    config_path.write_text(json.dumps(config, indent=2) + "\n")

    argv = ["simulate", "--config", str(config_path), "--threads", str(args.threads)]
    for column in args.drop_column:
        argv += ["--drop-column", column]
    return cli_main(argv)


if __name__ == "__main__":
    raise SystemExit(main())
