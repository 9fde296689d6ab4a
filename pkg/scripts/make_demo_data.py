"""Write a small synthetic cohort CSV plus ready-to-run fit/search configs.

Usage: python scripts/make_demo_data.py [output_dir]
"""

import json
import sys
from pathlib import Path

from fairpen import save_csv
from fairpen.simulate import generate, setting


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo")
    out.mkdir(parents=True, exist_ok=True)

    dataset = generate(setting(1, n=20_000, seed=1))
    save_csv(dataset, out / "cohort.csv")

    data_block = {
        "path": str(out / "cohort.csv"),
        "outcome": "outcome",
        "features": [f"x{i}" for i in range(1, 10)],
        "groups": ["gA", "gB", "gC"],
        "reference": "reference",
    }
    (out / "fit_config.json").write_text(
        json.dumps(
            {
                "data": data_block,
                "lambdas": [0.5, 0.5, 0.5],
                "threshold": 0.5,
                "output_dir": str(out / "fit_out"),
            },
            indent=2,
        )
        + "\n"
    )
    (out / "search_config.json").write_text(
        json.dumps(
            {
                "data": data_block,
                "threshold": 0.5,
                "search": {
                    "num_candidates": 40,
                    "log10_lower": -3,
                    "log10_upper": 1,
                    "folds": 3,
                    "seed": 7,
                    "alphas": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99],
                    "syntheses": ["population_weighted", "group_weighted", "maximum"],
                },
                "output_dir": str(out / "search_out"),
            },
            indent=2,
        )
        + "\n"
    )
    print(f"wrote {out}/cohort.csv, fit_config.json, search_config.json")
    print(f"try: fairpen fit --config {out}/fit_config.json")
    print(f"     fairpen search --config {out}/search_config.json")


if __name__ == "__main__":
    main()
