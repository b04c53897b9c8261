"""Write the eight showcase instances as JSON documents and print their Type labels."""

import argparse
from pathlib import Path

from cobi.generator import dumps
from cobi.pareto import classify
from cobi.showcase import SHOWCASE_EPSILON, build_showcase

DEFAULT_DIR = Path(__file__).resolve().parents[1] / "src" / "cobi" / "data" / "showcase"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=DEFAULT_DIR)
    parser.add_argument("--epsilon", type=float, default=SHOWCASE_EPSILON)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for k, prob in enumerate(build_showcase()):
        path = args.out_dir / f"{k + 1}-{prob.name}.json"
        path.write_text(dumps(prob), encoding="utf-8")
        print(f"{path.name}: type {classify(prob, args.epsilon).value}")


if __name__ == "__main__":
    main()
