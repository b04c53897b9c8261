"""Reference sets, ideal/nadir points and Type labels for the showcase instances
(or any instance documents passed on the command line)."""

import argparse
import json
from pathlib import Path

from cobi.generator import load
from cobi.pareto import approx_ps, classify
from cobi.problem import reference_csv_text
from cobi.showcase import showcase_files


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("instances", nargs="*", type=Path)
    parser.add_argument("--epsilon", type=float, default=0.01)
    parser.add_argument("--out-dir", type=Path, default=Path("results/reference_sets"))
    args = parser.parse_args()

    paths = args.instances or [Path(str(p)) for p in showcase_files()]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for path in paths:
        prob = load(path)
        approx = approx_ps(prob, args.epsilon)
        stem = path.stem
        (args.out_dir / f"{stem}.csv").write_text(reference_csv_text(approx.archive), encoding="utf-8")
        summary = approx.summary(prob.instance_id)
        summary["type"] = classify(prob, args.epsilon).value
        (args.out_dir / f"{stem}.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n",
                                                   encoding="utf-8")
        print(f"{stem}: |PS|={len(approx.archive)} type={summary['type']} "
              f"ideal={tuple(round(v, 4) for v in approx.ideal)} nadir={tuple(round(v, 4) for v in approx.nadir)}")


if __name__ == "__main__":
    main()
