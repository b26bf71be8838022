"""Full versus strided adder construction times.

    python3 scripts/run_table1.py --sizes 128,512,2048 --strides 32,64 --repeats 5
"""

import argparse
from pathlib import Path

from qstream.bench import bench_table1, to_csv, to_markdown


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="128,256,512,1024,2048")
    ap.add_argument("--strides", default="64")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--strided-only", action="store_true")
    ap.add_argument("--out", default="results/table1.csv")
    args = ap.parse_args()
    rows = bench_table1([int(s) for s in args.strides.split(",")],
                        [int(s) for s in args.sizes.split(",")],
                        args.repeats, full=not args.strided_only)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(to_csv(rows))
    print(to_markdown(rows))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
