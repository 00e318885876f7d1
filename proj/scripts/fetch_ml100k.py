#!/usr/bin/env python3
"""Extract MovieLens-100K ratings (u.data layout) into data/ml-100k/u.data.

grouplens.org is not always reachable, so the ratings are taken from the
copy bundled in the RecBole wheel (dataset_example/ml-100k/ml-100k.inter),
which holds the same 100,000 user/item/rating/timestamp rows with a typed
header line.
"""
import argparse
import pathlib
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data/ml-100k/u.data"))
    parser.add_argument("--wheel", help="use an already downloaded recbole wheel")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "recbole==1.2.1", "-d", tmp],
                           check=True)
            wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        lines = zipfile.ZipFile(wheel).read(MEMBER).decode().splitlines()

    rows = [line for line in lines[1:] if line.strip()]
    if len(rows) != 100000:
        print(f"unexpected row count {len(rows)}", file=sys.stderr)
        return 1
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(rows) + "\n")
    print(f"wrote {len(rows)} ratings to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
