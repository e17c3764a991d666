"""Materialise MovieLens 100K as ``data/ml-100k/u.data``.

GroupLens is not always reachable, so the ratings are taken from the copy of
ml-100k that ships inside the RecBole wheel on PyPI (``ml-100k.inter`` is
``u.data`` with a header line).  The result is checked against the published
counts before it is written.
"""

from __future__ import annotations

import argparse
import glob
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"
DEFAULT_OUT = Path(__file__).resolve().parents[1] / "data" / "ml-100k" / "u.data"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    parser.add_argument("--wheel", type=Path, help="use an already-downloaded recbole wheel")
    args = parser.parse_args(argv)

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.run(
                [sys.executable, "-m", "pip", "download", "--no-deps", "-d", tmp, "recbole==1.2.1"],
                check=True,
            )
            wheel = Path(glob.glob(f"{tmp}/recbole-*.whl")[0])
        lines = zipfile.ZipFile(wheel).read(MEMBER).decode("ascii").splitlines()[1:]

    users, items = set(), set()
    for line in lines:
        u, i, r, _ = line.split("\t")
        users.add(u)
        items.add(i)
    if (len(lines), len(users), len(items)) != (100_000, 943, 1682):
        sys.exit(f"unexpected counts {len(lines)}/{len(users)}/{len(items)}")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text("\n".join(lines) + "\n", encoding="ascii")
    print(f"wrote {args.out} ({len(lines)} ratings)")


if __name__ == "__main__":
    main()
