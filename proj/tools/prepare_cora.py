#!/usr/bin/env python3
# Copyright 2026 The promptcgl Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Convert the LINQS Cora release (cora.content, cora.cites) to promptcgl text files.

    python3 tools/prepare_cora.py --src /path/to/cora --out data/cora

Writes edges.txt (0-based "u v" per line), features.txt (one whitespace
separated row per node) and labels.txt (class id per line, classes numbered
by sorted subject name). Citations to papers missing from cora.content are
dropped.
"""

import argparse
import pathlib
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--src", required=True, type=pathlib.Path, help="directory holding cora.content and cora.cites")
    ap.add_argument("--out", default=pathlib.Path("data/cora"), type=pathlib.Path)
    args = ap.parse_args()

    content = args.src / "cora.content"
    cites = args.src / "cora.cites"
    for p in (content, cites):
        if not p.is_file():
            print(f"missing {p}", file=sys.stderr)
            return 2

    ids, rows, subjects = [], [], []
    with content.open() as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            ids.append(parts[0])
            rows.append(parts[1:-1])
            subjects.append(parts[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    classes = {name: c for c, name in enumerate(sorted(set(subjects)))}

    edges, dropped = set(), 0
    with cites.open() as f:
        for line in f:
            parts = line.split()
            if len(parts) != 2:
                continue
            a, b = index.get(parts[0]), index.get(parts[1])
            if a is None or b is None:
                dropped += 1
                continue
            if a != b:
                edges.add((min(a, b), max(a, b)))

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "edges.txt").write_text("".join(f"{u} {v}\n" for u, v in sorted(edges)))
    (args.out / "features.txt").write_text("".join(" ".join(r) + "\n" for r in rows))
    (args.out / "labels.txt").write_text("".join(f"{classes[s]}\n" for s in subjects))
    print(f"{len(ids)} nodes, {len(edges)} edges, {len(classes)} classes, {dropped} dangling citations dropped")
    return 0


if __name__ == "__main__":
    sys.exit(main())
