"""Convert one Facebook-100 ``.mat`` file to ``edges.csv`` and ``attrs.csv``.

The file holds a sparse adjacency ``A`` and a ``local_info`` matrix whose
columns are status, gender, major, second major, dorm, year and high
school; 0 marks a missing value. Only status, gender, year, dorm and major
are kept.

    python scripts/convert_fb100.py Caltech36.mat data/caltech
    nsum simulate --edges data/caltech/edges.csv --attrs data/caltech/attrs.csv
"""

import argparse
import csv
from pathlib import Path

import numpy as np
from scipy import io, sparse

COLUMNS = {"status": 0, "gender": 1, "major": 2, "dorm": 4, "year": 5}


def convert(mat_path, out_dir):
    data = io.loadmat(mat_path)
    adj = sparse.triu(sparse.csr_matrix(data["A"]), k=1).tocoo()
    info = np.asarray(data["local_info"], dtype=np.int64)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    order = np.lexsort((adj.col, adj.row))
    with open(out / "edges.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst"])
        w.writerows(zip(adj.row[order].tolist(), adj.col[order].tolist()))
    with open(out / "attrs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", *COLUMNS])
        for i, row in enumerate(info):
            w.writerow([i, *(row[c] if row[c] != 0 else "" for c in COLUMNS.values())])
    return info.shape[0], adj.nnz


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("mat")
    ap.add_argument("output_dir")
    args = ap.parse_args()
    n, m = convert(args.mat, args.output_dir)
    print(f"{n} nodes, {m} edges written to {args.output_dir}")


if __name__ == "__main__":
    main()
