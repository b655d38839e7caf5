#!/usr/bin/env python3
"""Download the Cora citation dataset and convert it to the formats the
`gccl` CLI reads: data/cora/{edges.txt, features.bin, labels.txt}.

Requires network access to https://linqs-data.soe.ucsc.edu. Run from the
repository root:

    python3 tools/fetch_cora.py
"""

import io
import struct
import tarfile
import urllib.request
from pathlib import Path

URL = "https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz"


def main() -> None:
    out_dir = Path("data/cora")
    out_dir.mkdir(parents=True, exist_ok=True)

    print(f"downloading {URL} ...")
    with urllib.request.urlopen(URL) as response:
        archive = response.read()

    content_lines = []
    cites_lines = []
    with tarfile.open(fileobj=io.BytesIO(archive), mode="r:gz") as tar:
        for member in tar.getmembers():
            if member.name.endswith("cora.content"):
                content_lines = tar.extractfile(member).read().decode().splitlines()
            elif member.name.endswith("cora.cites"):
                cites_lines = tar.extractfile(member).read().decode().splitlines()
    if not content_lines or not cites_lines:
        raise SystemExit("archive did not contain cora.content / cora.cites")

    node_ids = {}
    features = []
    label_names = []
    labels = []
    for line in content_lines:
        parts = line.strip().split("\t")
        paper_id, feature_bits, label = parts[0], parts[1:-1], parts[-1]
        node_ids[paper_id] = len(node_ids)
        features.append([float(b) for b in feature_bits])
        if label not in label_names:
            label_names.append(label)
        labels.append(label)
    label_names.sort()
    label_index = {name: i for i, name in enumerate(label_names)}

    n, d = len(features), len(features[0])
    print(f"{n} nodes, {d} features, {len(label_names)} classes")

    edges = set()
    for line in cites_lines:
        a, b = line.split()
        if a in node_ids and b in node_ids and a != b:
            u, v = node_ids[a], node_ids[b]
            edges.add((min(u, v), max(u, v)))
    print(f"{len(edges)} undirected edges")

    with open(out_dir / "edges.txt", "w") as f:
        for u, v in sorted(edges):
            f.write(f"{u} {v}\n")
    with open(out_dir / "labels.txt", "w") as f:
        for label in labels:
            f.write(f"{label_index[label]}\n")
    with open(out_dir / "features.bin", "wb") as f:
        f.write(struct.pack("<II", n, d))
        for row in features:
            f.write(struct.pack(f"<{d}d", *row))
    print(f"wrote {out_dir}/edges.txt, labels.txt, features.bin")


if __name__ == "__main__":
    main()
