"""Writes the small bundled datasets and the numpy-computed golden files."""
import base64
import json
import struct
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent


def b64(m):
    m = np.asarray(m, dtype="<f8")
    return base64.b64encode(m.tobytes(order="C")).decode()


def toy():
    # Two node types; same-type pairs are linked.
    a = np.zeros((4, 4))
    for u, v in [(0, 1), (2, 3)]:
        a[u, v] = a[v, u] = 1.0
    x = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    g = {
        "format": "dgx-graph",
        "version": 1,
        "num_nodes": 4,
        "num_features": 2,
        "num_steps": 2,
        "encoding": "base64 f64 little-endian row-major",
        "snapshots": [{"t": t, "adjacency": b64(a), "features": b64(x)} for t in (1, 2)],
        "task": {"kind": "link_prediction", "links": [[0, 1, 1.0], [2, 3, 1.0], [0, 2, 0.0], [1, 3, 0.0]]},
    }
    (HERE / "toy" / "graph.json").write_text(json.dumps(g, indent=2) + "\n")


def edges():
    rng = np.random.default_rng(5)
    names = ["ana", "ben", "cho", "dev", "eli", "fay", "gus"]
    lines = ["src,dst,t"]
    for k in range(19):
        u, v = rng.choice(len(names), 2, replace=False)
        lines.append(f"{names[u]},{names[v]},{100 + 7 * k + int(rng.integers(0, 5))}")
    (HERE / "edges_sample.csv").write_text("\n".join(lines) + "\n")


def pems():
    rng = np.random.default_rng(9)
    n, steps = 10, 12
    lines = ["from,to,cost"]
    for i in range(n - 1):
        lines.append(f"{i},{i + 1},{round(float(rng.uniform(0.5, 3.0)), 3)}")
    lines += ["0,5,1.2", "3,8,2.4"]
    (HERE / "pems_sample" / "adjacency.csv").write_text("\n".join(lines) + "\n")
    base = rng.uniform(40, 70, n)
    rows = ["interval," + ",".join(f"s{i}" for i in range(n))]
    for t in range(steps):
        vals = base + 5 * np.sin(t / 2 + np.arange(n)) + rng.normal(0, 1, n)
        rows.append(f"{t}," + ",".join(f"{v:.2f}" for v in vals))
    (HERE / "pems_sample" / "readings.csv").write_text("\n".join(rows) + "\n")


def normalized(a):
    a = np.asarray(a, dtype=float)
    d = 1.0 + a.sum(axis=1)
    return (a + np.eye(len(a))) / np.sqrt(np.outer(d, d))


def golden():
    path = [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    out = {"adjacency": path, "normalized": normalized(path).tolist()}
    (HERE / "golden" / "path3_normalized.json").write_text(json.dumps(out, indent=2) + "\n")


def edges_golden(steps=4):
    rows = [line.split(",") for line in (HERE / "edges_sample.csv").read_text().split("\n")[1:] if line]
    vocab = []
    for u, v, _ in rows:
        for name in (u, v):
            if name not in vocab:
                vocab.append(name)
    order = sorted(range(len(rows)), key=lambda k: float(rows[k][2]))
    n = len(vocab)
    adj = np.zeros((steps, n, n))
    for rank, k in enumerate(order):
        u, v = vocab.index(rows[k][0]), vocab.index(rows[k][1])
        b = rank * steps // len(rows)
        adj[b, u, v] = adj[b, v, u] = 1.0
    deg = adj.sum(axis=2) / max(1, n - 1)
    out = {"steps": steps, "vocabulary": vocab, "adjacency": adj.tolist(), "degree_feature": deg.tolist()}
    (HERE / "golden" / "edges_sample_count4.json").write_text(json.dumps(out, indent=2) + "\n")


def pems_golden():
    lines = (HERE / "pems_sample" / "readings.csv").read_text().split("\n")[1:]
    x = np.array([[float(v) for v in line.split(",")[1:]] for line in lines if line])
    n = x.shape[1]
    adj = np.zeros((n, n))
    for line in (HERE / "pems_sample" / "adjacency.csv").read_text().split("\n")[1:]:
        if line:
            i, j = (int(v) for v in line.split(",")[:2])
            adj[i, j] = adj[j, i] = 1.0
    out = {"adjacency": adj.tolist(), "features": (x - x.mean()).tolist()}
    (HERE / "golden" / "pems_sample.json").write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    toy()
    edges()
    pems()
    golden()
    edges_golden()
    pems_golden()
