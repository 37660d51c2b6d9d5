"""Reading and writing generated datasets.

CSV is long format, one row per ``(sample, t)``::

    sample,t,u0,u1
    0,0,3,61.27...

Discrete cells are 1-based integers; continuous cells use the shortest
decimal that round-trips to the same double (``repr``), so reading a file
back reproduces the dataset exactly.

JSON holds ``values[sample][t][node]`` under a ``metadata`` header with the
spec's SHA-256, seed, T and N.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from typing import TextIO

import numpy as np

from .errors import StructureMismatch
from .model import Dataset, GenerationConfig, NetworkSpec
from .spec_io import serialize_spec


def spec_digest(spec: NetworkSpec) -> str:
    return hashlib.sha256(serialize_spec(spec).encode("utf-8")).hexdigest()


def _cell_formatters(dataset: Dataset):
    return [(lambda v: str(int(v))) if n.is_discrete else (lambda v: repr(float(v))) for n in dataset.nodes]


def write_csv(dataset: Dataset, out: TextIO) -> None:
    fmt = _cell_formatters(dataset)
    out.write(",".join(["sample", "t", *(n.label for n in dataset.nodes)]) + "\n")
    lines = []
    for s, seq in enumerate(dataset.values.tolist()):
        for t, row in enumerate(seq):
            lines.append(f"{s},{t}," + ",".join(f(v) for f, v in zip(fmt, row)))
    out.write("\n".join(lines))
    out.write("\n")


def dataset_to_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    write_csv(dataset, buf)
    return buf.getvalue()


def read_csv(src: TextIO, spec: NetworkSpec) -> Dataset:
    """Load a long-format CSV written by :func:`write_csv`.

    Raises:
        StructureMismatch: header, row order or cell kinds disagree with ``spec``.
    """
    nodes = tuple(sorted(spec.nodes, key=lambda n: n.id))
    reader = csv.reader(src)
    header = next(reader, None)
    expected = ["sample", "t", *(n.label for n in nodes)]
    if header != expected:
        raise StructureMismatch(f"line 1: header {header} does not match spec columns {expected}")
    keys, cells = [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(expected):
            raise StructureMismatch(f"line {lineno}: {len(row)} fields, expected {len(expected)}")
        try:
            keys.append((int(row[0]), int(row[1])))
            cells.append([float(x) for x in row[2:]])
        except ValueError as exc:
            raise StructureMismatch(f"line {lineno}: {exc}") from None
    if not keys:
        raise StructureMismatch("line 2: no data rows")
    n = max(k[0] for k in keys) + 1
    t_len = max(k[1] for k in keys) + 1
    order = [(s, t) for s in range(n) for t in range(t_len)]
    if keys != order:
        bad = next((i for i, (a, b) in enumerate(zip(keys, order)) if a != b), len(keys))
        raise StructureMismatch(
            f"line {bad + 2}: expected rows ordered by (sample, t) covering {n}x{t_len} cells"
        )
    ds = Dataset(np.array(cells, dtype=np.float64).reshape(n, t_len, len(nodes)), nodes)
    ds.check()
    return ds


def dataset_to_json(dataset: Dataset, spec: NetworkSpec, config: GenerationConfig | None = None) -> str:
    meta = {
        "spec_sha256": spec_digest(spec),
        "seed": config.seed if config else None,
        "T": dataset.t_len,
        "N": dataset.n_samples,
        "columns": [n.label for n in dataset.nodes],
    }
    discrete = [n.is_discrete for n in dataset.nodes]
    values = [
        [[int(v) if d else v for d, v in zip(discrete, row)] for row in seq]
        for seq in dataset.values.tolist()
    ]
    return json.dumps({"metadata": meta, "values": values}, separators=(",", ":")) + "\n"


def read_json(src: TextIO, spec: NetworkSpec) -> Dataset:
    try:
        doc = json.load(src)
        values = np.array(doc["values"], dtype=np.float64)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise StructureMismatch(f"$.values: unreadable dataset JSON ({exc})") from None
    nodes = tuple(sorted(spec.nodes, key=lambda n: n.id))
    ds = Dataset(values, nodes)
    ds.check()
    return ds
