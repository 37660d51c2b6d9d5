"""JSON network spec files: strict parsing and canonical serialization.

Layout::

    {
      "nodes": [{"id": 0, "kind": "D", "levels": 4, "name": "state"}, ...],
      "epochs": {
        "0":      {"<node id>": {"parents": [{"node": 0, "lag": 0}], "cpd": CPD}, ...},
        "steady": {...}
      },
      "generation": {"T": 20, "N": 1000, "seed": 42}
    }

``CPD`` is ``{"table": [[p, ...], ...]}`` for a discrete node or
``{"rows": [{"mu": m, "sigma": s}, ...], "weights": [w, ...]}`` for a
continuous one. Discrete levels are 1-based in every table and data file.
Table rows follow the mixed-radix order of the discrete parents as listed,
first parent most significant.

Unknown keys are rejected everywhere. Errors carry a JSON path such as
``$.epochs.steady.0.cpd.table[2]``, or a line/column for malformed JSON.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import ParseError, SchemaError, SemanticError
from .model import (
    STEADY,
    ConditionalGaussian,
    DiscreteCpd,
    EpochCpdSet,
    GaussianRow,
    GenerationConfig,
    Kind,
    NetworkSpec,
    NodeCpd,
    NodeSpec,
    ParentRef,
    epoch_sort_key,
    validate_spec,
)

FORMAT_VERSION = 1
_INDEX_RE = re.compile(r"0|[1-9][0-9]*")


@dataclass(frozen=True)
class GenerationDefaults:
    """The optional ``generation`` block; any field may be absent."""

    t_len: int | None = None
    n_samples: int | None = None
    seed: int | None = None

    def resolve(self, t_len=None, n_samples=None, seed=None, fallback_seed: int = 0) -> GenerationConfig:
        """Merge explicit overrides over these defaults."""
        t = t_len if t_len is not None else self.t_len
        n = n_samples if n_samples is not None else self.n_samples
        s = seed if seed is not None else self.seed
        if t is None:
            raise ValueError("T is not set (use --t or the spec's generation block)")
        if n is None:
            raise ValueError("N is not set (use --n or the spec's generation block)")
        return GenerationConfig(t, n, fallback_seed if s is None else s)


@dataclass(frozen=True)
class SpecDocument:
    network: NetworkSpec
    generation: GenerationDefaults = GenerationDefaults()


class _Obj(dict):
    """dict that remembers keys repeated in the source text."""

    dupes: list


def _pairs_hook(pairs):
    obj = _Obj()
    obj.dupes = []
    for k, v in pairs:
        if k in obj:
            obj.dupes.append(k)
        obj[k] = v
    return obj


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------


def _expect_obj(value, path, required=(), optional=()):
    if not isinstance(value, dict):
        raise SchemaError(f"expected an object, got {_type(value)}", path)
    for k in getattr(value, "dupes", ()):
        raise SchemaError(f"duplicate key {k!r}", path)
    for k in value:
        if k not in required and k not in optional:
            raise SchemaError(f"unknown key {k!r}", path)
    for k in required:
        if k not in value:
            raise SchemaError(f"missing key {k!r}", path)
    return value


def _type(v) -> str:
    return {dict: "object", list: "array", str: "string", bool: "boolean", type(None): "null"}.get(
        type(v), "number" if isinstance(v, (int, float)) else type(v).__name__
    )


def _int(v, path, lo=None, hi=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"expected an integer, got {_type(v)}", path)
    if lo is not None and v < lo:
        raise SchemaError(f"must be >= {lo}, got {v}", path)
    if hi is not None and v > hi:
        raise SchemaError(f"must be <= {hi}, got {v}", path)
    return v


def _real(v, path) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"expected a number, got {_type(v)}", path)
    return float(v)


def _list(v, path) -> list:
    if not isinstance(v, list):
        raise SchemaError(f"expected an array, got {_type(v)}", path)
    return v


def _index_key(k: str, path: str, what: str) -> int:
    if not _INDEX_RE.fullmatch(k):
        raise SchemaError(f"{what} key must be a non-negative integer, got {k!r}", path)
    return int(k)


def _parse_node(v, path) -> NodeSpec:
    _expect_obj(v, path, required=("id", "kind"), optional=("levels", "name"))
    kind = v["kind"]
    if kind not in ("D", "C"):
        raise SchemaError(f"kind must be 'D' or 'C', got {kind!r}", f"{path}.kind")
    levels = v.get("levels")
    if levels is not None:
        levels = _int(levels, f"{path}.levels")
    name = v.get("name")
    if name is not None and not isinstance(name, str):
        raise SchemaError(f"expected a string, got {_type(name)}", f"{path}.name")
    return NodeSpec(_int(v["id"], f"{path}.id"), Kind(kind), levels, name)


def _parse_cpd(v, path):
    if isinstance(v, dict) and "table" in v:
        _expect_obj(v, path, required=("table",))
        rows = []
        for r, row in enumerate(_list(v["table"], f"{path}.table")):
            rpath = f"{path}.table[{r}]"
            rows.append([_real(p, f"{rpath}[{k}]") for k, p in enumerate(_list(row, rpath))])
        return DiscreteCpd(rows)
    if isinstance(v, dict) and "rows" in v:
        _expect_obj(v, path, required=("rows",), optional=("weights",))
        rows = []
        for r, row in enumerate(_list(v["rows"], f"{path}.rows")):
            rpath = f"{path}.rows[{r}]"
            _expect_obj(row, rpath, required=("mu", "sigma"))
            rows.append(GaussianRow(_real(row["mu"], f"{rpath}.mu"), _real(row["sigma"], f"{rpath}.sigma")))
        weights = [
            _real(w, f"{path}.weights[{j}]")
            for j, w in enumerate(_list(v.get("weights", []), f"{path}.weights"))
        ]
        return ConditionalGaussian(rows, weights)
    _expect_obj(v, path)
    raise SchemaError("cpd needs either 'table' (discrete) or 'rows' (continuous)", path)


def _parse_entry(v, path) -> NodeCpd:
    _expect_obj(v, path, required=("cpd",), optional=("parents",))
    parents = []
    for j, p in enumerate(_list(v.get("parents", []), f"{path}.parents")):
        ppath = f"{path}.parents[{j}]"
        _expect_obj(p, ppath, required=("node",), optional=("lag",))
        parents.append(ParentRef(_int(p["node"], f"{ppath}.node"), _int(p.get("lag", 0), f"{ppath}.lag")))
    return NodeCpd(tuple(parents), _parse_cpd(v["cpd"], f"{path}.cpd"))


def _parse_epochs(v, path) -> dict:
    _expect_obj(v, path, optional=tuple(v) if isinstance(v, dict) else ())
    if STEADY not in v:
        raise SchemaError(f"missing epoch: {STEADY}", path)
    epochs = {}
    for key, block in v.items():
        epoch = STEADY if key == STEADY else _index_key(key, path, "epoch")
        bpath = f"{path}.{key}"
        _expect_obj(block, bpath, optional=tuple(block) if isinstance(block, dict) else ())
        entries = {
            _index_key(nk, bpath, "node"): _parse_entry(entry, f"{bpath}.{nk}")
            for nk, entry in block.items()
        }
        epochs[epoch] = EpochCpdSet(epoch, entries)
    return epochs


def _parse_generation(v, path) -> GenerationDefaults:
    _expect_obj(v, path, optional=("T", "N", "seed"))
    get = lambda k, **kw: _int(v[k], f"{path}.{k}", **kw) if k in v else None  # noqa: E731
    return GenerationDefaults(get("T", lo=1), get("N", lo=1), get("seed", lo=0, hi=2**64 - 1))


def parse_document(text: str) -> SpecDocument:
    """Parse and validate a spec document.

    Raises:
        ParseError: the text is not JSON (carries line and column).
        SchemaError: wrong types, missing or unknown keys (carries a JSON path).
        SemanticError: the network fails :func:`~tsgen.model.validate_spec`.
    """
    try:
        raw = json.loads(text, object_pairs_hook=_pairs_hook)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    _expect_obj(raw, "$", required=("nodes", "epochs"), optional=("generation", "version"))
    if "version" in raw and raw["version"] != FORMAT_VERSION:
        raise SchemaError(f"unsupported version {raw['version']!r}", "$.version")
    nodes = [_parse_node(n, f"$.nodes[{i}]") for i, n in enumerate(_list(raw["nodes"], "$.nodes"))]
    spec = NetworkSpec(tuple(nodes), _parse_epochs(raw["epochs"], "$.epochs"))
    report = validate_spec(spec)
    if not report.ok:
        raise SemanticError(report.violations)
    gen = _parse_generation(raw["generation"], "$.generation") if "generation" in raw else GenerationDefaults()
    return SpecDocument(spec, gen)


def parse_spec(text: str) -> tuple[NetworkSpec, GenerationDefaults]:
    doc = parse_document(text)
    return doc.network, doc.generation


def load_spec(path) -> SpecDocument:
    with open(path, encoding="utf-8") as f:
        return parse_document(f.read())


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def _num(x: float):
    # Integral values print without a trailing ".0" (20, not 20.0).
    if x.is_integer() and abs(x) < 2**53:
        return int(x)
    return x


def _cpd_json(cpd) -> dict:
    if isinstance(cpd, DiscreteCpd):
        return {"table": [[_num(p) for p in row] for row in cpd.table]}
    out = {"rows": [{"mu": _num(r.mu), "sigma": _num(r.sigma)} for r in cpd.rows]}
    if cpd.weights:
        out["weights"] = [_num(w) for w in cpd.weights]
    return out


def _node_json(n: NodeSpec) -> dict:
    out = {"id": n.id, "kind": n.kind.value}
    if n.levels is not None:
        out["levels"] = n.levels
    if n.name is not None:
        out["name"] = n.name
    return out


def spec_to_json(spec: NetworkSpec, generation: GenerationDefaults | None = None) -> dict:
    doc = {
        "nodes": [_node_json(n) for n in sorted(spec.nodes, key=lambda n: n.id)],
        "epochs": {
            str(e): {
                str(nid): {
                    "parents": [{"node": p.node, "lag": p.lag} for p in entry.parents],
                    "cpd": _cpd_json(entry.cpd),
                }
                for nid, entry in sorted(spec.epochs[e].entries.items())
            }
            for e in sorted(spec.epochs, key=epoch_sort_key)
        },
    }
    if generation is not None:
        gen = {"T": generation.t_len, "N": generation.n_samples, "seed": generation.seed}
        gen = {k: v for k, v in gen.items() if v is not None}
        if gen:
            doc["generation"] = gen
    return doc


def _emit(value, indent: int, width: int) -> str:
    flat = json.dumps(value, ensure_ascii=False)
    if not isinstance(value, (dict, list)) or not value or len(flat) + indent <= width:
        return flat
    pad = " " * (indent + 2)
    if isinstance(value, dict):
        items = [
            f"{pad}{json.dumps(k, ensure_ascii=False)}: {_emit(v, indent + 2, width)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"
    items = [pad + _emit(v, indent + 2, width) for v in value]
    return "[\n" + ",\n".join(items) + "\n" + " " * indent + "]"


def serialize_spec(spec: NetworkSpec, generation: GenerationDefaults | None = None) -> str:
    """Canonical text: fixed key order, shortest round-trip numbers, trailing newline."""
    return _emit(spec_to_json(spec, generation), 0, 88) + "\n"
