"""Domain types for dynamic Bayesian networks plus structural validation.

A network is declared slice-by-slice. Each node owns one CPD per *epoch*:
epochs ``0 .. lmax-1`` cover the first timesteps, where lagged parents do
not exist yet, and the ``steady`` epoch covers every ``t >= lmax``.

Discrete values are 1-based at every external boundary (spec files, CSV,
decoded state paths) and 0-based only when used as array indices.

CPD rows are addressed by the discrete parents in the order they are listed,
first-listed parent most significant (see :func:`parent_config_index`).
"""

from __future__ import annotations

import enum
import heapq
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Sequence, Union

import numpy as np

from .errors import CycleError, RangeError, StructureMismatch

STEADY = "steady"
EpochId = Union[int, str]

ROW_SUM_TOL = 1e-9


class Kind(enum.Enum):
    DISCRETE = "D"
    CONTINUOUS = "C"


@dataclass(frozen=True)
class NodeSpec:
    id: int
    kind: Kind
    levels: int | None = None
    name: str | None = None

    @property
    def label(self) -> str:
        return self.name if self.name else f"u{self.id}"

    @property
    def is_discrete(self) -> bool:
        return self.kind is Kind.DISCRETE


@dataclass(frozen=True)
class ParentRef:
    """Edge from ``node`` at slice ``t - lag`` into the owning node at ``t``."""

    node: int
    lag: int = 0


@dataclass(frozen=True)
class DiscreteCpd:
    """Row-stochastic table: one row per parent configuration, one column per level."""

    table: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(tuple(float(p) for p in row) for row in self.table))

    @property
    def n_rows(self) -> int:
        return len(self.table)

    def cumulative(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.table, dtype=np.float64), axis=1)


class GaussianRow(NamedTuple):
    mu: float
    sigma: float


@dataclass(frozen=True)
class ConditionalGaussian:
    """Per-configuration (mu, sigma) table plus linear weights on continuous parents.

    The conditional mean is ``rows[r].mu + sum(weights[j] * x_j)`` where ``x_j``
    runs over the continuous parents in listed order.
    """

    rows: tuple[GaussianRow, ...]
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "rows", tuple(GaussianRow(float(mu), float(sigma)) for mu, sigma in self.rows)
        )
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def n_rows(self) -> int:
        return len(self.rows)


Cpd = Union[DiscreteCpd, ConditionalGaussian]


@dataclass(frozen=True)
class NodeCpd:
    parents: tuple[ParentRef, ...]
    cpd: Cpd

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))


@dataclass(frozen=True)
class EpochCpdSet:
    epoch: EpochId
    entries: Mapping[int, NodeCpd]


def epoch_sort_key(epoch: EpochId):
    return (1, 0) if epoch == STEADY else (0, epoch)


@dataclass(frozen=True)
class NetworkSpec:
    nodes: tuple[NodeSpec, ...]
    epochs: Mapping[EpochId, EpochCpdSet]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def lmax(self) -> int:
        steady = self.epochs.get(STEADY)
        lags = [
            p.lag
            for entry in (steady.entries.values() if steady else ())
            for p in entry.parents
        ]
        return max([1, *lags])

    def node(self, node_id: int) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def epoch_ids(self) -> list[EpochId]:
        return sorted(self.epochs, key=epoch_sort_key)

    def entry(self, epoch: EpochId, node_id: int) -> NodeCpd:
        return self.epochs[epoch].entries[node_id]

    def discrete_parents(self, epoch: EpochId, node_id: int) -> list[tuple[ParentRef, int]]:
        """Discrete parents in listed order, paired with their level counts."""
        out = []
        for p in self.entry(epoch, node_id).parents:
            parent = self.node(p.node)
            if parent.is_discrete:
                out.append((p, parent.levels))
        return out

    def continuous_parents(self, epoch: EpochId, node_id: int) -> list[ParentRef]:
        return [
            p for p in self.entry(epoch, node_id).parents if not self.node(p.node).is_discrete
        ]


@dataclass(frozen=True)
class GenerationConfig:
    t_len: int
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        if self.t_len < 1:
            raise ValueError(f"t_len must be >= 1, got {self.t_len}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Generated values, shape ``(N, T, D)``.

    Every cell is stored as float64; discrete cells hold the exact 1-based
    level. Use :meth:`column` to get a discrete node back as integers.
    """

    values: np.ndarray
    nodes: tuple[NodeSpec, ...]

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def t_len(self) -> int:
        return self.values.shape[1]

    def column(self, node_id: int) -> np.ndarray:
        col = self.values[:, :, node_id]
        if self.nodes[node_id].is_discrete:
            return col.astype(np.int64)
        return col

    def check(self) -> None:
        """Raise :class:`StructureMismatch` if any cell disagrees with its node."""
        v = self.values
        if v.ndim != 3 or v.shape[2] != len(self.nodes):
            raise StructureMismatch(
                f"expected shape (N, T, {len(self.nodes)}), got {tuple(v.shape)}"
            )
        for n in self.nodes:
            col = v[:, :, n.id]
            if not np.all(np.isfinite(col)):
                raise StructureMismatch(f"node {n.id}: non-finite cell")
            if n.is_discrete:
                bad = (col != np.round(col)) | (col < 1) | (col > n.levels)
                if bad.any():
                    s, t = np.argwhere(bad)[0]
                    raise StructureMismatch(
                        f"node {n.id}, sample {s}, t {t}: {col[s, t]!r} is not a level in 1..{n.levels}"
                    )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.nodes == other.nodes and np.array_equal(self.values, other.values)


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    message: str
    node: int | None = None
    epoch: EpochId | None = None
    row: int | None = None

    def __str__(self) -> str:
        loc = []
        if self.node is not None:
            loc.append(f"node {self.node}")
        if self.epoch is not None:
            loc.append(f"epoch {self.epoch}")
        if self.row is not None:
            loc.append(f"row {self.row}")
        return f"{', '.join(loc) or 'network'}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __str__(self) -> str:
        return "\n".join(str(v) for v in self.violations) or "OK"


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def validate_spec(spec: NetworkSpec) -> ValidationReport:
    """Collect every invariant violation in ``spec``; an empty report means valid."""
    out: list[Violation] = []
    ids = [n.id for n in spec.nodes]
    counts = Counter(ids)
    for i in sorted(counts):
        if counts[i] > 1:
            out.append(Violation(f"duplicate node id {i}", node=i))
    n_nodes = len(spec.nodes)
    for i in sorted(counts):
        if not 0 <= i < n_nodes:
            out.append(Violation(f"node id {i} outside 0..{n_nodes - 1}", node=i))
    for i in sorted(set(range(n_nodes)) - set(counts)):
        out.append(Violation(f"missing node id {i}", node=i))

    known: dict[int, NodeSpec] = {}
    for n in spec.nodes:
        known.setdefault(n.id, n)
        if n.is_discrete:
            if n.levels is None:
                out.append(Violation("discrete node must declare levels", node=n.id))
            elif n.levels < 2:
                out.append(Violation(f"levels must be >= 2, got {n.levels}", node=n.id))
        elif n.levels is not None:
            out.append(Violation("continuous node must not declare levels", node=n.id))

    lmax = spec.lmax
    if STEADY not in spec.epochs:
        out.append(Violation("missing epoch: steady", epoch=STEADY))
    for e in range(lmax):
        if e not in spec.epochs:
            out.append(Violation(f"missing epoch: {e} (required for t < lmax = {lmax})", epoch=e))
    for key in spec.epoch_ids():
        if key != STEADY and not (isinstance(key, int) and 0 <= key < lmax):
            out.append(Violation(f"unexpected epoch; lmax is {lmax}", epoch=key))
            continue
        es = spec.epochs[key]
        if es.epoch != key:
            out.append(Violation(f"epoch set labelled {es.epoch!r} stored under {key!r}", epoch=key))
        _check_epoch(key, es, known, out)
    return ValidationReport(tuple(out))


def _check_epoch(epoch: EpochId, es: EpochCpdSet, known: dict[int, NodeSpec], out: list) -> None:
    for nid in sorted(set(known) - set(es.entries)):
        out.append(Violation("no CPD entry", node=nid, epoch=epoch))
    for nid in sorted(set(es.entries) - set(known)):
        out.append(Violation("CPD entry for undeclared node", node=nid, epoch=epoch))

    for nid in sorted(set(es.entries) & set(known)):
        node = known[nid]
        entry = es.entries[nid]
        radices: list[int] = []
        n_cont = 0
        arity_known = True
        seen = set()
        for p in entry.parents:
            if (p.node, p.lag) in seen:
                out.append(Violation(f"parent {p.node} at lag {p.lag} listed twice", nid, epoch))
            seen.add((p.node, p.lag))
            if p.lag < 0:
                out.append(Violation(f"negative lag {p.lag} on parent {p.node}", nid, epoch))
            elif epoch != STEADY and p.lag > epoch:
                out.append(
                    Violation(
                        f"parent {p.node} has lag {p.lag} but epoch {epoch} allows lag <= {epoch}",
                        nid,
                        epoch,
                    )
                )
            parent = known.get(p.node)
            if parent is None:
                out.append(Violation(f"parent references undeclared node {p.node}", nid, epoch))
                arity_known = False
                continue
            if parent.is_discrete:
                if parent.levels is None:
                    arity_known = False
                else:
                    radices.append(parent.levels)
            else:
                n_cont += 1
                if node.is_discrete:
                    out.append(
                        Violation(
                            f"discrete node cannot have continuous parent {p.node}", nid, epoch
                        )
                    )
        n_rows = math.prod(radices)
        cpd = entry.cpd
        if node.is_discrete:
            if not isinstance(cpd, DiscreteCpd):
                out.append(Violation("discrete node needs a probability table", nid, epoch))
                continue
            if arity_known and cpd.n_rows != n_rows:
                out.append(
                    Violation(
                        f"table has {cpd.n_rows} rows, parent configurations need {n_rows}",
                        nid,
                        epoch,
                    )
                )
            for r, row in enumerate(cpd.table):
                if node.levels is not None and len(row) != node.levels:
                    out.append(
                        Violation(f"row has {len(row)} entries, node has {node.levels} levels", nid, epoch, r)
                    )
                if not all(_finite(p) and p >= 0 for p in row):
                    out.append(Violation("probabilities must be finite and >= 0", nid, epoch, r))
                    continue
                s = math.fsum(row)
                if abs(s - 1.0) > ROW_SUM_TOL:
                    out.append(Violation(f"row sum {s:.12g} ≠ 1", nid, epoch, r))
        else:
            if not isinstance(cpd, ConditionalGaussian):
                out.append(Violation("continuous node needs Gaussian rows", nid, epoch))
                continue
            if arity_known and cpd.n_rows != n_rows:
                out.append(
                    Violation(
                        f"Gaussian CPD has {cpd.n_rows} rows, parent configurations need {n_rows}",
                        nid,
                        epoch,
                    )
                )
            for r, (mu, sigma) in enumerate(cpd.rows):
                if not _finite(mu):
                    out.append(Violation("mu must be finite", nid, epoch, r))
                if not (_finite(sigma) and sigma > 0):
                    out.append(Violation(f"sigma must be > 0, got {sigma}", nid, epoch, r))
            if arity_known and len(cpd.weights) != n_cont:
                out.append(
                    Violation(
                        f"{len(cpd.weights)} weights for {n_cont} continuous parents", nid, epoch
                    )
                )
            if not all(_finite(w) for w in cpd.weights):
                out.append(Violation("weights must be finite", nid, epoch))

    try:
        _topo(_lag0_parents(es, set(known)), sorted(known))
    except CycleError as exc:
        out.append(Violation(f"lag-0 cycle: {' -> '.join(map(str, exc.nodes + exc.nodes[:1]))}",
                             node=exc.nodes[0], epoch=epoch))


# --------------------------------------------------------------------------
# Ordering and row addressing
# --------------------------------------------------------------------------


def _lag0_parents(es: EpochCpdSet, ids: set[int]) -> dict[int, list[int]]:
    parents = {i: [] for i in ids}
    for nid, entry in es.entries.items():
        if nid not in ids:
            continue
        for p in entry.parents:
            if p.lag == 0 and p.node in ids:
                parents[nid].append(p.node)
    return parents


def _topo(parents: dict[int, list[int]], ids: Sequence[int]) -> list[int]:
    children: dict[int, list[int]] = {i: [] for i in ids}
    indegree = {i: 0 for i in ids}
    for child, ps in parents.items():
        for p in set(ps):
            children[p].append(child)
            indegree[child] += 1
    ready = [i for i in ids if indegree[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for c in children[n]:
            indegree[c] -= 1
            if indegree[c] == 0:
                heapq.heappush(ready, c)
    if len(order) == len(ids):
        return order

    # Every leftover node has a leftover parent, so walking parents must loop.
    left = set(ids) - set(order)
    cur = min(left)
    path: list[int] = []
    while cur not in path:
        path.append(cur)
        cur = min(p for p in parents[cur] if p in left)
    cycle = path[path.index(cur):]
    cycle.reverse()
    start = cycle.index(min(cycle))
    raise CycleError(cycle[start:] + cycle[:start])


def topo_order(spec: NetworkSpec, epoch: EpochId) -> list[int]:
    """Node ids ordered so every lag-0 parent precedes its child.

    Among nodes whose parents are all placed, the lowest id goes first, so the
    order is deterministic.

    Raises:
        CycleError: if the lag-0 edges of ``epoch`` contain a cycle.
    """
    ids = sorted(n.id for n in spec.nodes)
    try:
        return _topo(_lag0_parents(spec.epochs[epoch], set(ids)), ids)
    except CycleError as exc:
        raise CycleError(exc.nodes, epoch) from None


def parent_config_index(values: Sequence[int], radices: Sequence[int]) -> int:
    """Mixed-radix row index of 1-based parent ``values``; first value most significant.

    >>> parent_config_index([2, 3], [4, 4])
    6
    """
    if len(values) != len(radices):
        raise ValueError(f"{len(values)} values for {len(radices)} radices")
    index = 0
    for v, r in zip(values, radices):
        if not 1 <= v <= r:
            raise RangeError(f"value {v} outside 1..{r}")
        index = index * r + (v - 1)
    return index
