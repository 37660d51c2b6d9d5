"""Ancestral sampling of a dynamic Bayesian network unrolled over T slices.

At timestep ``t`` the CPDs of epoch ``t`` are used while ``t < lmax``, and the
steady-epoch CPDs afterwards. Within a slice, nodes are drawn in topological
order of the lag-0 edges, so every parent value exists before its child is drawn.

Every sample consumes exactly one random stream, ``derive_stream(seed, i)``.
The dataset path draws all samples of a block at once with
:class:`~tsgen.dist.StreamBatch`; it produces the same numbers as
:func:`generate_sequence` run sample by sample.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dist import (
    RngStream,
    StreamBatch,
    derive_stream,
    level_from_cumulative,
    levels_from_cumulative,
    sample_gaussian,
)
from .errors import InternalError, SemanticError
from .model import (
    STEADY,
    ConditionalGaussian,
    Dataset,
    EpochId,
    GenerationConfig,
    NetworkSpec,
    ParentRef,
    parent_config_index,
    topo_order,
    validate_spec,
)


def epoch_for(t: int, lmax: int) -> EpochId:
    return t if t < lmax else STEADY


@dataclass
class SliceCursor:
    """Values written so far for one sample; unwritten cells are NaN.

    Reads are checked, so a lookup of a lagged slice before ``t = 0`` or of a
    parent not yet drawn raises :class:`InternalError`. Pass a list as
    ``reads`` to record every ``(timestep, node)`` that was read.
    """

    sample_index: int
    t: int
    values: np.ndarray
    reads: list | None = field(default=None, repr=False)

    @classmethod
    def empty(cls, sample_index: int, t_len: int, n_nodes: int, reads=None) -> SliceCursor:
        return cls(sample_index, 0, np.full((t_len, n_nodes), np.nan), reads)

    def read(self, ref: ParentRef) -> float:
        src = self.t - ref.lag
        if src < 0:
            raise InternalError(f"read of node {ref.node} at t={src} (before start)")
        v = self.values[src, ref.node]
        if math.isnan(v):
            raise InternalError(f"read of unmaterialized node {ref.node} at t={src}")
        if self.reads is not None:
            self.reads.append((src, ref.node))
        return float(v)

    def write(self, node: int, value: float) -> None:
        self.values[self.t, node] = value


@dataclass(frozen=True)
class _NodePlan:
    node: int
    discrete: bool
    disc_parents: tuple[ParentRef, ...]
    radices: tuple[int, ...]
    strides: tuple[int, ...]
    cont_parents: tuple[ParentRef, ...]
    weights: tuple[float, ...]
    cum: np.ndarray | None = None
    mu: np.ndarray | None = None
    sigma: np.ndarray | None = None


def _plan_node(spec: NetworkSpec, epoch: EpochId, node: int) -> _NodePlan:
    disc = spec.discrete_parents(epoch, node)
    radices = tuple(k for _, k in disc)
    strides = tuple(math.prod(radices[j + 1:]) for j in range(len(radices)))
    cpd = spec.entry(epoch, node).cpd
    common = dict(
        node=node,
        disc_parents=tuple(p for p, _ in disc),
        radices=radices,
        strides=strides,
        cont_parents=tuple(spec.continuous_parents(epoch, node)),
    )
    if isinstance(cpd, ConditionalGaussian):
        return _NodePlan(
            discrete=False,
            weights=cpd.weights,
            mu=np.array([r.mu for r in cpd.rows]),
            sigma=np.array([r.sigma for r in cpd.rows]),
            **common,
        )
    return _NodePlan(discrete=True, weights=(), cum=cpd.cumulative(), **common)


@dataclass(frozen=True)
class _Compiled:
    lmax: int
    n_nodes: int
    orders: dict
    plans: dict

    def schedule(self, t_len: int):
        for t in range(t_len):
            e = epoch_for(t, self.lmax)
            yield t, [self.plans[e][n] for n in self.orders[e]]


def _compile(spec: NetworkSpec) -> _Compiled:
    orders, plans = {}, {}
    for e in spec.epoch_ids():
        orders[e] = topo_order(spec, e)
        plans[e] = {n: _plan_node(spec, e, n) for n in orders[e]}
    return _Compiled(spec.lmax, spec.n_nodes, orders, plans)


def _draw(plan: _NodePlan, cursor: SliceCursor, stream: RngStream) -> float:
    row = parent_config_index([int(cursor.read(p)) for p in plan.disc_parents], plan.radices)
    if plan.discrete:
        return float(level_from_cumulative(plan.cum[row].tolist(), stream.uniform()))
    mean = float(plan.mu[row])
    for w, p in zip(plan.weights, plan.cont_parents):
        mean = mean + w * cursor.read(p)
    return sample_gaussian(stream, mean, float(plan.sigma[row]))


def sample_node(
    spec: NetworkSpec, epoch: EpochId, node: int, cursor: SliceCursor, stream: RngStream
) -> float:
    """Draw one cell from the node's CPD in ``epoch`` given the cursor's parent values.

    Returns the 1-based level (as a float) for discrete nodes, a real otherwise.
    """
    return _draw(_plan_node(spec, epoch, node), cursor, stream)


def _require_valid(spec: NetworkSpec) -> None:
    report = validate_spec(spec)
    if not report.ok:
        raise SemanticError(report.violations)


def generate_sequence(
    spec: NetworkSpec, config: GenerationConfig, sample_index: int, reads: list | None = None
) -> np.ndarray:
    """One ``(T, D)`` sequence drawn from ``derive_stream(config.seed, sample_index)``."""
    _require_valid(spec)
    if not 0 <= sample_index < config.n_samples:
        raise IndexError(f"sample_index {sample_index} outside 0..{config.n_samples - 1}")
    compiled = _compile(spec)
    stream = derive_stream(config.seed, sample_index)
    cursor = SliceCursor.empty(sample_index, config.t_len, spec.n_nodes, reads)
    for t, plans in compiled.schedule(config.t_len):
        cursor.t = t
        for plan in plans:
            cursor.write(plan.node, _draw(plan, cursor, stream))
    return cursor.values


def _rows(plan: _NodePlan, vals: np.ndarray, t: int) -> np.ndarray:
    row = np.zeros(vals.shape[0], dtype=np.int64)
    for p, stride in zip(plan.disc_parents, plan.strides):
        row += (vals[:, t - p.lag, p.node].astype(np.int64) - 1) * stride
    return row


def _generate_block(compiled: _Compiled, config: GenerationConfig, indices: range) -> np.ndarray:
    vals = np.full((len(indices), config.t_len, compiled.n_nodes), np.nan)
    batch = StreamBatch.derive(config.seed, indices)
    for t, plans in compiled.schedule(config.t_len):
        for plan in plans:
            row = _rows(plan, vals, t)
            if plan.discrete:
                vals[:, t, plan.node] = levels_from_cumulative(plan.cum[row], batch.uniform())
            else:
                mean = plan.mu[row]
                for w, p in zip(plan.weights, plan.cont_parents):
                    mean = mean + w * vals[:, t - p.lag, p.node]
                vals[:, t, plan.node] = mean + plan.sigma[row] * batch.normal()
    return vals


def generate_dataset(spec: NetworkSpec, config: GenerationConfig, workers: int = 1) -> Dataset:
    """Draw ``config.n_samples`` independent sequences.

    Samples are split into ``workers`` contiguous blocks run on a thread pool.
    Each sample's values depend only on its own stream, so the output is the
    same for every ``workers`` value.
    """
    _require_valid(spec)
    compiled = _compile(spec)
    n = config.n_samples
    workers = max(1, min(workers, n))
    bounds = [n * k // workers for k in range(workers + 1)]
    blocks = [range(bounds[k], bounds[k + 1]) for k in range(workers)]
    if workers == 1:
        parts = [_generate_block(compiled, config, blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _generate_block(compiled, config, b), blocks))
    nodes = tuple(sorted(spec.nodes, key=lambda nd: nd.id))
    return Dataset(np.concatenate(parts, axis=0), nodes)
