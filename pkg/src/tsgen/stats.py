"""Goodness-of-fit checks of generated data against the declared CPDs.

Every check is keyed by ``(node, epoch, row)``, where ``row`` is the
mixed-radix parent configuration. Epoch ``e < lmax`` covers only timestep
``e``; the steady epoch covers ``t >= lmax``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import StructureMismatch
from .model import (
    STEADY,
    ConditionalGaussian,
    Dataset,
    DiscreteCpd,
    EpochId,
    NetworkSpec,
)

MIN_EXPECTED = 5.0
DEFAULT_ALPHA = 0.01


def wilson_hilferty_sf(x: float, dof: int) -> float:
    """Upper-tail probability P(X >= x) for X ~ chi-square(dof).

    Uses the Wilson-Hilferty cube-root normal approximation; exact at x = 0.
    """
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if dof <= 0:
        return 0.0
    v = 2.0 / (9.0 * dof)
    z = ((x / dof) ** (1.0 / 3.0) - (1.0 - v)) / math.sqrt(v)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float | None
    dof: int
    p_value: float | None
    skipped: str | None = None

    def passes(self, alpha: float) -> bool:
        return self.skipped is not None or self.p_value >= alpha


def chi_square_gof(observed: Sequence[float], expected: Sequence[float], total: int) -> ChiSquareResult:
    """Pearson chi-square of ``observed`` counts against probabilities ``expected``.

    Categories with zero declared probability carry no degrees of freedom; any
    count observed in one makes the fit impossible (statistic inf, p = 0).
    A row whose expected count falls below 5 in some category is skipped.
    """
    obs = np.asarray(observed, dtype=np.float64)
    p = np.asarray(expected, dtype=np.float64)
    live = p > 0
    dof = int(live.sum()) - 1
    if total <= 0:
        return ChiSquareResult(None, dof, None, "no observations")
    if obs[~live].sum() > 0:
        return ChiSquareResult(math.inf, dof, 0.0)
    exp = total * p[live]
    if (exp < MIN_EXPECTED).any():
        return ChiSquareResult(None, dof, None, "insufficient counts")
    stat = float(np.sum((obs[live] - exp) ** 2 / exp))
    return ChiSquareResult(stat, dof, wilson_hilferty_sf(stat, dof))


def kl_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """KL(p || q) in nats; ``inf`` when p puts mass where q has none."""
    total = 0.0
    for pk, qk in zip(p, q):
        if pk == 0:
            continue
        if qk == 0:
            return math.inf
        total += pk * math.log(pk / qk)
    return max(total, 0.0)


# --------------------------------------------------------------------------
# Empirical estimates
# --------------------------------------------------------------------------


def _check_structure(dataset: Dataset, spec: NetworkSpec) -> None:
    nodes = tuple(sorted(spec.nodes, key=lambda n: n.id))
    if dataset.values.ndim != 3 or dataset.values.shape[2] != len(nodes):
        raise StructureMismatch(
            f"dataset has shape {dataset.values.shape}, spec declares {len(nodes)} nodes"
        )
    for a, b in zip(dataset.nodes, nodes):
        if (a.kind, a.levels) != (b.kind, b.levels):
            raise StructureMismatch(f"node {b.id}: dataset column does not match spec node")


def epoch_timesteps(t_len: int, lmax: int, epoch: EpochId) -> np.ndarray:
    if epoch == STEADY:
        return np.arange(lmax, t_len)
    return np.arange(epoch, epoch + 1) if epoch < t_len else np.arange(0)


def _parent_rows(dataset: Dataset, spec: NetworkSpec, epoch: EpochId, node: int, ts: np.ndarray):
    row = np.zeros((dataset.n_samples, len(ts)), dtype=np.int64)
    for p, k in spec.discrete_parents(epoch, node):
        row = row * k + (dataset.values[:, ts - p.lag, p.node].astype(np.int64) - 1)
    return row


def empirical_discrete(dataset: Dataset, spec: NetworkSpec, node: int, epoch: EpochId) -> np.ndarray:
    """``(R, K)`` counts of each child level per parent configuration."""
    _check_structure(dataset, spec)
    n = spec.node(node)
    if not n.is_discrete:
        raise StructureMismatch(f"node {node} is continuous")
    ts = epoch_timesteps(dataset.t_len, spec.lmax, epoch)
    rows = _parent_rows(dataset, spec, epoch, node, ts).ravel()
    levels = dataset.values[:, ts, node].astype(np.int64).ravel() - 1
    n_rows = spec.entry(epoch, node).cpd.n_rows
    counts = np.zeros((n_rows, n.levels), dtype=np.int64)
    np.add.at(counts, (rows, levels), 1)
    return counts


@dataclass(frozen=True)
class Moments:
    n: int
    mean: float | None
    std: float | None


def _residuals(dataset, spec, node, epoch, ts, row):
    cpd = spec.entry(epoch, node).cpd
    vals = dataset.values[:, ts, node]
    for w, p in zip(cpd.weights, spec.continuous_parents(epoch, node)):
        vals = vals - w * dataset.values[:, ts - p.lag, p.node]
    return vals[_parent_rows(dataset, spec, epoch, node, ts) == row]


def gaussian_moments(
    dataset: Dataset, spec: NetworkSpec, node: int, row: int, epoch: EpochId | None = None
) -> Moments:
    """Sample size, mean and unbiased std of the node's cells in parent configuration ``row``.

    With ``epoch=None`` all timesteps are pooled, each using its own epoch's
    parent list. The linear contribution of continuous parents is subtracted
    first, so the moments estimate the row's declared (mu, sigma).
    """
    _check_structure(dataset, spec)
    if spec.node(node).is_discrete:
        raise StructureMismatch(f"node {node} is discrete")
    epochs = spec.epoch_ids() if epoch is None else [epoch]
    parts = [
        _residuals(dataset, spec, node, e, epoch_timesteps(dataset.t_len, spec.lmax, e), row)
        for e in epochs
    ]
    x = np.concatenate(parts) if parts else np.empty(0)
    if x.size == 0:
        return Moments(0, None, None)
    std = float(np.std(x, ddof=1)) if x.size > 1 else None
    return Moments(int(x.size), float(np.mean(x)), std)


# --------------------------------------------------------------------------
# Report
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteRowCheck:
    node: int
    epoch: EpochId
    row: int
    observed: list[int]
    expected: list[float]
    chi2: ChiSquareResult
    kl: float | None
    passed: bool


@dataclass(frozen=True)
class GaussianRowCheck:
    node: int
    epoch: EpochId
    row: int
    mu: float
    sigma: float
    n: int
    mean: float | None
    std: float | None
    p_mean: float | None
    p_std: float | None
    passed: bool
    skipped: str | None = None


@dataclass
class StatsReport:
    alpha: float
    discrete: list[DiscreteRowCheck] = field(default_factory=list)
    gaussian: list[GaussianRowCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.discrete) and all(c.passed for c in self.gaussian)

    def failures(self) -> list:
        return [c for c in [*self.discrete, *self.gaussian] if not c.passed]

    def to_json(self) -> dict:
        def clean(d):
            return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}

        discrete = []
        for c in self.discrete:
            d = asdict(c)
            d["chi2"] = clean(d["chi2"])
            discrete.append(clean(d))
        return {
            "alpha": self.alpha,
            "passed": self.passed,
            "discrete": discrete,
            "gaussian": [clean(asdict(c)) for c in self.gaussian],
        }

    def to_table(self) -> str:
        def f(x, spec=".4g"):
            return "-" if x is None else format(x, spec)

        lines = [f"alpha = {self.alpha}"]
        lines.append(
            f"{'node':>4} {'epoch':>6} {'row':>4} {'total':>7} {'chi2':>9} {'dof':>3} "
            f"{'p':>9} {'KL':>9}  result"
        )
        for c in self.discrete:
            status = "skip: " + c.chi2.skipped if c.chi2.skipped else ("pass" if c.passed else "FAIL")
            lines.append(
                f"{c.node:>4} {str(c.epoch):>6} {c.row:>4} {sum(c.observed):>7} {f(c.chi2.statistic):>9} "
                f"{c.chi2.dof:>3} {f(c.chi2.p_value):>9} {f(c.kl):>9}  {status}"
            )
        if self.gaussian:
            lines.append("")
            lines.append(
                f"{'node':>4} {'epoch':>6} {'row':>4} {'n':>7} {'mu':>9} {'mean':>9} {'sigma':>9} "
                f"{'std':>9} {'p_mean':>9} {'p_std':>9}  result"
            )
        for c in self.gaussian:
            status = "skip: " + c.skipped if c.skipped else ("pass" if c.passed else "FAIL")
            lines.append(
                f"{c.node:>4} {str(c.epoch):>6} {c.row:>4} {c.n:>7} {f(c.mu):>9} {f(c.mean):>9} "
                f"{f(c.sigma):>9} {f(c.std):>9} {f(c.p_mean):>9} {f(c.p_std):>9}  {status}"
            )
        lines.append("")
        lines.append("PASS" if self.passed else f"FAIL ({len(self.failures())} rows)")
        return "\n".join(lines)


def _gaussian_check(node, epoch, row, mu, sigma, m: Moments, alpha) -> GaussianRowCheck:
    if m.n < 2:
        return GaussianRowCheck(node, epoch, row, mu, sigma, m.n, m.mean, m.std, None, None, True,
                                "no observations" if m.n == 0 else "single observation")
    z = abs(m.mean - mu) * math.sqrt(m.n) / sigma
    p_mean = math.erfc(z / math.sqrt(2.0))
    # (n-1) s^2 / sigma^2 ~ chi-square(n-1); two-sided.
    upper = wilson_hilferty_sf((m.n - 1) * m.std**2 / sigma**2, m.n - 1)
    p_std = min(1.0, 2.0 * min(upper, 1.0 - upper))
    return GaussianRowCheck(node, epoch, row, mu, sigma, m.n, m.mean, m.std, p_mean, p_std,
                            p_mean >= alpha and p_std >= alpha)


def build_report(dataset: Dataset, spec: NetworkSpec, alpha: float = DEFAULT_ALPHA) -> StatsReport:
    """Test every CPD row of every node in every epoch against the data."""
    _check_structure(dataset, spec)
    report = StatsReport(alpha)
    for epoch in spec.epoch_ids():
        for node in sorted(n.id for n in spec.nodes):
            cpd = spec.entry(epoch, node).cpd
            if isinstance(cpd, DiscreteCpd):
                counts = empirical_discrete(dataset, spec, node, epoch)
                for r, probs in enumerate(cpd.table):
                    obs = counts[r]
                    total = int(obs.sum())
                    res = chi_square_gof(obs, probs, total)
                    kl = kl_divergence(obs / total, probs) if total else None
                    report.discrete.append(
                        DiscreteRowCheck(node, epoch, r, obs.tolist(), [total * p for p in probs],
                                         res, kl, res.passes(alpha))
                    )
            elif isinstance(cpd, ConditionalGaussian):
                for r, (mu, sigma) in enumerate(cpd.rows):
                    m = gaussian_moments(dataset, spec, node, r, epoch)
                    report.gaussian.append(_gaussian_check(node, epoch, r, mu, sigma, m, alpha))
    return report
