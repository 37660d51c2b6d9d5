"""Decoding checks for the HMM special case: one discrete hidden chain, one Gaussian emission.

All recursions run in log space; emission densities are evaluated as log
densities directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotAnHmm
from .model import STEADY, ConditionalGaussian, Dataset, DiscreteCpd, NetworkSpec, ParentRef

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class HmmParams:
    pi: np.ndarray
    trans: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    @classmethod
    def make(cls, pi, trans, emit) -> HmmParams:
        emit = np.asarray(emit, dtype=np.float64).reshape(-1, 2)
        p = cls(np.asarray(pi, dtype=np.float64), np.asarray(trans, dtype=np.float64),
                emit[:, 0].copy(), emit[:, 1].copy())
        p.check()
        return p

    @property
    def n_states(self) -> int:
        return len(self.pi)

    def check(self) -> None:
        k = self.n_states
        if self.trans.shape != (k, k) or self.mu.shape != (k,) or self.sigma.shape != (k,):
            raise ValueError("inconsistent HMM parameter shapes")
        if abs(self.pi.sum() - 1.0) > 1e-9 or np.any(np.abs(self.trans.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("pi and transition rows must sum to 1")
        if np.any(self.pi < 0) or np.any(self.trans < 0):
            raise ValueError("probabilities must be >= 0")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma must be > 0")

    def log_emission(self, obs) -> np.ndarray:
        """``(T, K)`` Gaussian log densities."""
        x = np.asarray(obs, dtype=np.float64)[:, None]
        z = (x - self.mu) / self.sigma
        return -0.5 * z * z - np.log(self.sigma) - _LOG_SQRT_2PI


def extract_hmm_params(spec: NetworkSpec) -> HmmParams:
    """Read (pi, trans, emissions) off a two-node HMM-shaped network.

    Raises:
        NotAnHmm: naming the first structural condition that fails.
    """
    if spec.n_nodes != 2:
        raise NotAnHmm(f"expected exactly 2 nodes, got {spec.n_nodes}")
    hidden, emitted = spec.node(0), spec.node(1)
    if not hidden.is_discrete:
        raise NotAnHmm("node 0 must be discrete (the hidden state)")
    if emitted.is_discrete:
        raise NotAnHmm("node 1 must be continuous (the emission)")
    if spec.lmax != 1:
        raise NotAnHmm(f"expected loopback 1, got lmax {spec.lmax}")
    if spec.entry(0, 0).parents:
        raise NotAnHmm("node 0 must be parentless in epoch 0")
    if spec.entry(STEADY, 0).parents != (ParentRef(0, 1),):
        raise NotAnHmm("node 0 must have sole parent (node 0, lag 1) in the steady epoch")
    for e in (0, STEADY):
        entry = spec.entry(e, 1)
        if entry.parents != (ParentRef(0, 0),):
            raise NotAnHmm(f"node 1 must have sole parent (node 0, lag 0) in epoch {e}")
    emit0, emit_s = spec.entry(0, 1).cpd, spec.entry(STEADY, 1).cpd
    if emit0 != emit_s:
        raise NotAnHmm("emission CPD differs between epoch 0 and steady")
    init, trans = spec.entry(0, 0).cpd, spec.entry(STEADY, 0).cpd
    assert isinstance(init, DiscreteCpd) and isinstance(trans, DiscreteCpd)
    assert isinstance(emit0, ConditionalGaussian)
    return HmmParams.make(init.table[0], trans.table, [tuple(r) for r in emit0.rows])


def _log(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


def viterbi(params: HmmParams, observations) -> np.ndarray:
    """Most probable 1-based state path; ties go to the lower state index."""
    log_e = params.log_emission(observations)
    log_a = _log(params.trans)
    t_len, k = log_e.shape
    delta = _log(params.pi) + log_e[0]
    back = np.zeros((t_len, k), dtype=np.int64)
    for t in range(1, t_len):
        cand = delta[:, None] + log_a
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(k)] + log_e[t]
    path = np.empty(t_len, dtype=np.int64)
    path[-1] = int(np.argmax(delta))
    for t in range(t_len - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path + 1


def path_log_joint(params: HmmParams, observations, path) -> float:
    """log P(observations, path) for a 1-based state path."""
    s = np.asarray(path) - 1
    log_e = params.log_emission(observations)
    with np.errstate(divide="ignore"):
        total = math.log(params.pi[s[0]]) if params.pi[s[0]] > 0 else -math.inf
        total += float(np.sum(_log(params.trans[s[:-1], s[1:]])))
    return total + float(np.sum(log_e[np.arange(len(s)), s]))


def forward_loglik(params: HmmParams, observations) -> float:
    """log P(observations) by the forward recursion, normalized at every step.

    Emission likelihoods are shifted by their per-step maximum before
    exponentiating, so far-out observations cannot underflow to zero.
    """
    log_e = params.log_emission(observations)
    total = 0.0
    alpha = params.pi
    for t in range(log_e.shape[0]):
        if t:
            alpha = alpha @ params.trans
        m = log_e[t].max()
        alpha = alpha * np.exp(log_e[t] - m)
        c = alpha.sum()
        if c == 0:
            return -math.inf
        total += math.log(c) + m
        alpha = alpha / c
    return total


@dataclass(frozen=True)
class HmmEvaluation:
    accuracy: float
    per_sample: np.ndarray
    mean_loglik: float


def evaluate(dataset: Dataset, spec: NetworkSpec) -> HmmEvaluation:
    params = extract_hmm_params(spec)
    states = dataset.column(0)
    obs = dataset.column(1)
    acc = np.array([np.mean(viterbi(params, o) == s) for s, o in zip(states, obs)])
    ll = np.array([forward_loglik(params, o) for o in obs])
    return HmmEvaluation(float(acc.mean()), acc, float(ll.mean()))


def decode_accuracy(dataset: Dataset, spec: NetworkSpec) -> float:
    """Mean over samples of the fraction of timesteps Viterbi labels correctly."""
    params = extract_hmm_params(spec)
    states = dataset.column(0)
    obs = dataset.column(1)
    return float(np.mean([np.mean(viterbi(params, o) == s) for s, o in zip(states, obs)]))
