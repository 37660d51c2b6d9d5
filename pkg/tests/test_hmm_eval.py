import math

import numpy as np
import pytest

from conftest import MEANS, TRANSITIONS, spec_from
from oracles import hmm_brute_argmax, hmm_brute_loglik, normal_logpdf
from tsgen.errors import NotAnHmm
from tsgen.hmm_eval import (
    HmmParams,
    decode_accuracy,
    evaluate,
    extract_hmm_params,
    forward_loglik,
    path_log_joint,
    viterbi,
)
from tsgen.model import GenerationConfig
from tsgen.sampler import generate_dataset

TOY = dict(pi=[0.5, 0.5], trans=[[0.9, 0.1], [0.1, 0.9]], emit=[(0, 1), (10, 1)])
TOY_OBS = [0.1, 9.8, 10.2]
# From hmm_brute_loglik / hmm_brute_argmax over the 8 paths.
TOY_LOGLIK = -5.902908388825836
TOY_PATH = [1, 2, 2]


def random_instance(rng, k, t_len):
    pi = rng.dirichlet(np.ones(k))
    trans = rng.dirichlet(np.ones(k), size=k)
    emit = [(float(rng.uniform(-5, 5)), float(rng.uniform(0.5, 3))) for _ in range(k)]
    obs = rng.normal(0, 4, size=t_len).tolist()
    return pi, trans, emit, obs


def test_extract_example(hmm_spec):
    p = extract_hmm_params(hmm_spec)
    assert p.pi.tolist() == [0.25] * 4
    assert p.trans.tolist() == TRANSITIONS
    assert p.mu.tolist() == MEANS and p.sigma.tolist() == [5.0] * 4


def test_not_an_hmm_three_nodes(hmm_doc):
    hmm_doc["nodes"].append({"id": 2, "kind": "C"})
    for block in hmm_doc["epochs"].values():
        block["2"] = {"parents": [], "cpd": {"rows": [{"mu": 0, "sigma": 1}]}}
    with pytest.raises(NotAnHmm, match="expected exactly 2 nodes"):
        extract_hmm_params(spec_from(hmm_doc))


def test_not_an_hmm_lag_two(hmm_doc):
    hmm_doc["epochs"]["steady"]["0"]["parents"] = [{"node": 0, "lag": 2}]
    hmm_doc["epochs"]["1"] = hmm_doc["epochs"]["steady"] | {
        "0": {"parents": [{"node": 0, "lag": 1}], "cpd": {"table": TRANSITIONS}}
    }
    spec = spec_from(hmm_doc)
    assert spec.lmax == 2
    with pytest.raises(NotAnHmm, match="expected loopback 1"):
        extract_hmm_params(spec)


def test_single_state():
    p = HmmParams.make([1.0], [[1.0]], [(3.0, 2.0)])
    assert viterbi(p, [0.0, 100.0, -5.0]).tolist() == [1, 1, 1]


def test_toy_oracles_frozen():
    assert hmm_brute_argmax(TOY["pi"], TOY["trans"], TOY["emit"], TOY_OBS)[0] == TOY_PATH
    assert hmm_brute_loglik(TOY["pi"], TOY["trans"], TOY["emit"], TOY_OBS) == pytest.approx(TOY_LOGLIK, rel=1e-12)


def test_toy_viterbi_and_forward():
    p = HmmParams.make(**TOY)
    assert viterbi(p, TOY_OBS).tolist() == TOY_PATH
    assert forward_loglik(p, TOY_OBS) == pytest.approx(TOY_LOGLIK, rel=1e-10)


def test_single_step_closed_form():
    p = HmmParams.make(**TOY)
    x = 3.7
    expected = math.log(sum(0.5 * math.exp(normal_logpdf(x, m, s)) for m, s in TOY["emit"]))
    assert forward_loglik(p, [x]) == pytest.approx(expected, rel=1e-12)


def test_tie_breaks_to_lower_state():
    p = HmmParams.make([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]], [(0, 1), (0, 1)])
    assert viterbi(p, [0.3, -1.0, 2.0]).tolist() == [1, 1, 1]


@pytest.mark.parametrize("seed", range(20))
def test_random_instances_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    k, t_len = int(rng.integers(1, 4)), int(rng.integers(1, 7))
    pi, trans, emit, obs = random_instance(rng, k, t_len)
    p = HmmParams.make(pi, trans, emit)
    assert forward_loglik(p, obs) == pytest.approx(hmm_brute_loglik(pi, trans, emit, obs), rel=1e-10)
    assert viterbi(p, obs).tolist() == hmm_brute_argmax(pi, trans, emit, obs)[0]


def test_viterbi_beats_random_paths(hmm_spec):
    p = extract_hmm_params(hmm_spec)
    data = generate_dataset(hmm_spec, GenerationConfig(20, 1, 3))
    obs = data.column(1)[0]
    best = path_log_joint(p, obs, viterbi(p, obs))
    rng = np.random.default_rng(0)
    for _ in range(1000):
        alt = rng.integers(1, 5, size=20)
        assert best >= path_log_joint(p, obs, alt)


def test_forward_long_sequence_is_finite(hmm_spec):
    p = extract_hmm_params(hmm_spec)
    data = generate_dataset(hmm_spec, GenerationConfig(10_000, 1, 5))
    ll = forward_loglik(p, data.column(1)[0])
    assert math.isfinite(ll)
    assert math.isfinite(forward_loglik(p, [1e4, -1e4, 50.0]))


def test_true_params_score_higher_than_permuted(hmm_spec):
    p = extract_hmm_params(hmm_spec)
    q = HmmParams.make(p.pi, p.trans, list(zip(p.mu[::-1], p.sigma)))
    obs = generate_dataset(hmm_spec, GenerationConfig(20, 100, 6)).column(1)
    assert np.mean([forward_loglik(p, o) for o in obs]) >= np.mean([forward_loglik(q, o) for o in obs])


def test_decode_accuracy_five_samples(hmm_spec):
    data = generate_dataset(hmm_spec, GenerationConfig(20, 5, 7))
    assert decode_accuracy(data, hmm_spec) >= 0.93


def test_decode_accuracy_near_separable(hmm_doc):
    for epoch in ("0", "steady"):
        for r in hmm_doc["epochs"][epoch]["1"]["cpd"]["rows"]:
            r["sigma"] = 0.01
    spec = spec_from(hmm_doc)
    data = generate_dataset(spec, GenerationConfig(20, 200, 3))
    assert decode_accuracy(data, spec) >= 0.999


def test_decode_accuracy_chance_level(hmm_doc):
    for epoch in ("0", "steady"):
        for r in hmm_doc["epochs"][epoch]["1"]["cpd"]["rows"]:
            r["mu"] = 20
    hmm_doc["epochs"]["steady"]["0"]["cpd"]["table"] = [[0.25] * 4] * 4
    spec = spec_from(hmm_doc)
    data = generate_dataset(spec, GenerationConfig(20, 1000, 3))
    assert abs(decode_accuracy(data, spec) - 0.25) <= 0.05


def test_evaluate_reports_both(hmm_spec):
    data = generate_dataset(hmm_spec, GenerationConfig(20, 20, 1))
    res = evaluate(data, hmm_spec)
    assert res.accuracy == pytest.approx(decode_accuracy(data, hmm_spec))
    assert res.per_sample.shape == (20,) and math.isfinite(res.mean_loglik)
