import numpy as np
import pytest
from hypothesis import given, settings

from conftest import TRANSITIONS, spec_from
from oracles import dbn_joint_enumeration
from strategies import networks
from tsgen.errors import InternalError, SemanticError
from tsgen.model import (
    STEADY,
    DiscreteCpd,
    EpochCpdSet,
    GenerationConfig,
    Kind,
    NetworkSpec,
    NodeCpd,
    NodeSpec,
    ParentRef,
)
from tsgen.sampler import SliceCursor, epoch_for, generate_dataset, generate_sequence, sample_node
from tsgen.stats import empirical_discrete
from test_dist import FixedStream


def test_epoch_for():
    assert epoch_for(0, 1) == 0
    assert epoch_for(1, 1) == STEADY
    assert epoch_for(19, 1) == STEADY
    assert epoch_for(1, 3) == 1
    assert epoch_for(3, 3) == STEADY


def _cursor(t, rows):
    c = SliceCursor.empty(0, len(rows), 2)
    c.values[:] = rows
    c.t = t
    return c


def test_sample_node_emission(hmm_spec):
    cursor = _cursor(0, [[1, np.nan]])
    assert sample_node(hmm_spec, 0, 1, cursor, FixedStream(z=0.0)) == 20
    assert sample_node(hmm_spec, 0, 1, cursor, FixedStream(z=-1.0)) == 15


@pytest.mark.parametrize("u, level", [(0.01, 1), (0.07, 2), (0.3, 3), (0.7, 4)])
def test_sample_node_transition_row(hmm_spec, u, level):
    # previous state 4 selects row [0.05, 0.05, 0.4, 0.5]
    cursor = _cursor(1, [[4, 80.0], [np.nan, np.nan]])
    assert sample_node(hmm_spec, STEADY, 0, cursor, FixedStream(u=u)) == level


def test_sample_node_unmaterialized_parent(hmm_spec):
    cursor = _cursor(0, [[np.nan, np.nan]])
    with pytest.raises(InternalError):
        sample_node(hmm_spec, 0, 1, cursor, FixedStream())
    cursor = _cursor(0, [[2, np.nan]])
    with pytest.raises(InternalError):
        sample_node(hmm_spec, STEADY, 0, cursor, FixedStream())


def test_point_mass_row(hmm_doc):
    hmm_doc["epochs"]["0"]["0"]["cpd"]["table"] = [[0, 0, 1, 0]]
    spec = spec_from(hmm_doc)
    data = generate_dataset(spec, GenerationConfig(1, 500, 3))
    assert np.all(data.column(0) == 3)


def test_sequence_shape_and_kinds(hmm_spec):
    seq = generate_sequence(hmm_spec, GenerationConfig(20, 1000, 11), 17)
    assert seq.shape == (20, 2)
    assert set(np.unique(seq[:, 0])) <= {1.0, 2.0, 3.0, 4.0}
    assert np.all(np.isfinite(seq[:, 1]))


def test_single_step_reads_only_slice_zero(hmm_spec):
    reads = []
    generate_sequence(hmm_spec, GenerationConfig(1, 1, 0), 0, reads=reads)
    assert reads == [(0, 0)]


def test_identity_transition_is_absorbing(hmm_doc):
    hmm_doc["epochs"]["steady"]["0"]["cpd"]["table"] = np.eye(4).tolist()
    data = generate_dataset(spec_from(hmm_doc), GenerationConfig(20, 200, 8))
    states = data.column(0)
    assert np.all(states == states[:, :1])
    counts = empirical_discrete(data, spec_from(hmm_doc), 0, STEADY)
    assert np.all(counts[~np.eye(4, dtype=bool)] == 0)


def test_dataset_matches_sequences(hmm_spec):
    cfg = GenerationConfig(20, 50, 1234)
    data = generate_dataset(hmm_spec, cfg)
    for i in (0, 13, 49):
        assert np.array_equal(data.values[i], generate_sequence(hmm_spec, cfg, i))


def test_dataset_determinism_and_workers(hmm_spec):
    cfg = GenerationConfig(20, 1000, 42)
    a = generate_dataset(hmm_spec, cfg)
    assert a == generate_dataset(hmm_spec, cfg)
    for w in (2, 3, 8, 1000):
        assert a == generate_dataset(hmm_spec, cfg, workers=w)
    a.check()


def test_invalid_spec_refused(hmm_doc, hmm_spec):
    bad = NetworkSpec(hmm_spec.nodes, {0: hmm_spec.epochs[0]})
    with pytest.raises(SemanticError):
        generate_dataset(bad, GenerationConfig(2, 2, 0))


def test_transition_frequencies(hmm_spec):
    data = generate_dataset(hmm_spec, GenerationConfig(20, 1000, 77))
    counts = empirical_discrete(data, hmm_spec, 0, STEADY)
    assert counts.sum() == 1000 * 19
    freq = counts / counts.sum(axis=1, keepdims=True)
    assert np.all(np.abs(freq - TRANSITIONS) <= 0.03)


def test_two_step_binary_chain_matches_enumeration():
    init, trans = [[0.3, 0.7]], [[0.9, 0.1], [0.2, 0.8]]
    spec = NetworkSpec(
        (NodeSpec(0, Kind.DISCRETE, 2),),
        {
            0: EpochCpdSet(0, {0: NodeCpd((), DiscreteCpd(init))}),
            STEADY: EpochCpdSet(STEADY, {0: NodeCpd((ParentRef(0, 1),), DiscreteCpd(trans))}),
        },
    )
    exact = dbn_joint_enumeration([2], {0: {0: ([], init)}, "steady": {0: ([(0, 1)], trans)}}, 1, 2)
    data = generate_dataset(spec, GenerationConfig(2, 200_000, 5))
    x = data.column(0)
    for (a, b), p in exact.items():
        freq = np.mean((x[:, 0] == a) & (x[:, 1] == b))
        assert abs(freq - p) <= 0.005


def test_lag_two_never_reads_before_start():
    from conftest import fixture_text
    from tsgen.spec_io import parse_document

    spec = parse_document(fixture_text("hybrid_lag2")).network
    assert spec.lmax == 2
    for t_len in (1, 2, 3, 6):
        reads = []
        generate_sequence(spec, GenerationConfig(t_len, 1, 9), 0, reads=reads)
        assert all(t >= 0 for t, _ in reads)


@settings(max_examples=60, deadline=None)
@given(networks(max_nodes=3, max_lag=3))
def test_random_networks_batch_equals_scalar(spec):
    cfg = GenerationConfig(5, 4, 31)
    data = generate_dataset(spec, cfg, workers=2)
    data.check()
    for i in range(cfg.n_samples):
        reads = []
        seq = generate_sequence(spec, cfg, i, reads=reads)
        assert np.array_equal(seq, data.values[i])
        assert all(t >= 0 for t, _ in reads)
