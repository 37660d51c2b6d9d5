import json

import pytest
from hypothesis import given, settings

from conftest import fixture_text
from strategies import networks
from tsgen.errors import ParseError, SchemaError, SemanticError
from tsgen.model import STEADY, validate_spec
from tsgen.spec_io import GenerationDefaults, parse_document, parse_spec, serialize_spec


def test_example_fixture_parses(hmm_spec):
    assert hmm_spec.n_nodes == 2
    assert [n.levels for n in hmm_spec.nodes if n.is_discrete] == [4]
    assert hmm_spec.lmax == 1
    assert hmm_spec.epochs[STEADY].entries[0].cpd.table[2] == (0.1, 0.3, 0.4, 0.2)


def test_generation_block():
    _, gen = parse_spec(fixture_text("hmm_example1"))
    assert gen == GenerationDefaults(20, 1000, None)
    cfg = gen.resolve(seed=7)
    assert (cfg.t_len, cfg.n_samples, cfg.seed) == (20, 1000, 7)
    assert gen.resolve(t_len=5, fallback_seed=3).t_len == 5
    assert gen.resolve(fallback_seed=3).seed == 3


def test_missing_steady(hmm_doc):
    del hmm_doc["epochs"]["steady"]
    with pytest.raises(SchemaError, match="missing epoch: steady") as exc:
        parse_document(json.dumps(hmm_doc))
    assert exc.value.path == "$.epochs"


def test_duplicate_node_id(hmm_doc):
    hmm_doc["nodes"][1]["id"] = 0
    with pytest.raises(SemanticError, match="duplicate node id 0"):
        parse_document(json.dumps(hmm_doc))


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d["nodes"][0].update(colour="red"), "$.nodes[0]"),
        (lambda d: d["nodes"][0].update(kind="X"), "$.nodes[0].kind"),
        (lambda d: d["nodes"][0].update(levels="4"), "$.nodes[0].levels"),
        (lambda d: d["epochs"]["steady"]["0"]["cpd"]["table"][1].__setitem__(2, "x"),
         "$.epochs.steady.0.cpd.table[1][2]"),
        (lambda d: d["epochs"]["steady"]["0"]["parents"][0].update(lag=True),
         "$.epochs.steady.0.parents[0].lag"),
        (lambda d: d["epochs"]["0"]["1"]["cpd"]["rows"][0].pop("sigma"), "$.epochs.0.1.cpd.rows[0]"),
        (lambda d: d["epochs"]["0"]["1"].update(cpd={}), "$.epochs.0.1.cpd"),
        (lambda d: d["epochs"].update({"01": {}}), "$.epochs"),
        (lambda d: d.update(generation={"T": 0}), "$.generation.T"),
        (lambda d: d.update(extra=1), "$"),
    ],
)
def test_schema_errors_carry_paths(hmm_doc, mutate, path):
    mutate(hmm_doc)
    with pytest.raises(SchemaError) as exc:
        parse_document(json.dumps(hmm_doc))
    assert exc.value.path == path
    assert str(exc.value).startswith(path)


def test_duplicate_json_key_rejected():
    text = fixture_text("hmm_example1").replace('"kind": "C"', '"kind": "C", "kind": "D"')
    with pytest.raises(SchemaError, match="duplicate key 'kind'"):
        parse_document(text)


def test_parse_error_has_line_and_column():
    with pytest.raises(ParseError) as exc:
        parse_document('{\n  "nodes": [,]\n}')
    assert (exc.value.line, exc.value.column) == (2, 13)


def test_round_trip_and_canonical_text(hmm_spec):
    text = serialize_spec(hmm_spec)
    assert parse_document(text).network == hmm_spec
    assert '{"mu": 20, "sigma": 5}' in text
    again = parse_document(fixture_text("hmm_example1")).network
    assert serialize_spec(again) == text


@pytest.mark.parametrize("name", ["hmm_example1", "hybrid_lag2", "discrete_chain"])
def test_bundled_fixtures_are_canonical(name):
    doc = parse_document(fixture_text(name))
    assert serialize_spec(doc.network, doc.generation) == fixture_text(name)


@settings(max_examples=150, deadline=None)
@given(networks())
def test_round_trip_random_specs(spec):
    assert validate_spec(spec).ok, str(validate_spec(spec))
    text = serialize_spec(spec)
    back = parse_document(text).network
    assert back == spec
    assert serialize_spec(back) == text
